"""Grid operator oracles: stencil identities, analytic derivatives,
integration exactness, interpolation error bounds."""

import numpy as np
import pytest

import eulerize as ez
from eulerize import (contract1, contract2, curl_field, d0, d1, d2, div_field,
                      euclidean_flat, integrate, interp, wedge_1_2)
from eulerize.dec import two_form_from_vector
from eulerize.grid import Grid3, OneForm, ScalarField0, ThreeForm, VectorField

from conftest import random_oneform, random_scalar


def test_d0_constant_is_zero():
    g = Grid3(8)
    out = d0(ScalarField0.constant(g, 7.0))
    assert np.all(out.values == 0.0)


def test_d0_sine_matches_discrete_symbol():
    g = Grid3(64)
    f = ScalarField0.from_function(g, lambda x, y, z: np.sin(x))
    out = d0(f)
    x = g.mesh()[0]
    kappa = np.sin(g.h) / g.h
    assert np.abs(out.values[0] - kappa * np.cos(x)).max() <= 1e-13
    # the symbol deficit is the Taylor bound h^2/6
    assert np.abs(out.values[0] - np.cos(x)).max() <= g.h ** 2 / 6 + 1e-12
    assert np.abs(out.values[1:]).max() == 0.0


def test_d0_point_bump_touches_only_neighbors():
    g = Grid3(8)
    vals = np.zeros((8, 8, 8))
    vals[3, 4, 5] = 1.0
    out = d0(ScalarField0(g, vals))
    nz = np.argwhere(np.abs(out.values).sum(axis=0) > 0)
    assert len(nz) == 6
    for p in nz:
        assert np.sum(np.abs((p - np.array([3, 4, 5]) + 4) % 8 - 4)) == 1


def test_d1_of_gradient_vanishes(rng):
    g = Grid3(16)
    for _ in range(5):
        f = random_scalar(g, rng, scale=3.0)
        dd = d1(d0(f))
        assert np.abs(dd.values).max() <= 1e-13


def test_d1_analytic_curl():
    g = Grid3(32)
    z = g.mesh()[2]
    a = OneForm(g, np.stack([-np.sin(z), np.zeros_like(z), np.zeros_like(z)]))
    w = d1(a)
    kappa = np.sin(g.h) / g.h
    assert np.abs(w.values[1] + np.cos(z) * kappa).max() <= 1e-13
    assert np.abs(w.values[[0, 2]]).max() <= 1e-13


def test_d1_constant_covector_is_zero():
    g = Grid3(8)
    a = OneForm.from_components(g, 1.0, -2.0, 0.5)
    assert np.all(d1(a).values == 0.0)


def test_d2_of_d1_vanishes(rng):
    g = Grid3(16)
    for _ in range(5):
        a = random_oneform(g, rng, scale=2.0)
        assert np.abs(d2(d1(a)).values).max() <= 1e-13


def test_contract1_examples():
    g = Grid3(16)
    dz = OneForm.from_components(g, 0.0, 0.0, 1.0)
    e3 = VectorField.from_components(g, 0.0, 0.0, 1.0)
    assert np.all(contract1(dz, e3).values == 1.0)

    X = ez.gen_abc(1, 1, 1, g)
    aX = contract1(euclidean_flat(X), X)
    assert np.abs(aX.values - X.pointwise_norm() ** 2).max() <= 1e-13
    x, y, z = g.mesh()
    expect = 3 + 2 * (np.cos(y) * np.sin(z) + np.cos(z) * np.sin(x) + np.cos(x) * np.sin(y))
    assert np.abs(aX.values - expect).max() <= 1e-12
    assert abs(aX.values[0, 0, 0] - 3.0) <= 1e-13


def test_contract2_examples(rng):
    g = Grid3(8)
    # W parallel to X gives zero
    X = VectorField(g, rng.standard_normal((3, 8, 8, 8)))
    c = ScalarField0(g, rng.standard_normal((8, 8, 8)))
    W = ez.TwoForm(g, c.values[None] * X.values)
    assert np.abs(contract2(W, X).values).max() <= 1e-13
    # epsilon-symbol evaluation
    W = ez.TwoForm.from_components(g, 1.0, 0.0, 0.0)
    Y = VectorField.from_components(g, 0.0, 1.0, 0.0)
    out = contract2(W, Y)
    assert np.all(out.values[2] == 1.0) and np.abs(out.values[:2]).max() == 0.0


def test_contract2_beltrami_cancellation():
    g = Grid3(16)
    X = ez.gen_abc(1, 1, 1, g)
    out = contract2(d1(euclidean_flat(X)), X)
    assert np.abs(out.values).max() <= 1e-12


def test_wedge_examples():
    g = Grid3(16)
    X = ez.gen_abc(1, 1, 1, g)
    w = wedge_1_2(euclidean_flat(X), two_form_from_vector(X))
    assert np.abs(w.values - X.pointwise_norm() ** 2).max() <= 1e-12
    assert w.values.min() >= 0.0

    dz = OneForm.from_components(g, 0.0, 0.0, 1.0)
    W = ez.TwoForm.from_components(g, 0.0, 0.0, 1.0)
    assert np.all(wedge_1_2(dz, W).values == 1.0)


@pytest.mark.parametrize("n", [8, 16, 32])
def test_curl_abc_discrete_symbol(n):
    g = Grid3(n)
    X = ez.gen_abc(1, 1, 1, g)
    kappa = np.sin(g.h) / g.h
    assert np.abs(curl_field(X).values - kappa * X.values).max() <= 1e-12


def test_curl_simple_fields():
    g = Grid3(32)
    assert np.all(curl_field(VectorField.from_components(g, 0.0, 0.0, 1.0)).values == 0.0)
    z = g.mesh()[2]
    X = VectorField(g, np.stack([np.sin(z), np.zeros_like(z), np.zeros_like(z)]))
    w = curl_field(X)
    kappa = np.sin(g.h) / g.h
    assert np.abs(w.values[1] - np.cos(z) * kappa).max() <= 1e-13
    assert np.abs(w.values[[0, 2]]).max() <= 1e-13


def test_abc_sampled_divergence_is_exactly_zero():
    # each component is constant along its own axis, so the rolled values
    # subtract to exactly zero
    g = Grid3(16)
    X = ez.gen_abc(1.3, -0.7, 2.1, g)
    assert np.abs(div_field(X).values).max() == 0.0


def test_integrate_examples():
    g = Grid3(16)
    L3 = g.L ** 3
    assert abs(integrate(ThreeForm.constant(g, 1.0)) - L3) <= 1e-9 * L3
    x = g.mesh()[0]
    assert abs(integrate(ThreeForm(g, np.sin(x)))) <= 1e-10


def test_integrate_abc_energy():
    # grid quadrature is exact for these trig products: int |X|^2 = 3 (2 pi)^3
    g = Grid3(32)
    X = ez.gen_abc(1, 1, 1, g)
    w = wedge_1_2(euclidean_flat(X), two_form_from_vector(X))
    expect = 3 * (2 * np.pi) ** 3
    assert abs(integrate(w) - expect) <= 1e-3 * expect
    # with the discrete exterior derivative the answer picks up the symbol
    w2 = wedge_1_2(euclidean_flat(X), d1(euclidean_flat(X)))
    kappa = np.sin(g.h) / g.h
    assert abs(integrate(w2) - kappa * expect) <= 1e-9 * expect


def test_integrate_exact_threeform_vanishes(rng):
    g = Grid3(12)
    w = ez.TwoForm(g, rng.standard_normal((3, 12, 12, 12)))
    assert abs(integrate(d2(w))) <= 1e-10


def test_interp_examples():
    g = Grid3(32)
    f = ScalarField0.from_function(g, lambda x, y, z: np.sin(x))
    pts = g.points()
    assert np.abs(interp(g, f.values, pts) - f.values.ravel()).max() <= 1e-14
    c = ScalarField0.constant(g, 4.25)
    q = np.random.default_rng(3).uniform(-10, 10, (50, 3))
    assert np.abs(interp(g, c.values, q) - 4.25).max() <= 1e-13
    mids = pts + np.array([g.h / 2, 0.0, 0.0])
    err = np.abs(interp(g, f.values, mids) - np.sin(mids[:, 0]))
    assert err.max() <= g.h ** 2 / 8 + 1e-12


def test_cartan_pairing_second_order():
    # i_X d(alpha) + d(alpha(X)) against the analytic Lie derivative for
    # X = d/dz, alpha = sin z dx: the defect is exactly the symbol deficit
    for n in (16, 32):
        g = Grid3(n)
        z = g.mesh()[2]
        a = OneForm(g, np.stack([np.sin(z), np.zeros_like(z), np.zeros_like(z)]))
        X = VectorField.from_components(g, 0.0, 0.0, 1.0)
        lie = contract2(d1(a), X).values + d0(contract1(a, X)).values
        defect = np.abs(lie[0] - np.cos(z)).max()
        assert defect <= g.h ** 2 / 6 + 1e-12
    # and it really is second order: quartering n quarters the defect


def test_outputs_are_stencil_local(rng):
    g = Grid3(8)
    f = random_scalar(g, rng)
    f2 = ScalarField0(g, f.values.copy())
    f2.values[2, 2, 2] += 1.0
    delta = np.abs(d0(f2).values - d0(f).values).sum(axis=0)
    changed = np.argwhere(delta > 0)
    assert len(changed) == 6


def test_grid_point_count_and_spacing():
    g = Grid3(5, 10.0)
    assert g.npoints == 125 and abs(g.h - 2.0) < 1e-15
    assert g.points().shape == (125, 3)

"""Current and chain oracles: mass, evaluation, Stokes consistency, and
flat-distance upper bounds."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import eulerize as ez
from eulerize.currents import (DiscreteCurrent1, PolylineCurrent1, SurfaceChain2,
                               combine_to_dirac, eval1, eval2,
                               flat_distance_bound, mass)
from eulerize.errors import ToolError
from eulerize.grid import Grid3, OneForm

from conftest import bandlimited_oneform


def flat_rectangle(x0, x1, y0, y1, z, nu=8, nv=8):
    xs = np.linspace(x0, x1, nu + 1)
    ys = np.linspace(y0, y1, nv + 1)
    V = np.zeros((nu + 1, nv + 1, 3))
    V[..., 0] = xs[:, None]
    V[..., 1] = ys[None, :]
    V[..., 2] = z
    return SurfaceChain2(V)


def test_mass_single_dirac():
    c = DiscreteCurrent1([[0.0, 0.0, 0.0]], [[3.0, 4.0, 0.0]], [1.0])
    assert abs(c.mass() - 5.0) <= 1e-15


def test_mass_circle_polyline_chord_bound():
    k = 200
    t = np.linspace(0, 2 * np.pi, k + 1)
    verts = np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)])
    pl = PolylineCurrent1(verts)
    ell = 2 * np.pi
    delta = ell / k
    assert pl.mass() <= ell
    assert ell - pl.mass() <= ell * delta ** 2 / 24 + 1e-12
    # conversion to Diracs preserves the mass exactly
    assert abs(pl.to_dirac().mass() - pl.mass()) <= 1e-12


def test_mass_flat_rectangle_area():
    S = flat_rectangle(0, 2.0, 0, 0.75, 1.0)
    assert abs(S.mass() - 1.5) <= 1e-12


def test_eval1_unit_dirac_dz():
    g = Grid3(8)
    dz = OneForm.from_components(g, 0.0, 0.0, 1.0)
    c = DiscreteCurrent1([[1.0, 2.0, 3.0]], [[0.0, 0.0, 1.0]], [1.0])
    assert abs(eval1(c, dz) - 1.0) <= 1e-14


def test_eval2_flat_rectangle_against_e3():
    g = Grid3(8)
    W = ez.TwoForm.from_components(g, 0.0, 0.0, 1.0)
    S = flat_rectangle(1.0, 2.5, 2.0, 3.0, 0.5)
    assert abs(eval2(S, W) - 1.5) <= 1e-12


def test_eval1_closed_orbit_of_vertical_field():
    # a closed z-line of the vertical field paired with dz gives L
    g = Grid3(16)
    dz = OneForm.from_components(g, 0.0, 0.0, 1.0)
    zs = np.linspace(0.0, g.L, 257)
    pl = PolylineCurrent1(np.column_stack([np.full_like(zs, 1.0),
                                           np.full_like(zs, 2.0), zs]))
    assert abs(eval1(pl, dz) - g.L) <= 1e-9


def test_boundary_stokes_linear_form_exact():
    # a = x dy: central differences and trilinear interpolation are exact on
    # linear coefficients, so both sides equal the area to rounding
    g = Grid3(64)
    x = g.mesh()[0]
    a = OneForm(g, np.stack([np.zeros_like(x), x, np.zeros_like(x)]))
    S = flat_rectangle(np.pi - 1, np.pi + 1, np.pi - 1, np.pi + 1, np.pi, 16, 16)
    lhs = sum(eval1(p.to_dirac(), a) for p in S.boundary())
    rhs = eval2(S, ez.d1(a))
    assert abs(lhs - 4.0) <= 1e-6
    assert abs(lhs - rhs) <= 1e-6


def test_boundary_of_closed_pair_has_zero_mass():
    # two rectangles glued along all four edges with opposite orientation
    S1 = flat_rectangle(0, 1, 0, 1, 0.0, 4, 4)
    S2 = SurfaceChain2(S1.vertices[::-1].copy())   # reversed orientation
    total = S1.boundary_current() + S2.boundary_current()
    assert total.simplified(1e-12).mass() <= 1e-12


def test_boundary_structural_cancellation():
    S = flat_rectangle(0, 1, 0, 2, 0.0, 6, 6)
    b = S.boundary_current()
    assert abs(b.mass() - 6.0) <= 1e-12
    assert (b - b).simplified().mass() == 0.0


def test_stokes_consistency_truncation_order(rng):
    # at unit amplitude the mismatch is dominated by the h^2 symbol deficit;
    # doubling n must shrink it by about 4
    mis = {}
    for n in (32, 64):
        g = Grid3(n)
        a = bandlimited_oneform(g, np.random.default_rng(7), kmax=2, amplitude=1.0)
        S = flat_rectangle(np.pi - 1, np.pi + 1, np.pi - 0.5, np.pi + 1.2, np.pi, 24, 24)
        lhs = sum(eval1(p.to_dirac(), a) for p in S.boundary())
        rhs = eval2(S, ez.d1(a))
        mis[n] = abs(lhs - rhs)
    assert mis[64] <= mis[32] / 2.5 + 1e-12


def test_flat_distance_bound_identical_currents():
    c = DiscreteCurrent1([[0, 0, 0], [1, 0, 0]], [[1, 0, 0], [1, 0, 0]], [1.0, 2.0])
    assert flat_distance_bound(c, c) == 0.0


def test_flat_distance_bound_with_filler_beats_mass():
    eps = 1e-3
    k = 16
    xs = np.linspace(0, 1, k + 1)
    # two parallel unit segments distance eps apart, filled by the thin
    # rectangle between them
    V = np.zeros((2, k + 1, 3))
    V[0, :, 0] = xs
    V[1, :, 0] = xs
    V[1, :, 1] = eps
    filler = SurfaceChain2(V)
    parts = filler.boundary()
    # split the oriented boundary into a positive and a negative current so
    # that cA - cB matches the filler boundary structurally
    cA = combine_to_dirac([parts[0], parts[1]])
    cB = combine_to_dirac([parts[2], parts[3]]).scaled(-1.0)
    mass_bound = flat_distance_bound(cA, cB)
    assert abs(mass_bound - (2.0 + 2 * eps)) <= 1e-12
    filler_bound = flat_distance_bound(cA, cB, filler=filler)
    assert abs(filler_bound - eps) <= 1e-12
    assert filler_bound < mass_bound


def test_flat_distance_boundary_mismatch_raises():
    S = flat_rectangle(0, 1, 0, 1, 0.0, 4, 4)
    c1 = DiscreteCurrent1([[0, 0, 0]], [[1, 0, 0]], [1.0])
    c2 = DiscreteCurrent1([[0, 0, 0]], [[0, 1, 0]], [1.0])
    with pytest.raises(ToolError) as ei:
        flat_distance_bound(c1, c2, filler=S)
    assert ei.value.code == "boundary-mismatch"


def test_mass_triangle_inequality(rng):
    for _ in range(20):
        m1, m2 = rng.integers(1, 6, size=2)
        c1 = DiscreteCurrent1(rng.normal(size=(m1, 3)), rng.normal(size=(m1, 3)),
                              rng.uniform(0, 2, m1))
        c2 = DiscreteCurrent1(rng.normal(size=(m2, 3)), rng.normal(size=(m2, 3)),
                              rng.uniform(0, 2, m2))
        assert (c1 + c2).mass() <= c1.mass() + c2.mass() + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_mass_duality_bound(npts, seed):
    # |c(a)| <= mass(c) * sup |a| for grid forms evaluated by interpolation
    r = np.random.default_rng(seed)
    g = Grid3(6)
    a = OneForm(g, r.standard_normal((3, 6, 6, 6)))
    c = DiscreteCurrent1(r.uniform(0, g.L, (npts, 3)), r.normal(size=(npts, 3)),
                         r.uniform(0, 3, npts))
    sup_a = float(np.linalg.norm(a.values, axis=0).max())
    assert abs(eval1(c, a)) <= c.mass() * sup_a + 1e-10


def test_foliation_flag_invariances(rng):
    g = Grid3(8)
    X = ez.gen_abc(2, 1, 1, g)
    pts = rng.uniform(0, g.L, (12, 3))
    vecs = ez.interp(g, X.values, pts).T

    def vel(p):
        return ez.interp(g, X.values, p).T

    c = DiscreteCurrent1(pts, vecs, rng.uniform(0.1, 1, 12))
    assert c.is_foliation_current(vel)
    assert c.scaled(3.5).is_foliation_current(vel)
    c2 = DiscreteCurrent1(pts, vecs, rng.uniform(0.1, 1, 12))
    mix = DiscreteCurrent1(np.vstack([c.points, c2.points]),
                           np.vstack([c.vectors, c2.vectors]),
                           np.concatenate([0.3 * c.weights, 0.7 * c2.weights]))
    assert mix.is_foliation_current(vel)
    assert not c.scaled(-1.0).is_foliation_current(vel)
    bad = DiscreteCurrent1(pts, vecs + 0.1, c.weights)
    assert not bad.is_foliation_current(vel)


def test_current_json_round_trip(rng):
    c = DiscreteCurrent1(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)),
                         rng.uniform(0, 1, 5))
    back = DiscreteCurrent1.from_json(c.to_json())
    assert np.allclose(back.points, c.points)
    assert np.allclose(back.weights, c.weights)

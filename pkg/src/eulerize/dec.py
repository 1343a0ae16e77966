"""Discrete exterior calculus on the periodic grid.

All derivatives are second-order central differences built from
``np.roll``, so difference operators along distinct axes commute exactly
and the complex identities d1(d0(f)) = 0 and d2(d1(a)) = 0 hold to
rounding.  Output at a point depends only on the fixed stencil around it.
"""

from __future__ import annotations

import numpy as np

from .errors import ToolError
from .grid import Grid3, OneForm, ScalarField0, ThreeForm, TwoForm, VectorField


def diff(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Central difference along one axis with periodic wrap."""
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)


def d0(f: ScalarField0) -> OneForm:
    """Exterior derivative of a 0-form: component k is D_k f."""
    h = f.grid.h
    return OneForm(f.grid, np.stack([diff(f.values, k, h) for k in range(3)]))


def _curl_components(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        out[a] = diff(values[c], b, h) - diff(values[b], c, h)
    return out


def d1(a: OneForm) -> TwoForm:
    """Exterior derivative of a 1-form, returned via its vector proxy W.

    W_k = sum_{l,m} eps_{klm} D_l a_m, i.e. the discrete curl of the
    coefficient field.
    """
    return TwoForm(a.grid, _curl_components(a.values, a.grid.h))


def d2(w: TwoForm) -> ThreeForm:
    """Exterior derivative of a 2-form: the divergence of its proxy W."""
    h = w.grid.h
    return ThreeForm(w.grid, sum(diff(w.values[k], k, h) for k in range(3)))


def contract1(a: OneForm, X: VectorField) -> ScalarField0:
    """Pointwise pairing a(X)."""
    return ScalarField0(a.grid, np.einsum("kijl,kijl->ijl", a.values, X.values))


def contract2(w: TwoForm, X: VectorField) -> OneForm:
    """Pointwise interior product i_X omega; with omega = i_W mu0 this is
    the covector (i_X omega)_k = sum_{l,m} eps_{lmk} W_l X_m = (W x X)_k."""
    W, V = w.values, X.values
    out = np.empty_like(W)
    for k in range(3):
        l, m = (k + 1) % 3, (k + 2) % 3
        out[k] = W[l] * V[m] - W[m] * V[l]
    return OneForm(w.grid, out)


def wedge_1_2(a: OneForm, w: TwoForm) -> ThreeForm:
    """Wedge of a 1-form with a 2-form: coefficient sum_k a_k W_k."""
    return ThreeForm(a.grid, np.einsum("kijl,kijl->ijl", a.values, w.values))


def curl_field(X: VectorField) -> VectorField:
    """The vector Y with i_Y mu0 = d(X-flat) under the Euclidean background."""
    return VectorField(X.grid, _curl_components(X.values, X.grid.h))


def div_field(X: VectorField) -> ScalarField0:
    """Central-difference divergence."""
    h = X.grid.h
    return ScalarField0(X.grid, sum(diff(X.values[k], k, h) for k in range(3)))


def euclidean_flat(X: VectorField) -> OneForm:
    """Euclidean dual 1-form X-flat (same Cartesian coefficients)."""
    return OneForm(X.grid, X.values.copy())


def two_form_from_vector(Y: VectorField, mu: ThreeForm | None = None) -> TwoForm:
    """i_Y mu as a TwoForm; mu defaults to the standard volume form."""
    vals = Y.values if mu is None else Y.values * mu.values[None]
    return TwoForm(Y.grid, np.array(vals, dtype=np.float64, copy=True))


def integrate(w: ThreeForm) -> float:
    """h^3 times the sum of coefficients."""
    return float(w.grid.h ** 3 * w.values.sum())


def grid_l2_norm(values: np.ndarray, grid: Grid3) -> float:
    """Grid L2 norm sqrt(h^3 * sum of squares) over all stored entries."""
    return float(np.sqrt(grid.h ** 3 * np.sum(np.asarray(values) ** 2)))


def interp(grid: Grid3, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Trilinear periodic interpolation.

    ``values`` is (n, n, n) or (c, n, n, n); ``points`` is (..., 3) in
    physical coordinates (any reals; wrapped mod L).  Returns shape
    ``points.shape[:-1]`` or ``(c,) + points.shape[:-1]``.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[-1] != 3:
        raise ToolError("bad-points", f"points must have last dim 3, got {pts.shape}")
    scalar_input = values.ndim == 3
    vals = values[None] if scalar_input else values
    n, h = grid.n, grid.h

    u = np.mod(pts / h, n)            # fractional index in [0, n)
    i0 = np.floor(u).astype(np.int64) % n
    frac = u - np.floor(u)
    i1 = (i0 + 1) % n

    fx, fy, fz = frac[..., 0], frac[..., 1], frac[..., 2]
    ix0, iy0, iz0 = i0[..., 0], i0[..., 1], i0[..., 2]
    ix1, iy1, iz1 = i1[..., 0], i1[..., 1], i1[..., 2]

    out = np.zeros((vals.shape[0],) + pts.shape[:-1])
    for dx, wx in ((ix0, 1.0 - fx), (ix1, fx)):
        for dy, wy in ((iy0, 1.0 - fy), (iy1, fy)):
            wxy = wx * wy
            for dz, wz in ((iz0, 1.0 - fz), (iz1, fz)):
                w = wxy * wz
                out += vals[:, dx, dy, dz] * w
    return out[0] if scalar_input else out


def interp_field(field, points: np.ndarray) -> np.ndarray:
    """Interpolate any stored field object at physical points."""
    return interp(field.grid, field.values, points)

"""Finitely supported 1-currents and structured 2-chains.

A ``DiscreteCurrent1`` is a weighted sum of Dirac currents
``sum_i c_i * delta_{p_i}^{v_i}`` evaluated against a 1-form by
``sum_i c_i a(p_i)(v_i)``.  Weights may be signed so that formal
differences of currents stay in the class; the mass uses |c_i| |v_i|.

A ``SurfaceChain2`` is a structured quadrilateral mesh over parameters
(u, v) with vertex positions in R^3 (positions are an unwrapped lift;
form evaluation maps them back to the torus).  Orientation convention:
a 2-form omega is integrated as omega(e_u, e_v) per quad, and
``boundary`` returns the edges {v=0,+u}, {u=end,+v}, {v=end,-u},
{u=0,-v}, which makes Stokes hold with the same sign on both sides.

The flat distance is only ever bounded from above: either by the mass of
the difference or by the area of an explicit filler surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dec import interp
from .errors import ToolError
from .grid import OneForm, TwoForm


def _as_points(arr) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ToolError("bad-current", f"expected (m,3) array, got {a.shape}")
    return a


@dataclass
class DiscreteCurrent1:
    """Weighted Dirac 1-current: points (m,3), vectors (m,3), weights (m,)."""

    points: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = _as_points(self.points)
        self.vectors = _as_points(self.vectors)
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if not (len(self.points) == len(self.vectors) == len(self.weights)):
            raise ToolError("bad-current", "points/vectors/weights length mismatch")

    def mass(self) -> float:
        return float(np.sum(np.abs(self.weights) * np.linalg.norm(self.vectors, axis=1)))

    def scaled(self, c: float) -> "DiscreteCurrent1":
        return DiscreteCurrent1(self.points, self.vectors, self.weights * c)

    def __add__(self, other: "DiscreteCurrent1") -> "DiscreteCurrent1":
        return DiscreteCurrent1(
            np.vstack([self.points, other.points]),
            np.vstack([self.vectors, other.vectors]),
            np.concatenate([self.weights, other.weights]),
        )

    def __sub__(self, other: "DiscreteCurrent1") -> "DiscreteCurrent1":
        return self + other.scaled(-1.0)

    def simplified(self, tol: float = 1e-12) -> "DiscreteCurrent1":
        """Merge rows with identical (point, +-vector) support and drop rows
        whose merged weight is below tol (structural cancellation).  A Dirac
        (p, -v, w) is identified with (p, v, -w)."""
        vecs = self.vectors.copy()
        weights = self.weights.copy()
        # orient each vector by the sign of its first nonzero component
        undecided = np.ones(len(vecs), dtype=bool)
        for col in range(3):
            flip = undecided & (vecs[:, col] < -tol)
            vecs[flip] *= -1.0
            weights[flip] *= -1.0
            undecided &= np.abs(vecs[:, col]) <= tol
        key = np.round(np.hstack([self.points, vecs]) / max(tol, 1e-300))
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        w = np.zeros(len(uniq))
        np.add.at(w, inv, weights)
        first = np.full(len(uniq), -1, dtype=np.int64)
        for row, g in enumerate(inv):
            if first[g] < 0:
                first[g] = row
        keep = np.abs(w) > tol
        idx = first[keep]
        return DiscreteCurrent1(self.points[idx], vecs[idx], w[keep])

    def is_foliation_current(self, velocity_fn, rel_tol: float = 1e-6) -> bool:
        """Check v_i = X(p_i) for the declared field (relative tolerance)
        and that all weights are nonnegative."""
        if np.any(self.weights < 0):
            return False
        X = np.asarray(velocity_fn(self.points), dtype=np.float64)
        scale = np.maximum(np.linalg.norm(X, axis=1), 1e-300)
        return bool(np.all(np.linalg.norm(self.vectors - X, axis=1) / scale <= rel_tol))

    def to_json(self) -> list:
        return [[list(p), list(v), float(w)]
                for p, v, w in zip(self.points, self.vectors, self.weights)]

    @classmethod
    def from_json(cls, data) -> "DiscreteCurrent1":
        pts = np.array([row[0] for row in data], dtype=np.float64).reshape(-1, 3)
        vecs = np.array([row[1] for row in data], dtype=np.float64).reshape(-1, 3)
        w = np.array([row[2] for row in data], dtype=np.float64)
        return cls(pts, vecs, w)


@dataclass
class PolylineCurrent1:
    """Ordered vertices with an orientation sign; mass = polyline length."""

    vertices: np.ndarray
    sign: float = 1.0

    def __post_init__(self):
        self.vertices = _as_points(self.vertices)
        if len(self.vertices) < 2:
            raise ToolError("bad-current", "polyline needs at least 2 vertices")

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    def length(self) -> float:
        return float(self.segment_lengths().sum())

    def mass(self) -> float:
        return self.length()

    def reversed(self) -> "PolylineCurrent1":
        return PolylineCurrent1(self.vertices[::-1].copy(), self.sign)

    def to_dirac(self) -> DiscreteCurrent1:
        """Per-segment midpoint Diracs with unit tangents, weight = length."""
        d = np.diff(self.vertices, axis=0)
        lengths = np.linalg.norm(d, axis=1)
        keep = lengths > 0
        d, lengths = d[keep], lengths[keep]
        mids = 0.5 * (self.vertices[:-1] + self.vertices[1:])[keep]
        tangents = d / lengths[:, None]
        return DiscreteCurrent1(mids, tangents, self.sign * lengths)


def combine_to_dirac(parts: list[PolylineCurrent1]) -> DiscreteCurrent1:
    diracs = [p.to_dirac() for p in parts]
    out = diracs[0]
    for d in diracs[1:]:
        out = out + d
    return out


def _oneform_values(a, points: np.ndarray) -> np.ndarray:
    """Evaluate a 1-form (grid OneForm or callable) at (m,3) points -> (m,3)."""
    if isinstance(a, OneForm):
        return interp(a.grid, a.values, points).T
    vals = np.asarray(a(points), dtype=np.float64)
    if vals.shape == (3, len(points)):
        vals = vals.T
    return vals


def _twoform_values(w, points: np.ndarray) -> np.ndarray:
    """Evaluate a 2-form proxy W (grid TwoForm or callable) at points."""
    if isinstance(w, TwoForm):
        return interp(w.grid, w.values, points).T
    vals = np.asarray(w(points), dtype=np.float64)
    if vals.shape == (3, len(points)):
        vals = vals.T
    return vals


def eval1(c: DiscreteCurrent1 | PolylineCurrent1, a) -> float:
    """Pair a 1-current with a 1-form (midpoint rule for polylines)."""
    if isinstance(c, PolylineCurrent1):
        c = c.to_dirac()
    vals = _oneform_values(a, c.points)
    return float(np.sum(c.weights * np.einsum("ij,ij->i", vals, c.vectors)))


@dataclass
class SurfaceChain2:
    """Structured quad mesh: vertices (nu+1, nv+1, 3) over parameters (u, v)."""

    vertices: np.ndarray
    tangent_ok: np.ndarray | None = field(default=None, repr=False)
    meta: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 3 or v.shape[0] < 2 or v.shape[1] < 2:
            raise ToolError("bad-chain", f"expected (nu+1, nv+1, 3) vertices, got {v.shape}")
        self.vertices = v

    @property
    def nquads(self) -> tuple[int, int]:
        return self.vertices.shape[0] - 1, self.vertices.shape[1] - 1

    def _quad_frames(self):
        """Midpoints and averaged edge vectors (e_u, e_v) per quad."""
        V = self.vertices
        mid = 0.25 * (V[:-1, :-1] + V[1:, :-1] + V[:-1, 1:] + V[1:, 1:])
        e_u = 0.5 * ((V[1:, :-1] - V[:-1, :-1]) + (V[1:, 1:] - V[:-1, 1:]))
        e_v = 0.5 * ((V[:-1, 1:] - V[:-1, :-1]) + (V[1:, 1:] - V[1:, :-1]))
        return mid, e_u, e_v

    def mass(self) -> float:
        _, e_u, e_v = self._quad_frames()
        return float(np.linalg.norm(np.cross(e_u, e_v), axis=2).sum())

    def tangent_fraction(self) -> float:
        if self.tangent_ok is None:
            raise ToolError("bad-chain", "no tangency data on this chain")
        return float(np.mean(self.tangent_ok))

    def boundary(self) -> list[PolylineCurrent1]:
        """Oriented boundary as four edge polylines (see module docstring)."""
        V = self.vertices
        return [
            PolylineCurrent1(V[:, 0].copy(), +1.0),        # v = 0, +u
            PolylineCurrent1(V[-1, :].copy(), +1.0),       # u = end, +v
            PolylineCurrent1(V[::-1, -1].copy(), +1.0),    # v = end, -u
            PolylineCurrent1(V[0, ::-1].copy(), +1.0),     # u = 0, -v
        ]

    def boundary_current(self) -> DiscreteCurrent1:
        return combine_to_dirac(self.boundary())


def eval2(S: SurfaceChain2, w) -> float:
    """Integrate a 2-form over the chain by the midpoint rule per quad:
    omega(e_u, e_v) = W(mid) . (e_u x e_v)."""
    mid, e_u, e_v = S._quad_frames()
    pts = mid.reshape(-1, 3)
    W = _twoform_values(w, pts)
    normals = np.cross(e_u, e_v).reshape(-1, 3)
    return float(np.sum(np.einsum("ij,ij->i", W, normals)))


def mass(c) -> float:
    """Mass of a current or chain (dispatch helper)."""
    return c.mass()


def flat_distance_bound(c1: DiscreteCurrent1, c2: DiscreteCurrent1,
                        filler: SurfaceChain2 | None = None,
                        match_tol: float = 1e-9) -> float:
    """Upper bound on the flat distance F(c1 - c2).

    Without a filler: mass(c1 - c2) after structural cancellation.  With a
    filler B whose boundary matches c1 - c2 structurally:
    min(mass(c1 - c2), mass(B)).  Exact flat-norm minimization is out of
    scope by design.
    """
    diff = (c1 - c2).simplified(match_tol)
    mass_bound = diff.mass()
    if filler is None:
        return mass_bound
    residue = (filler.boundary_current() - diff).simplified(match_tol)
    if residue.mass() > match_tol * max(1.0, mass_bound, filler.mass()):
        raise ToolError("boundary-mismatch",
                        f"filler boundary differs from c1 - c2 by mass {residue.mass():.3e}")
    return min(mass_bound, filler.mass())


def mass_fraction_within(c: DiscreteCurrent1, distance_fn, radius: float) -> float:
    """Fraction of the current's mass carried by points with
    distance_fn(points) <= radius."""
    contrib = np.abs(c.weights) * np.linalg.norm(c.vectors, axis=1)
    total = contrib.sum()
    if total == 0:
        return 0.0
    d = np.asarray(distance_fn(c.points), dtype=np.float64)
    return float(contrib[d <= radius].sum() / total)

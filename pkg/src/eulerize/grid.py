"""Periodic uniform grid on the flat 3-torus and the sampled field types.

Conventions used throughout:

* axes (0, 1, 2) = (x, y, z); the grid has ``n`` points per axis with
  spacing ``h = L / n`` and vertex coordinates ``i * h`` (so integer
  frequencies are exactly periodic for the default ``L = 2*pi``).
* scalar-valued objects store one array of shape ``(n, n, n)``;
  vector-valued objects store ``(3, n, n, n)`` component-major.
* 2-forms are stored through the Euclidean identification
  ``omega = i_W mu0`` and keep the vector proxy ``W`` componentwise;
  3-forms store the coefficient against the standard volume form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ToolError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid with n points per axis and period L."""

    n: int
    L: float = TWO_PI

    def __post_init__(self):
        if self.n < 1:
            raise ToolError("bad-grid", f"n must be positive, got {self.n}")
        if not (self.L > 0):
            raise ToolError("bad-grid", f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def npoints(self) -> int:
        return self.n ** 3

    def axis_coords(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate arrays (x, y, z), each of shape (n, n, n)."""
        c = self.axis_coords()
        return np.meshgrid(c, c, c, indexing="ij")

    def points(self) -> np.ndarray:
        """All grid points as an (n^3, 3) array in flat (C) order."""
        x, y, z = self.mesh()
        return np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)

    def flat_index(self, i, j, k):
        return (np.asarray(i) * self.n + np.asarray(j)) * self.n + np.asarray(k)


def _check_values(grid: Grid3, values: np.ndarray, ncomp: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    want = (grid.n, grid.n, grid.n) if ncomp == 1 else (ncomp, grid.n, grid.n, grid.n)
    if values.shape != want:
        raise ToolError("bad-field", f"expected shape {want}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ToolError("bad-field", "field contains non-finite values")
    return values


@dataclass
class ScalarField0:
    """0-form: one real value per grid point."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, 1)

    @classmethod
    def constant(cls, grid: Grid3, c: float) -> "ScalarField0":
        return cls(grid, np.full((grid.n,) * 3, float(c)))

    @classmethod
    def from_function(cls, grid: Grid3, f) -> "ScalarField0":
        x, y, z = grid.mesh()
        return cls(grid, np.asarray(f(x, y, z), dtype=np.float64))

    def copy(self) -> "ScalarField0":
        return ScalarField0(self.grid, self.values.copy())


@dataclass
class _Vector3Field:
    grid: Grid3
    values: np.ndarray = field(repr=False)  # (3, n, n, n)

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, 3)

    @classmethod
    def from_components(cls, grid: Grid3, cx, cy, cz):
        return cls(grid, np.stack([np.broadcast_to(np.asarray(c, dtype=np.float64), (grid.n,) * 3)
                                   for c in (cx, cy, cz)]))

    @classmethod
    def from_function(cls, grid: Grid3, f):
        """f(x, y, z) -> (cx, cy, cz) arrays."""
        x, y, z = grid.mesh()
        cx, cy, cz = f(x, y, z)
        return cls.from_components(grid, cx, cy, cz)

    @classmethod
    def constant(cls, grid: Grid3, v):
        v = np.asarray(v, dtype=np.float64)
        return cls.from_components(grid, v[0], v[1], v[2])

    def component(self, k: int) -> np.ndarray:
        return self.values[k]

    def copy(self):
        return type(self)(self.grid, self.values.copy())


class VectorField(_Vector3Field):
    """Sampled vector field X on the grid."""

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values ** 2, axis=0))

    def min_norm(self) -> float:
        return float(self.pointwise_norm().min())

    def is_non_vanishing(self) -> bool:
        return self.min_norm() > 0.0


class OneForm(_Vector3Field):
    """1-form with covector coefficients in Cartesian coordinates."""


class TwoForm(_Vector3Field):
    """2-form stored as the vector proxy W with omega = i_W mu0."""


@dataclass
class ThreeForm:
    """3-form: coefficient against the standard volume form mu0."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, 1)

    @classmethod
    def constant(cls, grid: Grid3, c: float) -> "ThreeForm":
        return cls(grid, np.full((grid.n,) * 3, float(c)))

    def is_volume_form(self) -> bool:
        return bool(self.values.min() > 0.0)

    def copy(self) -> "ThreeForm":
        return ThreeForm(self.grid, self.values.copy())

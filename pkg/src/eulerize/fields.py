"""Test-field generators and plug insertion into an ambient grid field."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ToolError
from .grid import Grid3, VectorField
from .plugs import PlugField


def gen_abc(A: float, B: float, C: float, grid: Grid3) -> VectorField:
    """ABC field (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)."""
    x, y, z = grid.mesh()
    return VectorField.from_components(
        grid,
        A * np.sin(z) + C * np.cos(y),
        B * np.sin(x) + A * np.cos(z),
        C * np.sin(y) + B * np.cos(x),
    )


@dataclass
class Placement:
    """Rigid placement of a plug inside the torus.

    The plug frame maps to ambient coordinates by x = center + R q.  The
    replacement box is axis-aligned in the plug frame: |q_i| <= half[i].
    """

    center: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    half_extent: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0, 1.25]))

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.half_extent = np.asarray(self.half_extent, dtype=np.float64).reshape(3)
        if not np.allclose(self.rotation @ self.rotation.T, np.eye(3), atol=1e-12):
            raise ToolError("bad-placement", "rotation must be orthogonal")
        if np.linalg.det(self.rotation) < 0:
            raise ToolError("bad-placement", "rotation must preserve orientation")

    def to_plug_frame(self, points: np.ndarray, L: float | None) -> np.ndarray:
        """Minimal periodic representative of (x - center), rotated back.
        L=None means non-periodic coordinates (bare plug frame)."""
        d = np.atleast_2d(points) - self.center
        if L is not None:
            d -= L * np.round(d / L)
        return d @ self.rotation  # == R^T applied to rows

    def to_ambient(self, q: np.ndarray) -> np.ndarray:
        return np.atleast_2d(q) @ self.rotation.T + self.center

    def vectors_to_ambient(self, v: np.ndarray) -> np.ndarray:
        return np.atleast_2d(v) @ self.rotation.T


@dataclass
class EmbeddedPlug:
    """A plug viewed in ambient coordinates (used by the chain studies)."""

    plug: PlugField
    placement: Placement
    speed: float = 1.0
    L: float | None = 2.0 * np.pi   # None: bare plug frame, no periodic wrap

    def velocity(self, points_ambient: np.ndarray) -> np.ndarray:
        q = self.placement.to_plug_frame(points_ambient, self.L)
        v = self._plug_velocity_extended(q)
        return self.speed * self.placement.vectors_to_ambient(v)

    def curl(self, points_ambient: np.ndarray) -> np.ndarray:
        q = self.placement.to_plug_frame(points_ambient, self.L)
        c = self.plug.curl(q)
        r = np.hypot(q[:, 0], q[:, 1])
        outside = (r < self.plug.spec.r_in) | (r > self.plug.spec.r_out) | (np.abs(q[:, 2]) > 1.0)
        c[outside] = 0.0
        return self.speed * self.placement.vectors_to_ambient(c)

    def _plug_velocity_extended(self, q: np.ndarray) -> np.ndarray:
        """Plug velocity, extended vertically outside D x [-1, 1]."""
        q = np.atleast_2d(q)
        r = np.hypot(q[:, 0], q[:, 1])
        inside = (r >= self.plug.spec.r_in) & (r <= self.plug.spec.r_out) & (np.abs(q[:, 2]) <= 1.0)
        out = np.tile(np.array([0.0, 0.0, 1.0]), (len(q), 1))
        if inside.any():
            out[inside] = self.plug.velocity(q[inside])
        return out

    def trace(self, entry_ambient, step=1e-3, budget=1e3, sample_times=None):
        """Trace in the plug frame, then map positions back to ambient.

        Times are plug-frame times; ambient time is t / speed.  The exit
        plane is the plug's z = 1 face.
        """
        q = self.placement.to_plug_frame(np.asarray(entry_ambient, dtype=np.float64), self.L)[0]
        r0, th0 = np.hypot(q[0], q[1]), np.arctan2(q[1], q[0])
        code, t, state, arc, pos = self.plug.trace((r0, th0, q[2]), step=step,
                                                   budget=budget, sample_times=sample_times)
        pos_amb = self.placement.to_ambient(pos) if len(pos) else pos
        end_plug = np.array([state[0] * np.cos(state[1]), state[0] * np.sin(state[1]), state[2]])
        end_amb = self.placement.to_ambient(end_plug)[0]
        return code, t, end_amb, arc, pos_amb

    def reeb_circle_distance(self, points_ambient: np.ndarray) -> np.ndarray:
        """Distance to the two designed circles (r_star, +-z_star)."""
        q = self.placement.to_plug_frame(points_ambient, self.L)
        r = np.hypot(q[:, 0], q[:, 1])
        dr = r - self.plug.spec.r_star
        dplus = np.hypot(dr, q[:, 2] - self.plug.spec.z_star)
        dminus = np.hypot(dr, q[:, 2] + self.plug.spec.z_star)
        return np.minimum(dplus, dminus)


def insert_plug(ambient: VectorField, plug: PlugField, placement: Placement,
                vertical_tol: float = 1e-12) -> VectorField:
    """Replace the ambient field inside the placement box by the plug field.

    Preconditions: the ambient field must be constant and parallel to the
    plug's vertical axis (R e_z) throughout the box, and the plug's
    vertical collar (where its field is exactly d/dz) must cover at least
    two grid cells between the active region and every box face.
    """
    grid = ambient.grid
    L, h = grid.L, grid.h
    spec = plug.spec
    if np.any(2.0 * placement.half_extent > L):
        raise ToolError("bad-placement", "box does not fit inside the torus period")

    # active support of the plug (outside it the plug field is d/dz exactly)
    rad, zext = spec.active_support()
    rho = spec.r_star + rad
    need = np.array([rho, rho, zext])
    margin = placement.half_extent - need
    if np.any(margin < 2.0 * h):
        raise ToolError("plug-collar-too-thin",
                        f"vertical collar {margin.min():.4f} is below 2 cells ({2 * h:.4f})")

    pts = grid.points()
    q = placement.to_plug_frame(pts, L)
    in_box = np.all(np.abs(q) <= placement.half_extent[None, :], axis=1)

    vertical_dir = placement.rotation[:, 2]
    vals = ambient.values.reshape(3, -1).T
    box_vals = vals[in_box]
    par = box_vals @ vertical_dir
    perp = box_vals - np.outer(par, vertical_dir)
    speed = float(par.mean()) if len(par) else 1.0
    dev = 0.0
    if len(par):
        dev = max(float(np.abs(perp).max()), float(np.abs(par - speed).max()))
    if dev > vertical_tol:
        raise ToolError("ambient-not-vertical-in-box",
                        f"ambient deviates from vertical by {dev:.3e} inside the box")
    if speed <= 0:
        raise ToolError("ambient-not-vertical-in-box",
                        "ambient speed along the plug axis must be positive")

    emb = EmbeddedPlug(plug, placement, speed=speed, L=L)
    new_vals = vals.copy()
    idx = np.flatnonzero(in_box)
    new_vals[idx] = speed * placement.vectors_to_ambient(
        emb._plug_velocity_extended(q[idx]))
    return VectorField(grid, new_vals.T.reshape(ambient.values.shape))

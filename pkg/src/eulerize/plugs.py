"""Plug construction on the solid annulus P = D x [-1, 1].

Two variants share the geometry D = {r_in <= r <= r_out} and the circle
locus (r_star, +-z_star):

* "wilson": W = f d/dtheta + g d/dz with g = 1 - h(r) (k_-(z) + k_+(z)),
  f = A h(r) s(z).  g vanishes exactly on the two circles where |f| = A;
  orbits preserve r, and the entry-exit angle shift cancels because f is
  odd and g even in z.  Not volume-preserving (by design).

* "stream": axisymmetric and exactly divergence-free, built from the
  stream function H(r, z) = r^2/2 - chi(r) w(z) via
  (rdot, zdot) = (-dH/dz / r, dH/dr / r), plus the same kind of odd
  theta-component supported near the circles.  w has flat peaks at
  +-z_star (first three derivatives vanish), and chi is tuned so that
  chi'(r_star) = r_star and chi''(r_star) > 1; the reduced flow then has
  one-sided degenerate stagnation points at (r_star, +-z_star) which
  forward orbits on the critical level reach only in infinite time.
  The trapped entry radius is r_e = sqrt(r_star^2 - 2 chi(r_star)).

Axioms are never assumed: every generated plug runs the numeric checker
and generation fails loudly if any check fails.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tracing
from .errors import ToolError
from .tracing import VARIANT_STREAM, VARIANT_WILSON


@dataclass
class PlugSpec:
    """Analytic plug definition (geometry, bump widths, amplitudes)."""

    variant: str = "wilson"
    r_in: float = 1.0
    r_out: float = 3.0
    r_star: float = 2.0
    z_star: float = 0.5
    delta_r: float = 0.5
    delta_z: float = 0.25
    amplitude: float = 1.0
    well_depth: float = 0.6       # stream: chi(r_star)
    radial_margin: float = 1.0    # stream: chi''(r_star) - 1

    def validate(self) -> None:
        if self.variant not in ("wilson", "stream"):
            raise ToolError("bad-plug-spec", f"unknown variant {self.variant!r}")
        if not (0 < self.r_in < self.r_star < self.r_out):
            raise ToolError("bad-plug-spec", "need 0 < r_in < r_star < r_out")
        if not (self.delta_r < min(self.r_star - self.r_in, self.r_out - self.r_star)):
            raise ToolError("bad-plug-spec",
                            "delta_r must be < min(r_star - r_in, r_out - r_star) "
                            "(field must be vertical near the lateral boundary)")
        if not (self.delta_z <= 0.25):
            raise ToolError("bad-plug-spec", "delta_z must be <= 1/4")
        if not (0 < self.delta_z < self.z_star and self.z_star + self.delta_z < 1.0):
            raise ToolError("bad-plug-spec",
                            "need 0 < delta_z < z_star and z_star + delta_z < 1")
        if self.amplitude <= 0:
            raise ToolError("bad-plug-spec", "amplitude must be positive")
        if self.variant == "stream":
            if not (0 < self.well_depth < (self.r_star ** 2 - self.r_in ** 2) / 2.0):
                raise ToolError("bad-plug-spec",
                                "well_depth must place the trapped radius inside the annulus")
            if self.radial_margin <= 0:
                raise ToolError("bad-plug-spec", "radial_margin must be positive")

    @property
    def variant_id(self) -> int:
        return VARIANT_WILSON if self.variant == "wilson" else VARIANT_STREAM

    def params(self) -> np.ndarray:
        """Packed parameter vector for the numba kernels."""
        chi_quad = 0.5 * (1.0 + self.radial_margin + 2.0 * self.well_depth / self.delta_r ** 2)
        return np.array([self.r_star, self.z_star, self.delta_r, self.delta_z,
                         self.amplitude, self.well_depth, chi_quad])

    def trapped_entry_radius(self) -> float:
        if self.variant == "wilson":
            return self.r_star
        return float(np.sqrt(self.r_star ** 2 - 2.0 * self.well_depth))

    def active_support(self) -> tuple[float, float]:
        """(radial half-width around r_star, z extent) outside which the
        field is exactly vertical."""
        return self.delta_r, self.z_star + self.delta_z

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "PlugSpec":
        return cls(**json.loads(text))


@dataclass
class AxiomReport:
    """Numeric witnesses for the plug axioms; generated, never assumed."""

    vertical_margin_r: float = 0.0
    vertical_margin_z: float = 0.0
    vertical_defect: float = np.inf      # sup |W - e_z| on boundary collar samples
    vertical_ok: bool = False

    trapped_entry: tuple = ()
    trapped_time: float = 0.0
    trapped_budget: float = 0.0
    trapped_final_z: float = np.nan
    trapped_ok: bool = False

    n_entry_samples: int = 0
    entry_exit_mismatch: float = np.inf  # max |exit_xy - entry_xy| over non-trapped samples
    matching_ok: bool = False

    min_speed: float = 0.0
    nonvanishing_ok: bool = False

    divergence_sup: float | None = None     # stream only: analytic assembly (rounding)
    divergence_fd_sup: float | None = None  # stream only: finite-difference witness
    divergence_ok: bool | None = None

    symmetry_defect: float = np.inf      # odd/even symmetry residual at mirrored samples
    symmetry_ok: bool = False

    def ok(self) -> bool:
        checks = [self.vertical_ok, self.trapped_ok, self.matching_ok,
                  self.nonvanishing_ok, self.symmetry_ok]
        if self.divergence_ok is not None:
            checks.append(self.divergence_ok)
        return all(checks)

    def failing(self) -> list[str]:
        names = {
            "vertical_ok": "verticality-near-boundary",
            "trapped_ok": "trapped-orbit",
            "matching_ok": "entry-exit-matching",
            "nonvanishing_ok": "non-vanishing",
            "symmetry_ok": "symmetry-class",
            "divergence_ok": "divergence-free",
        }
        out = []
        for attr, name in names.items():
            val = getattr(self, attr)
            if val is False:
                out.append(name)
        return out

    def to_json(self) -> str:
        d = asdict(self)
        d["ok"] = self.ok()
        return json.dumps(d, default=float)


@dataclass
class PlugField:
    """A generated plug: analytic evaluators plus its axiom report."""

    spec: PlugSpec
    report: AxiomReport | None = field(default=None, repr=False)

    @property
    def variant_id(self) -> int:
        return self.spec.variant_id

    @property
    def params(self) -> np.ndarray:
        return self.spec.params()

    # -- analytic evaluators (plug frame, Cartesian) --

    def velocity(self, points: np.ndarray) -> np.ndarray:
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        return tracing.velocity_points(self.variant_id, self.params, pts)

    def curl(self, points: np.ndarray) -> np.ndarray:
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        return tracing.curl_points(self.variant_id, self.params, pts)

    def divergence_fd(self, points: np.ndarray, delta: float = 1e-6) -> np.ndarray:
        """Independent central-difference divergence of the analytic field."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.zeros(len(pts))
        for ax in range(3):
            e = np.zeros(3)
            e[ax] = delta
            out += (self.velocity(pts + e)[:, ax] - self.velocity(pts - e)[:, ax]) / (2 * delta)
        return out

    def velocity_cyl(self, r: float, z: float) -> tuple[float, float, float]:
        return tracing.velocity_cyl(self.variant_id, self.params, float(r), float(z))

    def hamiltonian(self, r, z):
        """Stream function value H(r, z) (stream variant)."""
        if self.spec.variant != "stream":
            raise ToolError("bad-plug-spec", "hamiltonian only defined for the stream variant")
        r = np.asarray(r, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        chi = np.vectorize(lambda rr: tracing._chi(rr, self.params))(r)
        w = np.vectorize(lambda zz: tracing._w_even(zz, self.params))(z)
        return r ** 2 / 2.0 - chi * w

    # -- orbit tracing (cylindrical, numba) --

    def trace(self, entry_cyl, step: float = 1e-3, budget: float = 1e3,
              z_exit: float = 1.0, sample_times: np.ndarray | None = None):
        st = np.asarray(sample_times, dtype=np.float64) if sample_times is not None \
            else np.empty(0)
        r0, th0, z0 = (float(v) for v in entry_cyl)
        code, t, state, arc, pos = tracing.trace_plug(
            self.variant_id, self.params, r0, th0, z0, step, budget, z_exit,
            self.spec.r_in, self.spec.r_out, st)
        if code == 2:
            raise ToolError("left-through-side",
                            f"orbit from {entry_cyl} left the lateral boundary at r={state[0]:.6f}")
        return code, t, state, arc, pos

    def trapped_entry_cyl(self) -> tuple[float, float, float]:
        return (self.spec.trapped_entry_radius(), 0.0, -1.0)


def _entry_samples(spec: PlugSpec, n_samples: int, exclude_radius: float,
                   seed: int = 0) -> np.ndarray:
    """Deterministic stratified (r, theta) entry samples avoiding the
    trapped radius and the lateral boundary."""
    rng = np.random.default_rng(seed)
    r_trap = spec.trapped_entry_radius()
    lo, hi = spec.r_in + 0.05, spec.r_out - 0.05
    radii = []
    while len(radii) < n_samples:
        r = rng.uniform(lo, hi)
        if abs(r - r_trap) > exclude_radius:
            radii.append(r)
    thetas = rng.uniform(0.0, 2 * np.pi, size=n_samples)
    return np.column_stack([radii, thetas])


def check_plug_axioms(plug: PlugField, samples: int = 120, budget: float = 1e3,
                      step: float = 1e-3, sample_budget: float = 400.0,
                      seed: int = 0) -> AxiomReport:
    """Check Definition-style plug axioms numerically.

    The entry-exit mismatch is measured with RK4 plus bisection event
    detection on z = 1; the trapped witness is the designed entry whose
    orbit must exhaust the time budget while staying inside P.
    """
    spec = plug.spec
    rep = AxiomReport()

    # 1. verticality near the boundary: supports give exact margins, and the
    # field is sampled on the collar to confirm it matches d/dz exactly.
    rad_half, z_act = spec.active_support()
    rep.vertical_margin_r = min(spec.r_star - rad_half - spec.r_in,
                                spec.r_out - (spec.r_star + rad_half))
    rep.vertical_margin_z = 1.0 - z_act
    rng = np.random.default_rng(seed + 1)
    m = 400
    collar_r = np.concatenate([
        rng.uniform(spec.r_in, spec.r_star - rad_half, m // 2),
        rng.uniform(spec.r_star + rad_half, spec.r_out, m // 2),
    ])
    collar_z = rng.uniform(-1.0, 1.0, m)
    th = rng.uniform(0, 2 * np.pi, 2 * m)
    zs = np.concatenate([collar_z, rng.uniform(z_act, 1.0, m // 2),
                         rng.uniform(-1.0, -z_act, m - m // 2)])
    rs = np.concatenate([collar_r, rng.uniform(spec.r_in, spec.r_out, m)])
    pts = np.column_stack([rs * np.cos(th), rs * np.sin(th), zs])
    vel = plug.velocity(pts)
    rep.vertical_defect = float(np.abs(vel - np.array([0.0, 0.0, 1.0])).max())
    rep.vertical_ok = rep.vertical_defect == 0.0

    # 2. trapped orbit witness.  The stream approach point is degenerate, so
    # RK4 energy drift along very long dwells matters; halve the step there.
    entry = plug.trapped_entry_cyl()
    trap_step = step if spec.variant == "wilson" else min(step, 5e-4)
    code, t_end, state, _arc, _ = plug.trace(entry, step=trap_step, budget=budget)
    rep.trapped_entry = (entry[0] * np.cos(entry[1]), entry[0] * np.sin(entry[1]), entry[2])
    rep.trapped_budget = budget
    rep.trapped_time = t_end
    rep.trapped_final_z = float(state[2])
    rep.trapped_ok = bool(code == 1 and abs(state[2]) < 1.0)

    # 3. entry-exit matching on non-trapped entries
    entries = _entry_samples(spec, samples, exclude_radius=0.12, seed=seed)
    worst = 0.0
    n_used = 0
    for r0, th0 in entries:
        code, _t, state, _arc, _ = plug.trace((r0, th0, -1.0), step=step,
                                              budget=sample_budget)
        if code != 0:
            continue  # slow near-trapped sample; not a matching counterexample
        n_used += 1
        ex = state[0] * np.cos(state[1]) - r0 * np.cos(th0)
        ey = state[0] * np.sin(state[1]) - r0 * np.sin(th0)
        worst = max(worst, float(np.hypot(ex, ey)))
    rep.n_entry_samples = n_used
    rep.entry_exit_mismatch = worst
    rep.matching_ok = bool(n_used >= min(samples // 2, 50) and worst <= 1e-5)

    # 4. non-vanishing: dense sweep plus the circle locus itself
    rr = np.linspace(spec.r_in, spec.r_out, 60)
    zz = np.linspace(-1.0, 1.0, 81)
    R, Z = np.meshgrid(rr, zz, indexing="ij")
    pts = np.column_stack([R.ravel(), np.zeros(R.size), Z.ravel()])
    locus = np.array([[spec.r_star, 0.0, spec.z_star], [spec.r_star, 0.0, -spec.z_star]])
    speeds = np.linalg.norm(plug.velocity(np.vstack([pts, locus])), axis=1)
    rep.min_speed = float(speeds.min())
    rep.nonvanishing_ok = rep.min_speed > 0.0

    # symmetry class: g (z-velocity) even, theta-velocity odd under z -> -z
    zpts = rng.uniform(0.05, 1.0, 200)
    rpts = rng.uniform(spec.r_in, spec.r_out, 200)
    up = plug.velocity(np.column_stack([rpts, np.zeros(200), zpts]))
    dn = plug.velocity(np.column_stack([rpts, np.zeros(200), -zpts]))
    rep.symmetry_defect = float(max(np.abs(up[:, 2] - dn[:, 2]).max(),
                                    np.abs(up[:, 1] + dn[:, 1]).max(),
                                    np.abs(up[:, 0] + dn[:, 0]).max()))
    rep.symmetry_ok = rep.symmetry_defect <= 1e-12

    # 5. stream variant: divergence witnesses.  The analytic assembly cancels
    # identically (rounding only); the finite-difference probe is independent
    # of the implemented partial derivatives but carries delta^2 truncation
    # from the bumps' large third derivatives.
    if spec.variant == "stream":
        rng2 = np.random.default_rng(seed + 2)
        rs = rng2.uniform(spec.r_in, spec.r_out, 500)
        ths = rng2.uniform(0, 2 * np.pi, 500)
        zs = rng2.uniform(-1, 1, 500)
        pts = np.ascontiguousarray(np.column_stack([rs * np.cos(ths), rs * np.sin(ths), zs]))
        grad_scale = max(1.0, float(np.abs(plug.velocity(pts)).max()) / min(spec.delta_z, spec.delta_r))
        rep.divergence_sup = float(np.abs(
            tracing.div_points(plug.variant_id, plug.params, pts)).max())
        rep.divergence_fd_sup = float(np.abs(plug.divergence_fd(pts)).max())
        rep.divergence_ok = (rep.divergence_sup <= 1e-10 * grad_scale
                             and rep.divergence_fd_sup <= 1e-6 * grad_scale)

    return rep


def _generate(spec: PlugSpec, check: bool, axiom_kwargs: dict) -> PlugField:
    spec.validate()
    plug = PlugField(spec)
    if check:
        rep = check_plug_axioms(plug, **axiom_kwargs)
        plug.report = rep
        if not rep.ok():
            raise ToolError("axioms-not-satisfied",
                            f"plug axiom checks failed: {', '.join(rep.failing())}")
    return plug


def gen_wilson_plug(spec: PlugSpec | None = None, check: bool = True,
                    **axiom_kwargs) -> PlugField:
    spec = spec or PlugSpec(variant="wilson")
    if spec.variant != "wilson":
        raise ToolError("bad-plug-spec", "gen_wilson_plug needs variant='wilson'")
    return _generate(spec, check, axiom_kwargs)


def gen_stream_plug(spec: PlugSpec | None = None, check: bool = True,
                    **axiom_kwargs) -> PlugField:
    spec = spec or PlugSpec(variant="stream")
    if spec.variant != "stream":
        raise ToolError("bad-plug-spec", "gen_stream_plug needs variant='stream'")
    return _generate(spec, check, axiom_kwargs)

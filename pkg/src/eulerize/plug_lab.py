"""Chain constructions over trapped plugs: tangent surfaces swept by a
curve of entry points, their boundary decompositions, flat-distance
bounds, and normalized vorticity-flux tables.

A chain A_t is the union of the orbits of sigma([0, t]).  The quad mesh
uses parameters (u, v) = (tau, rescaled flow time), so the oriented
boundary decomposes into four labelled edges: the entry curve sigma_t
(+), the orbit of sigma(t) (+), the exit curve (-) and the orbit of
sigma(0) (-).  All masses in the bound

    | dA_t/|gamma_t| - gamma_t/|gamma_t| |  <=  (|sigma_t| + |exit_t| +
                                                 |gamma_0|) / |gamma_t|

are polyline lengths of those edges, so the bound is computed exactly
from the decomposition.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dec, tracing
from .currents import DiscreteCurrent1, PolylineCurrent1, SurfaceChain2, eval2
from .errors import ToolError
from .fields import EmbeddedPlug, Placement
from .grid import OneForm, ScalarField0, VectorField
from .plugs import PlugField


# --- field adapters -----------------------------------------------------------


class _Adapter:
    """Uniform view of a traceable field: velocity + orbit tracing."""

    def __init__(self, field, z_exit=1.0):
        self.z_exit = z_exit
        if isinstance(field, PlugField):
            field = EmbeddedPlug(field, Placement(center=np.zeros(3)), L=None)
        self.field = field

    def velocity(self, pts):
        f = self.field
        if isinstance(f, EmbeddedPlug):
            return f.velocity(pts)
        if isinstance(f, VectorField):
            return dec.interp(f.grid, f.values, np.atleast_2d(pts)).T
        return np.atleast_2d(np.asarray(f(np.atleast_2d(pts)), dtype=np.float64))

    def curl_values(self, pts):
        f = self.field
        if isinstance(f, EmbeddedPlug):
            return f.curl(pts)
        if isinstance(f, VectorField):
            w = dec.curl_field(f)
            return dec.interp(w.grid, w.values, np.atleast_2d(pts)).T
        raise ToolError("no-curl", "supply curl_fn for callable fields")

    def trace(self, x0, step, budget, sample_times=None, exit_plane=True):
        f = self.field
        z_exit = self.z_exit if exit_plane else None
        if isinstance(f, EmbeddedPlug):
            return f.trace(x0, step=step, budget=budget, sample_times=sample_times)
        code, t, end, arc, pos = tracing.trace_cartesian(
            lambda p: self.velocity(p), x0, step, budget, z_exit=z_exit,
            sample_times=sample_times)
        return code, t, end, arc, pos


@dataclass
class OrbitTrace:
    """One traced orbit with its event outcome and error witness."""

    x0: np.ndarray
    step: float
    vertices: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    arc_length: float = 0.0
    exit_time: float | None = None
    exit_point: np.ndarray | None = None
    trapped: bool = False
    halving_error: float = np.nan


def trace_orbit(field, x0, step: float = 1e-3, budget: float = 1e3,
                z_exit: float = 1.0, n_path: int = 512,
                check_halving: bool = True) -> OrbitTrace:
    """RK4 orbit from x0 until the exit plane z = z_exit or the budget.

    Raises "left-through-side" if the orbit crosses the lateral boundary
    of a plug domain (only possible for a defective field).
    """
    ad = _Adapter(field, z_exit=z_exit)
    x0 = np.asarray(x0, dtype=np.float64)
    code, t_end, end, arc, _ = ad.trace(x0, step, budget)
    times = np.linspace(0.0, t_end, n_path)
    _, _, _, _, pos = ad.trace(x0, step, budget, sample_times=times)
    herr = np.nan
    if check_halving:
        _, _, end2, arc2, _ = ad.trace(x0, step / 2.0, budget)
        herr = float(np.linalg.norm(end - end2))
    return OrbitTrace(
        x0=x0, step=step, vertices=pos, times=times, arc_length=float(arc),
        exit_time=float(t_end) if code == 0 else None,
        exit_point=end.copy() if code == 0 else None,
        trapped=(code == 1), halving_error=herr)


# --- chains -------------------------------------------------------------------


def _sigma_points(sigma, taus):
    return np.array([np.asarray(sigma(float(t)), dtype=np.float64) for t in taus])


def build_chain(field, sigma, t: float, ntau: int = 48, ns: int | None = None,
                step: float = 1e-3, budget: float = 1e3,
                transit_time: float | None = None,
                tangency_tol: float = 1e-3) -> SurfaceChain2:
    """Tangent 2-chain swept by the orbits of sigma([0, t]).

    With transit_time=None each orbit runs to the exit plane (its own
    exit time); otherwise every orbit runs for the fixed time given
    (flow-box mode).  Raises "trapped-in-range" if a sampled entry fails
    to exit within the budget.
    """
    ad = _Adapter(field)
    taus = np.linspace(0.0, float(t), ntau + 1)
    entries = _sigma_points(sigma, taus)

    exit_times = np.empty(ntau + 1)
    arcs = np.empty(ntau + 1)
    if transit_time is None:
        for j, e in enumerate(entries):
            code, tt, _end, arc, _ = ad.trace(e, step, budget)
            if code != 0:
                raise ToolError("trapped-in-range",
                                f"entry sigma({taus[j]:.6f}) did not exit within budget {budget}")
            exit_times[j] = tt
            arcs[j] = arc
    else:
        exit_times[:] = float(transit_time)
        for j, e in enumerate(entries):
            _, _, _, arc, _ = ad.trace(e, step, float(transit_time), exit_plane=False)
            arcs[j] = arc

    if ns is None:
        ns = int(np.clip(np.ceil(exit_times.max() / 0.025), 64, 20000))
    frac = np.linspace(0.0, 1.0, ns + 1)

    V = np.empty((ntau + 1, ns + 1, 3))
    for j, e in enumerate(entries):
        times = frac * exit_times[j]
        _, _, _, _, pos = ad.trace(e, step, exit_times[j] + step,
                                   sample_times=times,
                                   exit_plane=(transit_time is None))
        V[j] = pos

    chain = SurfaceChain2(V)
    # tangency on flow-direction (v) edges, against the field at midpoints
    mids = 0.5 * (V[:, :-1] + V[:, 1:])
    edges = V[:, 1:] - V[:, :-1]
    vel = ad.velocity(mids.reshape(-1, 3)).reshape(mids.shape)
    crossn = np.linalg.norm(np.cross(edges, vel), axis=2)
    dots = np.einsum("ijk,ijk->ij", edges, vel)
    ang = np.arctan2(crossn, dots)
    quad_ok = (ang[:-1] <= tangency_tol) & (ang[1:] <= tangency_tol)
    chain.tangent_ok = quad_ok
    chain.meta = {
        "taus": taus,
        "entries": entries,
        "exit_times": exit_times,
        "orbit_arcs": arcs,
        "transit_time_mode": transit_time is not None,
    }
    return chain


def chain_edges(chain: SurfaceChain2) -> dict:
    """Labelled boundary edges of a swept chain (signs of the oriented
    boundary: entry +, last orbit +, exit -, first orbit -)."""
    entry, last_orbit, exit_rev, first_rev = chain.boundary()
    return {
        "entry": entry,
        "last_orbit": last_orbit,
        "exit": exit_rev.reversed(),
        "first_orbit": first_rev.reversed(),
        "signs": {"entry": +1.0, "last_orbit": +1.0, "exit": -1.0, "first_orbit": -1.0},
    }


@dataclass
class StudyRow:
    t: float
    gamma_len: float                 # fine arc length of the orbit of sigma(t)
    gamma_chord: float               # polyline length of the chain's last-orbit edge
    mass: float                      # chain mass
    sigma_len: float = np.nan
    exit_len: float = np.nan
    gamma0_len: float = np.nan
    flat_bound: float = np.nan
    orbit_mass_normalized: float = np.nan
    concentration: float = np.nan
    flux_a: float = np.nan
    flux_b: float = np.nan


@dataclass
class ChainStudy:
    rows: list[StudyRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = ["t", "gamma_len", "mass", "flat_bound", "flux_a", "flux_b",
                 "gamma_chord", "sigma_len", "exit_len", "gamma0_len",
                 "orbit_mass_normalized", "concentration"]
        w = csv.writer(buf)
        w.writerow(names)
        for r in self.rows:
            w.writerow([getattr(r, n) for n in names])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows],
                "meta": {k: v for k, v in self.meta.items() if np.isscalar(v) or isinstance(v, (list, str))}}


def _probe_lengths(ad: _Adapter, sigma, taus, step, budget):
    out = np.empty(len(taus))
    for i, t in enumerate(taus):
        code, _tt, _end, arc, _ = ad.trace(np.asarray(sigma(float(t))), step, budget)
        out[i] = arc if code == 0 else np.inf
    return out


def default_t_sequence(field, sigma, gamma_target: float = 220.0,
                       t0: float = 0.25, step: float = 1e-3,
                       budget: float = 1e3, max_probe: int = 22) -> list[float]:
    """Parameters t_n whose orbit lengths roughly double until the target.

    Probes a grid geometric in (1 - t) and selects the monotone
    subsequence with ratios >= ~1.9.
    """
    ad = _Adapter(field)
    cand = [1.0 - (1.0 - t0) * 2.0 ** (-m) for m in range(max_probe)]
    lens = _probe_lengths(ad, sigma, cand, step, budget)
    seq = [cand[0]]
    last = lens[0]
    for t, ln in zip(cand[1:], lens[1:]):
        if not np.isfinite(ln):
            break
        if ln >= 1.9 * last:
            seq.append(t)
            last = ln
        if last >= gamma_target:
            break
    return seq


def limit_cycle_study(field, sigma, t_sequence=None, ntau: int = 48,
                      step: float = 1e-3, budget: float = 1e3,
                      tube_radius: float | None = None,
                      circle_distance=None, gamma_target: float = 220.0) -> ChainStudy:
    """Normalized boundary currents of A_t against the normalized orbit
    currents: the flat-distance bound sequence must decrease toward 0 as
    the trapped parameter is approached.
    """
    ad = _Adapter(field)
    if t_sequence is None:
        t_sequence = default_t_sequence(field, sigma, gamma_target=gamma_target,
                                        step=step, budget=budget)
    if circle_distance is None and isinstance(ad.field, EmbeddedPlug):
        circle_distance = ad.field.reeb_circle_distance

    study = ChainStudy(meta={"t_sequence": list(t_sequence)})
    prev_len = -np.inf
    for t in t_sequence:
        chain = build_chain(field, sigma, t, ntau=ntau, step=step, budget=budget)
        edges = chain_edges(chain)
        gamma_fine = float(chain.meta["orbit_arcs"][-1])
        if gamma_fine < prev_len:
            continue  # keep the monotone subsequence
        prev_len = gamma_fine
        gamma_edge = edges["last_orbit"]
        gamma_chord = gamma_edge.length()
        sigma_len = edges["entry"].length()
        exit_len = edges["exit"].length()
        gamma0_len = edges["first_orbit"].length()
        normalized = gamma_edge.to_dirac().scaled(1.0 / gamma_chord)
        row = StudyRow(
            t=float(t), gamma_len=gamma_fine, gamma_chord=gamma_chord,
            mass=chain.mass(), sigma_len=sigma_len, exit_len=exit_len,
            gamma0_len=gamma0_len,
            flat_bound=(sigma_len + exit_len + gamma0_len) / gamma_chord,
            orbit_mass_normalized=normalized.mass(),
        )
        if circle_distance is not None and tube_radius is not None:
            from .currents import mass_fraction_within
            row.concentration = mass_fraction_within(normalized, circle_distance,
                                                     tube_radius)
        study.rows.append(row)
    return study


def _fit_bernoulli(X: VectorField, alpha: OneForm) -> ScalarField0:
    """Least-squares B minimizing ||d0 B + i_X d1 alpha||^2 via FFT.

    The normal equations are a central-difference Poisson problem; modes
    in the kernel of the difference symbol (frequency 0 and Nyquist per
    axis) are projected out, which pins the solution.
    """
    grid = X.grid
    n, h = grid.n, grid.h
    F = dec.contract2(dec.d1(alpha), X).values
    rhs = -sum(dec.diff(F[k], k, h) for k in range(3))      # -div of the forcing
    k = np.fft.fftfreq(n, d=1.0 / n)                        # integer frequencies
    s = (np.sin(2.0 * np.pi * k / n) / h) ** 2              # central-diff symbol^2
    denom = -(s[:, None, None] + s[None, :, None] + s[None, None, :])
    rhat = np.fft.fftn(rhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        bhat = np.where(np.abs(denom) > 1e-14, rhat / denom, 0.0)
    B = np.real(np.fft.ifftn(bhat))
    return ScalarField0(grid, B)


def flux_decay_study(field, sigma, t_sequence, alpha: OneForm, B: ScalarField0,
                     curl_fn=None, mu=None, ntau: int = 48, step: float = 1e-3,
                     budget: float = 1e3, n_reduced: int = 256,
                     ns: int | None = None) -> ChainStudy:
    """Normalized flux of the curl 2-form over the chains, two ways.

    flux_a: direct midpoint quadrature of i_{curl X} mu over the quads.
    flux_b: the reduced integral -(1/|gamma_t|) int dB(sigma'(tau))
            s0(tau) dtau with dB evaluated on the entry curve (its pairing
            with the transversal direction is s-independent exactly when B
            is a first integral; the study measures, it does not assume).
    """
    ad = _Adapter(field)
    dB = dec.d0(B)

    def curl_values(pts):
        w = curl_fn(pts) if curl_fn is not None else ad.curl_values(pts)
        w = np.asarray(w, dtype=np.float64)
        if mu is not None:
            w = w * dec.interp(mu.grid, mu.values, pts)[..., None]
        return w

    study = ChainStudy(meta={"t_sequence": list(t_sequence)})
    for t in t_sequence:
        chain = build_chain(field, sigma, t, ntau=ntau, ns=ns, step=step, budget=budget)
        gamma_fine = float(chain.meta["orbit_arcs"][-1])

        mid, e_u, e_v = chain._quad_frames()
        vel = ad.velocity(mid.reshape(-1, 3))
        a_vals = dec.interp(alpha.grid, alpha.values, mid.reshape(-1, 3)).T
        a_of_X = np.einsum("ij,ij->i", a_vals, vel)
        if a_of_X.min() <= 0.0:
            raise ToolError("alpha-degenerate",
                            f"alpha(X) is not positive on the chain (min {a_of_X.min():.3e})")

        flux_a = eval2(chain, curl_values) / gamma_fine

        # reduced 1-D quadrature over tau midpoints
        taus = (np.arange(n_reduced) + 0.5) * (float(t) / n_reduced)
        dtau = float(t) / n_reduced
        pts = _sigma_points(sigma, taus)
        eps = 1e-6
        dsig = (_sigma_points(sigma, taus + eps) - _sigma_points(sigma, taus - eps)) / (2 * eps)
        dB_tau = np.einsum("ij,ij->i", dec.interp(dB.grid, dB.values, pts).T, dsig)
        s0 = np.empty(n_reduced)
        for i, p in enumerate(pts):
            code, tt, _e, _a, _ = ad.trace(p, step, budget)
            if code != 0:
                raise ToolError("trapped-in-range",
                                f"reduced-quadrature entry at tau={taus[i]:.6f} trapped")
            s0[i] = tt
        flux_b = -float(np.sum(dB_tau * s0) * dtau) / gamma_fine

        study.rows.append(StudyRow(
            t=float(t), gamma_len=gamma_fine,
            gamma_chord=chain_edges(chain)["last_orbit"].length(),
            mass=chain.mass(), flux_a=float(flux_a), flux_b=float(flux_b)))
    return study


def radial_entry_curve(r_from: float, r_to: float, theta: float = 0.0,
                       z: float = -1.0, center=None, L=None):
    """sigma(tau): straight radial segment in the entry disk, ending at the
    trapped radius r_to (ambient coordinates if a center is given)."""
    c = np.zeros(3) if center is None else np.asarray(center, dtype=np.float64)

    def sigma(tau: float) -> np.ndarray:
        r = r_from + (r_to - r_from) * tau
        return c + np.array([r * np.cos(theta), r * np.sin(theta), z])

    return sigma

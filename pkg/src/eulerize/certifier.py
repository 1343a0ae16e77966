"""Linear feasibility problems for Euler-flow certification.

Four modes share the normalization alpha(X)(p) >= 1 (strict positivity up
to positive rescaling) and differ in their pointwise equality rows:

    adapted         (i_X d alpha + d B)(p) = 0      unknowns alpha, B
    geodesible      (i_X d alpha)(p)       = 0      unknowns alpha
    reeb            (d alpha - T i_X mu)(p) = 0     unknowns alpha, T
    vorticity-pair  (d alpha - T i_Y mu)(p) = 0     unknowns alpha, T

Unknown layout: [alpha_x | alpha_y | alpha_z | (B | T)], each block in
flat C order over grid points.  Equality rows are indexed (component k,
point p) -> k*n^3 + p; inequality rows by p.

The certificates are re-verifiable from scratch: verify_primal recomputes
all residuals with the grid operators only, and verify_dual checks the
Farkas identities against the assembled matrices plus the closedness of
the derived foliation current.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import dec
from .currents import DiscreteCurrent1
from .errors import ToolError
from .grid import Grid3, OneForm, ScalarField0, ThreeForm, VectorField

MODES = ("adapted", "geodesible", "reeb", "vorticity-pair")


@dataclass
class FeasibilityProblem:
    mode: str
    G: sparse.csr_matrix            # inequality map, G x >= 1
    E: sparse.csr_matrix            # equality map, |E x| <= eta
    eta: float
    grid: Grid3 | None = None
    X: VectorField | None = None
    Y: VectorField | None = None
    mu: ThreeForm | None = None
    warnings: list = field(default_factory=list)

    @property
    def n_unknowns(self) -> int:
        return self.G.shape[1]

    @property
    def n_ineq(self) -> int:
        return self.G.shape[0]

    @property
    def n_eq(self) -> int:
        return self.E.shape[0]

    @property
    def has_B(self) -> bool:
        return self.mode == "adapted"

    @property
    def has_T(self) -> bool:
        return self.mode in ("reeb", "vorticity-pair")

    def pack(self, alpha: OneForm, B: ScalarField0 | None = None,
             T: float | None = None) -> np.ndarray:
        parts = [alpha.values.reshape(3, -1).ravel()]
        if self.has_B:
            if B is None:
                raise ToolError("bad-certificate", "adapted mode needs B")
            parts.append(B.values.ravel())
        if self.has_T:
            if T is None:
                raise ToolError("bad-certificate", "this mode needs T")
            parts.append(np.array([T]))
        return np.concatenate(parts)

    def unpack(self, x: np.ndarray):
        n3 = self.grid.npoints
        shape = (self.grid.n,) * 3
        alpha = OneForm(self.grid, x[:3 * n3].reshape((3,) + shape))
        B = T = None
        if self.has_B:
            B = ScalarField0(self.grid, x[3 * n3:4 * n3].reshape(shape))
        if self.has_T:
            T = float(x[3 * n3])
        return alpha, B, T


def _shift_index(n: int, axis: int, sign: int) -> np.ndarray:
    """Flat indices of p + sign*e_axis for all points p in flat order."""
    idx = np.arange(n ** 3).reshape(n, n, n)
    return np.roll(idx, -sign, axis=axis).ravel()


def assemble(mode: str, X: VectorField, Y: VectorField | None = None,
             mu: ThreeForm | None = None, eta: float = 1e-6) -> FeasibilityProblem:
    """Build the sparse constraint maps for the requested mode."""
    if mode not in MODES:
        raise ToolError("bad-mode", f"mode must be one of {MODES}, got {mode!r}")
    grid = X.grid
    n, n3, h = grid.n, grid.npoints, grid.h
    if X.min_norm() == 0.0:
        raise ToolError("vanishing-field", "X vanishes at a grid point")
    warnings = []
    if X.min_norm() < 1e-8 * X.pointwise_norm().max():
        warnings.append("near-vanishing-field: min |X| is below 1e-8 * max |X|; "
                        "the positivity normalization is badly conditioned")
    if eta > 0 and eta < h * h:
        warnings.append(f"eta={eta:.2e} is below the truncation scale h^2={h * h:.2e}")
    if mode == "vorticity-pair":
        if Y is None:
            raise ToolError("bad-mode", "vorticity-pair mode needs Y")
        if float(Y.pointwise_norm().max()) == 0.0:
            raise ToolError("vanishing-field", "Y is identically zero")
    mu = mu or ThreeForm.constant(grid, 1.0)
    if not mu.is_volume_form():
        raise ToolError("bad-volume-form", "mu coefficient must be positive everywhere")

    n_alpha = 3 * n3
    n_unknown = n_alpha + (n3 if mode == "adapted" else 0) + (1 if mode in ("reeb", "vorticity-pair") else 0)

    Xc = [X.values[k].ravel() for k in range(3)]
    c = 1.0 / (2.0 * h)
    plus = [_shift_index(n, a, +1) for a in range(3)]
    minus = [_shift_index(n, a, -1) for a in range(3)]
    p = np.arange(n3)

    rows, cols, vals = [], [], []

    def add(row, col, val):
        rows.append(row)
        cols.append(col)
        vals.append(val)

    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        row = k * n3 + p
        if mode in ("adapted", "geodesible"):
            # (W x X)_k = X_{k+2} D_{k+2} a_k - X_{k+2} D_k a_{k+2}
            #           - X_{k+1} D_k a_{k+1} + X_{k+1} D_{k+1} a_k
            add(row, k * n3 + plus[k2], c * Xc[k2])
            add(row, k * n3 + minus[k2], -c * Xc[k2])
            add(row, k2 * n3 + plus[k], -c * Xc[k2])
            add(row, k2 * n3 + minus[k], c * Xc[k2])
            add(row, k1 * n3 + plus[k], -c * Xc[k1])
            add(row, k1 * n3 + minus[k], c * Xc[k1])
            add(row, k * n3 + plus[k1], c * Xc[k1])
            add(row, k * n3 + minus[k1], -c * Xc[k1])
            if mode == "adapted":
                add(row, n_alpha + plus[k], np.full(n3, c))
                add(row, n_alpha + minus[k], np.full(n3, -c))
        else:
            # (curl a)_k = D_{k+1} a_{k+2} - D_{k+2} a_{k+1}
            add(row, k2 * n3 + plus[k1], np.full(n3, c))
            add(row, k2 * n3 + minus[k1], np.full(n3, -c))
            add(row, k1 * n3 + plus[k2], np.full(n3, -c))
            add(row, k1 * n3 + minus[k2], np.full(n3, c))
            src = Xc[k] if mode == "reeb" else Y.values[k].ravel()
            add(row, np.full(n3, n_alpha), -mu.values.ravel() * src)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    E = sparse.coo_matrix((vals, (rows, cols)), shape=(3 * n3, n_unknown)).tocsr()

    gi = np.repeat(p, 3)
    gj = np.concatenate([k * n3 + p for k in range(3)]).reshape(3, n3).T.ravel()
    gv = np.stack(Xc, axis=1).ravel()
    G = sparse.coo_matrix((gv, (gi, gj)), shape=(n3, n_unknown)).tocsr()

    return FeasibilityProblem(mode=mode, G=G, E=E, eta=eta, grid=grid, X=X, Y=Y,
                              mu=mu, warnings=warnings)


# --- certificates ------------------------------------------------------------


@dataclass
class PrimalCertificate:
    mode: str
    alpha: OneForm
    B: ScalarField0 | None = None
    T: float | None = None
    report: dict | None = None

    def feasible(self) -> bool:
        return bool(self.report and self.report["feasible"])


@dataclass
class DualCertificate:
    mode: str
    mu_weights: np.ndarray          # (n_ineq,) nonnegative, sums to 1
    lam: np.ndarray                 # (n_eq,) multipliers, ||G^T mu + E^T lam|| small
    report: dict | None = None

    def foliation_current(self, prob: FeasibilityProblem,
                          threshold: float = 0.0) -> DiscreteCurrent1:
        """The derived current sum_p mu_p delta_{p}^{X(p)}; support vectors
        are exactly the field values at active points."""
        pts = prob.grid.points()
        vecs = prob.X.values.reshape(3, -1).T
        keep = self.mu_weights > threshold
        return DiscreteCurrent1(pts[keep], vecs[keep], self.mu_weights[keep])


def residual_field(prob: FeasibilityProblem, alpha: OneForm,
                   B: ScalarField0 | None, T: float | None) -> np.ndarray:
    """Equality residual recomputed with the grid operators only."""
    if prob.mode == "adapted":
        r = dec.contract2(dec.d1(alpha), prob.X).values + dec.d0(B).values
    elif prob.mode == "geodesible":
        r = dec.contract2(dec.d1(alpha), prob.X).values
    else:
        src = prob.X if prob.mode == "reeb" else prob.Y
        r = dec.d1(alpha).values - T * dec.two_form_from_vector(src, prob.mu).values
    return r


def verify_primal(cert: PrimalCertificate, prob: FeasibilityProblem,
                  pos_slack: float = 1e-9, residual_slack: float = 1e-9) -> tuple[bool, dict]:
    """Re-verify a primal certificate from scratch (independent of the solver).

    The feasible flag allows a 1e-9 slack on both the positivity floor and
    the equality band, matching the solver's feasibility tolerance.
    """
    aX = dec.contract1(cert.alpha, prob.X)
    r = residual_field(prob, cert.alpha, cert.B, cert.T)
    report = {
        "mode": prob.mode,
        "min_alpha_X": float(aX.values.min()),
        "residual_sup": float(np.abs(r).max()),
        "residual_l2": dec.grid_l2_norm(r, prob.grid),
        "eta": prob.eta,
    }
    report["feasible"] = (report["min_alpha_X"] >= 1.0 - pos_slack
                          and report["residual_sup"] <= prob.eta + residual_slack)
    cert.report = report
    return report["feasible"], report


def cycle_residual(prob: FeasibilityProblem, mu_weights: np.ndarray) -> float:
    """Sup over grid basis bumps phi of |current(d0 phi)| for the derived
    current: equals the sup norm of the discrete divergence of mu * X."""
    shape = (prob.grid.n,) * 3
    wX = mu_weights.reshape(shape)[None] * prob.X.values
    div = sum(dec.diff(wX[k], k, prob.grid.h) for k in range(3))
    return float(np.abs(div).max())


def verify_dual(cert: DualCertificate, prob: FeasibilityProblem,
                eps_dual: float = 1e-6, eps_cycle: float = 1e-5) -> tuple[bool, dict]:
    """Check the Farkas-witness invariants:

    1. adjoint identity  ||G^T mu + E^T lam||_inf <= eps_dual,
    2. normalization     mu >= 0, sum mu = 1 (> 0, strict violation),
    3. foliation cycle   pairing with every exact 1-form d0(phi) <= eps_cycle,

    plus the refutation margin eta * ||lam||_1 < 1, without which the
    witness would not contradict an eta-feasible point.
    """
    mu, lam = cert.mu_weights, cert.lam
    adjoint = prob.G.T @ mu + prob.E.T @ lam
    lam_l1 = float(np.abs(lam).sum())
    report = {
        "mode": prob.mode,
        "adjoint_sup": float(np.abs(adjoint).max()),
        "mu_min": float(mu.min()),
        "mu_sum": float(mu.sum()),
        "lam_l1": lam_l1,
        "margin": 1.0 - prob.eta * lam_l1,
        "eps_dual": eps_dual,
        "eps_cycle": eps_cycle,
    }
    if prob.grid is not None:
        report["cycle_sup"] = cycle_residual(prob, mu)
        report["current_mass"] = float(
            np.sum(mu * np.linalg.norm(prob.X.values.reshape(3, -1).T, axis=1)))
    ok = (report["adjoint_sup"] <= eps_dual
          and report["mu_min"] >= -1e-12
          and abs(report["mu_sum"] - 1.0) <= 1e-9
          and report["mu_sum"] > 0
          and report["margin"] > 0)
    if prob.grid is not None:
        ok = ok and report["cycle_sup"] <= eps_cycle
    report["verified"] = bool(ok)
    cert.report = report
    return bool(ok), report


# --- derived operations ------------------------------------------------------


def extract_F(cert: PrimalCertificate, prob: FeasibilityProblem,
              not_proportional_factor: float = 10.0) -> tuple[ScalarField0, dict]:
    """Proportionality factor F with d alpha = F i_X mu, plus its defects.

    Requires a feasible geodesible certificate; F is the pointwise
    least-squares ratio <W, mX> / |mX|^2 with W the proxy of d alpha.
    """
    if cert.mode != "geodesible":
        raise ToolError("bad-mode", "extract_F needs a geodesible certificate")
    if prob.X.min_norm() == 0.0:
        raise ToolError("vanishing-field", "X vanishes at a grid point")
    W = dec.d1(cert.alpha).values
    mX = dec.two_form_from_vector(prob.X, prob.mu).values
    denom = np.sum(mX * mX, axis=0)
    F = ScalarField0(prob.grid, np.sum(W * mX, axis=0) / denom)
    prop_defect = float(np.abs(W - F.values[None] * mX).max())
    fi_defect = float(np.abs(dec.contract1(dec.d0(F), prob.X).values).max())
    report = {"proportionality_defect": prop_defect, "first_integral_defect": fi_defect}
    if prop_defect > not_proportional_factor * max(prob.eta, 1e-12):
        raise ToolError("not-proportional",
                        f"d alpha deviates from F i_X mu by {prop_defect:.3e}")
    return F, report


def reeb_rescale(cert: PrimalCertificate, prob: FeasibilityProblem,
                 t_floor: float = 1e-8) -> tuple[VectorField, dict]:
    """Rescale X' = X / alpha(X) so that alpha(X') = 1; reject T ~ 0.

    Also reports the contact-volume coefficient alpha ^ d alpha, which
    should equal T alpha(X) mu and in particular be one-signed when the
    certificate is genuinely contact.
    """
    if cert.mode != "reeb":
        raise ToolError("bad-mode", "reeb_rescale needs a reeb certificate")
    if cert.T is None or abs(cert.T) <= t_floor:
        raise ToolError("T-zero",
                        f"proportionality constant T={cert.T!r} is numerically zero; "
                        "d alpha is closed and no contact conclusion is drawn")
    aX = dec.contract1(cert.alpha, prob.X)
    Xp = VectorField(prob.grid, prob.X.values / aX.values[None])
    unit_defect = float(np.abs(dec.contract1(cert.alpha, Xp).values - 1.0).max())
    vol_coeff = dec.wedge_1_2(cert.alpha, dec.d1(cert.alpha)).values
    target = cert.T * aX.values * prob.mu.values
    report = {
        "unit_pairing_defect": unit_defect,
        "contact_volume_min": float((np.sign(cert.T) * vol_coeff).min()),
        "contact_volume_defect": float(np.abs(vol_coeff - target).max()),
        "T": cert.T,
    }
    return Xp, report


def geodesible_to_adapted(cert: PrimalCertificate, prob_adapted: FeasibilityProblem) -> PrimalCertificate:
    """Transfer a geodesible witness to the adapted problem with B = 0."""
    if cert.mode != "geodesible":
        raise ToolError("bad-mode", "transfer needs a geodesible certificate")
    return PrimalCertificate(mode="adapted", alpha=cert.alpha,
                             B=ScalarField0.constant(prob_adapted.grid, 0.0))

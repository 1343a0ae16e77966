"""Feasibility solving with certificate extraction.

Three LPs, all solved by HiGHS through scipy.optimize.linprog:

  phase A (decide):    max s  s.t.  G x >= s 1, |E x| <= eta, s <= 1.
      Always feasible (x = 0, s = 0) and bounded; the original problem is
      eta-feasible iff the optimum reaches 1.

  phase B (primal):    min ||alpha||_inf  s.t.  G x >= 1, |E x| <= eta.
      Selects a canonical witness among feasible ones.

  phase D (dual):      min ||lam||_1  s.t.  G^T mu = E^T lam~, sum mu = 1,
                       mu >= 0  (lam~ split into u - v, u, v >= 0).
      LP duality guarantees this system is solvable whenever phase A stays
      below 1, and minimizing ||lam||_1 maximizes the refutation margin
      1 - eta ||lam||_1.  The stored lam has the sign convention
      G^T mu + E^T lam ~ 0.

Exactly one certificate is verified on success; anything else (budget,
solver trouble, failed verification) is reported as undecided with the
partial residuals attached.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.sparse.linalg import lsqr

from .certifier import (DualCertificate, FeasibilityProblem, PrimalCertificate,
                        verify_dual, verify_primal)

_HIGHS_OPTS = dict(presolve=True,
                   primal_feasibility_tolerance=1e-9,
                   dual_feasibility_tolerance=1e-9)


@dataclass
class SolveReport:
    status: str                     # feasible | infeasible | undecided
    mode: str
    primal: PrimalCertificate | None = None
    dual: DualCertificate | None = None
    s_star: float | None = None
    iterations: dict = field(default_factory=dict)
    wall_time: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def certificate_report(self) -> dict | None:
        if self.primal is not None:
            return self.primal.report
        if self.dual is not None:
            return self.dual.report
        return None


def _time_left(budget, t0):
    if budget is None:
        return None
    return max(1.0, budget - (time.perf_counter() - t0))


def _lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
        budget=None, t0=None, method="highs"):
    opts = dict(_HIGHS_OPTS)
    left = _time_left(budget, t0)
    if left is not None:
        opts["time_limit"] = left
    return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                   bounds=bounds, method=method, options=opts)


def _phase_a(prob: FeasibilityProblem, budget, t0, method):
    """max s subject to G x >= s, |E x| <= eta, s <= 1.

    The equality band is carried by auxiliary variables e = E x with box
    bounds [-eta, eta]; this halves the row count versus splitting the
    band into two inequality blocks and solves much faster.
    """
    N, mE, mI = prob.n_unknowns, prob.n_eq, prob.n_ineq
    A_eq = sparse.hstack([prob.E, -sparse.eye(mE, format="csr"),
                          sparse.csr_matrix((mE, 1))], format="csr")
    A_ub = sparse.hstack([-prob.G, sparse.csr_matrix((mI, mE)),
                          sparse.csr_matrix(np.ones((mI, 1)))], format="csr")
    c = np.zeros(N + mE + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * N + [(-prob.eta, prob.eta)] * mE + [(None, 1.0)]
    return _lp(c, A_ub=A_ub, b_ub=np.zeros(mI), A_eq=A_eq, b_eq=np.zeros(mE),
               bounds=bounds, budget=budget, t0=t0, method=method)


def _phase_b(prob: FeasibilityProblem, budget, t0, method):
    """min sup-norm of alpha subject to feasibility (canonical witness)."""
    N, mE, mI = prob.n_unknowns, prob.n_eq, prob.n_ineq
    n_alpha = 3 * prob.grid.npoints
    sel = sparse.eye(n_alpha, N, format="csr")
    tcol = sparse.csr_matrix(-np.ones((n_alpha, 1)))
    zcol_e = sparse.csr_matrix((n_alpha, mE))
    A_eq = sparse.hstack([prob.E, -sparse.eye(mE, format="csr"),
                          sparse.csr_matrix((mE, 1))], format="csr")
    A_ub = sparse.vstack([
        sparse.hstack([-prob.G, sparse.csr_matrix((mI, mE + 1))]),
        sparse.hstack([sel, zcol_e, tcol]),
        sparse.hstack([-sel, zcol_e, tcol]),
    ], format="csr")
    b_ub = np.concatenate([np.full(mI, -1.0), np.zeros(2 * n_alpha)])
    c = np.zeros(N + mE + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * N + [(-prob.eta, prob.eta)] * mE + [(0.0, None)]
    return _lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.zeros(mE),
               bounds=bounds, budget=budget, t0=t0, method=method)


def _phase_d(prob: FeasibilityProblem, budget, t0, method):
    """min ||lam||_1 over Farkas witnesses, normalized to sum mu = 1."""
    mI, mE = prob.n_ineq, prob.n_eq
    A_eq = sparse.vstack([
        sparse.hstack([prob.G.T, -prob.E.T, prob.E.T]),
        sparse.hstack([sparse.csr_matrix(np.ones((1, mI))),
                       sparse.csr_matrix((1, 2 * mE))]),
    ], format="csr")
    b_eq = np.zeros(prob.n_unknowns + 1)
    b_eq[-1] = 1.0
    c = np.concatenate([np.zeros(mI), np.ones(2 * mE)])
    bounds = [(0.0, None)] * (mI + 2 * mE)
    return _lp(c, A_eq=A_eq, b_eq=b_eq, bounds=bounds, budget=budget, t0=t0,
               method=method)


def _polish_lambda(prob: FeasibilityProblem, mu: np.ndarray, lam: np.ndarray):
    """One least-squares pass on lam to tighten the adjoint identity."""
    rhs = -(prob.G.T @ mu)
    res = lsqr(prob.E.T, rhs, x0=lam, atol=1e-14, btol=1e-14, iter_lim=2000)
    return res[0]


def solve(prob: FeasibilityProblem, budget: float | None = None,
          method: str = "highs", eps_dual: float = 1e-6,
          eps_cycle: float = 1e-5, decision_slack: float = 1e-9) -> SolveReport:
    """Decide eta-feasibility and emit a verified certificate.

    budget is wall-clock seconds shared by the LP phases; exhausting it
    yields status "undecided" with diagnostic "budget-exceeded".
    """
    t0 = time.perf_counter()
    rep = SolveReport(status="undecided", mode=prob.mode,
                      diagnostics={"warnings": list(prob.warnings)})

    def out_of_budget():
        return budget is not None and (time.perf_counter() - t0) >= budget

    if out_of_budget():
        rep.diagnostics["error"] = "budget-exceeded"
        return rep
    res_a = _phase_a(prob, budget, t0, method)
    rep.iterations["phase_a"] = int(getattr(res_a, "nit", 0) or 0)
    if res_a.status == 1:
        rep.diagnostics["error"] = "budget-exceeded"
        rep.wall_time = time.perf_counter() - t0
        return rep
    if res_a.status != 0:
        rep.diagnostics["error"] = f"phase-a-solver-status-{res_a.status}"
        rep.wall_time = time.perf_counter() - t0
        return rep
    s_star = -float(res_a.fun)
    rep.s_star = s_star
    rep.diagnostics["phase_a_verdict"] = "feasible" if s_star >= 1.0 - decision_slack else "infeasible"

    if s_star >= 1.0 - decision_slack:
        if out_of_budget():
            rep.diagnostics["error"] = "budget-exceeded"
            rep.wall_time = time.perf_counter() - t0
            return rep
        res_b = _phase_b(prob, budget, t0, method)
        rep.iterations["phase_b"] = int(getattr(res_b, "nit", 0) or 0)
        if res_b.status == 1:
            rep.diagnostics["error"] = "budget-exceeded"
        elif res_b.status != 0:
            rep.diagnostics["error"] = f"phase-b-solver-status-{res_b.status}"
        else:
            alpha, B, T = prob.unpack(res_b.x[:prob.n_unknowns])
            if B is not None:
                # canonical B: zero mean on each parity class (d0 kernel)
                v = B.values
                for mask in _parity_masks(prob.grid.n):
                    v[mask] -= v[mask].mean()
            cert = PrimalCertificate(mode=prob.mode, alpha=alpha, B=B, T=T)
            ok, _ = verify_primal(cert, prob)
            rep.primal = cert
            if ok:
                rep.status = "feasible"
        rep.wall_time = time.perf_counter() - t0
        return rep

    if out_of_budget():
        rep.diagnostics["error"] = "budget-exceeded"
        rep.wall_time = time.perf_counter() - t0
        return rep
    res_d = _phase_d(prob, budget, t0, method)
    rep.iterations["phase_d"] = int(getattr(res_d, "nit", 0) or 0)
    if res_d.status == 1:
        rep.diagnostics["error"] = "budget-exceeded"
    elif res_d.status != 0:
        rep.diagnostics["error"] = f"phase-d-solver-status-{res_d.status}"
    else:
        mI, mE = prob.n_ineq, prob.n_eq
        mu = np.maximum(res_d.x[:mI], 0.0)
        u = res_d.x[mI:mI + mE]
        v = res_d.x[mI + mE:]
        lam = v - u
        total = mu.sum()
        if total > 0:
            mu, lam = mu / total, lam / total
        cert = DualCertificate(mode=prob.mode, mu_weights=mu, lam=lam)
        ok, dual_rep = verify_dual(cert, prob, eps_dual=eps_dual, eps_cycle=eps_cycle)
        if not ok and dual_rep["adjoint_sup"] > eps_dual:
            cert.lam = _polish_lambda(prob, mu, lam)
            ok, dual_rep = verify_dual(cert, prob, eps_dual=eps_dual, eps_cycle=eps_cycle)
            rep.diagnostics["lambda_polished"] = True
        rep.dual = cert
        if ok:
            rep.status = "infeasible"
    rep.wall_time = time.perf_counter() - t0
    return rep


def _parity_masks(n: int):
    idx = np.indices((n, n, n))
    for px in (0, 1):
        for py in (0, 1):
            for pz in (0, 1):
                yield ((idx[0] % 2 == px) & (idx[1] % 2 == py) & (idx[2] % 2 == pz))

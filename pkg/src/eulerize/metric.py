"""Metric reconstruction from an adapted certificate.

Given alpha with alpha(X) > 0, the metric

    g = alpha (x) alpha / alpha(X) + c(p) * P^T P,
    P = Id - X (x) alpha / alpha(X),

satisfies i_X g = alpha identically (P annihilates X and projects onto
ker alpha).  Pointwise scaling of the projected factor adjusts the
Riemannian volume: scaling by c multiplies det g by c^2, so
c = mu / sqrt(det g|_{c=1}) matches the volume form exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dec
from .errors import ToolError
from .grid import Grid3, OneForm, ScalarField0, ThreeForm, VectorField


@dataclass
class MetricField:
    """Symmetric 3x3 tensor per grid point with positivity diagnostics."""

    grid: Grid3
    tensors: np.ndarray = field(repr=False)   # (n, n, n, 3, 3)
    diagnostics: dict = field(default_factory=dict)

    def pull_down(self, X: VectorField) -> OneForm:
        """The dual 1-form i_X g."""
        a = np.einsum("ijkab,bijk->aijk", self.tensors, X.values)
        return OneForm(self.grid, a)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.tensors.reshape(-1, 3, 3))[:, 0].min())

    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.tensors))

    def components6(self) -> np.ndarray:
        """(6, n, n, n) in the order xx, yy, zz, xy, xz, yz (for VF3)."""
        t = self.tensors
        return np.stack([t[..., 0, 0], t[..., 1, 1], t[..., 2, 2],
                         t[..., 0, 1], t[..., 0, 2], t[..., 1, 2]])


def build_metric(alpha: OneForm, X: VectorField, mu: ThreeForm | None = None,
                 volume_compatible: bool = False) -> MetricField:
    """Assemble g from the adapted 1-form; optionally match the volume form."""
    grid = alpha.grid
    mu = mu or ThreeForm.constant(grid, 1.0)
    aX = dec.contract1(alpha, X).values
    if aX.min() <= 0.0:
        raise ToolError("alpha-degenerate",
                        f"alpha(X) must be positive everywhere (min {aX.min():.3e})")

    a = np.moveaxis(alpha.values, 0, -1)       # (n,n,n,3)
    v = np.moveaxis(X.values, 0, -1)
    rank1 = a[..., :, None] * a[..., None, :] / aX[..., None, None]
    P = np.eye(3) - v[..., :, None] * a[..., None, :] / aX[..., None, None]
    g_xi = np.einsum("...ka,...kb->...ab", P, P)

    det1 = np.linalg.det(rank1 + g_xi)
    if det1.min() <= 0.0:
        bad = np.unravel_index(int(np.argmin(det1)), det1.shape)
        raise ToolError("rank-collapse",
                        f"projected factor degenerates at grid point {bad}")

    if volume_compatible:
        c = mu.values / np.sqrt(det1)
        if c.min() <= 0.0:
            raise ToolError("rank-collapse", "volume scaling factor is not positive")
        g = rank1 + c[..., None, None] * g_xi
    else:
        g = rank1 + g_xi

    m = MetricField(grid, g)
    dual_defect = float(np.abs(m.pull_down(X).values - alpha.values).max())
    diag = {
        "min_eigenvalue": m.min_eigenvalue(),
        "dual_form_defect": dual_defect,
        "volume_compatible": volume_compatible,
    }
    if volume_compatible:
        diag["volume_defect"] = float(np.abs(m.sqrt_det() - mu.values).max())
    else:
        diag["sqrt_det_range"] = (float(m.sqrt_det().min()), float(m.sqrt_det().max()))
    m.diagnostics = diag
    return m


def verify_euler(g: MetricField, X: VectorField, B: ScalarField0,
                 mu: ThreeForm | None = None) -> dict:
    """Residuals of the stationary equations for the metric g.

    Recomputes alpha := i_X g from the metric, then i_X d alpha + d B, and
    the volume-preservation defect (divergence of X against mu).
    """
    mu = mu or ThreeForm.constant(g.grid, 1.0)
    alpha = g.pull_down(X)
    r = dec.contract2(dec.d1(alpha), X).values + dec.d0(B).values
    wX = mu.values[None] * X.values
    lie_mu = sum(dec.diff(wX[k], k, g.grid.h) for k in range(3))
    return {
        "euler_residual_sup": float(np.abs(r).max()),
        "euler_residual_l2": dec.grid_l2_norm(r, g.grid),
        "volume_residual_sup": float(np.abs(lie_mu).max()),
    }


def recover_pressure(B: ScalarField0, alpha: OneForm, X: VectorField) -> ScalarField0:
    """p = B - alpha(X)/2 (defined up to an additive constant)."""
    aX = dec.contract1(alpha, X)
    return ScalarField0(B.grid, B.values - 0.5 * aX.values)

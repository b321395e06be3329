"""Tension field and its decomposition along the moving frame (d, dperp1, dperp2).

The coefficients ``g1, g2`` of ``tau = Lap d + |grad d|^2 d`` are computed two
ways: by projecting ``tau`` on the frame, and from chart divergences

    g1 = div(sin t grad p) + cos t grad p . grad t
    g2 = div(grad t)       - sin t cos t |grad p|^2

The two routes share nothing beyond the stencils, so their agreement is a
genuine consistency check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .director_field import (
    DEFAULT_EPS_POLE,
    ChartFields,
    DirectorField,
    chart_extract,
    frame_vectors,
)
from .report import EstimateReport, safe_ratio
from .torus_grid import (
    EVEN,
    SampledField,
    divergence,
    dot,
    erode,
    gradient,
    hessian_frobenius_sq,
    integrate,
    laplacian,
    scalar_field,
)


def _base(d) -> SampledField:
    return d.base if isinstance(d, DirectorField) else d


def grad_norm_sq(d) -> SampledField:
    """``|grad d|^2 = sum_ij (D_i d_j)^2`` (even parity)."""
    f = _base(d)
    return scalar_field(f.grid, np.sum(gradient(f) ** 2, axis=(0, 1)), EVEN)


def chart_grad_norm_sq(chart: ChartFields) -> np.ndarray:
    """``sin^2 t |grad p|^2 + |grad t|^2`` from chart fields (zero off the mask)."""
    return np.sum(chart.u1.values**2, axis=0) + np.sum(chart.grad_theta.values**2, axis=0)


def grad_norm_sq_discrepancy(d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE):
    """Chart-side ``|grad d|^2`` and its max masked deviation from the Cartesian one."""
    chart = chart_extract(d, axis, eps_pole)
    cv = chart_grad_norm_sq(chart)
    cart = grad_norm_sq(d).scalar()
    disc = float(np.max(np.abs(cv - cart)[chart.mask])) if chart.mask.any() else 0.0
    return cv, disc


def tension(d) -> SampledField:
    """``Lap d + |grad d|^2 d``; also accepts plain 3-component fields of either parity."""
    f = _base(d)
    return laplacian(f) + f * grad_norm_sq(f)


@dataclass(frozen=True)
class TensionDecomposition:
    tau: SampledField
    g1: SampledField  # projection route, even
    g2: SampledField  # projection route, odd
    g1_div: SampledField
    g2_div: SampledField
    gradsq: SampledField
    dperp1: SampledField
    dperp2: SampledField
    chart: ChartFields

    @property
    def mask(self) -> np.ndarray:
        return self.chart.mask

    @property
    def interior(self) -> np.ndarray:
        return self.chart.interior

    @property
    def masked_fraction(self) -> float:
        return self.chart.masked_fraction

    def frame_residual(self) -> float:
        """sup over masked nodes of ``|tau - g1 dperp1 - g2 dperp2|``."""
        r = self.tau.values - self.g1.values * self.dperp1.values - self.g2.values * self.dperp2.values
        r = np.sqrt(np.sum(r**2, axis=0))
        return float(np.max(r[self.mask])) if self.mask.any() else 0.0

    def route_discrepancy(self) -> float:
        """sup over interior nodes of the projection/divergence route mismatch."""
        if not self.interior.any():
            return 0.0
        e1 = np.abs(self.g1.scalar() - self.g1_div.scalar())[self.interior]
        e2 = np.abs(self.g2.scalar() - self.g2_div.scalar())[self.interior]
        return float(max(e1.max(), e2.max()))


def divergence_route(chart: ChartFields) -> tuple[SampledField, SampledField]:
    """``(g1, g2)`` assembled from chart divergences; valid on ``chart.interior``."""
    div_u1 = divergence(chart.u1)
    div_u2 = divergence(chart.grad_theta)
    g1 = div_u1 + dot(chart.b, chart.grad_theta)
    g2 = div_u2 - dot(chart.b, chart.u1)
    return g1, g2


def decompose_tension(
    d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE
) -> TensionDecomposition:
    tau = tension(d)
    e1, e2, _ = frame_vectors(d, axis, eps_pole)
    chart = chart_extract(d, axis, eps_pole)
    g1_div, g2_div = divergence_route(chart)
    return TensionDecomposition(
        tau=tau,
        g1=dot(tau, e1),
        g2=dot(tau, e2),
        g1_div=g1_div,
        g2_div=g2_div,
        gradsq=grad_norm_sq(d),
        dperp1=e1,
        dperp2=e2,
        chart=chart,
    )


def _sup(values: np.ndarray, mask: np.ndarray) -> float:
    n = np.sqrt(np.sum(values**2, axis=0))
    return float(np.max(n[mask])) if mask.any() else 0.0


def frame_derivative_residuals(
    d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE
) -> EstimateReport:
    """Differenced frame vs. the closed-form frame derivatives, per direction k."""
    chart = chart_extract(d, axis, eps_pole)
    e1, e2, _ = frame_vectors(d, axis, eps_pole)
    dv, v1, v2 = d.values, e1.values, e2.values
    grad_d, grad_e1, grad_e2 = gradient(d.base), gradient(e1), gradient(e2)
    region = chart.interior
    rep = EstimateReport(meta={"axis": axis, "masked_fraction": chart.masked_fraction})
    worst = {"d": 0.0, "dperp1": 0.0, "dperp2": 0.0}
    for k in range(d.grid.dim):
        su = chart.u1.values[k]  # sin t d_k p
        th = chart.grad_theta.values[k]
        cb = chart.b.values[k]  # cos t d_k p
        worst["d"] = max(worst["d"], _sup(grad_d[k] - (su * v1 + th * v2), region))
        worst["dperp1"] = max(worst["dperp1"], _sup(grad_e1[k] - (-su * dv - cb * v2), region))
        worst["dperp2"] = max(worst["dperp2"], _sup(grad_e2[k] - (-th * dv + cb * v1), region))
    for name, val in worst.items():
        rep.add(f"frame_deriv_{name}", val, masked_fraction=float(np.mean(region)))
    return rep


def _block_norms(blocks, region, grid) -> list[float]:
    out = []
    for blk in blocks:
        f = scalar_field(grid, np.sum(blk**2, axis=0), EVEN)
        out.append(integrate(f, region))
    return out


def grad_tension_frame_split(
    d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE
) -> EstimateReport:
    """Direct ``||grad Lap d||^2``, ``||grad tau||^2`` against their frame-block sums.

    With ``c1 = g1``, ``c2 = g2`` and ``E = |grad d|^2`` the product rule gives

        d_k Lap d = (d_k c1 + c2 b_k - E u1_k) dperp1
                  + (d_k c2 - c1 b_k - E t_k) dperp2
                  - (c1 u1_k + c2 t_k + d_k E) d

    and the same without the ``E`` terms for ``d_k tau``. A sign-flipped
    variant (``+E u1_k``, ``+E t_k`` and ``c1 u1_k + c2 t_k - d_k E``) is
    evaluated too, as ``*_literal``, so the two conventions can be compared.
    """
    grid = d.grid
    dec = decompose_tension(d, axis, eps_pole)
    chart = dec.chart
    region = erode(chart.mask, grid, 1)
    lap = laplacian(d.base)
    grad_lap = gradient(lap)
    grad_tau = gradient(dec.tau)
    direct_lap = integrate(scalar_field(grid, np.sum(grad_lap**2, axis=(0, 1)), EVEN), region)
    direct_tau = integrate(scalar_field(grid, np.sum(grad_tau**2, axis=(0, 1)), EVEN), region)

    c1, c2, E = dec.g1.scalar(), dec.g2.scalar(), dec.gradsq.scalar()
    dc1 = gradient(dec.g1)[:, 0]
    dc2 = gradient(dec.g2)[:, 0]
    dE = gradient(dec.gradsq)[:, 0]
    u1, th, b = chart.u1.values, chart.grad_theta.values, chart.b.values

    tau_blocks = [dc1 + c2 * b, dc2 - c1 * b, -(c1 * u1 + c2 * th)]
    lap_blocks = [tau_blocks[0] - E * u1, tau_blocks[1] - E * th, tau_blocks[2] - dE]
    literal_blocks = [tau_blocks[0] + E * u1, tau_blocks[1] + E * th, c1 * u1 + c2 * th - dE]

    nt = _block_norms(tau_blocks, region, grid)
    nl = _block_norms(lap_blocks, region, grid)
    nlit = _block_norms(literal_blocks, region, grid)

    rep = EstimateReport(meta={"axis": axis, "masked_fraction": float(np.mean(region))})
    rep.add("grad_lap_sq_direct", direct_lap)
    rep.add("grad_lap_sq_blocks", sum(nl))
    rep.add("grad_lap_pythagoras_rel", safe_ratio(abs(direct_lap - sum(nl)), direct_lap))
    rep.add("grad_lap_sq_blocks_literal", sum(nlit))
    rep.add("grad_lap_literal_rel", safe_ratio(abs(direct_lap - sum(nlit)), direct_lap))
    rep.add("grad_tau_sq_direct", direct_tau)
    rep.add("grad_tau_sq_blocks", sum(nt))
    rep.add("grad_tau_pythagoras_rel", safe_ratio(abs(direct_tau - sum(nt)), direct_tau))
    for i, name in enumerate(("dperp1", "dperp2", "d")):
        rep.add(f"grad_tau_block_{name}", nt[i])
        rep.add(f"grad_lap_block_{name}", nl[i])
        # pointwise sup of the tau blocks, for the harmonic-map check
        rep.add(f"grad_tau_block_{name}_sup", _sup(tau_blocks[i], region))
    hess = integrate(hessian_frobenius_sq(d.base))
    lap_sq = integrate(dot(lap, lap))
    rep.add("hessian_frobenius_sq", hess)
    rep.add("laplacian_sq", lap_sq)
    rep.add("hessian_vs_laplacian_rel", safe_ratio(abs(hess - lap_sq), lap_sq))
    return rep

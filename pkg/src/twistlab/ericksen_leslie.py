"""Term-by-term audit of the Ericksen-Leslie energy law for given ``(v, d)``.

The velocity is data here; nothing is evolved. For ``n = 2`` the tensors
``D`` and ``Omega`` are ``2 x 2`` and contract with the in-plane components of
the director, which is the same as padding them with zeros to ``3 x 3``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .director_field import DEFAULT_EPS_POLE, DirectorField, chart_extract
from .frame_calculus import chart_grad_norm_sq, grad_norm_sq, tension
from .report import EstimateReport, safe_ratio
from .torus_grid import EVEN, SampledField, gradient, integrate, laplacian, scalar_field

H_MODES = ("laplacian", "tension")


@dataclass(frozen=True)
class ELCoefficients:
    gamma: float = 0.5
    reynolds: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    beta3: float = 1.0
    mu1: float = 1.0

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.reynolds > 0:
            raise ValueError(f"Reynolds number must be positive, got {self.reynolds}")
        if not self.mu1 > 0:
            raise ValueError(f"mu1 must be positive, got {self.mu1}")

    @property
    def elastic(self) -> float:
        return (1 - self.gamma) / self.reynolds

    @property
    def betas_nonnegative(self) -> bool:
        return min(self.beta1, self.beta2, self.beta3) >= 0


def velocity_field(v: SampledField, incompressible: bool = False, tol_div: float = 1e-8) -> SampledField:
    """Validate a velocity snapshot: ``dim`` components, even parity, optionally solenoidal."""
    if v.parity != EVEN:
        raise ValueError("velocity must have even parity (the twist acts on d only)")
    if v.components != v.grid.dim:
        raise ValueError(f"velocity needs {v.grid.dim} components, got {v.components}")
    if incompressible:
        jac = velocity_gradient(v)
        div = np.abs(np.trace(jac)).max()
        if div > tol_div:
            raise ValueError(f"velocity is not divergence free: max |div v| = {div:.3e}")
    return v


def velocity_gradient(v: SampledField) -> np.ndarray:
    """``J[i, j] = d v_i / d x_j``, shape ``(dim, dim, *sizes)``."""
    return np.swapaxes(gradient(v), 0, 1)


def strain_tensors(v: SampledField) -> tuple[np.ndarray, np.ndarray]:
    jac = velocity_gradient(v)
    jt = np.swapaxes(jac, 0, 1)
    return 0.5 * (jac + jt), 0.5 * (jac - jt)


def _h(d: DirectorField, h_mode: str) -> SampledField:
    if h_mode == "laplacian":
        return laplacian(d.base)
    if h_mode == "tension":
        return tension(d)
    raise ValueError(f"h_mode must be one of {H_MODES}, got {h_mode!r}")


def _check_grids(v: SampledField, d: DirectorField) -> None:
    if v.grid != d.grid:
        raise ValueError(f"grid mismatch: velocity on {v.grid.describe()}, director on {d.grid.describe()}")


def _int(grid, arr) -> float:
    return integrate(scalar_field(grid, arr, EVEN))


def dissipation_terms(
    v: SampledField, d: DirectorField, coeffs: ELCoefficients, h_mode: str = "laplacian"
) -> EstimateReport:
    """Each integral on the dissipative side, already multiplied by its coefficient."""
    _check_grids(v, d)
    grid = d.grid
    n = grid.dim
    jac = velocity_gradient(v)
    D, _ = strain_tensors(v)
    dv = d.values[:n]
    h = _h(d, h_mode).values
    hd = np.sum(h * d.values, axis=0)
    c = coeffs.elastic

    ddD = np.einsum("i...,j...,ij...->...", dv, dv, D)
    Dd = np.einsum("ij...,j...->i...", D, dv)
    tangential = np.sum((h - hd * d.values) ** 2, axis=0)

    rep = EstimateReport(meta={"grid": grid.describe(), "h_mode": h_mode})
    terms = {
        "viscous": coeffs.gamma / coeffs.reynolds * _int(grid, np.sum(jac**2, axis=(0, 1))),
        "beta1": c * coeffs.beta1 * _int(grid, ddD**2),
        "beta2": c * coeffs.beta2 * _int(grid, np.sum(D**2, axis=(0, 1))),
        "beta3": c * coeffs.beta3 * _int(grid, np.sum(Dd**2, axis=0)),
        "mu1": c * coeffs.mu1 * _int(grid, tangential),
    }
    for k, val in terms.items():
        rep.add(k, val)
    rep.add("mu1_h_sq", c * coeffs.mu1 * _int(grid, np.sum(h**2, axis=0)))
    rep.add("mu1_hd_sq", -c * coeffs.mu1 * _int(grid, hd**2))
    total = -sum(terms.values())
    if coeffs.betas_nonnegative:
        rep.add("total_rate", total, tolerance=0.0)
    else:
        rep.add("total_rate", total)
    rep.add("min_mu1_integrand", float(np.min(tangential)), lower=-1e-12)
    return rep


def energy(v: SampledField, d: DirectorField, coeffs: ELCoefficients) -> float:
    """``(1/2) int |v|^2 + (1 - gamma)/(2 Re) int |grad d|^2``."""
    _check_grids(v, d)
    kinetic = 0.5 * _int(d.grid, np.sum(v.values**2, axis=0))
    return kinetic + 0.5 * coeffs.elastic * integrate(grad_norm_sq(d))


def energy_report(
    v: SampledField,
    d: DirectorField,
    coeffs: ELCoefficients,
    axis: str = "z",
    eps_pole: float = DEFAULT_EPS_POLE,
) -> EstimateReport:
    """Energy plus the chart-route elastic integral compared on the chart mask."""
    chart = chart_extract(d, axis, eps_pole)
    cart = grad_norm_sq(d)
    cart_masked = integrate(cart, chart.mask)
    chart_masked = integrate(scalar_field(d.grid, chart_grad_norm_sq(chart), EVEN), chart.mask)
    rep = EstimateReport(meta={"axis": axis, "masked_fraction": chart.masked_fraction})
    rep.add("energy", energy(v, d, coeffs))
    rep.add("elastic_cartesian_masked", cart_masked)
    rep.add("elastic_chart_masked", chart_masked)
    rep.add("elastic_route_rel", safe_ratio(abs(cart_masked - chart_masked), abs(cart_masked)))
    return rep


def strain_orthogonality(v: SampledField) -> float:
    """max over nodes of ``|D : Omega|``."""
    D, W = strain_tensors(v)
    return float(np.max(np.abs(np.sum(D * W, axis=(0, 1)))))

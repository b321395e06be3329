"""Operator-pair machinery behind the second-order estimates, and theorem-level ratios.

In a chart with polar angle ``t`` and azimuth ``p``::

    u  = (u1, u2) = (sin t grad p, grad t)        b = cos t grad p
    Au = (div u1, div u2)                          Bu = (b.u2, -b.u1)

The tilted system uses ``T = t + pi/2``, for which ``~u1 = b``, ``~u2 = u2`` and
``~b = -u1``. The tilted director is exactly ``dperp2``, whose own frame is
``(dperp1, -d)``; projecting its tension on that frame gives an independent
route to the tilted coefficients.

Integrals for chart quantities run over the chart mask eroded by one stencil;
every report carries the fraction of the grid that region covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .director_field import (
    CHART_AXES,
    DEFAULT_EPS_POLE,
    ChartFields,
    DirectorField,
    chart_extract,
    frame_vectors,
)
from .frame_calculus import decompose_tension, grad_norm_sq, tension
from .report import EstimateReport, safe_ratio
from .sobolev_norms import gradient_field, lp_norm, sobolev_seminorms
from .torus_grid import (
    EVEN,
    ODD,
    SampledField,
    divergence,
    dot,
    integrate,
    laplacian,
    scalar_field,
)

RATIO_IDS = ("thm21", "eq213", "thm22", "thm23a", "thm23b", "chart214")
CHART_CONSTANT = math.pi / 2


def _sq_int(f: SampledField, region: np.ndarray) -> float:
    return integrate(dot(f, f), region)


@dataclass(frozen=True)
class OperatorPair:
    chart: ChartFields

    @property
    def u1(self) -> SampledField:
        return self.chart.u1

    @property
    def u2(self) -> SampledField:
        return self.chart.grad_theta

    @property
    def b(self) -> SampledField:
        return self.chart.b

    @property
    def tilde_u1(self) -> SampledField:
        return self.chart.b

    @property
    def tilde_u2(self) -> SampledField:
        return self.chart.grad_theta

    @property
    def tilde_b(self) -> SampledField:
        return -self.chart.u1

    @property
    def mask(self) -> np.ndarray:
        return self.chart.mask

    @property
    def region(self) -> np.ndarray:
        return self.chart.interior

    @property
    def grid(self):
        return self.chart.grid

    def A(self, tilde: bool = False) -> tuple[SampledField, SampledField]:
        if tilde:
            return divergence(self.tilde_u1), divergence(self.tilde_u2)
        return divergence(self.u1), divergence(self.u2)

    def B(self, tilde: bool = False) -> tuple[SampledField, SampledField]:
        if tilde:
            return dot(self.tilde_b, self.tilde_u2), -dot(self.tilde_b, self.tilde_u1)
        return dot(self.b, self.u2), -dot(self.b, self.u1)


def assemble_operator_pair(
    d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE
) -> OperatorPair:
    return OperatorPair(chart_extract(d, axis, eps_pole))


def _masked_sup(a: np.ndarray, region: np.ndarray) -> float:
    return float(np.max(np.abs(a[region]))) if region.any() else 0.0


def cross_term_identities(pair: OperatorPair) -> EstimateReport:
    region = pair.region
    grid = pair.grid
    rep = EstimateReport(meta={"axis": pair.chart.axis, "masked_fraction": float(np.mean(region))})
    div_u1, div_u2 = pair.A()
    div_b = divergence(pair.b)

    # nodewise cancellation of the mixed cross terms of the two systems
    t_tilde = (div_u2 * dot(pair.tilde_b, pair.tilde_u1)).scalar()
    t_plain = (div_u2 * dot(pair.b, pair.u1)).scalar()
    scale = np.abs(t_tilde) + np.abs(t_plain)
    rel = np.where(scale > 0, np.abs(t_tilde + t_plain) / np.where(scale > 0, scale, 1.0), 0.0)
    rep.add("cross_term_pointwise_rel", _masked_sup(rel, region))

    # integral identity for the surviving cross terms
    lhs = integrate(div_u1 * dot(pair.b, pair.u2) + divergence(pair.tilde_u1) * dot(pair.tilde_b, pair.tilde_u2), region)
    sq = pair.chart.cos_field() * div_u1 - pair.chart.sin_field() * div_b
    rhs = integrate(sq * sq, region)
    a_scale = _sq_int(div_u1, region) + _sq_int(div_u2, region) + _sq_int(div_b, region)
    # both sides can vanish identically (orthogonal angle gradients); compare against rounding then
    denom = max(abs(lhs), abs(rhs), 1e-12 * a_scale)
    rep.add("cross_term_integral_lhs", lhs)
    rep.add("cross_term_integral_rhs", rhs)
    rep.add("cross_term_integral_rel", safe_ratio(abs(lhs - rhs), denom))

    # sin t div u1 + cos t div b = Lap p ; cos t div u1 - sin t div b = grad p . grad t
    s_safe = np.where(pair.mask, pair.chart.s, 1.0)
    grad_phi = SampledField(grid, np.where(pair.mask, pair.u1.values / s_safe, 0.0), EVEN)
    lap_phi = divergence(grad_phi)
    phi_dot_theta = scalar_field(grid, np.where(pair.mask, dot(pair.u1, pair.u2).scalar() / s_safe, 0.0), ODD)
    id1 = pair.chart.sin_field() * div_u1 + pair.chart.cos_field() * div_b
    id2 = pair.chart.cos_field() * div_u1 - pair.chart.sin_field() * div_b
    rep.add("div_identity_lap_phi", _masked_sup((id1 - lap_phi).scalar(), region))
    rep.add("div_identity_phi_dot_theta", _masked_sup((id2 - phi_dot_theta).scalar(), region))
    # scalar reading of div b
    div_b_expected = pair.chart.cos_field() * lap_phi - dot(pair.u1, pair.u2)
    rep.add("div_b_product_rule", _masked_sup((div_b - div_b_expected).scalar(), region))
    rep.add("identity_scale", _masked_sup(lap_phi.scalar(), region) + _masked_sup(phi_dot_theta.scalar(), region))
    return rep


def tilted_coefficients(
    d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE
) -> tuple[SampledField, SampledField]:
    """Frame coefficients of the tension of the tilted director ``dperp2``."""
    e1, e2, _ = frame_vectors(d, axis, eps_pole)
    tau_t = tension(e2)
    return dot(tau_t, e1), -dot(tau_t, d.base)


def d1_d2(
    d: DirectorField, M: float = 2.0, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE
) -> EstimateReport:
    """Both systems' ``D`` by the three-integral expansion and by ``M||g||^2 - ||Au||^2``."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    pair = assemble_operator_pair(d, axis, eps_pole)
    dec = decompose_tension(d, axis, eps_pole)
    gt1, gt2 = tilted_coefficients(d, axis, eps_pole)
    region = pair.region
    rep = EstimateReport(meta={"axis": axis, "M": M, "masked_fraction": float(np.mean(region))})

    def expansion(tilde: bool) -> tuple[float, float]:
        a1, a2 = pair.A(tilde)
        b1, b2 = pair.B(tilde)
        norm_a = integrate(a1 * a1 + a2 * a2, region)
        cross = integrate(a1 * b1 + a2 * b2, region)
        norm_b = integrate(b1 * b1 + b2 * b2, region)
        return (M - 1) * norm_a + 2 * M * cross + M * norm_b, norm_a

    d1_exp, au = expansion(False)
    d2_exp, aut = expansion(True)
    g_sq = integrate(dec.g1 * dec.g1 + dec.g2 * dec.g2, region)
    gt_sq = integrate(gt1 * gt1 + gt2 * gt2, region)
    tau_sq = integrate(dot(dec.tau, dec.tau), region)

    d1_g = M * g_sq - au
    d2_gt = M * gt_sq - aut
    d2_tau = M * tau_sq - aut
    # on harmonic-like fields every term vanishes; measure against rounding of Lap d instead
    lap = laplacian(d.base)
    floor = 1e-12 * integrate(dot(lap, lap), region)
    rep.add("d1_expansion", d1_exp)
    rep.add("d1_g_route", d1_g)
    rep.add("d1_rel", safe_ratio(abs(d1_exp - d1_g), max(M * g_sq + au, floor)))
    rep.add("d2_expansion", d2_exp)
    rep.add("d2_route_gtilde", d2_gt)
    rep.add("d2_route_tau", d2_tau)
    rep.add("d2_rel", safe_ratio(abs(d2_exp - d2_gt), max(M * gt_sq + aut, floor)))
    rep.add("norm_Au_sq", au)
    rep.add("norm_Atilde_u_sq", aut)
    rep.add("norm_g_sq", g_sq)
    rep.add("norm_gtilde_sq", gt_sq)
    rep.add("norm_tau_sq", tau_sq)
    rep.add("ratio_Au_vs_g", safe_ratio(au + aut, g_sq + gt_sq))
    rep.add("ratio_Au_vs_tau", safe_ratio(au + aut, 2 * tau_sq))
    return rep


def _delta_theta_sides(d: DirectorField, tau: SampledField, axis: str, eps_pole: float):
    chart = chart_extract(d, axis, eps_pole)
    region = chart.interior
    lap_theta = divergence(chart.grad_theta)
    return (
        integrate(lap_theta * lap_theta, region),
        integrate(dot(tau, tau), region),
        float(np.mean(region)),
    )


def delta_theta_bound(d: DirectorField, eps_pole: float = DEFAULT_EPS_POLE) -> EstimateReport:
    """``||Lap theta||^2 / ||tau||^2`` for each chart, over that chart's region."""
    tau = tension(d)
    rep = EstimateReport()
    for axis in ("z", "x", "y"):
        lhs, rhs, frac = _delta_theta_sides(d, tau, axis, eps_pole)
        rep.add(f"lap_theta_sq_{axis}", lhs)
        rep.add(f"tau_sq_{axis}", rhs)
        rep.add(f"lap_theta_ratio_{axis}", safe_ratio(lhs, rhs), masked_fraction=frac)
    return rep


def triple_mask(d: DirectorField, eps_pole: float = DEFAULT_EPS_POLE) -> np.ndarray:
    m = np.ones(d.grid.sizes, dtype=bool)
    for axis in CHART_AXES:
        m &= chart_extract(d, axis, eps_pole).mask
    return m


def chart_comparison(
    d: DirectorField,
    eps_pole: float = DEFAULT_EPS_POLE,
    slack_k: float = 1.0,
    abs_tol: float = 1e-8,
) -> EstimateReport:
    """Pointwise ``|u1^z| <= (pi/2)(|grad theta^x| + |grad theta^y|)(1 + K h) + abs_tol``."""
    charts = {a: chart_extract(d, a, eps_pole) for a in CHART_AXES}
    tri = charts["x"].mask & charts["y"].mask & charts["z"].mask
    lhs = np.sqrt(np.sum(charts["z"].u1.values ** 2, axis=0))
    rhs = np.sqrt(np.sum(charts["x"].grad_theta.values ** 2, axis=0)) + np.sqrt(
        np.sum(charts["y"].grad_theta.values ** 2, axis=0)
    )
    bound = CHART_CONSTANT * rhs * (1.0 + slack_k * d.grid.h_max) + abs_tol
    ok = bool(np.all(lhs[tri] <= bound[tri]))
    pos = tri & (rhs > abs_tol)
    max_ratio = float(np.max(lhs[pos] / rhs[pos])) if pos.any() else 0.0
    frac = float(np.mean(tri))
    rep = EstimateReport(meta={"masked_fraction": frac})
    rep.check("chart_bound_pointwise", ok, value=float(np.max((lhs - bound)[tri])) if tri.any() else 0.0)
    rep.add("chart_max_ratio", max_ratio, masked_fraction=frac)
    rep.add("chart_min_ratio", float(np.min(lhs[pos] / rhs[pos])) if pos.any() else 0.0)
    rep.add("triple_masked_fraction", frac)
    return rep


@dataclass(frozen=True)
class RatioEntry:
    lhs: float
    rhs: float
    ratio: float
    masked_fraction: float = 1.0


@dataclass
class InequalityRatioSet:
    ratios: dict[str, RatioEntry] = field(default_factory=dict)

    def put(self, key: str, lhs: float, rhs: float, masked_fraction: float = 1.0) -> None:
        if key not in RATIO_IDS:
            raise KeyError(f"unknown inequality id {key!r}")
        self.ratios[key] = RatioEntry(lhs, rhs, safe_ratio(lhs, rhs), masked_fraction)

    def __getitem__(self, key: str) -> float:
        return self.ratios[key].ratio

    def __contains__(self, key: str) -> bool:
        return key in self.ratios

    def keys(self):
        return self.ratios.keys()

    def to_dict(self) -> dict:
        return {k: vars(v).copy() for k, v in self.ratios.items()}


def theorem_ratios(d: DirectorField, eps_pole: float = DEFAULT_EPS_POLE) -> InequalityRatioSet:
    nb, _ = sobolev_seminorms(d)
    tau = tension(d)
    tau_n = lp_norm(tau, 2)
    grad_tau_n = lp_norm(gradient_field(tau), 2)
    out = InequalityRatioSet()
    if d.grid.dim == 2:
        out.put("thm21", nb.h2, tau_n + 1.0)
        out.put("thm22", nb.h3, tau_n**2 + grad_tau_n + 1.0)
    else:
        out.put("thm23a", nb.h2**2, tau_n**3 + 1.0)
        out.put("thm23b", nb.h3, tau_n**4.5 + grad_tau_n + 1.0)
    dt = _delta_theta_sides(d, tau, "z", eps_pole)
    out.put("eq213", *dt)
    cc = chart_comparison(d, eps_pole)
    frac = cc["triple_masked_fraction"]
    out.put("chart214", cc["chart_max_ratio"], 1.0, frac)
    return out


def nonlinear_control_terms(d: DirectorField, eps_pole: float = DEFAULT_EPS_POLE) -> EstimateReport:
    """The three nonlinear terms the third-order estimate must absorb, with their bounds."""
    nb, _ = sobolev_seminorms(d)
    chart = chart_extract(d, "z", eps_pole)
    region = chart.interior
    E = grad_norm_sq(d)
    t1 = math.sqrt(integrate(dot(chart.u1 * E, chart.u1 * E), region))
    t2 = math.sqrt(integrate(dot(chart.grad_theta * E, chart.grad_theta * E), region))
    t3 = lp_norm(gradient_field(E), 2)
    l6_term = 2 * nb.l6**3
    lap, glap = nb.h2, nb.h3
    if d.grid.dim == 2:
        low = lap**2 + 1.0
        high = 0.1 * glap + lap**2
    else:
        low = lap**3 + 1.0
        high = 0.1 * glap + lap**3 + 1.0
    lap_theta = divergence(chart.grad_theta)
    theta_l4 = integrate(scalar_field(d.grid, np.sum(chart.grad_theta.values**2, axis=0) ** 2, EVEN), region)
    theta_lap = math.sqrt(integrate(lap_theta * lap_theta, region))

    rep = EstimateReport(meta={"masked_fraction": float(np.mean(region)), "dim": d.grid.dim})
    rep.add("term_gradsq_u1", t1)
    rep.add("term_gradsq_grad_theta", t2)
    rep.add("term_grad_gradsq", t3)
    rep.add("term_l6_cubed", l6_term)
    rep.add("ratio_gradsq_u1", safe_ratio(t1, low))
    rep.add("ratio_gradsq_grad_theta", safe_ratio(t2, low))
    rep.add("ratio_sum_vs_l6", safe_ratio(t1 + t2, l6_term))
    rep.add("ratio_l6", safe_ratio(l6_term, low))
    rep.add("ratio_grad_gradsq", safe_ratio(t3, high))
    rep.add("gn3_theta", safe_ratio(theta_l4, theta_lap**3 + 1.0))
    return rep

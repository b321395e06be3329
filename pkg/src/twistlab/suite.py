"""Full identity/inequality suite for one director, an ensemble, or a refinement pair."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import GeneratorSpec, RunConfig
from .director_field import (
    UNIT_TOL,
    DirectorField,
    constant_field,
    gen_equator,
    gen_f2,
    gen_pole_free,
    gen_random_bandlimited,
    unit_norm_error,
)
from .estimate_suite import (
    RATIO_IDS,
    assemble_operator_pair,
    chart_comparison,
    nonlinear_control_terms,
    cross_term_identities,
    d1_d2,
    delta_theta_bound,
    theorem_ratios,
)
from .frame_calculus import (
    decompose_tension,
    frame_derivative_residuals,
    grad_norm_sq_discrepancy,
    grad_tension_frame_split,
)
from .report import EstimateReport
from .sobolev_norms import gn_agmon_ratios, lp_norm
from .torus_grid import ODD, SampledField, TorusGrid

# residuals whose observed order is reported when a refinement is requested
REFINE_KEYS = ("frame_residual", "route_discrepancy", "norm_identity_residual", "cross_term_integral_rel", "tau_sup")


def build_field(spec: GeneratorSpec, grid: TorusGrid) -> DirectorField:
    if spec.kind == "equator":
        return gen_equator(grid, spec.winding)
    if spec.kind == "f2":
        return gen_f2(grid, spec.tilt)
    if spec.kind == "constant":
        return constant_field(grid, spec.vector)
    if spec.kind == "random":
        return gen_random_bandlimited(grid, spec.seed, spec.band, spec.amplitude)
    if spec.kind == "polefree":
        return gen_pole_free(grid, spec.seed, spec.band, spec.amplitude)
    raise ValueError(f"unknown generator kind {spec.kind!r}")


def ensemble_member(cfg: RunConfig, seed: int, grid: TorusGrid | None = None) -> DirectorField:
    grid = grid or cfg.grid.build()
    ens = cfg.ensemble
    if ens.kind == "random":
        return gen_random_bandlimited(grid, seed, ens.band, ens.amplitude)
    return gen_pole_free(grid, seed, ens.band, ens.amplitude)


def _arm_thresholds(rep: EstimateReport, thresholds: dict[str, float]) -> None:
    for name in list(rep):
        leaf = name.rsplit(".", 1)[-1]
        if leaf in thresholds:
            rep.arm(name, thresholds[leaf])


def verify_field(d: DirectorField, cfg: RunConfig) -> EstimateReport:
    eps = cfg.eps_pole
    axis = cfg.verify.axis
    rep = EstimateReport(meta={"grid": d.grid.describe(), "label": d.label, "eps_pole": eps, "axis": axis})
    rep.add("unit_norm", unit_norm_error(d.values))

    dec = decompose_tension(d, axis, eps)
    frac = dec.masked_fraction
    rep.add("frame_residual", dec.frame_residual(), masked_fraction=frac)
    rep.add("route_discrepancy", dec.route_discrepancy(), masked_fraction=float(np.mean(dec.interior)))
    rep.add("tau_sup", lp_norm(dec.tau, math.inf))
    rep.add("gradsq_chart_discrepancy", grad_norm_sq_discrepancy(d, axis, eps)[1], masked_fraction=frac)
    rep.merge(frame_derivative_residuals(d, axis, eps))
    rep.merge(grad_tension_frame_split(d, axis, eps))
    rep.merge(gn_agmon_ratios(d))
    rep.merge(cross_term_identities(assemble_operator_pair(d, axis, eps)))
    for M in cfg.verify.M:
        rep.merge(d1_d2(d, M, axis, eps), prefix=f"M{M:g}.")
    rep.merge(delta_theta_bound(d, eps))
    rep.merge(chart_comparison(d, eps, cfg.verify.slack_k))
    ratios = theorem_ratios(d, eps)
    for key in RATIO_IDS:
        if key in ratios:
            r = ratios.ratios[key]
            rep.add(key, r.ratio, masked_fraction=r.masked_fraction, lhs=r.lhs, rhs=r.rhs)
    rep.merge(nonlinear_control_terms(d, eps), prefix="control.")
    _arm_thresholds(rep, cfg.effective_thresholds())
    return rep


def verify_sampled(f: SampledField, cfg: RunConfig, label: str = "snapshot") -> EstimateReport:
    """Verify a raw snapshot; an invalid director yields a failing report instead of an exception."""
    problems = []
    if f.components != 3:
        problems.append(f"director needs 3 components, got {f.components}")
    if f.parity != ODD:
        problems.append("director must have odd parity")
    err = unit_norm_error(f.values) if f.components == 3 else math.inf
    tol = cfg.effective_thresholds().get("unit_norm", UNIT_TOL)
    if not err <= tol:
        problems.append(f"unit-norm violation: max ||d|-1| = {err:.3e} exceeds {tol:g}")
    if problems:
        rep = EstimateReport(meta={"grid": f.grid.describe(), "label": label, "diagnostic": "; ".join(problems)})
        rep.add("unit_norm", err, tolerance=tol)
        if f.components != 3 or f.parity != ODD:
            rep.check("director_shape", False)
        return rep
    return verify_field(DirectorField(f, label), cfg)


def _order(coarse: float, fine: float) -> float:
    if coarse == 0.0 or fine == 0.0:
        return math.nan
    return math.log2(coarse / fine)


def verify_with_refinement(spec: GeneratorSpec, cfg: RunConfig) -> EstimateReport:
    grid = cfg.grid.build()
    rep = verify_field(build_field(spec, grid), cfg)
    fine = verify_field(build_field(spec, grid.refined(2)), cfg)
    rep.merge(fine, prefix="refined.")
    for key in REFINE_KEYS:
        rep.add(f"order.{key}", _order(rep[key], fine[key]))
    for key in RATIO_IDS:
        if key in rep and key in fine:
            rep.add(f"ratio_change.{key}", abs(fine[key] - rep[key]) / max(abs(rep[key]), 1e-300))
    return rep


def _member_report(args) -> EstimateReport:
    cfg, seed = args
    return verify_field(ensemble_member(cfg, seed), cfg)


def verify_ensemble(cfg: RunConfig) -> EstimateReport:
    """Per-seed reports plus ensemble maxima; assembly order follows the seed list."""
    seeds = cfg.ensemble.seed_list
    jobs = [(cfg, s) for s in seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            members = list(pool.map(_member_report, jobs))
    else:
        members = [_member_report(j) for j in jobs]
    rep = EstimateReport(meta={
        "grid": cfg.grid.build().describe(),
        "ensemble": cfg.ensemble.kind,
        "seeds": [seeds[0], seeds[-1]],
        "band": cfg.ensemble.band,
        "amplitude": cfg.ensemble.amplitude,
        "eps_pole": cfg.eps_pole,
    })
    for seed, m in zip(seeds, members):
        rep.merge(m, prefix=f"seed{seed:04d}.")
    for key in dict.fromkeys(RATIO_IDS + REFINE_KEYS + ("gn2", "l6", "agmon")):
        vals = [m[key] for m in members if key in m]
        if vals:
            rep.add(f"max.{key}", max(vals))
    return rep

"""Discrete L^p norms, Sobolev seminorms of directors and interpolation-ratio instruments.

None of the interpolation constants are known numerically, so the ratios here
are reported, not asserted; callers compare ensemble maxima across grid
refinements instead.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .director_field import DirectorField
from .frame_calculus import tension
from .report import EstimateReport, safe_ratio
from .torus_grid import EVEN, SampledField, dot, gradient, integrate, laplacian, scalar_field


def pointwise_norm(f: SampledField) -> np.ndarray:
    return np.sqrt(np.sum(f.values**2, axis=0))


def lp_norm(f: SampledField, p: float) -> float:
    """``(int |f|^p)^(1/p)`` with ``|f|`` the pointwise Euclidean norm; ``p=inf`` is the node max."""
    a = pointwise_norm(f)
    if p == math.inf:
        return float(np.max(a))
    if p not in (2, 4, 6):
        raise ValueError(f"p must be 2, 4, 6 or inf, got {p}")
    return integrate(scalar_field(f.grid, a**p, EVEN)) ** (1.0 / p)


def gradient_field(f: SampledField) -> SampledField:
    """Flattened gradient: ``dim * m`` components, same parity."""
    g = gradient(f)
    return SampledField(f.grid, g.reshape(-1, *f.grid.sizes), f.parity)


@dataclass(frozen=True)
class NormBundle:
    """Norms of ``|grad d|`` plus the seminorms ``||grad d||, ||Lap d||, ||grad Lap d||``."""

    l2: float
    l4: float
    l6: float
    linf: float
    h1: float
    h2: float
    h3: float

    def as_dict(self) -> dict:
        return asdict(self)


def sobolev_seminorms(d: DirectorField) -> tuple[NormBundle, float]:
    """Norm bundle of ``d`` and the relative residual of ``||Lap d||^2 = ||tau||^2 + ||grad d||_4^4``."""
    grad = gradient_field(d.base)
    lap = laplacian(d.base)
    tau = tension(d)
    h1 = lp_norm(grad, 2)
    h2 = lp_norm(lap, 2)
    h3 = lp_norm(gradient_field(lap), 2)
    bundle = NormBundle(
        l2=h1,
        l4=lp_norm(grad, 4),
        l6=lp_norm(grad, 6),
        linf=lp_norm(grad, math.inf),
        h1=h1,
        h2=h2,
        h3=h3,
    )
    tau_sq = integrate(dot(tau, tau))
    residual = safe_ratio(abs(h2**2 - tau_sq - bundle.l4**4), h2**2)
    return bundle, residual


def gn_agmon_ratios(d: DirectorField) -> EstimateReport:
    """Empirical interpolation ratios; ``gn2``, ``l6``, ``agmon`` (+ ``agmon_bare``), ``norm_identity_residual``."""
    nb, resid = sobolev_seminorms(d)
    g, lap, glap = nb.h1, nb.h2, nb.h3
    rep = EstimateReport(meta={"grid": d.grid.describe(), "label": d.label})
    rep.add("gn2", safe_ratio(nb.l4**4, g**2 * (lap**2 + g**2)))
    if d.grid.dim == 2:
        rep.add("l6", safe_ratio(nb.l6**3, g * (lap + g) ** 2))
    else:
        rep.add("l6", safe_ratio(nb.l6**3, lap**3 + 1.0))
    rep.add("agmon", safe_ratio(nb.linf, math.sqrt(lap * glap) + g))
    rep.add("agmon_bare", safe_ratio(nb.linf, math.sqrt(lap * glap)))
    rep.add("norm_identity_residual", resid)
    for k, v in nb.as_dict().items():
        rep.add(f"norm_{k}", v)
    return rep


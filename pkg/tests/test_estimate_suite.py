import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.director_field import gen_equator, gen_f2, gen_pole_free, gen_random_bandlimited
from twistlab.estimate_suite import (
    InequalityRatioSet,
    assemble_operator_pair,
    chart_comparison,
    nonlinear_control_terms,
    cross_term_identities,
    d1_d2,
    delta_theta_bound,
    theorem_ratios,
    tilted_coefficients,
    triple_mask,
)
from twistlab.torus_grid import divergence, dot, new_grid


def _polefree(n, seed=9, dim=2):
    sizes = [n] * dim
    parities = [1] + [0] * (dim - 1)
    return gen_pole_free(new_grid(dim, sizes, parities=parities), seed)


def test_tilted_frame_is_a_rotation_of_the_chart_fields():
    d = _polefree(32)
    p = assemble_operator_pair(d)
    np.testing.assert_array_equal(p.tilde_u1.values, p.b.values)
    np.testing.assert_array_equal(p.tilde_u2.values, p.u2.values)
    np.testing.assert_array_equal(p.tilde_b.values, -p.u1.values)


def test_tilted_coefficients_match_chart_divergences():
    # projection of tau(dperp2) vs div(b) - u1.u2 and div(u2) + u1.b
    errs = []
    for n in (64, 128):
        d = _polefree(n)
        p = assemble_operator_pair(d)
        gt1, gt2 = tilted_coefficients(d)
        c1 = divergence(p.b) - dot(p.u1, p.u2)
        c2 = divergence(p.u2) + dot(p.u1, p.b)
        e = max(np.max(np.abs((gt1 - c1).scalar()[p.region])), np.max(np.abs((gt2 - c2).scalar()[p.region])))
        errs.append(e)
    assert errs[0] < 1e-2 * 31.0
    assert 3.0 <= errs[0] / errs[1] <= 5.0


@pytest.mark.parametrize("maker", [lambda: gen_f2(new_grid(2, [32, 32])), lambda: _polefree(32)])
def test_cross_terms_cancel_exactly(maker):
    rep = cross_term_identities(assemble_operator_pair(maker()))
    assert rep["cross_term_pointwise_rel"] <= 1e-12


def test_divergence_identities_converge():
    reps = [cross_term_identities(assemble_operator_pair(_polefree(n))) for n in (64, 128)]
    for key in ("div_identity_lap_phi", "div_identity_phi_dot_theta", "div_b_product_rule", "cross_term_integral_rel"):
        assert reps[0][key] / reps[1][key] > 2.8, key
    assert reps[0]["cross_term_integral_rel"] < 2e-2


@pytest.mark.parametrize("M", [1.0, 2.0, 4.0])
def test_dual_routes_agree(M):
    for d in (_polefree(64), gen_f2(new_grid(2, [64, 64]))):
        rep = d1_d2(d, M)
        assert rep["d1_rel"] <= 2e-2
        assert rep["d2_rel"] <= 2e-2


def test_dual_routes_on_harmonic_field_vanish(f1):
    rep = d1_d2(f1, 2.0)
    for key in ("d1_expansion", "d1_g_route", "d2_expansion", "d2_route_gtilde"):
        assert abs(rep[key]) < 1e-20
    assert rep["d1_rel"] < 1e-10


def test_d1_d2_rejects_small_M(f2):
    with pytest.raises(ValueError):
        d1_d2(f2, 0.5)


def test_chart_comparison_on_equator(f1):
    rep = chart_comparison(f1)
    assert rep.passed
    assert rep["chart_max_ratio"] == pytest.approx(0.5, abs=0.02)
    assert rep["chart_min_ratio"] == pytest.approx(0.5, abs=0.02)


@given(st.integers(0, 10_000), st.sampled_from([(0, 0), (1, 0), (1, 1)]))
def test_chart_comparison_holds_pointwise(seed, parities):
    d = gen_random_bandlimited(new_grid(2, [24, 24], parities=list(parities)), seed, band=2)
    rep = chart_comparison(d)
    assert rep.passed
    # with unit-sphere geometry the constant 1 already suffices, up to discretization
    assert rep["chart_max_ratio"] <= 1.0 + 0.5 * d.grid.h_max


def test_triple_mask_excludes_every_pole(f1):
    m = triple_mask(f1)
    assert m.sum() < m.size
    assert not m[32].any()  # d = e_x on the x1 = 1/2 column


def test_delta_theta_bound_reports_all_charts():
    rep = delta_theta_bound(_polefree(32))
    for axis in "xyz":
        assert f"lap_theta_ratio_{axis}" in rep
        assert rep.entries[f"lap_theta_ratio_{axis}"].metadata["masked_fraction"] > 0


def test_theorem_ratios_on_equator(f1):
    r = theorem_ratios(f1)
    assert set(r.keys()) == {"thm21", "thm22", "eq213", "chart214"}
    assert r["thm21"] == pytest.approx(math.pi**2, rel=1e-2)
    assert r["eq213"] < 1e-15


def test_theorem_ratios_three_dimensional():
    r = theorem_ratios(_polefree(16, dim=3))
    assert {"thm23a", "thm23b", "eq213"} <= set(r.keys())
    assert all(math.isfinite(r[k]) for k in r.keys())


def test_ratio_set_rejects_unknown_ids():
    s = InequalityRatioSet()
    with pytest.raises(KeyError):
        s.put("thm99", 1.0, 1.0)
    s.put("thm21", 2.0, 4.0)
    assert s["thm21"] == 0.5
    assert s.to_dict()["thm21"]["lhs"] == 2.0


def test_control_terms_are_consistent():
    rep = nonlinear_control_terms(_polefree(32))
    # |grad d|^2 (|u1| + |grad theta|) against 2 ||grad d||_6^3: Cauchy-Schwarz on the chart
    assert rep["ratio_sum_vs_l6"] <= 1.0 + 1e-12
    for k in rep:
        assert math.isfinite(rep[k])


def test_thm23a_on_three_dimensional_equator():
    d = gen_equator(new_grid(3, [32, 16, 16], parities=[1, 0, 0]), 0.5)
    r = theorem_ratios(d)
    assert r["thm23a"] == pytest.approx(math.pi**4, rel=5e-2)
    assert "thm21" not in r and "thm22" not in r

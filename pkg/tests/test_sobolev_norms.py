import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.director_field import gen_equator, gen_random_bandlimited
from twistlab.sobolev_norms import gn_agmon_ratios, lp_norm, sobolev_seminorms
from twistlab.torus_grid import EVEN, SampledField, new_grid


def test_lp_norm_of_constant_vector():
    g = new_grid(2, [16, 16], lengths=[2.0, 1.0])
    f = SampledField(g, np.broadcast_to(np.array([3.0, 4.0]).reshape(2, 1, 1), (2, 16, 16)), EVEN)
    for p in (2, 4, 6):
        assert lp_norm(f, p) == pytest.approx(5.0 * 2.0 ** (1 / p))
    assert lp_norm(f, math.inf) == 5.0
    with pytest.raises(ValueError):
        lp_norm(f, 3)


def test_equator_norms(f1):
    h = f1.grid.spacings[0]
    mu = (math.sin(math.pi * h) / h) ** 2  # discrete |grad d|^2
    lam = 4 * math.sin(math.pi * h / 2) ** 2 / h**2  # compact-stencil eigenvalue
    nb, resid = sobolev_seminorms(f1)
    assert nb.h1 == pytest.approx(math.sqrt(mu), rel=1e-12)
    assert nb.l4 == pytest.approx(math.sqrt(mu), rel=1e-12)
    assert nb.linf == pytest.approx(math.sqrt(mu), rel=1e-12)
    assert nb.h2 == pytest.approx(lam, rel=1e-12)
    assert resid == pytest.approx(abs(lam**2 - (lam - mu) ** 2 - mu**2) / lam**2, rel=1e-8)
    assert resid < 1e-2


def test_equator_gn_ratio_against_closed_form(f1):
    rep = gn_agmon_ratios(f1)
    assert rep["gn2"] == pytest.approx(1 / (math.pi**2 + 1), abs=2e-3)


def test_norm_identity_converges():
    res = [sobolev_seminorms(gen_random_bandlimited(new_grid(2, [n, n], parities=[1, 0]), 3))[1] for n in (64, 128)]
    assert res[0] <= 2e-2
    assert res[0] / res[1] > 3.0


def test_winding_scales_norms():
    g = new_grid(2, [128, 128], parities=[1, 0])
    a, b = sobolev_seminorms(gen_equator(g, 0.5))[0], sobolev_seminorms(gen_equator(g, 1.5))[0]
    assert b.h1 / a.h1 == pytest.approx(3.0, rel=2e-3)
    assert b.h2 / a.h2 == pytest.approx(9.0, rel=2e-3)
    assert b.h3 / a.h3 == pytest.approx(27.0, rel=5e-3)


@given(st.integers(0, 10_000))
def test_norms_invariant_under_antipodal_map(seed):
    d = gen_random_bandlimited(new_grid(2, [16, 16], parities=[0, 1]), seed, band=2)
    a, b = sobolev_seminorms(d)[0].as_dict(), sobolev_seminorms(-d)[0].as_dict()
    for k in a:
        assert b[k] == pytest.approx(a[k], rel=1e-12)

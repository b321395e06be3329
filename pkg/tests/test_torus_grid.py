import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.torus_grid import (
    EVEN,
    ODD,
    SampledField,
    diff_central,
    divergence,
    dot,
    erode,
    hessian_frobenius_sq,
    integrate,
    laplacian,
    lift_to_periodic,
    new_grid,
    scalar_field,
    shift_sample,
)


def test_new_grid_validation():
    with pytest.raises(ValueError):
        new_grid(1, [16])
    with pytest.raises(ValueError):
        new_grid(2, [4, 16])
    with pytest.raises(ValueError):
        new_grid(2, [16, 16], lengths=[1.0, 0.0])
    with pytest.raises(ValueError):
        new_grid(2, [16, 16], parities=[2, 0])
    with pytest.raises(ValueError):
        new_grid(2, [16, 16, 16])


def test_grid_geometry():
    g = new_grid(3, [8, 10, 12], lengths=[1.0, 2.0, 3.0], parities=[1, 0, 1])
    assert g.spacings == pytest.approx((1 / 8, 0.2, 0.25))
    assert g.volume == pytest.approx(6.0)
    assert g.cell_volume * g.num_nodes == pytest.approx(g.volume)
    assert g.refined().sizes == (16, 20, 24)
    assert g.refined().parities == g.parities
    assert g.describe()["parities"] == [1, 0, 1]


def test_shift_sample_twisted_wrap():
    g = new_grid(2, [16, 16], parities=[1, 0])
    f = SampledField(g, np.arange(256.0).reshape(16, 16), ODD)
    assert shift_sample(f, (15, 3), 0, 1)[0] == -f.values[0, 0, 3]
    assert shift_sample(f, (0, 3), 0, -1)[0] == -f.values[0, 15, 3]
    assert shift_sample(f, (4, 15), 1, 1)[0] == f.values[0, 4, 0]
    fe = SampledField(g, f.values, EVEN)
    assert shift_sample(fe, (15, 3), 0, 1)[0] == f.values[0, 0, 3]
    with pytest.raises(IndexError):
        shift_sample(f, (16, 0), 0, 1)


def test_constant_even_field_derivatives_vanish():
    g = new_grid(2, [16, 16], parities=[1, 1])
    f = scalar_field(g, np.full(g.sizes, 3.0), EVEN)
    assert np.max(np.abs(diff_central(f, 0).values)) == 0.0
    assert np.max(np.abs(laplacian(f).values)) == 0.0


def test_constant_odd_field_sees_the_jump():
    # an odd constant is not single-valued across a twisted face
    g = new_grid(2, [16, 16], parities=[1, 0])
    f = scalar_field(g, np.ones(g.sizes), ODD)
    d = diff_central(f, 0).scalar()
    assert d[0, 0] == pytest.approx(16.0)  # (1 - (-1)) / (2h)
    assert d[5, 0] == 0.0


@pytest.mark.parametrize("n", [32, 64])
def test_central_difference_error_bound(n):
    # f = sin(pi x) is odd across a twisted x-face; error <= (pi^3/6) h^2
    g = new_grid(2, [n, n], parities=[1, 0])
    x, _ = g.mesh()
    f = scalar_field(g, np.sin(math.pi * x), ODD)
    err = np.max(np.abs(diff_central(f, 0).scalar() - math.pi * np.cos(math.pi * x)))
    h = g.spacings[0]
    assert err <= math.pi**3 / 6 * h**2


@pytest.mark.parametrize("n", [32, 64])
def test_laplacian_error_bound(n):
    # sin(pi x) cos(2 pi y): compact stencil error <= sum_i k_i^4 h^2 / 12
    g = new_grid(2, [n, n], parities=[1, 0])
    x, y = g.mesh()
    kx, ky = math.pi, 2 * math.pi
    f = scalar_field(g, np.sin(kx * x) * np.cos(ky * y), ODD)
    exact = -(kx**2 + ky**2) * f.scalar()
    h = g.spacings[0]
    assert np.max(np.abs(laplacian(f).scalar() - exact)) <= (kx**4 + ky**4) * h**2 / 12


def test_laplacian_second_order_refinement():
    errs = []
    for n in (32, 64):
        g = new_grid(2, [n, n], parities=[1, 1])
        x, y = g.mesh()
        f = scalar_field(g, np.sin(math.pi * x) * np.sin(math.pi * y), ODD)
        errs.append(np.max(np.abs(laplacian(f).scalar() + 2 * math.pi**2 * f.scalar())))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_integrate_rejects_odd_and_respects_mask():
    g = new_grid(2, [16, 16], parities=[1, 0])
    with pytest.raises(ValueError):
        integrate(scalar_field(g, np.ones(g.sizes), ODD))
    ones = scalar_field(g, np.ones(g.sizes), EVEN)
    assert integrate(ones) == pytest.approx(1.0)
    mask = np.zeros(g.sizes, bool)
    mask[:8] = True
    assert integrate(ones, mask) == pytest.approx(0.5)


def test_integrate_is_spectrally_exact_for_band_limited():
    g = new_grid(2, [32, 32], lengths=[2.0, 1.0])
    x, y = g.mesh()
    f = scalar_field(g, np.cos(math.pi * x) ** 2 * np.sin(2 * math.pi * y) ** 2, EVEN)
    assert integrate(f) == pytest.approx(2.0 * 0.25, abs=1e-14)


def test_product_parity_is_xor():
    g = new_grid(2, [16, 16], parities=[1, 0])
    a = scalar_field(g, np.ones(g.sizes), ODD)
    b = scalar_field(g, np.ones(g.sizes), EVEN)
    assert (a * a).parity == EVEN
    assert (a * b).parity == ODD
    assert dot(a, a).parity == EVEN
    with pytest.raises(ValueError):
        a + b


def test_divergence_requires_dim_components():
    g = new_grid(2, [16, 16])
    with pytest.raises(ValueError):
        divergence(SampledField(g, np.zeros((3, 16, 16)), EVEN))


def test_hessian_matches_laplacian_in_integral():
    # for periodic smooth f, int |Hess f|^2 = int (Lap f)^2
    g = new_grid(2, [64, 64], parities=[1, 1])
    x, y = g.mesh()
    f = scalar_field(g, np.sin(math.pi * x) * np.cos(3 * math.pi * y), ODD)
    h = integrate(hessian_frobenius_sq(f))
    lap = laplacian(f)
    assert h == pytest.approx(integrate(dot(lap, lap)), rel=1e-2)


def test_erode_shrinks_by_stencil():
    g = new_grid(2, [16, 16])
    mask = np.zeros(g.sizes, bool)
    mask[4:12, 4:12] = True
    e = erode(mask, g, 1)
    assert e.sum() == 36 and e[5:11, 5:11].all()
    assert erode(np.ones(g.sizes, bool), g, 3).all()


# -- properties --------------------------------------------------------------

sizes = st.integers(8, 14)
parity = st.integers(0, 1)


@st.composite
def random_field(draw, m=1):
    nx, ny = draw(sizes), draw(sizes)
    a = (draw(parity), draw(parity))
    p = draw(parity)
    seed = draw(st.integers(0, 2**31))
    g = new_grid(2, [nx, ny], parities=a)
    vals = np.random.default_rng(seed).standard_normal((m, nx, ny))
    return SampledField(g, vals, p)


@given(random_field())
def test_twisted_stencils_match_periodic_lift(f):
    lifted = lift_to_periodic(f)
    block = tuple([slice(None)] + [slice(0, n) for n in f.grid.sizes])
    for axis in range(2):
        np.testing.assert_allclose(diff_central(lifted, axis).values[block], diff_central(f, axis).values, atol=1e-12)
    np.testing.assert_allclose(laplacian(lifted).values[block], laplacian(f).values, atol=1e-10)


@given(random_field(), random_field())
def test_summation_by_parts(f, g0):
    g = SampledField(f.grid, np.resize(g0.values, f.values.shape), f.parity)
    for axis in range(2):
        lhs = integrate(diff_central(f, axis) * g)
        rhs = -integrate(f * diff_central(g, axis))
        assert lhs == pytest.approx(rhs, abs=1e-9)
    # Lap is symmetric and negative semidefinite
    assert integrate(laplacian(f) * g) == pytest.approx(integrate(f * laplacian(g)), abs=1e-8)
    assert integrate(laplacian(f) * f) <= 1e-9


@given(random_field())
def test_derivatives_commute_with_sign_flip(f):
    np.testing.assert_array_equal(diff_central(-f, 0).values, -diff_central(f, 0).values)
    np.testing.assert_array_equal(laplacian(-f).values, -laplacian(f).values)
    assert diff_central(f, 1).parity == f.parity

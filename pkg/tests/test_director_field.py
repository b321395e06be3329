import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistlab.director_field import (
    DirectorField,
    TwistError,
    chart_extract,
    constant_field,
    frame_vectors,
    gen_angle_ansatz,
    gen_equator,
    gen_f2,
    gen_pole_free,
    gen_random_bandlimited,
    normalize,
    reconstruct_from_chart,
    unit_norm_error,
)
from twistlab.frame_calculus import grad_norm_sq_discrepancy
from twistlab.torus_grid import EVEN, ODD, SampledField, lift_to_periodic, new_grid


def _face_jump(d):
    """Largest neighbour difference across the periodic seam of the unfolded field."""
    lifted = lift_to_periodic(d.base).values
    jumps = [np.max(np.abs(np.diff(lifted, axis=1 + i, append=lifted.take([0], axis=1 + i)))) for i in range(d.grid.dim)]
    return max(jumps)


def test_equator_is_unit_and_twisted(twisted64, f1):
    assert unit_norm_error(f1.values) <= 1e-12
    x, _ = twisted64.mesh()
    np.testing.assert_allclose(f1.values[0], np.sin(math.pi * x), atol=1e-15)
    # unfolding the twist gives a field with only smooth increments
    assert _face_jump(f1) <= 2 * math.pi / 64


@pytest.mark.parametrize("winding,parities", [(1.0, [1, 0]), (0.5, [0, 0]), (0.3, [1, 0])])
def test_equator_rejects_incompatible_winding(winding, parities):
    with pytest.raises(TwistError):
        gen_equator(new_grid(2, [16, 16], parities=parities), winding)


def test_ansatz_names_the_boundary_condition():
    g = new_grid(2, [16, 16], parities=[0, 1])
    with pytest.raises(TwistError, match="twisted boundary condition"):
        gen_angle_ansatz(g, lambda *x: np.pi / 2, lambda *x: 2 * np.pi * x[0])


def test_f2_and_constant_need_untwisted_grid():
    g = new_grid(2, [16, 16], parities=[1, 0])
    with pytest.raises(TwistError):
        gen_f2(g)
    with pytest.raises(TwistError):
        constant_field(g)


def test_director_validation():
    g = new_grid(2, [16, 16])
    with pytest.raises(ValueError):
        DirectorField(SampledField(g, np.zeros((3, 16, 16)) + [[[1.0]], [[0.0]], [[0.0]]], EVEN))
    with pytest.raises(ValueError):
        DirectorField(SampledField(g, np.full((3, 16, 16), 0.7), ODD))
    with pytest.raises(ValueError):
        normalize(SampledField(g, np.zeros((3, 16, 16)), ODD))


@pytest.mark.parametrize("parities", [[0, 0], [1, 0], [1, 1]])
def test_random_fields_deterministic_and_twisted(parities):
    g = new_grid(2, [32, 32], parities=parities)
    a = gen_random_bandlimited(g, 7)
    b = gen_random_bandlimited(g, 7)
    c = gen_random_bandlimited(g, 8)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.max(np.abs(a.values - c.values)) > 1e-3
    assert unit_norm_error(a.values) <= 1e-12
    assert _face_jump(a) < 1.0


def test_random_field_argument_checks():
    g = new_grid(2, [32, 32])
    with pytest.raises(ValueError):
        gen_random_bandlimited(g, 0, band=8)
    with pytest.raises(ValueError):
        gen_random_bandlimited(g, 0, amplitude=1.0)
    with pytest.raises(ValueError):
        gen_pole_free(g, 0, amplitude=1.5)


@pytest.mark.parametrize("parities", [[1, 0], [1, 1], [0, 0]])
def test_pole_free_stays_off_z_poles(parities):
    g = new_grid(2, [32, 32], parities=parities)
    d = gen_pole_free(g, 3)
    assert np.max(np.abs(d.values[2])) <= 0.9 + 1e-12
    assert chart_extract(d, "z").mask.all()


def test_pole_free_three_dimensional():
    g = new_grid(3, [16, 16, 16], parities=[1, 0, 1])
    d = gen_pole_free(g, 1)
    assert unit_norm_error(d.values) <= 1e-12
    assert _face_jump(d) < 1.0


def test_equator_chart_values(f1):
    ch = chart_extract(f1, "z")
    assert ch.mask.all()
    assert np.max(np.abs(ch.grad_theta.values)) < 1e-12
    h = f1.grid.spacings[0]
    # central difference of the winding phase: sin(pi h)/h
    np.testing.assert_allclose(ch.u1.values[0], math.sin(math.pi * h) / h, rtol=1e-12)
    assert np.max(np.abs(ch.b.values)) < 1e-12


def test_x_chart_masks_poles_of_equator(f1):
    ch = chart_extract(f1, "x")
    assert 0.0 < ch.masked_fraction < 1.0
    # the x-chart polar angle is measured from e_x, which d reaches at x1 = 1/2;
    # s = |cos(pi x1)| < 0.05 on the three nodes nearest to it
    masked_rows = np.flatnonzero(~ch.mask.all(axis=1))
    assert list(masked_rows) == [31, 32, 33]
    assert ch.mask[0].all()


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_reconstruct_from_chart(axis):
    d = gen_random_bandlimited(new_grid(2, [32, 32], parities=[1, 0]), 4)
    np.testing.assert_allclose(reconstruct_from_chart(d, axis), d.values, atol=1e-14)


@given(st.integers(0, 10_000), st.sampled_from(["x", "y", "z"]))
def test_frame_is_right_handed_and_orthonormal(seed, axis):
    d = gen_random_bandlimited(new_grid(2, [16, 16], parities=[1, 0]), seed, band=2)
    e1, e2, mask = frame_vectors(d, axis)
    v1, v2, dv = e1.values[:, mask], e2.values[:, mask], d.values[:, mask]
    for a, b, want in [(v1, v1, 1), (v2, v2, 1), (v1, v2, 0), (v1, dv, 0), (v2, dv, 0)]:
        assert np.max(np.abs(np.sum(a * b, axis=0) - want)) < 1e-13
    np.testing.assert_allclose(np.cross(v1, v2, axis=0), dv, atol=1e-13)


@given(st.integers(0, 10_000), st.sampled_from(["x", "y", "z"]))
def test_chart_parity_under_antipodal_map(seed, axis):
    d = gen_random_bandlimited(new_grid(2, [16, 16], parities=[0, 1]), seed, band=2)
    nd = -d
    c, cn = chart_extract(d, axis), chart_extract(nd, axis)
    np.testing.assert_array_equal(c.mask, cn.mask)
    np.testing.assert_allclose(cn.u1.values, c.u1.values, atol=1e-14)
    np.testing.assert_allclose(cn.grad_theta.values, -c.grad_theta.values, atol=1e-14)
    np.testing.assert_allclose(cn.b.values, -c.b.values, atol=1e-14)
    e1, e2, _ = frame_vectors(d, axis)
    n1, n2, _ = frame_vectors(nd, axis)
    np.testing.assert_allclose(n1.values, -e1.values, atol=1e-15)
    np.testing.assert_allclose(n2.values, e2.values, atol=1e-15)
    assert (c.u1.parity, c.grad_theta.parity, c.b.parity, e1.parity, e2.parity) == (EVEN, ODD, ODD, ODD, EVEN)


def test_chart_gradient_norm_converges():
    errs = []
    for n in (32, 64):
        d = gen_pole_free(new_grid(2, [n, n], parities=[1, 0]), 2)
        errs.append(grad_norm_sq_discrepancy(d, "z")[1])
    assert 3.0 < errs[0] / errs[1] < 5.0

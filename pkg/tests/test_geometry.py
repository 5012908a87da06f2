import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blochop.errors import BoundaryClamp, PointOutsideDomain
from blochop.geometry import (
    Domain,
    Interval,
    metric_matrix,
    omega_lower_batch,
    omega_upper,
    omega_upper_batch,
    pseudo_distance_upper_batch,
    rho_to_origin,
    sample_interior,
)

from conftest import interior

moduli = st.floats(min_value=0.0, max_value=0.99)
angles = st.floats(min_value=0.0, max_value=2 * math.pi)


def test_metric_at_origin_is_identity():
    assert np.allclose(metric_matrix(Domain.polydisk(1), [0]).matrix, [[1.0]])


def test_metric_disk_half():
    assert metric_matrix(Domain.polydisk(1), [0.5]).matrix[0, 0].real == pytest.approx(16 / 9, rel=1e-12)


def test_ball_metric_at_origin_is_euclidean():
    H = metric_matrix(Domain.ball(2), [0, 0])
    assert H([3, 4]).real == pytest.approx(25.0)


def test_rho_examples():
    assert rho_to_origin(Domain.ball(2), [0.3, 0.4]).lower == pytest.approx(0.549306, abs=1e-6)
    for d in (Domain.ball(3), Domain.polydisk(2)):
        iv = rho_to_origin(d, np.zeros(d.dim))
        assert iv.exact and iv.upper == 0.0
    iv = rho_to_origin(Domain.polydisk(2), [0.5, 0.5])
    assert not iv.exact
    assert (iv.lower, iv.upper) == pytest.approx((0.549306, 1.098612), abs=1e-6)


def test_omega_upper_examples():
    assert omega_upper(Domain.ball(3), [0.9, 0, 0]) == pytest.approx(1.472219, abs=1e-6)
    assert omega_upper(Domain.polydisk(2), [0.9, 0]) == pytest.approx(1.472219, abs=1e-6)
    assert omega_upper(Domain.polydisk(3), [0, 0, 0]) == 0.0


def test_membership_and_clamp():
    with pytest.raises(PointOutsideDomain):
        rho_to_origin(Domain.polydisk(2), [0.2, 1.2])
    with pytest.raises(PointOutsideDomain):
        rho_to_origin(Domain.ball(2), [0.8, 0.8])
    with pytest.raises(BoundaryClamp):
        rho_to_origin(Domain.polydisk(1), [1 - 1e-12])


def test_interval_validation():
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)
    with pytest.raises(ValueError):
        Interval(1.0, 2.0, exact=True)
    iv = Interval(1.0, math.inf)
    assert not iv.finite and iv.to_dict()["upper"] == "+inf"


def test_disk_views_agree():
    Z = interior(Domain.polydisk(1), 1000, 3)
    for z in Z:
        a, b = Domain.polydisk(1), Domain.ball(1)
        assert np.allclose(metric_matrix(a, z).matrix, metric_matrix(b, z).matrix, rtol=1e-12, atol=0)
        assert rho_to_origin(a, z).upper == pytest.approx(rho_to_origin(b, z).upper, rel=1e-12, abs=0)
        assert omega_upper(a, z) == pytest.approx(omega_upper(b, z), rel=1e-12, abs=0)


@settings(max_examples=200, deadline=None)
@given(r1=moduli, r2=moduli, t1=angles, t2=angles)
def test_ball_metric_radial_identity(r1, r2, t1, t2):
    z = np.array([r1 * np.exp(1j * t1), r2 * np.exp(1j * t2)]) / math.sqrt(2)
    H = metric_matrix(Domain.ball(2), z)
    s = 1 - np.sum(np.abs(z) ** 2)
    assert H(z).real == pytest.approx(np.sum(np.abs(z) ** 2) / s**2, rel=1e-12, abs=1e-15)
    assert np.allclose(H.matrix, H.matrix.conj().T, rtol=1e-12)
    assert np.linalg.eigvalsh(H.matrix).min() > 0


# zero or bounded away from it: a subnormal modulus vanishes in the sum at double precision
resolvable = st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=0.99))


@settings(max_examples=200, deadline=None)
@given(r1=resolvable, r2=resolvable, t1=angles, t2=angles)
def test_rho_interval_ordering(r1, r2, t1, t2):
    z = np.array([r1 * np.exp(1j * t1), r2 * np.exp(1j * t2)])
    iv = rho_to_origin(Domain.polydisk(2), z)
    assert iv.lower <= iv.upper
    one_nonzero = (r1 == 0) or (r2 == 0)
    assert (iv.lower == iv.upper) == one_nonzero


@settings(max_examples=100, deadline=None)
@given(s=st.floats(0, 0.98), gap=st.floats(0, 0.01), t1=angles, t2=angles, kind=st.sampled_from(["polydisk", "ball"]))
def test_omega_upper_monotone_on_rays(s, gap, t1, t2, kind):
    d = Domain(kind, 2)
    v = np.array([np.exp(1j * t1), 0.5 * np.exp(1j * t2)])
    v /= d.radius(v)
    assert omega_upper(d, s * v) <= omega_upper(d, (s + gap) * v) + 1e-15


def test_closed_form_omega_bounds_ordered():
    for d in (Domain.polydisk(3), Domain.ball(3)):
        Z = sample_interior(d, 2000, 1)
        assert np.all(omega_lower_batch(d, Z) <= omega_upper_batch(d, Z) + 1e-12)


def test_pseudo_distance_symmetric_and_zero_on_diagonal():
    for d in (Domain.polydisk(2), Domain.ball(2)):
        Z, W = interior(d, 200, 1), interior(d, 200, 2)
        assert np.allclose(pseudo_distance_upper_batch(d, Z, W), pseudo_distance_upper_batch(d, W, Z), rtol=1e-10)
        assert np.allclose(pseudo_distance_upper_batch(d, Z, Z), 0.0, atol=1e-7)
        origin = np.zeros_like(Z)
        assert np.allclose(pseudo_distance_upper_batch(d, Z, origin), omega_upper_batch(d, Z), rtol=1e-9)

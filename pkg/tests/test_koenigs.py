"""Tests for the linearizing conjugacy of a shift map at a fixed point."""
import math

import numpy as np
import pytest

from shiftlab.core import series as ts
from shiftlab.core.koenigs import (
    ConjugacyResult,
    conjugacy_bounds,
    koenigs_series,
    odd_symmetry_gap,
    verify_conjugacy,
    zeta_iteration,
)
from shiftlab.core.shiftmap import Affine, FunctionShift, SeriesMap, SineShift
from shiftlab.errors import JetTooShort, NeutralMultiplier, NotAFixedPoint


def _quadratic(lam):
    """eta(t) = lam t + t^2."""
    def jet(center, order):
        coeffs = np.zeros(order + 1)
        coeffs[0] = lam * center + center ** 2
        if order >= 1:
            coeffs[1] = lam + 2 * center
        if order >= 2:
            coeffs[2] = 1.0
        return ts.TruncatedSeries(center, coeffs)

    return FunctionShift(lambda t: lam * t + t * t, lambda t: lam + 2 * t, jet, name="quadratic")


def test_affine_map_is_already_linear():
    result = koenigs_series(Affine(2.0, 1.0), 1.0, 10)
    expected = np.zeros(11)
    expected[:2] = [1.0, 1.0]
    np.testing.assert_array_equal(result.sigma.coeffs, expected)
    assert result.residual == 0.0
    assert result.t0 == 1.0


def test_quadratic_map_second_coefficient():
    result = koenigs_series(_quadratic(2.0), 0.0, 8)
    assert result.sigma[2] == pytest.approx(0.5)
    assert verify_conjugacy(result, _quadratic(2.0), 1e-9)


@pytest.mark.parametrize("lam", [3.0, 7.0, 13.0])
def test_sine_family_low_coefficients(lam):
    result = koenigs_series(SineShift(lam), 0.0, 12)
    assert result.sigma[0] == 0.0 and result.sigma[1] == 1.0
    assert result.sigma[2] == 0.0
    assert result.sigma[3] == pytest.approx(-1.0 / (6 * lam * (lam + 1)), rel=1e-12)
    assert odd_symmetry_gap(result) == 0.0


@pytest.mark.parametrize("lam", [5.0, 7.0, 13.0])
def test_sine_family_residual(lam):
    result = koenigs_series(SineShift(lam), 0.0, 30)
    assert result.residual <= 1e-9
    assert verify_conjugacy(result, SineShift(lam), 1e-9)


def test_negative_multiplier_at_pi():
    result = koenigs_series(SineShift(7.0), math.pi, 20)
    assert result.lam == pytest.approx(-5.0)
    assert verify_conjugacy(result, SineShift(7.0), 1e-8)


def test_perturbed_conjugacy_fails_verification():
    result = koenigs_series(SineShift(7.0), 0.0, 10)
    coeffs = result.sigma.coeffs.copy()
    coeffs[3] += 1e-3
    broken = ConjugacyResult(ts.TruncatedSeries(0.0, coeffs), result.lam, result.residual)
    assert not verify_conjugacy(broken, SineShift(7.0), 1e-9)


def test_large_orders_do_not_overflow():
    result = koenigs_series(SineShift(7.0), 0.0, 600)
    assert np.all(np.isfinite(result.sigma.coeffs))
    assert result.sigma[600] == 0.0


def test_preconditions():
    with pytest.raises(NotAFixedPoint):
        koenigs_series(SineShift(7.0), 1.0, 5)
    with pytest.raises(NeutralMultiplier):
        koenigs_series(Affine(1.0), 0.0, 5)
    with pytest.raises(NeutralMultiplier):
        koenigs_series(Affine(-1.0), 0.0, 5)
    with pytest.raises(JetTooShort):
        koenigs_series(SeriesMap(ts.from_coeffs([0.0, 2.0, 1.0, 0.0])), 0.0, 5)
    with pytest.raises(ValueError):
        koenigs_series(SineShift(7.0), 0.0, 0)


def test_zeta_iteration_respects_coefficient_bound():
    result = zeta_iteration(100.0, 10)
    assert np.all(np.abs(result.sigma.coeffs[2:]) <= 0.01)
    assert conjugacy_bounds(result)["coefficient_bound"]


def test_zeta_iteration_quadratic_bound():
    bounds = conjugacy_bounds(zeta_iteration(50.0, 30))
    assert bounds["quadratic_bound"]
    assert bounds["max_gap"] <= 1.0 / 50.0


def test_zeta_iteration_matches_coefficient_matching():
    by_zeta = zeta_iteration(100.0, 15)
    by_series = koenigs_series(SineShift(100.0), 0.0, 15)
    np.testing.assert_allclose(by_zeta.sigma.coeffs, by_series.sigma.coeffs, rtol=0, atol=1e-10)


def test_zeta_iteration_floor():
    with pytest.raises(ValueError):
        zeta_iteration(5.0, 10)
    assert zeta_iteration(13.0, 12, lam_floor=13.0).residual <= 1e-9

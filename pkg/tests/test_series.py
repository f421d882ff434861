"""Tests for truncated power-series arithmetic."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from shiftlab.core import series as ts
from shiftlab.errors import CenterMismatch, CompositionMismatch, WindowTooLarge


def test_linear_combine_examples():
    s1, s2 = ts.from_coeffs([1, 1]), ts.from_coeffs([1, -1])
    assert_array_equal(ts.linear_combine(1, s1, 1, s2).coeffs, [2, 0])
    s = ts.from_coeffs([1, 2, 3])
    assert_array_equal(ts.linear_combine(0, s, 0, s).coeffs, [0, 0, 0])
    assert_array_equal(ts.linear_combine(2, s, -1, s).coeffs, [1, 2, 3])


def test_operations_truncate_at_the_smaller_order():
    out = ts.add(ts.from_coeffs([1, 1, 1, 1]), ts.from_coeffs([1, 1]))
    assert out.order == 1


def test_center_mismatch_is_rejected():
    with pytest.raises(CenterMismatch):
        ts.add(ts.from_coeffs([1, 1], 0.0), ts.from_coeffs([1, 1], 1.0))


def test_series_rejects_non_finite_coefficients():
    with pytest.raises(ValueError):
        ts.from_coeffs([1.0, math.nan])


def test_mul_examples():
    assert_array_equal(ts.mul(ts.from_coeffs([1, 1, 0]), ts.from_coeffs([1, -1, 0])).coeffs, [1, 0, -1])
    s = ts.from_coeffs([0.5, -2.0, 3.0])
    assert_array_equal(ts.mul(s, ts.constant(1.0, 0.0, 2)).coeffs, s.coeffs)
    q = ts.from_coeffs([1, 1, 1])
    assert_array_equal(ts.mul(q, q).coeffs, [1, 2, 3])


def test_mul_is_commutative_and_associative():
    rng = np.random.default_rng(5)
    a, b, c = (ts.from_coeffs(rng.normal(size=9)) for _ in range(3))
    assert_allclose(ts.mul(a, b).coeffs, ts.mul(b, a).coeffs, rtol=1e-14, atol=1e-14)
    assert_allclose(ts.mul(ts.mul(a, b), c).coeffs, ts.mul(a, ts.mul(b, c)).coeffs, rtol=1e-12, atol=1e-12)


def test_product_rule():
    rng = np.random.default_rng(8)
    a, b = ts.from_coeffs(rng.normal(size=12)), ts.from_coeffs(rng.normal(size=12))
    lhs = ts.differentiate(ts.mul(a, b))
    rhs = ts.add(ts.mul(ts.differentiate(a), b), ts.mul(a, ts.differentiate(b)))
    assert_allclose(lhs.coeffs, rhs.coeffs[: lhs.order + 1], rtol=1e-12, atol=1e-12)


def test_compose_exp_with_doubling():
    doubled = ts.from_coeffs([0.0, 2.0, 0.0, 0.0, 0.0, 0.0])
    out = ts.compose(ts.exp_jet(0.0, 5), doubled)
    expected = [2.0 ** n / math.factorial(n) for n in range(6)]
    assert_allclose(out.coeffs, expected, rtol=1e-14)


def test_compose_with_identity_is_neutral():
    s = ts.from_coeffs([0.3, -1.0, 2.0, 0.5], center=1.0)
    inner = ts.from_coeffs([1.0, 1.0, 0.0, 0.0])
    assert_allclose(ts.compose(s, inner).coeffs, s.coeffs)


def test_compose_sine_with_quadratic_inner():
    out = ts.compose(ts.sin_jet(0.0, 3), ts.from_coeffs([0.0, 1.0, 1.0, 0.0]))
    assert_allclose(out.coeffs, [0.0, 1.0, 1.0, -1.0 / 6.0], atol=1e-15)


def test_compose_is_associative():
    a = ts.from_coeffs([0.0, 1.0, -0.5, 0.25, 0.1, -0.2])
    b = ts.from_coeffs([0.0, 2.0, 0.3, -0.1, 0.05, 0.0])
    c = ts.from_coeffs([0.0, 0.5, 0.5, 0.5, 0.5, 0.5])
    left = ts.compose(ts.compose(a, b), c)
    right = ts.compose(a, ts.compose(b, c))
    assert_allclose(left.coeffs, right.coeffs, rtol=1e-10, atol=1e-12)


def test_compose_mismatch():
    with pytest.raises(CompositionMismatch):
        ts.compose(ts.exp_jet(0.0, 3), ts.from_coeffs([1.0, 1.0, 0.0, 0.0]))


def test_differentiate_examples():
    assert_array_equal(ts.differentiate(ts.from_coeffs([1, 1, 1])).coeffs, [1, 2])
    const = ts.differentiate(ts.from_coeffs([4.0]))
    assert const.order == 0 and const[0] == 0.0
    e = ts.exp_jet(0.0, 10)
    assert_allclose(ts.differentiate(e).coeffs, e.coeffs[:10], rtol=1e-14)


def test_antiderivative_inverts_differentiate():
    s = ts.from_coeffs([2.0, 1.0, -3.0, 0.5])
    assert_allclose(ts.antiderivative(ts.differentiate(s), value=2.0).coeffs, s.coeffs)


def test_reciprocal():
    out = ts.reciprocal(ts.from_coeffs([1.0, -1.0, 0.0, 0.0, 0.0]))
    assert_allclose(out.coeffs, np.ones(5))
    with pytest.raises(ZeroDivisionError):
        ts.reciprocal(ts.from_coeffs([0.0, 1.0]))


def test_scale_argument_and_overflowing_powers():
    assert_allclose(ts.scale_argument(ts.from_coeffs([1, 1, 1]), 3.0).coeffs, [1, 3, 9])
    out = ts.scale_argument(ts.from_coeffs([1.0, 1.0, 0.0, 0.0]), 1e200)
    assert_array_equal(out.coeffs, [1.0, 1e200, 0.0, 0.0])


def test_evaluate_matches_exp():
    assert ts.evaluate(ts.exp_jet(0.0, 20), 0.5) == pytest.approx(math.exp(0.5), rel=1e-14)
    values = ts.evaluate(ts.exp_jet(1.0, 20), np.array([1.0, 1.25]))
    assert_allclose(values, np.exp([1.0, 1.25]), rtol=1e-13)


@pytest.mark.parametrize("center", [0.0, 0.7, math.pi / 2, -2.0])
def test_trig_jets(center):
    s, c = ts.sin_jet(center, 6), ts.cos_jet(center, 6)
    assert s[0] == pytest.approx(math.sin(center), abs=1e-15)
    assert s[1] == pytest.approx(math.cos(center), abs=1e-15)
    assert c[2] == pytest.approx(-math.cos(center) / 2, abs=1e-15)
    assert_allclose(ts.differentiate(s).coeffs, c.coeffs[:6], atol=1e-15)


def test_radius_of_geometric_series():
    s = ts.from_coeffs(3.0 ** -np.arange(81))
    est = ts.radius_estimate(s, 16)
    assert est["radius_estimate"] == pytest.approx(3.0, rel=0.05)


def test_radius_of_polynomial_is_infinite():
    s = ts.from_coeffs(np.concatenate(([1.0, 2.0, 3.0], np.zeros(30))))
    assert ts.radius_estimate(s, 16)["radius_estimate"] == math.inf


def test_radius_of_pantograph_coefficients_shrinks_with_order():
    n = np.arange(41)
    logs = n * (n - 1) / 2 * math.log(2.0) - np.array([math.lgamma(k + 1) for k in n])
    s = ts.from_coeffs(np.exp(logs))
    short = ts.radius_estimate(s.truncate(24), 8)["limsup_estimate"]
    long = ts.radius_estimate(s, 8)["limsup_estimate"]
    assert long > short > 1.0


def test_radius_window_checks():
    s = ts.from_coeffs(np.ones(20))
    with pytest.raises(ValueError):
        ts.radius_estimate(s, 7)
    with pytest.raises(WindowTooLarge):
        ts.radius_estimate(s, 20)

"""Tests for the derivative polynomials P_n and the functions Q_n."""
import math
from concurrent.futures import ThreadPoolExecutor

import pytest

from shiftlab.core import series as ts
from shiftlab.core.nondegeneracy import (
    IndexedPolynomial,
    PartialsOracle,
    build_pn,
    check_nondegeneracy_hypothesis,
    eta_order_condition,
    evaluate_qn,
    ode_derivative,
)
from shiftlab.errors import CapExceeded, JetTooShort, OracleGap


def _const(c):
    return (lambda v: c), (lambda v: 0.0)


def _all_partials(n, partials):
    """zeta values for every index with i + j <= n, zero unless given."""
    return {(i, j): partials.get((i, j), 0.0) for i in range(n + 1) for j in range(n + 1 - i)}


def test_low_order_polynomials():
    assert build_pn(0).render() == "z00"
    assert build_pn(1).render() == "z10 + z00*z01"
    assert build_pn(1).render("zeta") == "ζ₁₀ + ζ₀₀ζ₀₁"
    assert build_pn(2).render() == "z20 + 2*z00*z11 + z01*z10 + z00^2*z02 + z00*z01^2"


def test_p2_matches_the_hand_expansion():
    z = {v: IndexedPolynomial.variable(2, v) for v in [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)]}
    expected = (z[(2, 0)] + z[(0, 0)] * z[(1, 1)]
                + (z[(1, 0)] + z[(0, 0)] * z[(0, 1)]) * z[(0, 1)]
                + z[(0, 0)] * (z[(1, 1)] + z[(0, 0)] * z[(0, 2)]))
    assert build_pn(2) == expected


def test_variables_respect_the_index_bound():
    for n in range(5):
        assert all(i + j <= n for i, j in build_pn(n).variables())


def test_cap_and_negative_index():
    with pytest.raises(CapExceeded):
        build_pn(9)
    with pytest.raises(CapExceeded):
        build_pn(3, cap=2)
    with pytest.raises(ValueError):
        build_pn(-1)


def test_concurrent_builds_agree():
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda n: build_pn(n).render(), [5, 4, 5, 3, 5, 4]))
    assert results[0] == results[2] == results[4] == build_pn(5).render()


@pytest.mark.parametrize("x0", [0.5, -1.25])
def test_polynomials_reproduce_derivatives_of_quadratic_flow(x0):
    # x' = x^2 has x^(k)(0) = k! x0^(k+1)
    for n in range(5):
        values = _all_partials(n, {(0, 0): x0 ** 2, (0, 1): 2 * x0, (0, 2): 2.0})
        assert ode_derivative(n, values) == pytest.approx(math.factorial(n + 1) * x0 ** (n + 2))


def test_linear_and_time_forcing_flows():
    for n in range(4):
        assert ode_derivative(n, _all_partials(n, {(0, 0): 3.0, (0, 1): 1.0})) == pytest.approx(3.0)
    assert ode_derivative(1, _all_partials(1, {(0, 0): 0.7, (1, 0): 1.0})) == 1.0
    for n in (2, 3):
        assert ode_derivative(n, _all_partials(n, {(0, 0): 0.7, (1, 0): 1.0})) == 0.0
    # x' = t + x through x(0) = 2: x'' = x''' = 3
    for n in (1, 2):
        assert ode_derivative(n, _all_partials(n, {(0, 0): 2.0, (1, 0): 1.0, (0, 1): 1.0})) == 3.0


def test_missing_partial_in_ode_derivative():
    with pytest.raises(OracleGap):
        ode_derivative(1, {(0, 0): 1.0})


def test_qn_of_additive_delay():
    x0 = 0.4
    oracle = PartialsOracle({(0, 0): (lambda v: x0 + v, lambda v: 1.0), (0, 1): _const(1.0)}, default_zero=True)
    assert evaluate_qn(oracle, 0.3, 0) == 1.0
    assert evaluate_qn(oracle, -2.0, 0) == 1.0


@pytest.mark.parametrize("c", [0.5, -3.0])
def test_qn_is_linear_in_the_delay_coefficient(c):
    oracle = PartialsOracle({(0, 0): (lambda v: 1.0 + c * v, lambda v: c), (0, 1): _const(1.0)}, default_zero=True)
    assert evaluate_qn(oracle, 0.2, 0) == pytest.approx(c)
    assert evaluate_qn(oracle, 0.2, 1) == pytest.approx(c)


def test_qn_vanishes_without_delay_dependence():
    oracle = PartialsOracle({(0, 0): _const(1.0), (0, 1): _const(1.0)}, default_zero=True)
    assert all(evaluate_qn(oracle, v, n) == 0.0 for n in range(4) for v in (-1.0, 0.0, 2.0))


def test_qn_of_square_delay():
    oracle = PartialsOracle({(0, 0): (lambda v: v * v, lambda v: 2 * v)}, default_zero=True)
    assert evaluate_qn(oracle, 1.5, 0) == pytest.approx(3.0)


def test_qn_reports_missing_partials():
    oracle = PartialsOracle({(0, 0): _const(1.0)})
    with pytest.raises(OracleGap):
        evaluate_qn(oracle, 0.0, 1)


def test_hypothesis_search():
    additive = PartialsOracle({(0, 0): (lambda v: v, lambda v: 1.0), (0, 1): _const(1.0)}, default_zero=True)
    found = check_nondegeneracy_hypothesis(additive, [0.25, 1.0], n_max=2)
    assert found.holds and found.witness == (0, 0.25)

    no_delay = PartialsOracle({(0, 1): _const(1.0)}, default_zero=True)
    missing = check_nondegeneracy_hypothesis(no_delay, [0.0, 1.0], n_max=3)
    assert not missing.holds and missing.witness is None
    assert missing.to_dict()["exhaustive"] is False

    cubic = PartialsOracle({(0, 0): (lambda v: v ** 3, lambda v: 3 * v * v), (0, 1): _const(1.0)},
                           default_zero=True)
    assert not check_nondegeneracy_hypothesis(cubic, [0.0], n_max=0).holds
    hit = check_nondegeneracy_hypothesis(cubic, [1.0], n_max=0)
    assert hit.holds and hit.witness == (0, 1.0)

    with pytest.raises(ValueError):
        check_nondegeneracy_hypothesis(cubic, [], n_max=1)


def test_eta_order_condition():
    assert eta_order_condition(ts.sin_jet(0.0, 5)).m == 0
    cubic = eta_order_condition(ts.from_coeffs([0.0, 0.0, 0.0, 2.0]))
    assert (cubic.first_nonzero, cubic.m, cubic.admissible) == (3, 1, True)
    assert not eta_order_condition(ts.from_coeffs([0.0, 0.0, 1.0])).admissible
    with pytest.raises(JetTooShort):
        eta_order_condition(ts.from_coeffs([1.0, 0.0, 0.0]))

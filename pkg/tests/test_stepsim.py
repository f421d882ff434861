"""Tests for the method-of-steps construction of smooth solutions at an expansive point."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from shiftlab.core import series as ts
from shiftlab.core.pantograph import PantographForm
from shiftlab.core.stepsim import (
    InitialData,
    Layer,
    StepSolution,
    _limits,
    coefficient_bound,
    gronwall_check,
    integrate_inward,
    jet_comparison,
    kernel_direction,
    match_initial,
    quadrant_test,
)
from shiftlab.errors import DepthTooSmall, JetRadiusExceeded, NotExpansive

TAU = 0.2


@pytest.fixture(scope="module")
def simple_form():
    return PantographForm.constant(1.0, 1.0, 2.0, 30)


@pytest.fixture(scope="module")
def matched(simple_form):
    return match_initial(simple_form, TAU, 1.0, depth=40, steps_per_layer=256)


@pytest.fixture(scope="module")
def mild_matched():
    form = PantographForm.constant(0.5, 0.25, 1.5, 30)
    return form, match_initial(form, TAU, 1.0, depth=40, steps_per_layer=256)


def test_initial_data_validation():
    with pytest.raises(ValueError):
        InitialData.constant(0.0, 2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        InitialData.constant(TAU, 2.0, 1.0, 1.0, nodes=16)
    data = InitialData.constant(TAU, 2.0, -1.0, 3.0)
    assert data.sup_norm == 3.0
    assert data.t_plus[0] == pytest.approx(TAU / 2)


def test_zero_equation_carries_constants():
    form = PantographForm.constant(0.0, 0.0, 2.0, 4)
    sol = integrate_inward(form, InitialData.constant(TAU, 2.0, -0.7, 1.3), depth=10)
    assert sol.lambda_minus == pytest.approx(-0.7, abs=1e-14)
    assert sol.lambda_plus == pytest.approx(1.3, abs=1e-14)


@pytest.mark.parametrize("a0", [1.0, -2.5])
def test_instantaneous_term_gives_exponential_limits(a0):
    lam = 2.0
    form = PantographForm.constant(a0, 0.0, lam, 4)
    sol = integrate_inward(form, InitialData.constant(TAU, lam, 1.0, 1.0), depth=40)
    inner = TAU / abs(lam)
    assert sol.lambda_plus == pytest.approx(math.exp(-a0 * inner), rel=1e-8)
    assert sol.lambda_minus == pytest.approx(math.exp(a0 * inner), rel=1e-8)


def test_integration_guards():
    data = InitialData.constant(TAU, 2.0, 1.0, 1.0)
    with pytest.raises(NotExpansive):
        integrate_inward(PantographForm.constant(1.0, 1.0, 0.5, 4), data)
    with pytest.raises(ValueError):
        integrate_inward(PantographForm.constant(1.0, 1.0, 2.0, 4), data, depth=2)
    steep = PantographForm(ts.from_coeffs([1.0, 10.0]), ts.constant(1.0, 0.0, 1), ts.constant(0.0, 0.0, 1), 2.0)
    with pytest.raises(JetRadiusExceeded):
        integrate_inward(steep, data)


def test_shallow_depth_is_detected():
    form = PantographForm.constant(5.0, 0.0, 1.5, 4)
    with pytest.raises(DepthTooSmall):
        integrate_inward(form, InitialData.constant(1.0, 1.5, 1.0, 1.0), depth=3)


def test_coefficient_bound(simple_form):
    assert coefficient_bound(simple_form, TAU) == 1.0
    form = PantographForm(ts.from_coeffs([1.0, 2.0]), ts.from_coeffs([-3.0, 0.0]), ts.constant(0.0, 0.0, 1), 2.0)
    assert coefficient_bound(form, 0.5) == 3.0


def test_gronwall_bound(simple_form):
    zero = integrate_inward(simple_form, InitialData.constant(TAU, 2.0, 0.0, 0.0))
    assert gronwall_check(zero, 0.0)
    K = coefficient_bound(simple_form, TAU)
    for c_minus, c_plus in [(-1.0, 1.0), (1.0, 1.0), (1.0, -1.0)]:
        sol = integrate_inward(simple_form, InitialData.constant(TAU, 2.0, c_minus, c_plus))
        assert gronwall_check(sol, K)


def test_gronwall_rejects_a_fabricated_blowup():
    t = np.linspace(0.01, 0.05, 10)
    layer = Layer(1, 1, t, np.full(10, 1e6))
    fake = StepSolution(TAU, 2.0, [layer], 0.0, 1e6, 1.0, 0.0)
    assert not gronwall_check(fake, 1.0)


def test_quadrant_test_for_small_tau(simple_form):
    report = quadrant_test(simple_form, TAU)
    assert report.passed
    assert len(report.to_dict()["points"]) == 4


def test_homogeneous_match_is_zero(simple_form):
    result = match_initial(simple_form, TAU, 0.0, check_quadrants=False)
    assert result.c_minus == pytest.approx(0.0, abs=1e-14)
    assert result.c_plus == pytest.approx(0.0, abs=1e-14)


def test_matched_data_reach_y0(matched):
    assert matched.residual <= 1e-8
    assert matched.solution.lambda_minus == pytest.approx(1.0, abs=1e-8)
    assert matched.solution.lambda_plus == pytest.approx(1.0, abs=1e-8)
    # moving inward on the right, y' = y + y(2t) lowers positive data
    assert matched.c_plus > 1.0 and matched.c_minus > 0.0


def test_kernel_perturbation_leaves_the_limits(simple_form, matched):
    kern = kernel_direction(simple_form, TAU, depth=40, steps_per_layer=256)
    assert kern.sup_norm > 0.1
    perturbed = integrate_inward(simple_form, matched.data.combine(1.0, kern, 1.0), 40, 256)
    assert perturbed.lambda_minus == pytest.approx(matched.solution.lambda_minus, abs=1e-8)
    assert perturbed.lambda_plus == pytest.approx(matched.solution.lambda_plus, abs=1e-8)


def test_jets_agree_with_the_recursion(mild_matched):
    form, match = mild_matched
    rows = jet_comparison(match.solution, form, 1.0, n_max=3)
    assert [row.n for row in rows] == [0, 1, 2, 3]
    assert rows[1].recursion_coeff == pytest.approx(0.75)
    for row in rows:
        assert not row.noise_floor
        assert row.gap <= 1e-4


def test_jets_of_the_steeper_form(simple_form, matched):
    rows = jet_comparison(matched.solution, simple_form, 1.0, n_max=3)
    assert rows[0].recursion_coeff == 1.0
    assert rows[1].recursion_coeff == pytest.approx(2.0)
    assert not any(row.noise_floor for row in rows)
    assert rows[0].gap <= 1e-6


def test_jet_comparison_needs_enough_layers():
    form = PantographForm.constant(0.0, 0.0, 2.0, 4)
    sol = integrate_inward(form, InitialData.constant(TAU, 2.0, 1.0, 1.0), depth=6)
    with pytest.raises(DepthTooSmall):
        jet_comparison(sol, form, 1.0, n_max=3)


def test_affine_limits(simple_form):
    form = simple_form.with_gamma(ts.constant(0.5, 0.0, simple_form.order))
    first = InitialData.from_functions(TAU, 2.0, np.cos, lambda t: 1.0 + t ** 2)
    second = InitialData.constant(TAU, 2.0, -0.3, 0.8)
    lim_first = _limits(form, first, 40, 64)
    lim_second = _limits(form, second, 40, 64)
    for a in (0.25, 0.5, 2.0):
        mixed = _limits(form, first.combine(a, second, 1.0 - a), 40, 64)
        assert_allclose(mixed, a * lim_first + (1.0 - a) * lim_second, rtol=0, atol=1e-9)


def test_rk4_error_falls_sixteenfold_per_halving():
    a0, lam = 5.0, 2.0
    form = PantographForm.constant(a0, 0.0, lam, 4)
    data = InitialData.constant(TAU, lam, 1.0, 1.0)
    exact = math.exp(-a0 * TAU / lam)
    errors = [abs(integrate_inward(form, data, 40, steps).lambda_plus - exact) for steps in (4, 8, 16)]
    assert 12.0 < errors[0] / errors[1] < 20.0
    assert 12.0 < errors[1] / errors[2] < 20.0


def test_jet_comparison_order_cap(simple_form, matched):
    with pytest.raises(ValueError):
        jet_comparison(matched.solution, simple_form, 1.0, n_max=6)


def test_solution_rows_are_sorted(matched):
    rows = matched.solution.rows()
    times = [row[0] for row in rows]
    assert times == sorted(times)
    assert {row[2] for row in rows} >= {0, 1, 40}

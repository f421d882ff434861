"""
Koenigs linearization of a shift map at a non-neutral fixed point.

Finds the jet of sigma with sigma(t0) = t0, sigma'(t0) = 1 and
eta(sigma(t)) = sigma(t0 + lam (t - t0)). Two independent routes are
provided: order-by-order coefficient matching for any map with a Taylor jet,
and a fixed-point iteration on jets specific to the sine family.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..errors import JetTooShort, NeutralMultiplier, NoContraction, NotAFixedPoint
from . import series as ts
from .series import TruncatedSeries
from .shiftmap import NEUTRAL_BAND, ShiftMap, SineShift

logger = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-10
CONTRACTION_FACTOR = 0.9
DEFAULT_LAMBDA_FLOOR = 10.0


@dataclass(frozen=True)
class ConjugacyResult:
    """Jet of the linearizing conjugacy around t0."""

    sigma: TruncatedSeries
    lam: float
    residual: float

    @property
    def t0(self) -> float:
        return self.sigma.center

    @property
    def order(self) -> int:
        return self.sigma.order

    def to_dict(self) -> Dict[str, object]:
        return {
            "t0": self.t0,
            "lambda": self.lam,
            "order": self.order,
            "residual": self.residual,
            "sigma": [float(c) for c in self.sigma.coeffs],
        }


def _check_multiplier(lam: float) -> None:
    if lam == 0.0 or abs(abs(lam) - 1.0) <= NEUTRAL_BAND:
        raise NeutralMultiplier(f"multiplier {lam} is zero or within {NEUTRAL_BAND} of the unit circle")


def conjugacy_residual(sigma: TruncatedSeries, eta_jet: TruncatedSeries, lam: float) -> float:
    """max |coefficient| of eta(sigma(t)) - sigma(t0 + lam (t - t0))."""
    lhs = ts.compose(eta_jet, sigma)
    rhs = ts.scale_argument(sigma, lam)
    n = min(lhs.order, rhs.order) + 1
    return float(np.max(np.abs(lhs.coeffs[:n] - rhs.coeffs[:n])))


def koenigs_series(eta: ShiftMap, t0: float, N: int, lam: Optional[float] = None) -> ConjugacyResult:
    """
    Solve (lam^n - lam) sigma_n = [sum_k e_k u^k]_n order by order, where
    e_k is the jet of eta at t0 and u(s) = sigma(t0 + s) - t0.

    Args:
        eta: shift map with a Taylor jet at t0
        t0: fixed point
        N: truncation order (N >= 1)
        lam: multiplier; defaults to eta'(t0)

    Raises:
        NotAFixedPoint: eta(t0) != t0
        NeutralMultiplier: |lam| within 1e-9 of 1, or lam == 0
        JetTooShort: the map's jet at t0 is shorter than N
    """
    if N < 1:
        raise ValueError(f"order must be at least 1, got {N}")
    t0 = float(t0)
    drift = abs(float(eta.value(t0)) - t0)
    if drift > FIXED_POINT_TOL * max(1.0, abs(t0)):
        raise NotAFixedPoint(f"|eta(t0) - t0| = {drift:.3e} at t0={t0}")
    lam = float(eta.derivative(t0)) if lam is None else float(lam)
    _check_multiplier(lam)

    eta_jet = eta.taylor_jet(t0, N)
    if eta_jet.order < N:
        raise JetTooShort(f"map jet has order {eta_jet.order}, need {N}")
    e = eta_jet.coeffs

    n_idx = np.arange(2, N + 1, dtype=float)
    with np.errstate(over="ignore"):
        # inf for large n; the matching coefficient is then 0
        divisors = np.power(lam, n_idx) - lam
    bound = abs(lam) * abs(abs(lam) - 1.0)
    if divisors.size and np.min(np.abs(divisors)) < bound * (1.0 - 1e-12):
        raise NeutralMultiplier(f"divisor |lam^n - lam| fell below {bound:.3e}")

    u = np.zeros(N + 1)
    u[1] = 1.0
    # P[k, m] = coefficient of s^m in u(s)^k
    P = np.zeros((N + 1, N + 1))
    P[1, 1] = 1.0
    for n in range(2, N + 1):
        P[2:n + 1, n] = P[1:n, n - 1:0:-1] @ u[1:n]
        rhs = float(e[2:n + 1] @ P[2:n + 1, n])
        u[n] = rhs / divisors[n - 2]
        P[1, n] = u[n]

    coeffs = u.copy()
    coeffs[0] = t0
    sigma = TruncatedSeries(t0, coeffs)
    residual = conjugacy_residual(sigma, eta_jet, lam)
    logger.info(f"koenigs_series: t0={t0} lambda={lam} N={N} residual={residual:.3e}")
    return ConjugacyResult(sigma, lam, residual)


def verify_conjugacy(result: ConjugacyResult, eta: ShiftMap, tol: float) -> bool:
    eta_jet = eta.taylor_jet(result.t0, result.order)
    residual = conjugacy_residual(result.sigma, eta_jet, result.lam)
    ok = residual <= tol
    if not ok:
        logger.warning(f"conjugacy residual {residual:.3e} exceeds {tol:.1e}")
    return ok


def odd_symmetry_gap(result: ConjugacyResult) -> float:
    """max |sigma_n| over even n >= 2 (zero for an odd map at t0 = 0)."""
    even = result.sigma.coeffs[2::2]
    return float(np.max(np.abs(even))) if even.size else 0.0


def _sinc_minus_one_jet(order: int) -> TruncatedSeries:
    # g(u) = sin(u)/u - 1 = sum_{k>=1} (-1)^k u^(2k) / (2k+1)!
    inv_fact = ts.inv_factorials(order + 1)
    coeffs = np.zeros(order + 1)
    for k in range(1, order // 2 + 1):
        coeffs[2 * k] = (-1) ** k * inv_fact[2 * k + 1]
    return TruncatedSeries(0.0, coeffs)


def zeta_iteration(lam: float, N: int, iters: int = 60,
                   lam_floor: float = DEFAULT_LAMBDA_FLOOR) -> ConjugacyResult:
    """
    Conjugacy of the sine family eta(t) = t + (lam - 1) sin t at 0 by iterating

        zeta <- zeta(d t) + (1 - d)(1 + zeta(d t)) g(d t (1 + zeta(d t))),  d = 1/lam,

    on jets, with sigma(t) = t (1 + zeta(t)).

    Raises:
        ValueError: lam below lam_floor
        NoContraction: successive sweep changes stop shrinking by 0.9
    """
    if lam < lam_floor:
        raise ValueError(f"lambda {lam} below the floor {lam_floor}")
    if N < 1:
        raise ValueError(f"order must be at least 1, got {N}")
    d = 1.0 / lam
    m = N - 1
    g = _sinc_minus_one_jet(m)
    one = ts.constant(1.0, 0.0, m)
    zeta = ts.constant(0.0, 0.0, m)

    prev_change = None
    for sweep in range(1, iters + 1):
        zeta_d = ts.scale_argument(zeta, d)
        one_plus = ts.add(one, zeta_d)
        inner = TruncatedSeries(0.0, np.concatenate(([0.0], d * one_plus.coeffs[:-1])))
        correction = ts.mul(one_plus, ts.compose(g, inner))
        new = ts.linear_combine(1.0, zeta_d, 1.0 - d, correction)
        change = float(np.max(np.abs(new.coeffs - zeta.coeffs)))
        zeta = new
        logger.debug(f"zeta_iteration sweep {sweep}: change={change:.3e}")
        if change < 1e-15:
            break
        if prev_change is not None and sweep > 2 and change > CONTRACTION_FACTOR * prev_change:
            raise NoContraction(f"sweep {sweep} change {change:.3e} vs previous {prev_change:.3e}")
        prev_change = change

    coeffs = np.concatenate(([0.0, 1.0 + zeta.coeffs[0]], zeta.coeffs[1:]))
    sigma = TruncatedSeries(0.0, coeffs)
    residual = conjugacy_residual(sigma, SineShift(lam).taylor_jet(0.0, N), lam)
    logger.info(f"zeta_iteration: lambda={lam} N={N} residual={residual:.3e}")
    return ConjugacyResult(sigma, lam, residual)


def conjugacy_bounds(result: ConjugacyResult, t_samples=None) -> Dict[str, object]:
    """
    Check |sigma_n| <= 1/lam for n >= 2 and |sigma(t) - t| <= t^2/lam on samples.

    These bounds are expected for the sine family at large lam.
    """
    lam = abs(result.lam)
    if t_samples is None:
        t_samples = np.round(np.arange(1, 11) * 0.1, 12)
    coeff_ok = bool(np.all(np.abs(result.sigma.coeffs[2:]) <= 1.0 / lam))
    t = np.asarray(t_samples, dtype=float) + result.t0
    gap = np.abs(np.asarray(ts.evaluate(result.sigma, t)) - t)
    quad_ok = bool(np.all(gap <= (t - result.t0) ** 2 / lam))
    return {
        "coefficient_bound": coeff_ok,
        "quadratic_bound": quad_ok,
        "max_coefficient": float(np.max(np.abs(result.sigma.coeffs[2:]))) if result.order >= 2 else 0.0,
        "max_gap": float(np.max(gap)),
    }

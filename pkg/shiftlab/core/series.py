"""
Truncated power-series arithmetic.

A TruncatedSeries is the Taylor jet a_0 + a_1 (t - c) + ... + a_N (t - c)^N
of an analytic function at the center c. Every operation truncates at the
smallest order among its operands and never extrapolates beyond it.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Union

import numpy as np

from ..errors import CenterMismatch, CompositionMismatch, WindowTooLarge

logger = logging.getLogger(__name__)

CENTER_TOL = 1e-14
COMPOSE_TOL = 1e-12
MIN_WINDOW = 8


@dataclass(frozen=True)
class TruncatedSeries:
    """Finite Taylor jet of an analytic function at `center`."""

    center: float
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float).reshape(-1)
        if coeffs.size == 0:
            raise ValueError("a series needs at least the constant coefficient")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("series coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "center", float(self.center))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, n: int) -> float:
        return float(self.coeffs[n])

    def truncate(self, order: int) -> "TruncatedSeries":
        if order < 0:
            raise ValueError(f"order must be nonnegative, got {order}")
        return TruncatedSeries(self.center, self.coeffs[: order + 1])

    def recenter(self, center: float) -> "TruncatedSeries":
        """Same coefficients, relabelled to a new center (a shift of the variable)."""
        return TruncatedSeries(center, self.coeffs)

    def to_dict(self) -> Dict[str, object]:
        return {"center": self.center, "order": self.order, "coeffs": [float(c) for c in self.coeffs]}


def _check_centers(s1: TruncatedSeries, s2: TruncatedSeries) -> None:
    if abs(s1.center - s2.center) > CENTER_TOL:
        raise CenterMismatch(f"series centered at {s1.center!r} and {s2.center!r}")


def linear_combine(c1: float, s1: TruncatedSeries, c2: float, s2: TruncatedSeries) -> TruncatedSeries:
    """Coefficientwise c1*s1 + c2*s2 at the common truncation order."""
    _check_centers(s1, s2)
    n = min(s1.order, s2.order) + 1
    return TruncatedSeries(s1.center, c1 * s1.coeffs[:n] + c2 * s2.coeffs[:n])


def add(s1: TruncatedSeries, s2: TruncatedSeries) -> TruncatedSeries:
    return linear_combine(1.0, s1, 1.0, s2)


def scale(c: float, s: TruncatedSeries) -> TruncatedSeries:
    return TruncatedSeries(s.center, c * s.coeffs)


def _mul_coeffs(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(a[:n], b[:n])[:n]


def mul(s1: TruncatedSeries, s2: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated at the smaller order."""
    _check_centers(s1, s2)
    n = min(s1.order, s2.order) + 1
    return TruncatedSeries(s1.center, _mul_coeffs(s1.coeffs, s2.coeffs, n))


def compose(outer: TruncatedSeries, inner: TruncatedSeries) -> TruncatedSeries:
    """
    Taylor jet of outer(inner(t)) at inner.center.

    Args:
        outer: jet centered at c
        inner: jet whose value at its own center equals c

    Returns:
        Jet of the composition, order min(outer.order, inner.order)

    Raises:
        CompositionMismatch: inner does not map its center onto outer's center
    """
    scale_ = max(1.0, abs(outer.center))
    if abs(inner.coeffs[0] - outer.center) > COMPOSE_TOL * scale_:
        raise CompositionMismatch(
            f"inner value {inner.coeffs[0]!r} at its center does not match outer center {outer.center!r}"
        )
    n = min(outer.order, inner.order) + 1
    shifted = inner.coeffs[:n].copy()
    shifted[0] = 0.0

    nonzero = np.nonzero(outer.coeffs[:n])[0]
    top = int(nonzero[-1]) if nonzero.size else 0
    acc = np.zeros(n)
    acc[0] = outer.coeffs[top]
    for k in range(top - 1, -1, -1):
        acc = _mul_coeffs(acc, shifted, n)
        acc[0] += outer.coeffs[k]
    return TruncatedSeries(inner.center, acc)


def differentiate(s: TruncatedSeries) -> TruncatedSeries:
    if s.order == 0:
        return TruncatedSeries(s.center, [0.0])
    n = np.arange(1, s.order + 1)
    return TruncatedSeries(s.center, n * s.coeffs[1:])


def antiderivative(s: TruncatedSeries, value: float = 0.0) -> TruncatedSeries:
    """Jet of order order+1 whose derivative is s and whose constant term is `value`."""
    n = np.arange(1, s.order + 2)
    return TruncatedSeries(s.center, np.concatenate(([value], s.coeffs / n)))


def reciprocal(s: TruncatedSeries) -> TruncatedSeries:
    if s.coeffs[0] == 0.0:
        raise ZeroDivisionError("reciprocal of a series with vanishing constant term")
    a = s.coeffs
    b = np.zeros_like(a)
    b[0] = 1.0 / a[0]
    for n in range(1, a.size):
        b[n] = -b[0] * np.dot(a[1 : n + 1], b[n - 1 :: -1][:n])
    return TruncatedSeries(s.center, b)


def scale_argument(s: TruncatedSeries, c: float) -> TruncatedSeries:
    """Jet of t -> s(center + c (t - center))."""
    with np.errstate(over="ignore", invalid="ignore"):
        powers = np.power(float(c), np.arange(s.order + 1, dtype=float))
        coeffs = np.where(s.coeffs == 0.0, 0.0, s.coeffs * powers)
    return TruncatedSeries(s.center, coeffs)


def evaluate(s: TruncatedSeries, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Horner evaluation of the jet polynomial."""
    result = np.polyval(s.coeffs[::-1], np.asarray(t, dtype=float) - s.center)
    return float(result) if np.ndim(result) == 0 else result


def radius_estimate(s: TruncatedSeries, window: int) -> Dict[str, float]:
    """
    Root-test estimate of the radius of convergence.

    The limsup is approximated by the largest |a_n|^(1/n) over the last
    `window` indices; vanishing coefficients are skipped.

    Returns:
        {'limsup_estimate': float, 'radius_estimate': float (may be inf)}
    """
    if window < MIN_WINDOW:
        raise ValueError(f"window must be at least {MIN_WINDOW}, got {window}")
    if window > s.order:
        raise WindowTooLarge(f"window {window} exceeds series order {s.order}")

    idx = np.arange(s.order - window + 1, s.order + 1)
    mags = np.abs(s.coeffs[idx])
    nonzero = mags > 0.0
    if not np.any(nonzero):
        return {"limsup_estimate": 0.0, "radius_estimate": float("inf")}
    roots = np.exp(np.log(mags[nonzero]) / idx[nonzero])
    limsup = float(np.max(roots))
    logger.debug(f"radius_estimate: window={window} limsup={limsup:.6g}")
    return {"limsup_estimate": limsup, "radius_estimate": 1.0 / limsup}


# Standard jets

def identity(center: float, order: int) -> TruncatedSeries:
    coeffs = np.zeros(order + 1)
    coeffs[0] = center
    if order >= 1:
        coeffs[1] = 1.0
    return TruncatedSeries(center, coeffs)


def constant(value: float, center: float, order: int) -> TruncatedSeries:
    coeffs = np.zeros(order + 1)
    coeffs[0] = value
    return TruncatedSeries(center, coeffs)


def from_coeffs(coeffs: Sequence[float], center: float = 0.0) -> TruncatedSeries:
    return TruncatedSeries(center, np.asarray(coeffs, dtype=float))


def inv_factorials(order: int) -> np.ndarray:
    """1/n! for n = 0..order (underflows to 0 for large n)."""
    return np.concatenate(([1.0], np.cumprod(1.0 / np.arange(1, order + 1))))


def exp_jet(center: float, order: int) -> TruncatedSeries:
    return TruncatedSeries(center, np.exp(center) * inv_factorials(order))


def _quarter_turns(order: int):
    # exact cos(n pi/2), sin(n pi/2)
    n = np.arange(order + 1) % 4
    return np.array([1.0, 0.0, -1.0, 0.0])[n], np.array([0.0, 1.0, 0.0, -1.0])[n]


def sin_jet(center: float, order: int) -> TruncatedSeries:
    c, s = _quarter_turns(order)
    return TruncatedSeries(center, (np.sin(center) * c + np.cos(center) * s) * inv_factorials(order))


def cos_jet(center: float, order: int) -> TruncatedSeries:
    c, s = _quarter_turns(order)
    return TruncatedSeries(center, (np.cos(center) * c - np.sin(center) * s) * inv_factorials(order))

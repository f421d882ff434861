"""
Dynamics of the time-shift map t -> eta(t).

Locates fixed and periodic points, classifies them by their multiplier,
iterates orbits, estimates rotation numbers of circle-map lifts and carries
analyticity labels along orbits.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import bisect, brentq

from ..errors import (
    CaptureRadiusTooLarge,
    DomainEscape,
    InconclusiveBudget,
    JetTooShort,
    NoConvergence,
    NotContractive,
    NotMonotone,
    NotPeriodicLift,
)
from . import series as ts
from .series import TruncatedSeries

logger = logging.getLogger(__name__)

NEUTRAL_BAND = 1e-9
DEFAULT_GRID = 4096
BISECT_XTOL = 1e-8
ESCAPE_BOUND = 1e12


class FixedPointClass(str, Enum):
    """Classification of a fixed or periodic point by its multiplier."""
    CONTRACTIVE = "Contractive"
    EXPANSIVE = "Expansive"
    NEUTRAL = "Neutral"


class Label(str, Enum):
    ANALYTIC = "Analytic"
    NONANALYTIC = "Nonanalytic"


def classify_multiplier(mu: float) -> FixedPointClass:
    if abs(mu) < 1.0 - NEUTRAL_BAND:
        return FixedPointClass.CONTRACTIVE
    if abs(mu) > 1.0 + NEUTRAL_BAND:
        return FixedPointClass.EXPANSIVE
    return FixedPointClass.NEUTRAL


class ShiftMap(ABC):
    """
    A time-shift eta with an evaluator contract.

    `value` and `derivative` accept scalars or numpy arrays; `taylor_jet`
    returns the Taylor jet of eta at a point.
    """

    domain: Tuple[float, float] = (-math.inf, math.inf)

    @abstractmethod
    def value(self, t):
        ...

    @abstractmethod
    def derivative(self, t):
        ...

    @abstractmethod
    def taylor_jet(self, center: float, order: int) -> TruncatedSeries:
        ...

    def __call__(self, t):
        return self.value(t)

    def describe(self) -> Dict[str, object]:
        return {"kind": type(self).__name__}


class Affine(ShiftMap):
    """eta(t) = t0 + lam (t - t0)."""

    def __init__(self, lam: float, t0: float = 0.0):
        self.lam = float(lam)
        self.t0 = float(t0)

    def value(self, t):
        return self.t0 + self.lam * (t - self.t0)

    def derivative(self, t):
        return self.lam + 0.0 * np.asarray(t, dtype=float)

    def taylor_jet(self, center: float, order: int) -> TruncatedSeries:
        coeffs = np.zeros(order + 1)
        coeffs[0] = self.value(center)
        if order >= 1:
            coeffs[1] = self.lam
        return TruncatedSeries(center, coeffs)

    def describe(self) -> Dict[str, object]:
        return {"kind": "Affine", "lambda": self.lam, "t0": self.t0}


class SineShift(ShiftMap):
    """eta(t) = t + (lam - 1) sin t + offset; offset a multiple of 2 pi selects the branch."""

    def __init__(self, lam: float, offset: float = 0.0):
        self.lam = float(lam)
        self.offset = float(offset)

    def value(self, t):
        return t + (self.lam - 1.0) * np.sin(t) + self.offset

    def derivative(self, t):
        return 1.0 + (self.lam - 1.0) * np.cos(t)

    def taylor_jet(self, center: float, order: int) -> TruncatedSeries:
        sine = ts.scale(self.lam - 1.0, ts.sin_jet(center, order))
        jet = ts.add(ts.identity(center, order), sine)
        coeffs = jet.coeffs.copy()
        coeffs[0] += self.offset
        return TruncatedSeries(center, coeffs)

    def describe(self) -> Dict[str, object]:
        return {"kind": "SineShift", "lambda": self.lam, "offset": self.offset}


class SeriesMap(ShiftMap):
    """A shift given by a polynomial jet, trusted within `radius` of its center."""

    def __init__(self, jet: TruncatedSeries, radius: float = math.inf):
        self.jet = jet
        self.radius = float(radius)
        self.domain = (jet.center - self.radius, jet.center + self.radius)
        self._poly = Polynomial(jet.coeffs)
        self._dpoly = self._poly.deriv()

    def _check(self, t):
        if np.any(np.abs(np.asarray(t) - self.jet.center) > self.radius):
            raise DomainEscape(f"argument outside the jet radius {self.radius} around {self.jet.center}")

    def value(self, t):
        self._check(t)
        return self._poly(np.asarray(t, dtype=float) - self.jet.center)

    def derivative(self, t):
        self._check(t)
        return self._dpoly(np.asarray(t, dtype=float) - self.jet.center)

    def taylor_jet(self, center: float, order: int) -> TruncatedSeries:
        if order > self.jet.order:
            raise JetTooShort(f"requested order {order}, jet has order {self.jet.order}")
        self._check(center)
        # re-expand the polynomial around the new center
        shifted = self._poly(Polynomial([center - self.jet.center, 1.0]))
        coeffs = np.zeros(order + 1)
        n = min(order + 1, shifted.coef.size)
        coeffs[:n] = shifted.coef[:n]
        return TruncatedSeries(center, coeffs)

    def describe(self) -> Dict[str, object]:
        return {"kind": "SeriesMap", "center": self.jet.center, "order": self.jet.order, "radius": self.radius}


class FunctionShift(ShiftMap):
    """A general shift given by numpy-aware callables."""

    def __init__(self, func: Callable, deriv: Callable,
                 jet_fn: Optional[Callable[[float, int], TruncatedSeries]] = None,
                 name: str = "FunctionShift"):
        self.func = func
        self.deriv = deriv
        self.jet_fn = jet_fn
        self.name = name

    def value(self, t):
        return self.func(t)

    def derivative(self, t):
        return self.deriv(t)

    def taylor_jet(self, center: float, order: int) -> TruncatedSeries:
        if self.jet_fn is None:
            raise JetTooShort(f"{self.name} provides no Taylor jets")
        return self.jet_fn(center, order)

    def describe(self) -> Dict[str, object]:
        return {"kind": "FunctionShift", "name": self.name}


def rigid_rotation(c: float) -> FunctionShift:
    """eta(t) = t + c."""
    def jet(center: float, order: int) -> TruncatedSeries:
        coeffs = ts.identity(center, order).coeffs.copy()
        coeffs[0] += c
        return TruncatedSeries(center, coeffs)

    return FunctionShift(lambda t: t + c, lambda t: 1.0 + 0.0 * np.asarray(t, dtype=float),
                         jet, name=f"rotation({c})")


def conjugate_by_shift(eta: ShiftMap, a: float) -> FunctionShift:
    """s -> eta(s + a) - a."""
    return FunctionShift(lambda s: eta.value(s + a) - a, lambda s: eta.derivative(s + a),
                         name=f"shifted({a})")


@dataclass(frozen=True)
class FixedPointRecord:
    t_star: float
    period_M: int
    multiplier: float
    fp_class: FixedPointClass

    def to_dict(self) -> Dict[str, object]:
        return {
            "t_star": self.t_star,
            "period_M": self.period_M,
            "multiplier": self.multiplier,
            "class": self.fp_class.value,
        }


def iterate(eta: ShiftMap, t: float, n: int) -> float:
    """eta^n(t) by repeated evaluation."""
    if n < 0:
        raise ValueError(f"iteration count must be nonnegative, got {n}")
    lo, hi = eta.domain
    for k in range(n):
        t = float(eta.value(t))
        if not math.isfinite(t) or t < lo or t > hi:
            raise DomainEscape(f"orbit left the domain after {k + 1} steps (t={t})")
    return t


def multiplier(eta: ShiftMap, t: float, M: int) -> float:
    """Chain-rule derivative of eta^M at t."""
    mu = 1.0
    for _ in range(M):
        mu *= float(eta.derivative(t))
        t = float(eta.value(t))
    return mu


def _iterate_array(eta: ShiftMap, t: np.ndarray, M: int) -> np.ndarray:
    for _ in range(M):
        t = np.asarray(eta.value(t), dtype=float)
    return t


def _refine_root(eta: ShiftMap, M: int, lo: float, hi: float, tol: float) -> float:
    def h(s: float) -> float:
        return iterate(eta, s, M) - s

    t = bisect(h, lo, hi, xtol=BISECT_XTOL)
    for _ in range(50):
        r = h(t)
        if abs(r) <= tol:
            return t
        slope = multiplier(eta, t, M) - 1.0
        if slope == 0.0:
            break
        step = t - r / slope
        if not lo <= step <= hi:
            # Newton left the bracket; keep the bisection estimate
            break
        if step == t:
            break
        t = step
    if abs(h(t)) <= tol:
        return t
    raise NoConvergence(f"root refinement stalled at t={t} with residual {h(t):.3e}")


def find_fixed_points(eta: ShiftMap, interval: Sequence[float], M: int = 1,
                      tol: float = 1e-10, grid: int = DEFAULT_GRID) -> List[FixedPointRecord]:
    """
    Locate the roots of eta^M(t) - t on an interval.

    Sign changes on a uniform grid are bracketed, bisected to width 1e-8
    and polished by Newton steps that must stay inside the bracket.
    Tangential roots without a sign change are not detected.

    Args:
        eta: shift map, continuous on the interval
        interval: (a, b) with a < b
        M: period
        tol: required |eta^M(t) - t|
        grid: number of bracketing cells

    Returns:
        Records sorted by t_star, each with its chain-rule multiplier
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    if tol <= 0 or M < 1:
        raise ValueError("tol must be positive and M at least 1")

    nodes = np.linspace(a, b, grid + 1)
    g = _iterate_array(eta, nodes, M) - nodes
    if np.all(g == 0.0):
        raise NoConvergence("eta^M is the identity on the interval; fixed points are not isolated")

    roots: List[float] = [float(t) for t in nodes[g == 0.0]]
    for i in np.nonzero(g[:-1] * g[1:] < 0.0)[0]:
        roots.append(_refine_root(eta, M, float(nodes[i]), float(nodes[i + 1]), tol))

    records: List[FixedPointRecord] = []
    for t in sorted(roots):
        if records and abs(t - records[-1].t_star) <= 10 * BISECT_XTOL:
            continue
        mu = multiplier(eta, t, M)
        records.append(FixedPointRecord(t, M, mu, classify_multiplier(mu)))
    logger.info(f"find_fixed_points: {len(records)} point(s) of period {M} on [{a}, {b}]")
    return records


@dataclass(frozen=True)
class RotationEstimate:
    omega: float
    error_bar: float
    monotone: bool
    advisory: str

    def to_dict(self) -> Dict[str, object]:
        return {"omega": self.omega, "error_bar": self.error_bar,
                "monotone": self.monotone, "advisory": self.advisory}


ROTATION_ADVISORY = (
    "For a monotone periodic lift with irrational rotation number the solution is "
    "either analytic everywhere or nowhere; no algorithm decides which."
)


def rotation_number(eta: ShiftMap, period_p: float, t0: float = 0.0, n_iter: int = 10000,
                    check_monotone: bool = True, samples: int = 1024) -> RotationEstimate:
    """
    Estimate (eta^n(t0) - t0) / (n p) for a lift satisfying eta(t + p) = eta(t) + p.

    The error bar 1/n_iter holds for lifts of circle homeomorphisms. With
    check_monotone=False a non-monotone lift is accepted and the estimate is
    the orbit average from t0, flagged monotone=False.
    """
    if n_iter < 100:
        raise ValueError(f"n_iter must be at least 100, got {n_iter}")
    s = np.linspace(0.0, period_p, samples, endpoint=False)
    drift = np.abs(np.asarray(eta.value(s + period_p)) - np.asarray(eta.value(s)) - period_p)
    if np.max(drift) > 1e-10 * max(1.0, abs(period_p)):
        raise NotPeriodicLift(f"eta(t + p) - eta(t) - p reaches {np.max(drift):.3e}")

    monotone = bool(np.min(np.asarray(eta.derivative(s))) >= 0.0)
    if not monotone and check_monotone:
        raise NotMonotone("eta has negative derivative on one period")

    t = iterate(eta, t0, n_iter)
    omega = (t - t0) / (n_iter * period_p)
    logger.info(f"rotation_number: omega={omega:.12g} +/- {1.0 / n_iter:.1e}")
    return RotationEstimate(omega, 1.0 / n_iter, monotone, ROTATION_ADVISORY)


def basin_test(eta: ShiftMap, t: float, record: FixedPointRecord, max_iter: int,
               capture_radius: float, samples: int = 65) -> bool:
    """
    True when an iterate eta^{Mn}(t), n <= max_iter, enters the capture ball
    around the orbit of record.t_star.

    Raises:
        NotContractive: record is not contractive
        CaptureRadiusTooLarge: |(eta^M)'| < 1 fails somewhere on a capture ball
        InconclusiveBudget: neither captured nor diverged within max_iter
    """
    if record.fp_class is not FixedPointClass.CONTRACTIVE:
        raise NotContractive(f"record at {record.t_star} is {record.fp_class.value}")
    M = record.period_M
    orbit = [record.t_star]
    for _ in range(M - 1):
        orbit.append(float(eta.value(orbit[-1])))
    orbit_arr = np.array(orbit)

    for centre in orbit:
        for s in np.linspace(centre - capture_radius, centre + capture_radius, samples):
            if abs(multiplier(eta, float(s), M)) >= 1.0:
                raise CaptureRadiusTooLarge(f"|(eta^{M})'| >= 1 at {s} within {capture_radius} of {centre}")

    s = float(t)
    for _ in range(max_iter + 1):
        if np.min(np.abs(orbit_arr - s)) < capture_radius:
            return True
        try:
            s = iterate(eta, s, M)
        except DomainEscape:
            return False
        if abs(s) > ESCAPE_BOUND:
            return False
    raise InconclusiveBudget(f"orbit of {t} neither captured nor diverged within {max_iter} iterations")


@dataclass(frozen=True)
class LabeledPoint:
    k: int
    t: float
    label: Label


def _preimage(eta: ShiftMap, t: float) -> float:
    def h(s: float) -> float:
        return float(eta.value(s)) - t

    width = 1.0
    for _ in range(60):
        lo, hi = t - width, t + width
        if h(lo) * h(hi) <= 0.0:
            return float(brentq(h, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
        width *= 2.0
    raise DomainEscape(f"no preimage of {t} found")


def propagate_classification(eta: ShiftMap, seeds: Sequence[Tuple[float, Label]], n_steps: int,
                             monotone: bool = False) -> List[LabeledPoint]:
    """
    Carry analyticity labels along orbits.

    Forward iterates eta^k(t), 0 <= k <= n_steps, inherit the seed's label.
    With monotone=True (eta nondecreasing) the backward preimages
    eta^{-k}(t) inherit it too and are reported with negative k.
    """
    out: List[LabeledPoint] = []
    for t, label in seeds:
        label = Label(label)
        s = float(t)
        out.append(LabeledPoint(0, s, label))
        for k in range(1, n_steps + 1):
            s = iterate(eta, s, 1)
            out.append(LabeledPoint(k, s, label))
        if monotone:
            s = float(t)
            for k in range(1, n_steps + 1):
                s = _preimage(eta, s)
                out.append(LabeledPoint(-k, s, label))
    logger.debug(f"propagate_classification: {len(out)} labeled points from {len(seeds)} seed(s)")
    return out

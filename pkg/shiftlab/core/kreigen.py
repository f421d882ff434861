"""
Periodic integral eigenproblem

    kappa x(t) = integral_{t - r(t)}^{t} rho(s) x(s) ds

solved by power iteration on a trapezoid discretization, with the
accompanying bound checks and the conversion to the delay ODE

    kappa x'(t) = rho(t) x(t) - eta'(t) rho(eta(t)) x(eta(t)),  eta(t) = t - r(t) + 2 pi m.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from ..errors import BranchNotFixed, GridMismatch, NoConvergence, PositivityLost
from . import series as ts
from .pantograph import LocalLinearDDE
from .series import TruncatedSeries
from .shiftmap import FunctionShift, ShiftMap, SineShift

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MIN_GRID = 64
BRANCH_TOL = 1e-8


def _check_grid(G: int) -> None:
    if G < MIN_GRID or G & (G - 1):
        raise ValueError(f"grid size must be a power of two >= {MIN_GRID}, got {G}")


class PeriodicFunction:
    """Samples of a periodic function at t_j = j * period / G."""

    def __init__(self, samples, period: float = TWO_PI):
        samples = np.asarray(samples, dtype=float).reshape(-1)
        _check_grid(samples.size)
        if not np.all(np.isfinite(samples)):
            raise ValueError("periodic samples must be finite")
        self.samples = samples
        self.period = float(period)

    @property
    def G(self) -> int:
        return self.samples.size

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.G) * (self.period / self.G)

    def __call__(self, t):
        return np.interp(t, self.nodes, self.samples, period=self.period)

    def jet(self, center: float, order: int) -> TruncatedSeries:
        """Taylor jet from spectral differentiation of the samples."""
        spectrum = np.fft.fft(self.samples)
        omega = TWO_PI * np.fft.fftfreq(self.G, d=self.period / self.G)
        if self.G % 2 == 0:
            spectrum[self.G // 2] = 0.0
        phase = spectrum * np.exp(1j * omega * center) / self.G
        inv_fact = ts.inv_factorials(order)
        coeffs = np.array([np.real(np.sum(phase * (1j * omega) ** k)) for k in range(order + 1)]) * inv_fact
        return TruncatedSeries(center, coeffs)

    def sample(self, G: int) -> "PeriodicFunction":
        if G != self.G:
            raise GridMismatch(f"sampled function has G={self.G}, requested {G}")
        return self


class ConstantFunction:
    def __init__(self, value: float, period: float = TWO_PI):
        self.value = float(value)
        self.period = float(period)

    def __call__(self, t):
        return self.value + 0.0 * np.asarray(t, dtype=float)

    def jet(self, center: float, order: int) -> TruncatedSeries:
        return ts.constant(self.value, center, order)

    def sample(self, G: int) -> PeriodicFunction:
        return PeriodicFunction(np.full(G, self.value), self.period)


class SineDelay:
    """r(t) = -(lam - 1) sin t + 2 pi m."""

    def __init__(self, lam: float, m: int):
        self.lam = float(lam)
        self.m = int(m)
        self.period = TWO_PI

    def __call__(self, t):
        return -(self.lam - 1.0) * np.sin(t) + TWO_PI * self.m

    def jet(self, center: float, order: int) -> TruncatedSeries:
        out = ts.scale(-(self.lam - 1.0), ts.sin_jet(center, order))
        coeffs = out.coeffs.copy()
        coeffs[0] += TWO_PI * self.m
        return TruncatedSeries(center, coeffs)

    def sample(self, G: int) -> PeriodicFunction:
        return PeriodicFunction(self(np.arange(G) * (TWO_PI / G)), TWO_PI)


class ReciprocalSineDelay:
    """rho(t) = 1 / r(t) for the sine delay."""

    def __init__(self, lam: float, m: int):
        self.delay = SineDelay(lam, m)
        self.period = TWO_PI

    def __call__(self, t):
        return 1.0 / self.delay(t)

    def jet(self, center: float, order: int) -> TruncatedSeries:
        return ts.reciprocal(self.delay.jet(center, order))

    def sample(self, G: int) -> PeriodicFunction:
        return PeriodicFunction(self(np.arange(G) * (TWO_PI / G)), TWO_PI)


Coefficient = Union[PeriodicFunction, ConstantFunction, SineDelay, ReciprocalSineDelay]


@dataclass(frozen=True)
class IntegralOperatorSpec:
    r: Coefficient
    rho: Coefficient
    period: float = TWO_PI

    def sampled(self, G: int):
        r = self.r.sample(G).samples
        rho = self.rho.sample(G).samples
        if np.min(r) <= 0.0:
            raise ValueError(f"delay r must be positive, min sample {np.min(r):.3e}")
        if np.min(rho) <= 0.0:
            raise ValueError(f"weight rho must be positive, min sample {np.min(rho):.3e}")
        return r, rho


def _periodic_antiderivative(f: np.ndarray, period: float, t: np.ndarray) -> np.ndarray:
    """Integral from 0 to t of the periodic piecewise-linear interpolant of f."""
    G = f.size
    h = period / G
    f_next = np.roll(f, -1)
    cells = 0.5 * h * (f + f_next)
    cumulative = np.concatenate(([0.0], np.cumsum(cells)))
    total = cumulative[-1]

    turns = np.floor(t / period)
    local = t - turns * period
    idx = np.minimum((local / h).astype(int), G - 1)
    theta = local / h - idx
    partial = h * (theta * f[idx] + 0.5 * theta ** 2 * (f_next[idx] - f[idx]))
    return turns * total + cumulative[idx] + partial


def _apply(r: np.ndarray, rho: np.ndarray, x: np.ndarray, period: float) -> np.ndarray:
    nodes = np.arange(x.size) * (period / x.size)
    f = rho * x
    return _periodic_antiderivative(f, period, nodes) - _periodic_antiderivative(f, period, nodes - r)


def apply_L(spec: IntegralOperatorSpec, x: PeriodicFunction) -> PeriodicFunction:
    """
    (Lx)(t_j) by composite trapezoid on [t_j - r(t_j), t_j] with the partial
    cell at the moving endpoint integrated from the linear interpolant.

    Raises:
        GridMismatch: a sampled coefficient lives on a different grid
    """
    r, rho = spec.sampled(x.G)
    return PeriodicFunction(_apply(r, rho, x.samples, spec.period), spec.period)


@dataclass(frozen=True)
class EigenResult:
    kappa: float
    x: PeriodicFunction
    residual: float
    bound_lo: float
    bound_hi: float
    iterations: int

    @property
    def G(self) -> int:
        return self.x.G

    def to_dict(self) -> Dict[str, object]:
        return {
            "kappa": self.kappa,
            "residual": self.residual,
            "bound_lo": self.bound_lo,
            "bound_hi": self.bound_hi,
            "G": self.G,
            "iterations": self.iterations,
        }


def window_integrals(spec: IntegralOperatorSpec, G: int) -> np.ndarray:
    """integral_{t_j - r(t_j)}^{t_j} rho(s) ds on the grid."""
    r, rho = spec.sampled(G)
    return _apply(r, rho, np.ones(G), spec.period)


def power_iteration(spec: IntegralOperatorSpec, G: int = 2048, tol: float = 1e-10,
                    max_iter: int = 20000, x0: Optional[np.ndarray] = None) -> EigenResult:
    """
    Dominant eigenpair of L by x <- Lx / ||Lx||_sup from a positive start.

    Convergence requires the relative change of kappa to stay below tol for
    three consecutive iterations and ||Lx - kappa x||_sup <= tol.

    Raises:
        NoConvergence: max_iter reached
        PositivityLost: an iterate has a nonpositive sample
    """
    _check_grid(G)
    r, rho = spec.sampled(G)
    x = np.ones(G) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.size != G:
        raise GridMismatch(f"initial guess has {x.size} samples, grid has {G}")
    if np.min(x) <= 0.0:
        raise ValueError("initial guess must be strictly positive")
    x /= np.max(x)

    kappa_prev = None
    streak = 0
    for it in range(1, max_iter + 1):
        y = _apply(r, rho, x, spec.period)
        if np.min(y) <= 0.0:
            raise PositivityLost(f"iterate {it} has a nonpositive sample {np.min(y):.3e}")
        kappa = float(np.max(y))
        residual = float(np.max(np.abs(y - kappa * x)))
        if kappa_prev is not None and abs(kappa - kappa_prev) <= tol * kappa:
            streak += 1
        else:
            streak = 0
        if streak >= 3 and residual <= tol:
            lo, hi = _bounds(spec, G)
            logger.info(f"power_iteration: kappa={kappa:.15g} residual={residual:.3e} after {it} iterations")
            return EigenResult(kappa, PeriodicFunction(x, spec.period), residual, lo, hi, it)
        kappa_prev = kappa
        x = y / kappa
        if it % 1000 == 0:
            logger.debug(f"power_iteration: iteration {it}, kappa={kappa:.12g}, residual={residual:.3e}")
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


def _bounds(spec: IntegralOperatorSpec, G: int):
    w = window_integrals(spec, G)
    return float(np.min(w)), float(np.max(w))


@dataclass(frozen=True)
class BoundsCheck:
    lo: float
    hi: float
    ok: bool

    def to_dict(self) -> Dict[str, object]:
        return {"lo": self.lo, "hi": self.hi, "ok": self.ok}


def verify_bounds(spec: IntegralOperatorSpec, result: EigenResult) -> BoundsCheck:
    """min_t and max_t of integral_{t - r(t)}^t rho must bracket kappa up to 10 P / G^2."""
    lo, hi = _bounds(spec, result.G)
    eps = 10.0 * spec.period / result.G ** 2
    ok = lo - eps <= result.kappa <= hi + eps
    if not ok:
        logger.warning(f"kappa={result.kappa} outside [{lo}, {hi}]")
    return BoundsCheck(lo, hi, ok)


def collatz_wielandt(spec: IntegralOperatorSpec, x: PeriodicFunction) -> Dict[str, float]:
    """min and max over the grid of (Lx)/x for a positive x."""
    if np.min(x.samples) <= 0.0:
        raise PositivityLost("Collatz-Wielandt quotients need a positive function")
    q = apply_L(spec, x).samples / x.samples
    return {"lower": float(np.min(q)), "upper": float(np.max(q))}


def delay_shift(spec: IntegralOperatorSpec, m_branch: int) -> ShiftMap:
    """eta(t) = t - r(t) + 2 pi m_branch."""
    r = spec.r
    if isinstance(r, SineDelay):
        return SineShift(r.lam, TWO_PI * (m_branch - r.m))

    def value(t):
        return t - r(t) + TWO_PI * m_branch

    def jet(center: float, order: int) -> TruncatedSeries:
        out = ts.linear_combine(1.0, ts.identity(center, order), -1.0, r.jet(center, order))
        coeffs = out.coeffs.copy()
        coeffs[0] += TWO_PI * m_branch
        return TruncatedSeries(center, coeffs)

    def deriv(t):
        t_arr = np.asarray(t, dtype=float)
        slopes = np.array([r.jet(float(s), 1).coeffs[1] for s in t_arr.reshape(-1)])
        out = 1.0 - slopes.reshape(t_arr.shape)
        return float(out) if out.ndim == 0 else out

    return FunctionShift(value, deriv, jet, name=f"delay_shift(m={m_branch})")


def to_ode_coefficients(spec: IntegralOperatorSpec, result: EigenResult, m_branch: int,
                        t0: float, order: int) -> LocalLinearDDE:
    """
    Jets at t0 of a = rho / kappa and b = -eta' rho(eta) / kappa, with h = 0.

    Raises:
        BranchNotFixed: eta(t0) != t0 within 1e-8 for this branch
    """
    if result.kappa == 0.0:
        raise ValueError("kappa must be nonzero")
    eta = delay_shift(spec, m_branch)
    drift = abs(float(eta.value(t0)) - t0)
    if drift > BRANCH_TOL:
        raise BranchNotFixed(f"eta(t0) - t0 = {drift:.3e} on branch m={m_branch}")

    eta_jet = eta.taylor_jet(t0, order + 1)
    coeffs = eta_jet.coeffs.copy()
    coeffs[0] = t0
    eta_jet = TruncatedSeries(t0, coeffs)

    rho_jet = spec.rho.jet(t0, order + 1)
    a = ts.scale(1.0 / result.kappa, rho_jet.truncate(order))
    b = ts.scale(-1.0 / result.kappa, ts.mul(ts.differentiate(eta_jet), ts.compose(rho_jet, eta_jet)))
    h = ts.constant(0.0, t0, order)
    logger.info(f"to_ode_coefficients: branch m={m_branch} t0={t0} order={order}")
    return LocalLinearDDE(a, b.truncate(order), h, eta, t0)

"""
Method-of-steps integration of y' = alpha y + beta y(lam t) + gamma toward
the expansive point 0 (|lam| > 1).

Data on I- = [-tau, -tau/|lam|] and I+ = [tau/|lam|, tau] determine y on the
layers +-[tau/|lam|^(k+1), tau/|lam|^k], k = 1, 2, ..., because lam t for t
in layer k lies in layer k - 1. The one-sided limits at 0 are affine maps of
the data; matching both to y0 yields C-infinity solutions through y(0) = y0.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import (
    DepthTooSmall,
    JetRadiusExceeded,
    NotExpansive,
    QuadrantTestFailed,
    SingularMatching,
)
from . import series as ts
from .pantograph import PantographForm, taylor_coefficients

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 40
DEFAULT_STEPS = 64
MIN_STEPS = 4
MIN_NODES = 64
TAIL_RATIO_LIMIT = 0.5
RICHARDSON_TOL = 1e-6
SINGULAR_TOL = 1e-10
JET_LEVELS = 1
JET_NOISE = 1e-13


@dataclass(frozen=True)
class InitialData:
    """Samples of phi on I- and I+ (ascending grids)."""

    tau: float
    t_minus: np.ndarray
    phi_minus: np.ndarray
    t_plus: np.ndarray
    phi_plus: np.ndarray

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        for name in ("t_minus", "phi_minus", "t_plus", "phi_plus"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.t_minus.size < MIN_NODES or self.t_plus.size < MIN_NODES:
            raise ValueError(f"initial data needs at least {MIN_NODES} nodes per side")
        if self.t_minus.shape != self.phi_minus.shape or self.t_plus.shape != self.phi_plus.shape:
            raise ValueError("grid and sample sizes differ")
        if not (np.all(np.isfinite(self.phi_minus)) and np.all(np.isfinite(self.phi_plus))):
            raise ValueError("initial data must be finite")

    @classmethod
    def from_functions(cls, tau: float, lam: float, f_minus: Callable, f_plus: Callable,
                       nodes: int = 65) -> "InitialData":
        inner = tau / abs(lam)
        t_minus = np.linspace(-tau, -inner, nodes)
        t_plus = np.linspace(inner, tau, nodes)
        return cls(tau, t_minus, np.asarray(f_minus(t_minus), dtype=float) * np.ones(nodes),
                   t_plus, np.asarray(f_plus(t_plus), dtype=float) * np.ones(nodes))

    @classmethod
    def constant(cls, tau: float, lam: float, c_minus: float, c_plus: float, nodes: int = 65) -> "InitialData":
        return cls.from_functions(tau, lam, lambda t: c_minus, lambda t: c_plus, nodes)

    def combine(self, a: float, other: "InitialData", b: float) -> "InitialData":
        """a * self + b * other on the shared grids."""
        if not (np.array_equal(self.t_minus, other.t_minus) and np.array_equal(self.t_plus, other.t_plus)):
            raise ValueError("initial data live on different grids")
        return InitialData(self.tau, self.t_minus, a * self.phi_minus + b * other.phi_minus,
                           self.t_plus, a * self.phi_plus + b * other.phi_plus)

    @property
    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(self.phi_minus)), np.max(np.abs(self.phi_plus))))

    def check_intervals(self, lam: float) -> None:
        inner = self.tau / abs(lam)
        ends = (self.t_minus[0] + self.tau, self.t_minus[-1] + inner,
                self.t_plus[0] - inner, self.t_plus[-1] - self.tau)
        if max(abs(e) for e in ends) > 1e-12 * max(1.0, self.tau):
            raise ValueError("initial grids do not cover [-tau, -tau/|lam|] and [tau/|lam|, tau]")


@dataclass(frozen=True)
class Layer:
    k: int
    side: int
    t: np.ndarray
    y: np.ndarray


@dataclass
class StepSolution:
    tau: float
    lam: float
    layers: List[Layer]
    lambda_minus: float
    lambda_plus: float
    sup_norm_phi: float
    richardson_gap: float
    boundary_slope_mismatch: Dict[str, float] = field(default_factory=dict)
    data: Optional[InitialData] = None

    def rows(self) -> List[Tuple[float, float, int]]:
        out: List[Tuple[float, float, int]] = []
        if self.data is not None:
            out += [(float(t), float(y), 0) for t, y in zip(self.data.t_minus, self.data.phi_minus)]
            out += [(float(t), float(y), 0) for t, y in zip(self.data.t_plus, self.data.phi_plus)]
        for layer in self.layers:
            out += [(float(t), float(y), layer.k) for t, y in zip(layer.t, layer.y)]
        return sorted(out, key=lambda row: row[0])

    def samples(self) -> Tuple[np.ndarray, np.ndarray]:
        t = np.concatenate([layer.t for layer in self.layers])
        y = np.concatenate([layer.y for layer in self.layers])
        return t, y

    def endpoint_values(self, side: int) -> np.ndarray:
        return np.array([layer.y[-1] for layer in self.layers if layer.side == side])


def coefficient_bound(form: PantographForm, tau: float) -> float:
    """K = max over alpha, beta, gamma of sum |c_n| tau^n."""
    powers = tau ** np.arange(form.order + 1)
    return float(max(np.sum(np.abs(s.coeffs[: form.order + 1]) * powers)
                     for s in (form.alpha, form.beta, form.gamma)))


def _check_jet_radius(form: PantographForm, tau: float) -> None:
    for name, s in (("alpha", form.alpha), ("beta", form.beta), ("gamma", form.gamma)):
        terms = np.abs(s.coeffs) * tau ** np.arange(s.order + 1)
        peak = np.max(terms)
        if peak > 0.0 and s.order > 0 and terms[-1] / peak >= TAIL_RATIO_LIMIT:
            raise JetRadiusExceeded(f"{name} jet tail ratio {terms[-1] / peak:.3f} at tau={tau}")


def _richardson(values: np.ndarray, rho: float) -> Tuple[float, float]:
    est = (values[-1] - rho * values[-2]) / (1.0 - rho)
    prev = (values[-2] - rho * values[-3]) / (1.0 - rho)
    return float(est), float(abs(est - prev))


def integrate_inward(form: PantographForm, data: InitialData, depth: int = DEFAULT_DEPTH,
                     steps_per_layer: int = DEFAULT_STEPS) -> StepSolution:
    """
    Layer-by-layer RK4 integration toward 0 on both sides.

    y(lam t) on layer k is read from layer k - 1 (or the data) through a
    cubic spline. The limits at 0 are Richardson-extrapolated from the last
    two layer endpoints with ratio 1/|lam|.

    Raises:
        NotExpansive: |lam| <= 1
        JetRadiusExceeded: tau outside the accuracy radius of a coefficient jet
        DepthTooSmall: the two last Richardson estimates differ by more than 1e-6
    """
    lam = form.lam
    if abs(lam) <= 1.0:
        raise NotExpansive(f"|lambda| = {abs(lam)} <= 1")
    if depth < 3:
        raise ValueError("depth must be at least 3")
    if steps_per_layer < MIN_STEPS:
        raise ValueError(f"steps_per_layer must be at least {MIN_STEPS}")
    tau = data.tau
    data.check_intervals(lam)
    _check_jet_radius(form, tau)

    alpha = lambda t: ts.evaluate(form.alpha, t)
    beta = lambda t: ts.evaluate(form.beta, t)
    gamma = lambda t: ts.evaluate(form.gamma, t)
    rate = 1.0 / abs(lam)
    n = steps_per_layer

    splines = {1: CubicSpline(data.t_plus, data.phi_plus), -1: CubicSpline(data.t_minus, data.phi_minus)}
    start = {1: float(data.phi_plus[0]), -1: float(data.phi_minus[-1])}
    layers: List[Layer] = []

    for k in range(1, depth + 1):
        new_splines = {}
        for side in (1, -1):
            outer = side * tau * rate ** k
            inner = side * tau * rate ** (k + 1)
            nodes = np.linspace(outer, inner, n + 1)
            h = (inner - outer) / n
            mids = nodes[:-1] + 0.5 * h
            source = splines[side if lam > 0 else -side]
            g_nodes = beta(nodes) * source(lam * nodes) + gamma(nodes)
            g_mids = beta(mids) * source(lam * mids) + gamma(mids)
            a_nodes, a_mids = alpha(nodes), alpha(mids)

            y = np.empty(n + 1)
            y[0] = start[side]
            for i in range(n):
                k1 = a_nodes[i] * y[i] + g_nodes[i]
                k2 = a_mids[i] * (y[i] + 0.5 * h * k1) + g_mids[i]
                k3 = a_mids[i] * (y[i] + 0.5 * h * k2) + g_mids[i]
                k4 = a_nodes[i + 1] * (y[i] + h * k3) + g_nodes[i + 1]
                y[i + 1] = y[i] + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            layers.append(Layer(k, side, nodes, y))
            start[side] = float(y[-1])
            new_splines[side] = CubicSpline(nodes[::-1], y[::-1]) if side == 1 else CubicSpline(nodes, y)
        splines = new_splines

    limits = {}
    gaps = []
    for side in (1, -1):
        ends = np.array([layer.y[-1] for layer in layers if layer.side == side])
        limits[side], gap = _richardson(ends, rate)
        gaps.append(gap / max(1.0, abs(limits[side])))
    gap = max(gaps)
    if gap > RICHARDSON_TOL:
        raise DepthTooSmall(f"Richardson estimates disagree by {gap:.3e} at depth {depth}")

    mismatch = _boundary_slopes(form, data, layers)
    logger.debug(f"integrate_inward: Lambda-={limits[-1]:.12g} Lambda+={limits[1]:.12g} gap={gap:.2e}")
    return StepSolution(tau, lam, layers, limits[-1], limits[1], data.sup_norm, gap, mismatch, data)


def _boundary_slopes(form: PantographForm, data: InitialData, layers: List[Layer]) -> Dict[str, float]:
    """|phi' - y'| at +-tau/|lam| where the first layer meets the data."""
    out = {}
    for side, key in ((1, "plus"), (-1, "minus")):
        layer = next(layer for layer in layers if layer.k == 1 and layer.side == side)
        t = float(layer.t[0])
        h = layer.t[1] - layer.t[0]
        y_slope = (-3 * layer.y[0] + 4 * layer.y[1] - layer.y[2]) / (2 * h)
        grid, phi = (data.t_plus, data.phi_plus) if side == 1 else (data.t_minus, data.phi_minus)
        phi_slope = float(CubicSpline(grid, phi)(t, 1))
        out[key] = float(abs(phi_slope - y_slope))
    return out


def gronwall_check(solution: StepSolution, K: float) -> bool:
    """
    |y(t)| <= (||phi|| + K tau/|lam|) exp(2K (tau/|lam| - |t|)) on every sample with |t| <= tau/|lam|.
    """
    inner = solution.tau / abs(solution.lam)
    t, y = solution.samples()
    bound = (solution.sup_norm_phi + K * inner) * np.exp(2.0 * K * (inner - np.abs(t)))
    ok = bool(np.all(np.abs(y) <= bound * (1.0 + 1e-12)))
    if not ok:
        logger.warning("Gronwall bound violated")
    return ok


def _limits(form: PantographForm, data: InitialData, depth: int, steps: int) -> np.ndarray:
    sol = integrate_inward(form, data, depth, steps)
    return np.array([sol.lambda_minus, sol.lambda_plus])


@dataclass(frozen=True)
class QuadrantReport:
    points: Dict[Tuple[int, int], Tuple[float, float]]
    passed: bool

    def to_dict(self) -> Dict[str, object]:
        return {"passed": self.passed,
                "points": [{"c_minus": c[0], "c_plus": c[1], "lambda_minus": p[0], "lambda_plus": p[1]}
                           for c, p in sorted(self.points.items())]}


def quadrant_test(form: PantographForm, tau: float, depth: int = DEFAULT_DEPTH,
                  steps_per_layer: int = DEFAULT_STEPS) -> QuadrantReport:
    """Lambda of the four corner data (c-, c+) in {-1, 1}^2 must land in the matching open quadrants."""
    points = {}
    passed = True
    for c_minus in (-1, 1):
        for c_plus in (-1, 1):
            data = InitialData.constant(tau, form.lam, c_minus, c_plus)
            lm, lp = _limits(form, data, depth, steps_per_layer)
            points[(c_minus, c_plus)] = (float(lm), float(lp))
            passed &= lm * c_minus > 0 and lp * c_plus > 0
    logger.info(f"quadrant_test: tau={tau} passed={passed}")
    return QuadrantReport(points, bool(passed))


@dataclass
class MatchResult:
    data: InitialData
    residual: float
    c_minus: float
    c_plus: float
    solution: StepSolution
    linear_part: np.ndarray
    offset: np.ndarray

    def to_dict(self) -> Dict[str, object]:
        return {
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "residual": self.residual,
            "lambda_minus": self.solution.lambda_minus,
            "lambda_plus": self.solution.lambda_plus,
        }


def _affine_parts(form: PantographForm, tau: float, depth: int, steps: int):
    zero = _limits(form, InitialData.constant(tau, form.lam, 0.0, 0.0), depth, steps)
    e_minus = _limits(form, InitialData.constant(tau, form.lam, 1.0, 0.0), depth, steps) - zero
    e_plus = _limits(form, InitialData.constant(tau, form.lam, 0.0, 1.0), depth, steps) - zero
    return np.column_stack([e_minus, e_plus]), zero


def match_initial(form: PantographForm, tau: float, y0: float, depth: int = DEFAULT_DEPTH,
                  steps_per_layer: int = DEFAULT_STEPS, check_quadrants: bool = True) -> MatchResult:
    """
    Constant data (c-, c+) with Lambda-(c) = Lambda+(c) = y0.

    Raises:
        QuadrantTestFailed: tau too large for the corner test
        SingularMatching: the 2x2 linear part is singular
    """
    if check_quadrants and not quadrant_test(form, tau, depth, steps_per_layer).passed:
        raise QuadrantTestFailed(f"corner data do not reach all four quadrants at tau={tau}")
    M, offset = _affine_parts(form, tau, depth, steps_per_layer)
    if abs(np.linalg.det(M)) < SINGULAR_TOL:
        raise SingularMatching(f"linear part has determinant {np.linalg.det(M):.3e}")
    c = np.linalg.solve(M, np.array([y0, y0]) - offset)
    data = InitialData.constant(tau, form.lam, float(c[0]), float(c[1]))
    sol = integrate_inward(form, data, depth, steps_per_layer)
    residual = abs(sol.lambda_minus - y0) + abs(sol.lambda_plus - y0)
    logger.info(f"match_initial: c-={c[0]:.12g} c+={c[1]:.12g} residual={residual:.3e}")
    return MatchResult(data, residual, float(c[0]), float(c[1]), sol, M, offset)


def kernel_direction(form: PantographForm, tau: float,
                     bump: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                     depth: int = DEFAULT_DEPTH, steps_per_layer: int = DEFAULT_STEPS) -> InitialData:
    """
    Project smooth data onto the kernel of the linear part of Lambda by
    subtracting a combination of the side indicators.
    """
    if bump is None:
        bump = lambda t: np.sin(3.0 * t / tau) + (t / tau) ** 2
    M, offset = _affine_parts(form, tau, depth, steps_per_layer)
    psi = InitialData.from_functions(tau, form.lam, bump, bump)
    image = _limits(form, psi, depth, steps_per_layer) - offset
    c = np.linalg.solve(M, image)
    correction = InitialData.constant(tau, form.lam, float(c[0]), float(c[1]))
    return psi.combine(1.0, correction, -1.0)


@dataclass(frozen=True)
class JetRow:
    n: int
    fd_coeff: float
    recursion_coeff: float
    gap: float
    noise_floor: bool

    def to_dict(self) -> Dict[str, object]:
        return {"n": self.n, "fd_coeff": self.fd_coeff, "recursion_coeff": self.recursion_coeff,
                "gap": self.gap, "noise_floor": self.noise_floor}


def _stencil_weights(rate: float, degree: int) -> np.ndarray:
    """Row n maps values at u = rate**i, i = 0..degree, to the u**n coefficient of the interpolant."""
    nodes = rate ** np.arange(degree + 1)
    return np.linalg.inv(np.vander(nodes, degree + 1, increasing=True))


def _one_sided_jet(ends: np.ndarray, tau: float, rate: float, side: int, n_max: int,
                   levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Taylor coefficients at 0 from the layer endpoint values of one side.

    Window K uses the endpoints at tau * rate**(K + 2 + i), i = 0..n_max + 1.
    The stencil error of coefficient n is a power series in the window size
    starting at order n_max + 2 - n, so estimates of nested windows are
    Richardson-combined. Per coefficient the window with the smallest
    last correction plus noise estimate wins.
    """
    degree = n_max + 1
    weights = _stencil_weights(rate, degree)
    count = len(ends) - degree
    if count < levels + 2:
        raise DepthTooSmall(f"{len(ends)} layers are too few for jets of order {n_max}")
    scale = np.asarray([side * tau * rate ** (K + 2) for K in range(count)])
    raw = np.stack([weights @ ends[K:K + degree + 1] for K in range(count)], axis=1)
    eps = JET_NOISE * max(1.0, float(np.max(np.abs(ends))))

    coeffs, noise = np.empty(n_max + 1), np.empty(n_max + 1)
    for n in range(n_max + 1):
        est = raw[n] / scale ** n
        err = eps * np.sum(np.abs(weights[n])) / np.abs(scale) ** n
        corr = np.zeros_like(est)
        for j in range(levels):
            rho = rate ** (degree + 1 - n + j)
            corr = np.abs(rho * (est[1:] - est[:-1]) / (1.0 - rho))
            est = (est[1:] - rho * est[:-1]) / (1.0 - rho)
            err = (err[1:] + rho * err[:-1]) / (1.0 - rho)
        # the outermost window straddles the low-order interface jumps
        pick = 1 + int(np.argmin((corr + err)[1:]))
        coeffs[n], noise[n] = est[pick], err[pick]
    return coeffs, noise


def jet_comparison(solution: StepSolution, form: PantographForm, y0: float, n_max: int = 3,
                   levels: int = JET_LEVELS) -> List[JetRow]:
    """
    Taylor coefficients at 0 of the computed solution against the recursion
    coefficients.

    Each side gets one-sided interpolation stencils through the layer
    endpoints, refined by Richardson extrapolation over nested windows with
    ratio 1/|lam|; the two sides are averaged. A row is flagged as noise
    floor when the rounding error carried by the stencil weights reaches the
    size of the coefficient itself.
    """
    if n_max > 5:
        raise ValueError("n_max must be at most 5")
    if levels < 1:
        raise ValueError("levels must be at least 1")
    rate = 1.0 / abs(solution.lam)
    sides = [_one_sided_jet(solution.endpoint_values(side), solution.tau, rate, side, n_max, levels)
             for side in (-1, 1)]
    fd = 0.5 * (sides[0][0] + sides[1][0])
    noise = np.maximum(sides[0][1], sides[1][1])
    exact = taylor_coefficients(form, y0, n_max).coeffs

    rows = []
    for n in range(n_max + 1):
        gap = abs(fd[n] - exact[n])
        floor = bool(noise[n] >= abs(fd[n]))
        if floor:
            logger.warning(f"jet_comparison: coefficient {n} at the noise floor (noise {noise[n]:.2e})")
        rows.append(JetRow(n, float(fd[n]), float(exact[n]), float(gap), floor))
    return rows

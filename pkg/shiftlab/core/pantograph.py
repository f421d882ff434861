"""
Analyticity decision engine for the scalar linear equation

    x'(t) = a(t) x(t) + b(t) x(eta(t)) + h(t)

at a fixed point t0 of eta. The Koenigs conjugacy turns it into the
pantograph form y' = alpha y + beta y(lam t) + gamma, whose Taylor
coefficients y_n are rescaled into the bounded sequence w_n; a nonzero
limit w_inf rules out an analytic solution through y(0) = y0.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from ..errors import (
    CoefficientOverflow,
    DegenerateLeadingCoefficient,
    JetTooShort,
    NeutralMultiplier,
    NonConvergence,
    NotAFixedPoint,
    NotExpansive,
)
from . import series as ts
from .koenigs import ConjugacyResult, koenigs_series
from .series import TruncatedSeries
from .shiftmap import FixedPointClass, ShiftMap, classify_multiplier

logger = logging.getLogger(__name__)

OVERFLOW_LIMIT = 1e300
BETA0_FLOOR = 1e-12
W_TOL = 1e-12
DEFAULT_W_ORDER = 512
FIT_DEVIATION_LIMIT = math.log(1e4)


@dataclass(frozen=True)
class LocalLinearDDE:
    """Coefficient jets a, b, h at the fixed point t0 of eta."""

    a: TruncatedSeries
    b: TruncatedSeries
    h: TruncatedSeries
    eta: ShiftMap
    t0: float

    def __post_init__(self):
        for name in ("a", "b", "h"):
            center = getattr(self, name).center
            if abs(center - self.t0) > ts.CENTER_TOL:
                raise ValueError(f"coefficient {name} centered at {center}, expected {self.t0}")
        drift = abs(float(self.eta.value(self.t0)) - self.t0)
        if drift > 1e-10 * max(1.0, abs(self.t0)):
            raise NotAFixedPoint(f"|eta(t0) - t0| = {drift:.3e}")

    @property
    def multiplier(self) -> float:
        return float(self.eta.derivative(self.t0))

    @classmethod
    def constant(cls, a0: float, b0: float, eta: ShiftMap, t0: float, order: int,
                 h0: float = 0.0) -> "LocalLinearDDE":
        return cls(ts.constant(a0, t0, order), ts.constant(b0, t0, order),
                   ts.constant(h0, t0, order), eta, t0)


@dataclass(frozen=True)
class PantographForm:
    """y'(t) = alpha(t) y(t) + beta(t) y(lam t) + gamma(t), coefficient jets at 0."""

    alpha: TruncatedSeries
    beta: TruncatedSeries
    gamma: TruncatedSeries
    lam: float

    @property
    def order(self) -> int:
        return min(self.alpha.order, self.beta.order, self.gamma.order)

    @property
    def beta0(self) -> float:
        return float(self.beta.coeffs[0])

    @classmethod
    def constant(cls, a0: float, b0: float, lam: float, order: int, gamma0: float = 0.0) -> "PantographForm":
        return cls(ts.constant(a0, 0.0, order), ts.constant(b0, 0.0, order),
                   ts.constant(gamma0, 0.0, order), float(lam))

    def with_gamma(self, gamma: TruncatedSeries) -> "PantographForm":
        return PantographForm(self.alpha, self.beta, gamma, self.lam)

    def to_dict(self) -> Dict[str, object]:
        return {
            "lambda": self.lam,
            "order": self.order,
            "alpha": [float(c) for c in self.alpha.coeffs],
            "beta": [float(c) for c in self.beta.coeffs],
            "gamma": [float(c) for c in self.gamma.coeffs],
        }


def to_pantograph(dde: LocalLinearDDE, conj: ConjugacyResult, N: int) -> PantographForm:
    """
    alpha = sigma' (a o sigma), beta = sigma' (b o sigma), gamma = sigma' (h o sigma),
    truncated at N and recentered to 0.
    """
    if conj.order < N:
        raise JetTooShort(f"conjugacy of order {conj.order} cannot supply order {N}")
    if abs(conj.t0 - dde.t0) > ts.CENTER_TOL:
        raise ValueError(f"conjugacy centered at {conj.t0}, equation at {dde.t0}")
    sigma = conj.sigma
    dsigma = ts.differentiate(sigma)

    def transform(coef: TruncatedSeries) -> TruncatedSeries:
        out = ts.mul(dsigma, ts.compose(coef, sigma))
        return out.truncate(min(N, out.order)).recenter(0.0)

    form = PantographForm(transform(dde.a), transform(dde.b), transform(dde.h), conj.lam)
    logger.debug(f"to_pantograph: order {form.order}, beta0={form.beta0:.6g}")
    return form


def taylor_coefficients(form: PantographForm, y0: float, N: int) -> TruncatedSeries:
    """
    y_{n+1} = [sum_k alpha_{n-k} y_k + sum_k beta_{n-k} lam^k y_k + gamma_n] / (n + 1).

    Raises:
        CoefficientOverflow: some |y_n| exceeds 1e300
    """
    if form.order < N - 1:
        raise JetTooShort(f"form of order {form.order} cannot produce {N} coefficients")
    alpha, beta, gamma = form.alpha.coeffs, form.beta.coeffs, form.gamma.coeffs
    y = np.zeros(N + 1)
    y[0] = y0
    scaled = np.zeros(N + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        lam_pow = np.power(form.lam, np.arange(N + 1, dtype=float))
        for n in range(N):
            scaled[n] = lam_pow[n] * y[n] if y[n] != 0.0 else 0.0
            total = alpha[n::-1] @ y[: n + 1] + beta[n::-1] @ scaled[: n + 1] + gamma[n]
            y[n + 1] = total / (n + 1)
            if not math.isfinite(y[n + 1]) or abs(y[n + 1]) > OVERFLOW_LIMIT:
                raise CoefficientOverflow(f"|y_{n + 1}| exceeds {OVERFLOW_LIMIT:.0e}; use w_sequence")
    return TruncatedSeries(0.0, y)


def log_theta(k: np.ndarray, lam: float, beta0: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    (log|theta_k|, sign theta_k) for theta_k = k! / (lam^{k(k+1)/2} beta0^k).
    """
    k = np.asarray(k, dtype=float)
    tri = k * (k + 1) / 2
    log_mag = gammaln(k + 1) - tri * math.log(abs(lam)) - k * math.log(abs(beta0))
    sign = np.ones_like(k)
    if lam < 0:
        sign *= np.where(tri % 2 == 1, -1.0, 1.0)
    if beta0 < 0:
        sign *= np.where(k % 2 == 1, -1.0, 1.0)
    return log_mag, sign


def rescale_weights(n: np.ndarray, lam: float, beta0: float) -> Tuple[np.ndarray, np.ndarray]:
    """(log|c_n|, sign c_n) for the weights c_n = n! / (lam^{n(n-1)/2} beta0^n) with w_n = c_n y_n."""
    n = np.asarray(n, dtype=float)
    log_mag = gammaln(n + 1) - n * (n - 1) / 2 * math.log(abs(lam)) - n * math.log(abs(beta0))
    sign = np.ones_like(n)
    if lam < 0:
        sign *= np.where((n * (n - 1) / 2) % 2 == 1, -1.0, 1.0)
    if beta0 < 0:
        sign *= np.where(n % 2 == 1, -1.0, 1.0)
    return log_mag, sign


@dataclass
class WDiagnostics:
    """Rescaled coefficient sequence and its tail evidence."""

    w: np.ndarray
    lam: float
    beta0: float
    tol: float = W_TOL
    w_inf: float = field(init=False)
    tail_gap: float = field(init=False)
    converged: bool = field(init=False)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.w_inf = float(self.w[-1])
        self.tail_gap = tail_gap(self.w)
        self.converged = self.tail_gap <= self.tol * max(1.0, abs(self.w_inf))

    @property
    def N(self) -> int:
        return self.w.size - 1

    def rows(self) -> List[Tuple[int, float, float]]:
        delta = np.concatenate(([0.0], np.diff(self.w)))
        return [(n, float(wn), float(dn)) for n, (wn, dn) in enumerate(zip(self.w, delta))]

    def to_dict(self) -> Dict[str, object]:
        return {
            "w_inf": self.w_inf,
            "tail_gap": self.tail_gap,
            "converged": self.converged,
            "N": self.N,
            "lambda": self.lam,
            "beta0": self.beta0,
        }


def tail_gap(w: np.ndarray) -> float:
    """max |w_{n+1} - w_n| over the last quarter of the indices."""
    N = w.size - 1
    if N < 1:
        return 0.0
    start = min((3 * N) // 4, N - 1)
    return float(np.max(np.abs(np.diff(w[start:]))))


def _check_expansive(form: PantographForm) -> None:
    if abs(form.lam) <= 1.0:
        raise NotExpansive(f"|lambda| = {abs(form.lam)} <= 1")
    if abs(form.beta0) < BETA0_FLOOR:
        raise DegenerateLeadingCoefficient(f"|beta_0| = {abs(form.beta0):.3e} < {BETA0_FLOOR:.0e}")


def w_sequence(form: PantographForm, y0: float, N: int, tol: float = W_TOL) -> WDiagnostics:
    """
    w_0 = y0 and

        w_{n+1} = (1 + alpha_0 / (lam^n beta_0)) w_n
                  + (1/beta_0) sum_{k<n} (theta_n/theta_k)(beta_{n-k} + alpha_{n-k} lam^{-k}) w_k
                  + theta_n gamma_n / beta_0

    with the ratios theta_n/theta_k formed from log magnitudes.

    Raises:
        NotExpansive: |lam| <= 1
        DegenerateLeadingCoefficient: |beta_0| < 1e-12
    """
    _check_expansive(form)
    if form.order < N - 1:
        raise JetTooShort(f"form of order {form.order} cannot produce w_{N}")
    lam, beta0 = form.lam, form.beta0
    alpha, beta, gamma = form.alpha.coeffs, form.beta.coeffs, form.gamma.coeffs
    log_th, sign_th = log_theta(np.arange(N + 1), lam, beta0)
    with np.errstate(under="ignore"):
        inv_lam_pow = np.power(1.0 / lam, np.arange(N + 1, dtype=float))

    w = np.zeros(N + 1)
    w[0] = y0
    for n in range(N):
        nxt = (1.0 + alpha[0] * inv_lam_pow[n] / beta0) * w[n]
        if n > 0:
            k = np.arange(n)
            with np.errstate(under="ignore"):
                ratio = sign_th[n] * sign_th[:n] * np.exp(log_th[n] - log_th[:n])
            coupling = beta[n - k] + alpha[n - k] * inv_lam_pow[:n]
            nxt += float(np.sum(ratio * coupling * w[:n])) / beta0
        if gamma[n] != 0.0:
            nxt += sign_th[n] * math.exp(log_th[n]) * gamma[n] / beta0
        w[n + 1] = nxt
    diag = WDiagnostics(w, lam, beta0, tol)
    logger.debug(f"w_sequence: N={N} w_inf={diag.w_inf:.12g} tail_gap={diag.tail_gap:.3e}")
    return diag


def closed_form_oracle_simple(a0: float, b0: float, lam: float, x0: float, N: int) -> List[float]:
    """Running product w_n = x0 prod_{k<n} (1 + a0 / (lam^k b0)) for the constant-coefficient equation."""
    if b0 == 0.0 or abs(lam) <= 1.0:
        raise ValueError("the product formula needs b0 != 0 and |lam| > 1")
    out = [float(x0)]
    for k in range(N):
        out.append(out[-1] * (1.0 + a0 / (lam ** k * b0)))
    return out


@dataclass(frozen=True)
class WLimit:
    w_inf: float
    converged: bool
    N_used: int
    tail_gap: float
    diagnostics: WDiagnostics

    def to_dict(self) -> Dict[str, object]:
        return {"w_inf": self.w_inf, "converged": self.converged,
                "N_used": self.N_used, "tail_gap": self.tail_gap}


def w_infinity(form: PantographForm, y0: float, tol: float = W_TOL, N_max: Optional[int] = None,
               strict: bool = True, N_start: int = 64) -> WLimit:
    """
    Run w_sequence at N = 64, 128, ... until tail_gap <= tol max(1, |w_N|).

    The limit is reported as the last iterate; the tail gap is evidence,
    not a certified error bound.

    Raises:
        NonConvergence: N_max reached without meeting the tolerance (strict mode)
    """
    cap = form.order + 1 if N_max is None else min(N_max, form.order + 1)
    N = min(N_start, cap)
    while True:
        diag = w_sequence(form, y0, N, tol)
        if diag.converged:
            logger.info(f"w_infinity converged: w_inf={diag.w_inf:.15g} at N={N}")
            return WLimit(diag.w_inf, True, N, diag.tail_gap, diag)
        if N >= cap:
            break
        N = min(2 * N, cap)
    message = f"w-sequence not converged at N={N}: tail_gap={diag.tail_gap:.3e}"
    if strict:
        raise NonConvergence(message)
    logger.warning(message)
    return WLimit(diag.w_inf, False, N, diag.tail_gap, diag)


def w_infinity_decomposition(form: PantographForm, y0: float, tol: float = W_TOL,
                             N_max: Optional[int] = None) -> Dict[str, object]:
    """
    Split w_inf = w_hom * y0 + w_inh by linearity: w_hom from the homogeneous
    form with unit data, w_inh from the full form with zero data.
    """
    hom = w_infinity(form.with_gamma(ts.constant(0.0, 0.0, form.gamma.order)), 1.0, tol, N_max, strict=False)
    inh = w_infinity(form, 0.0, tol, N_max, strict=False)
    return {
        "w_hom": hom.w_inf,
        "w_inh": inh.w_inf,
        "w_inf": hom.w_inf * y0 + inh.w_inf,
        "converged": hom.converged and inh.converged,
        "inh_vanishes": abs(inh.w_inf) <= tol,
    }


@dataclass(frozen=True)
class Reconstruction:
    series: TruncatedSeries
    A: float
    nu: float
    plausible: bool
    radius: float
    max_deviation: float

    def to_dict(self) -> Dict[str, object]:
        return {"geometric_fit": {"A": self.A, "nu": self.nu}, "plausible": self.plausible,
                "radius_estimate": self.radius, "max_deviation": self.max_deviation}


def reconstruct_analytic(form: PantographForm, y0: float, N: int) -> Reconstruction:
    """
    Taylor coefficients plus a least-squares fit log|y_n| ~ log A + n log nu
    over the nonzero coefficients. The series is plausible when no
    coefficient sits more than a factor 1e4 above the fitted line and the
    root-test radius is positive.
    """
    y = taylor_coefficients(form, y0, N)
    n = np.nonzero(y.coeffs)[0]
    if n.size < 2:
        A = float(abs(y.coeffs[n[0]])) if n.size else 0.0
        return Reconstruction(y, A, 0.0, True, math.inf, 0.0)

    logs = np.log(np.abs(y.coeffs[n]))
    slope, intercept = np.polyfit(n.astype(float), logs, 1)
    deviation = float(np.max(logs - (intercept + slope * n)))
    if y.order >= ts.MIN_WINDOW:
        # root test over the upper half of the indices
        window = min(32, max(ts.MIN_WINDOW, y.order // 2))
        radius = ts.radius_estimate(y, window)["radius_estimate"]
    else:
        radius = math.inf
    plausible = deviation <= FIT_DEVIATION_LIMIT and radius > 0.0
    return Reconstruction(y, float(math.exp(intercept)), float(math.exp(slope)), plausible, radius, deviation)


class VerdictClass(str, Enum):
    ANALYTIC = "Analytic"
    NONANALYTIC = "Nonanalytic"
    ANALYTIC_CANDIDATE = "AnalyticCandidate"
    INCONCLUSIVE = "Inconclusive"


SHARED_JET_CAVEAT = (
    "Non-analytic C-infinity solutions with the same Taylor jet at the expansive point coexist "
    "with any analytic one."
)


@dataclass
class ClassifyOptions:
    N: int = DEFAULT_W_ORDER
    series_order: int = 30
    w_tol: float = W_TOL
    tol_zero: float = 1e-8
    tol_nonzero: float = 1e-6


@dataclass
class Verdict:
    verdict_class: VerdictClass
    multiplier: float
    fp_class: FixedPointClass
    w_inf: Optional[float] = None
    tail_gap: Optional[float] = None
    N_used: Optional[int] = None
    converged: Optional[bool] = None
    series: Optional[TruncatedSeries] = None
    w_diag: Optional[WDiagnostics] = None
    caveat: str = ""
    series_file: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "class": self.verdict_class.value,
            "multiplier": self.multiplier,
            "fixed_point_class": self.fp_class.value,
            "w_inf": self.w_inf,
            "tail_gap": self.tail_gap,
            "N_used": self.N_used,
            "converged": self.converged,
            "caveat": self.caveat,
            "series_file": self.series_file,
        }


def classify_point(dde: LocalLinearDDE, y0: float, options: Optional[ClassifyOptions] = None) -> Verdict:
    """
    Decide the analyticity class of the solution through y(t0) = y0.

    Contractive points give Analytic. At expansive points the verdict follows
    |w_inf|: above tol_nonzero max(1,|y0|) it is Nonanalytic, at most
    tol_zero max(1,|y0|) it is AnalyticCandidate, otherwise Inconclusive.

    Raises:
        NeutralMultiplier: |eta'(t0)| within 1e-9 of 1
    """
    options = options or ClassifyOptions()
    mu = dde.multiplier
    fp_class = classify_multiplier(mu)
    if fp_class is FixedPointClass.NEUTRAL:
        raise NeutralMultiplier(f"multiplier {mu} at t0={dde.t0}")

    scale_ = max(1.0, abs(y0))
    if fp_class is FixedPointClass.CONTRACTIVE:
        series = None
        if mu != 0.0:
            order = options.series_order
            conj = koenigs_series(dde.eta, dde.t0, order + 1)
            form = to_pantograph(dde, conj, order)
            series = taylor_coefficients(form, y0, order)
        logger.info(f"classify_point: contractive multiplier {mu:.6g}, verdict Analytic")
        return Verdict(VerdictClass.ANALYTIC, mu, fp_class, series=series)

    N = options.N
    conj = koenigs_series(dde.eta, dde.t0, N + 1)
    form = to_pantograph(dde, conj, N)
    limit = w_infinity(form, y0, options.w_tol, N_max=N + 1, strict=False)
    verdict = Verdict(VerdictClass.INCONCLUSIVE, mu, fp_class, w_inf=limit.w_inf,
                      tail_gap=limit.tail_gap, N_used=limit.N_used, converged=limit.converged,
                      w_diag=limit.diagnostics)
    if abs(limit.w_inf) > options.tol_nonzero * scale_:
        verdict.verdict_class = VerdictClass.NONANALYTIC
    elif abs(limit.w_inf) <= options.tol_zero * scale_:
        verdict.verdict_class = VerdictClass.ANALYTIC_CANDIDATE
        verdict.caveat = SHARED_JET_CAVEAT
        try:
            verdict.series = reconstruct_analytic(form, y0, min(options.series_order, form.order + 1)).series
        except CoefficientOverflow:
            logger.warning("candidate series overflowed; reporting the verdict without a series")
    else:
        logger.warning(f"w_inf={limit.w_inf:.3e} falls in the inconclusive band")
    logger.info(f"classify_point: multiplier {mu:.6g}, verdict {verdict.verdict_class.value}")
    return verdict

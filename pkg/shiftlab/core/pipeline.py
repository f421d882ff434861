"""
Coexistence of analytic and non-analytic behaviour in one smooth periodic solution.

The run follows the sine-delay eigenproblem

    kappa x(t) = integral_{t - r(t)}^{t} x(s) ds,   r(t) = -(lam - 1) sin t + 2 pi m,

whose positive eigenfunction solves a delay equation with an expansive
fixed point at t = 0 (multiplier lam) and, on a neighbouring branch, a
contractive one at t00 = pi/2 + arccos(2 pi n / (lam - 1)).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from ..errors import (
    CaptureRadiusTooLarge,
    ConfigInfeasible,
    InconclusiveBudget,
    JetTooShort,
    LambdaTooSmall,
    NoConvergence,
    NotExpansive,
)
from ..utils.stage_tracker import PipelineStage, StageTracker
from . import series as ts
from .koenigs import ConjugacyResult, koenigs_series
from .kreigen import (
    TWO_PI,
    ConstantFunction,
    EigenResult,
    IntegralOperatorSpec,
    ReciprocalSineDelay,
    SineDelay,
    power_iteration,
    to_ode_coefficients,
    verify_bounds,
)
from .pantograph import (
    W_TOL,
    ClassifyOptions,
    PantographForm,
    WDiagnostics,
    classify_point,
    to_pantograph,
    w_sequence,
)
from .series import TruncatedSeries
from .shiftmap import (
    DEFAULT_GRID,
    FixedPointClass,
    FixedPointRecord,
    Label,
    LabeledPoint,
    SineShift,
    basin_test,
    find_fixed_points,
    propagate_classification,
)

logger = logging.getLogger(__name__)

AGREEMENT_WINDOW = 200
BOUND_SLACK = 1e-9
PRODUCT_TERM_FLOOR = 1e-17
FIXED_POINT_TOL = 1e-10


def check_sine_delay(lam: float, m: int) -> None:
    if not 1.0 < lam < TWO_PI * m + 1.0:
        raise ConfigInfeasible(f"need 1 < lambda < 2 pi m + 1 for a positive delay; got lambda={lam}, m={m}")


@dataclass
class CoexistenceConfig:
    lam: float
    m: int = 2
    n: int = 1
    G: int = 2048
    N: int = 512
    eigen_tol: float = 1e-10
    eigen_max_iter: int = 20000
    w_tol: float = W_TOL
    orbit_steps: int = 4
    basin_max_iter: int = 200
    fixed_point_grid: int = DEFAULT_GRID

    def __post_init__(self):
        check_sine_delay(self.lam, self.m)
        if self.N < 8:
            raise ValueError(f"order N must be at least 8, got {self.N}")

    @property
    def hypothesis_holds(self) -> bool:
        """2 pi m <= 2 lam + 1, the branch condition of the nonanalyticity result."""
        return TWO_PI * self.m <= 2.0 * self.lam + 1.0

    @property
    def pq_satisfied(self) -> bool:
        """sqrt((lam-1)^2 - 4) < 2 pi n < lam - 1."""
        mu = self.lam - 1.0
        lower = math.sqrt(mu * mu - 4.0) if mu * mu > 4.0 else 0.0
        return lower < TWO_PI * self.n < mu

    def to_dict(self) -> Dict[str, Any]:
        return {"lambda": self.lam, "m": self.m, "n": self.n, "G": self.G, "N": self.N,
                "eigen_tol": self.eigen_tol, "w_tol": self.w_tol, "fixed_point_grid": self.fixed_point_grid}


@dataclass
class CoexistenceReport:
    config: CoexistenceConfig
    kappa: float
    kappa_bracket: Dict[str, Any]
    eigen: EigenResult
    expansive_record: FixedPointRecord
    conjugacy_residual: float
    form_agreement: float
    w_diag: WDiagnostics
    w_sine_agreement: float
    omega_bound: float
    bound_satisfied: bool
    pq_satisfied: bool
    contractive_record: Optional[FixedPointRecord] = None
    contractive_expected: Optional[Dict[str, float]] = None
    basin: List[Dict[str, Any]] = field(default_factory=list)
    orbit: List[LabeledPoint] = field(default_factory=list)
    timeline: List[Dict[str, str]] = field(default_factory=list)

    @property
    def y0(self) -> float:
        return float(self.w_diag.w[0])

    @property
    def nonvanishing_label(self) -> str:
        return "certified" if self.omega_bound < 1.0 else "empirical"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "hypothesis_holds": self.config.hypothesis_holds,
            "kappa": self.kappa,
            "kappa_bracket": self.kappa_bracket,
            "eigen": self.eigen.to_dict(),
            "expansive_record": self.expansive_record.to_dict(),
            "conjugacy_residual": self.conjugacy_residual,
            "form_agreement": self.form_agreement,
            "y0": self.y0,
            "w": self.w_diag.to_dict(),
            "w_sine_agreement": self.w_sine_agreement,
            "omega_bound": self.omega_bound,
            "bound_satisfied": self.bound_satisfied,
            "nonvanishing": self.nonvanishing_label,
            "pq_satisfied": self.pq_satisfied,
            "contractive_record": self.contractive_record.to_dict() if self.contractive_record else None,
            "contractive_expected": self.contractive_expected,
            "basin": self.basin,
            "timeline": self.timeline,
        }


def series_constant() -> float:
    """K = 1 + 18 sum_{j>=1} (j + 1) / 2^j, summed until the terms vanish in double precision."""
    total, j = 0.0, 1
    while True:
        term = (j + 1) / 2.0 ** j
        if total + term == total:
            break
        total += term
        j += 1
    return 1.0 + 18.0 * total


def omega_bound(lam: float) -> float:
    """
    Omega(lam) = (sum_n H_n)(prod_k (1 + H_k)) with H_0 = 1/lam and H_n = K (2/lam)^n.

    Raises:
        LambdaTooSmall: lam <= 2, where the series diverges
    """
    if lam <= 2.0:
        raise LambdaTooSmall(f"lambda must exceed 2, got {lam}")
    K = series_constant()
    q = 2.0 / lam
    total = 1.0 / lam + K * q / (1.0 - q)
    log_prod = math.log1p(1.0 / lam)
    term = K * q
    while term > PRODUCT_TERM_FLOOR:
        log_prod += math.log1p(term)
        term *= q
    try:
        return total * math.exp(log_prod)
    except OverflowError:
        return math.inf


def omega_threshold(lo: float = 2.5, hi: float = 1e6, xtol: float = 1e-10) -> float:
    """The lam at which omega_bound crosses 1, by bracketing on log lam."""
    def g(x: float) -> float:
        return math.log(omega_bound(math.exp(x)))

    if g(math.log(lo)) <= 0.0 or g(math.log(hi)) >= 0.0:
        raise ValueError(f"Omega does not cross 1 on [{lo}, {hi}]")
    x = brentq(g, math.log(lo), math.log(hi), xtol=xtol)
    return math.exp(x)


def sine_family_form(kappa: float, sigma: ConjugacyResult, lam: float, N: int) -> PantographForm:
    """
    Pantograph coefficients of the sine-delay eigen-equation with rho = 1:

        alpha_n = (n+1) sigma_{n+1} / kappa,   beta_n = -(n+1) lam^{n+1} sigma_{n+1} / kappa.

    The beta products are formed from log magnitudes.
    """
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if sigma.order < N + 1:
        raise JetTooShort(f"conjugacy of order {sigma.order} cannot supply order {N}")
    j = np.arange(1, N + 2, dtype=float)
    s = sigma.sigma.coeffs[1:N + 2]
    alpha = j * s / kappa
    with np.errstate(divide="ignore", under="ignore", over="ignore"):
        log_mag = np.log(j) + np.log(np.abs(s)) + j * math.log(abs(lam)) - math.log(kappa)
        mag = np.where(s != 0.0, np.exp(log_mag), 0.0)
    sign = -np.sign(s)
    if lam < 0:
        sign *= np.where(j % 2 == 1, -1.0, 1.0)
    beta = sign * mag
    return PantographForm(TruncatedSeries(0.0, alpha), TruncatedSeries(0.0, beta),
                          ts.constant(0.0, 0.0, N), float(lam))


def log_xi(k: np.ndarray, kappa: float, lam: float):
    """(log|xi_k|, sign xi_k) for xi_k = (-1)^k kappa^k k! / lam^{k(k+1)/2}."""
    k = np.asarray(k, dtype=float)
    tri = k * (k + 1) / 2
    log_mag = k * math.log(kappa) + gammaln(k + 1) - tri * math.log(abs(lam))
    sign = np.where(k % 2 == 1, -1.0, 1.0)
    if lam < 0:
        sign *= np.where(tri % 2 == 1, -1.0, 1.0)
    return log_mag, sign


def w_sequence_sine(kappa: float, sigma: ConjugacyResult, lam: float, y0: float, N: int,
                    tol: float = W_TOL) -> WDiagnostics:
    """
    w_0 = y0 and

        w_{n+1} = (1 - lam^{-(n+1)}) (w_n + sum_{k<n} (n-k+1) sigma_{n-k+1} (xi_n / xi_k) w_k).

    Raises:
        NotExpansive: |lam| <= 1
        JetTooShort: sigma has order below N
    """
    if abs(lam) <= 1.0:
        raise NotExpansive(f"|lambda| = {abs(lam)} <= 1")
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if sigma.order < N:
        raise JetTooShort(f"conjugacy of order {sigma.order} cannot produce w_{N}")
    s = sigma.sigma.coeffs
    lx, sx = log_xi(np.arange(N + 1), kappa, lam)
    with np.errstate(under="ignore"):
        damp = 1.0 - np.power(1.0 / lam, np.arange(1, N + 1, dtype=float))

    w = np.zeros(N + 1)
    w[0] = y0
    for n in range(N):
        acc = w[n]
        if n > 0:
            j = np.arange(n + 1, 1, -1)
            with np.errstate(under="ignore"):
                ratio = sx[n] * sx[:n] * np.exp(lx[n] - lx[:n])
            acc += float(np.sum(j * s[j] * ratio * w[:n]))
        w[n + 1] = damp[n] * acc
    diag = WDiagnostics(w, lam, -lam / kappa, tol)
    logger.debug(f"w_sequence_sine: N={N} w_inf={diag.w_inf:.12g}")
    return diag


def _relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale_ = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b))) / scale_


def _form_agreement(f1: PantographForm, f2: PantographForm) -> float:
    n = min(f1.order, f2.order) + 1
    return max(_relative_gap(f1.alpha.coeffs[:n], f2.alpha.coeffs[:n]),
               _relative_gap(f1.beta.coeffs[:n], f2.beta.coeffs[:n]))


def _capture_radius(eta: SineShift, record: FixedPointRecord, start: float = 0.25) -> float:
    radius = start
    for _ in range(30):
        try:
            basin_test(eta, record.t_star, record, 0, radius)
            return radius
        except CaptureRadiusTooLarge:
            radius *= 0.5
    raise NoConvergence(f"no admissible capture radius around {record.t_star}")


def _basin_samples(eta: SineShift, record: FixedPointRecord, max_iter: int) -> List[Dict[str, Any]]:
    radius = _capture_radius(eta, record)
    out = []
    for t in record.t_star + np.linspace(-0.4, 0.4, 9):
        try:
            captured: Optional[bool] = basin_test(eta, float(t), record, max_iter, radius)
        except InconclusiveBudget:
            captured = None
        out.append({"t": float(t), "captured": captured, "capture_radius": radius})
    return out


def locate_contractive_point(lam: float, n: int, grid: int = DEFAULT_GRID) -> Dict[str, Any]:
    """Fixed point of t -> t + (lam - 1) sin t - 2 pi n on [pi/2, pi], with its closed forms."""
    eta = SineShift(lam, -TWO_PI * n)
    ratio = TWO_PI * n / (lam - 1.0)
    t_expected = math.pi / 2 + math.acos(ratio)
    mu_expected = 1.0 - math.sqrt((lam - 1.0) ** 2 - (TWO_PI * n) ** 2)
    records = find_fixed_points(eta, (math.pi / 2, math.pi), tol=FIXED_POINT_TOL, grid=grid)
    if not records:
        raise NoConvergence(f"no fixed point of the branch n={n} on [pi/2, pi]")
    record = min(records, key=lambda r: abs(r.t_star - t_expected))
    return {"eta": eta, "record": record,
            "expected": {"t_star": t_expected, "multiplier": mu_expected}}


def run_coexistence(config: CoexistenceConfig) -> CoexistenceReport:
    """
    Eigenpair, expansive point at 0 with its w-sequence and Omega bound, and
    (when the branch inequality holds) the contractive point t00 with a
    sample of its basin and labeled orbits.

    Raises:
        LambdaTooSmall: lam <= 2
    """
    lam = config.lam
    if lam <= 2.0:
        raise LambdaTooSmall(f"the Omega bound needs lambda > 2, got {lam}")
    if not config.hypothesis_holds:
        logger.warning(f"2 pi m > 2 lambda + 1 for lambda={lam}, m={config.m}; the report is flagged")
    tracker = StageTracker(f"coexist(lambda={lam}, m={config.m}, n={config.n})")
    N = config.N

    with tracker.stage(PipelineStage.EIGENPROBLEM):
        spec = IntegralOperatorSpec(SineDelay(lam, config.m), ConstantFunction(1.0))
        eigen = power_iteration(spec, config.G, config.eigen_tol, config.eigen_max_iter)
        bounds = verify_bounds(spec, eigen)
        lo, hi = TWO_PI * config.m - lam + 1.0, TWO_PI * config.m + lam - 1.0
        kappa_bracket = {"lo": lo, "hi": hi, "ok": lo <= eigen.kappa <= hi, "window_bounds": bounds.to_dict()}
        y0 = float(eigen.x.samples[0])

    with tracker.stage(PipelineStage.EXPANSIVE_POINT):
        eta = SineShift(lam)
        records = find_fixed_points(eta, (-0.5, 0.5), tol=FIXED_POINT_TOL, grid=config.fixed_point_grid)
        expansive = min(records, key=lambda r: abs(r.t_star))
        if expansive.fp_class is not FixedPointClass.EXPANSIVE:
            raise NotExpansive(f"fixed point at {expansive.t_star} has multiplier {expansive.multiplier}")

    with tracker.stage(PipelineStage.CONJUGACY):
        conj = koenigs_series(eta, 0.0, N + 1)

    with tracker.stage(PipelineStage.PANTOGRAPH_FORM):
        form = sine_family_form(eigen.kappa, conj, lam, N)
        dde = to_ode_coefficients(spec, eigen, config.m, 0.0, N)
        general = to_pantograph(dde, conj, N)
        agreement = _form_agreement(form, general)

    with tracker.stage(PipelineStage.W_SEQUENCE):
        w_diag = w_sequence(form, y0, N, config.w_tol)
        w_sine = w_sequence_sine(eigen.kappa, conj, lam, y0, N, config.w_tol)
        window = min(AGREEMENT_WINDOW, N) + 1
        w_agreement = _relative_gap(w_diag.w[:window], w_sine.w[:window])
        if not w_diag.converged:
            logger.warning(f"w-sequence tail gap {w_diag.tail_gap:.3e} above tolerance at N={N}")

    with tracker.stage(PipelineStage.OMEGA_BOUND):
        omega = omega_bound(lam)
        bound_ok = abs(w_diag.w_inf - y0) <= omega * abs(y0) + BOUND_SLACK
        if not bound_ok:
            logger.warning(f"|w_inf - w_0| = {abs(w_diag.w_inf - y0):.3e} exceeds Omega |w_0|")

    report = CoexistenceReport(config, eigen.kappa, kappa_bracket, eigen, expansive, conj.residual,
                               agreement, w_diag, w_agreement, omega, bound_ok, config.pq_satisfied)

    seeds = [(expansive.t_star, Label.NONANALYTIC)]
    if config.pq_satisfied:
        with tracker.stage(PipelineStage.CONTRACTIVE_POINT):
            located = locate_contractive_point(lam, config.n, config.fixed_point_grid)
            record = located["record"]
            if record.fp_class is not FixedPointClass.CONTRACTIVE:
                raise NoConvergence(f"point {record.t_star} has multiplier {record.multiplier}")
            report.contractive_record = record
            report.contractive_expected = located["expected"]
            report.basin = _basin_samples(located["eta"], record, config.basin_max_iter)
            seeds.append((record.t_star, Label.ANALYTIC))
            seeds.extend((b["t"], Label.ANALYTIC) for b in report.basin if b["captured"])
    else:
        tracker.mark_stage_skipped(PipelineStage.CONTRACTIVE_POINT,
                                   f"branch inequality fails for n={config.n}")

    with tracker.stage(PipelineStage.ORBIT_LABELS):
        # on the eta branch itself the contractive point moves by 2 pi n per step
        report.orbit = propagate_classification(eta, seeds, config.orbit_steps)

    tracker.complete_processing(True, f"nonvanishing {report.nonvanishing_label}")
    report.timeline = tracker.get_current_timeline()
    logger.info(f"run_coexistence: kappa={eigen.kappa:.12g} w_inf={w_diag.w_inf:.12g} Omega={omega:.6g}")
    return report


def run_analytic_control(lam: float, m: int, G: int = 2048, N: int = 512, tol: float = 1e-10,
                         max_iter: int = 20000, tol_zero: float = 1e-8,
                         tol_nonzero: float = 1e-6) -> Dict[str, Any]:
    """
    Negative control: with rho = 1/r the eigenfunction is x = r itself and
    kappa = 1, so the solution through the expansive point t = 0 is analytic
    and the w-test must report w_inf close to 0.
    """
    check_sine_delay(lam, m)
    tracker = StageTracker(f"analytic_control(lambda={lam}, m={m})")
    with tracker.stage(PipelineStage.ANALYTIC_CONTROL):
        spec = IntegralOperatorSpec(SineDelay(lam, m), ReciprocalSineDelay(lam, m))
        numeric = power_iteration(spec, G, tol, max_iter)
        exact = EigenResult(1.0, spec.r.sample(G), 0.0, numeric.bound_lo, numeric.bound_hi, 0)
        dde = to_ode_coefficients(spec, exact, m, 0.0, N)
        y0 = float(spec.r(0.0))
        verdict = classify_point(dde, y0, ClassifyOptions(N=N, tol_zero=tol_zero, tol_nonzero=tol_nonzero))
    tracker.complete_processing(True)
    return {
        "lambda": lam,
        "m": m,
        "kappa_numeric": numeric.kappa,
        "kappa_exact": 1.0,
        "y0": y0,
        "verdict": verdict.to_dict(),
        "timeline": tracker.get_current_timeline(),
    }

"""
Command runners: one function per command, each writing its report and CSVs
through an OutputHandler and returning a short summary.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import click
from pydantic import ValidationError

from ..core import kreigen, nondegeneracy, pipeline, stepsim
from ..core.koenigs import conjugacy_bounds, koenigs_series, odd_symmetry_gap, zeta_iteration
from ..core.pantograph import (
    ClassifyOptions,
    LocalLinearDDE,
    PantographForm,
    classify_point,
    to_pantograph,
    w_infinity_decomposition,
)
from ..core.shiftmap import Affine, FixedPointClass, SineShift, rigid_rotation, rotation_number
from ..errors import QuadrantTestFailed, ShiftLabError
from ..utils.output_handler import (
    EIGEN_HEADER,
    ORBIT_HEADER,
    SERIES_HEADER,
    SOLUTION_HEADER,
    W_HEADER,
    OutputHandler,
    eigen_rows,
    orbit_rows,
    series_to_rows,
    solution_rows,
    summarize_written,
    w_rows,
)
from .models import (
    ClassifyParams,
    CoexistParams,
    EigenParams,
    KoenigsParams,
    PnParams,
    RotationParams,
    RunConfig,
    StepsParams,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2

STEPS_FORM_ORDER = 30


@dataclass
class Settings:
    """Resolved CLI-wide settings."""
    output_dir: str
    include_meta: bool = True
    numerics: Dict[str, Any] = field(default_factory=dict)


def emit_error(exc: BaseException) -> None:
    message = exc.format_message() if isinstance(exc, click.ClickException) else str(exc)
    click.echo(json.dumps({"error": type(exc).__name__, "message": message}), err=True)


def run_classify(p: ClassifyParams, out: OutputHandler) -> Dict[str, Any]:
    eta = Affine(p.lam, p.t0)
    dde = LocalLinearDDE.constant(p.a0, p.b0, eta, p.t0, p.N, h0=p.h0)
    options = ClassifyOptions(N=p.N, series_order=p.series_order,
                              tol_zero=p.tol_zero, tol_nonzero=p.tol_nonzero)
    verdict = classify_point(dde, p.y0, options)
    if verdict.series is not None:
        out.write_csv("series.csv", SERIES_HEADER, series_to_rows(verdict.series))
        verdict.series_file = "series.csv"
    if verdict.w_diag is not None:
        out.write_csv("w_sequence.csv", W_HEADER, w_rows(verdict.w_diag))

    report: Dict[str, Any] = {"command": "classify", "params": p.model_dump(by_alias=True),
                              "verdict": verdict.to_dict()}
    if p.decompose:
        if verdict.fp_class is FixedPointClass.EXPANSIVE:
            conj = koenigs_series(eta, p.t0, p.N + 1)
            form = to_pantograph(dde, conj, p.N)
            report["decomposition"] = w_infinity_decomposition(form, p.y0, N_max=p.N + 1)
        else:
            report["decomposition"] = None
    out.write_json("report.json", report)
    return summarize_written(out, {"verdict": verdict.verdict_class.value})


def run_koenigs(p: KoenigsParams, out: OutputHandler) -> Dict[str, Any]:
    if p.method == "zeta":
        result = zeta_iteration(p.lam, p.N, iters=p.iters, lam_floor=p.lam_floor)
    else:
        result = koenigs_series(SineShift(p.lam), 0.0, p.N)
    out.write_csv("sigma.csv", SERIES_HEADER, series_to_rows(result.sigma))
    out.write_json("koenigs.json", {
        "command": "koenigs",
        "params": p.model_dump(by_alias=True),
        "conjugacy": result.to_dict(),
        "bounds": conjugacy_bounds(result),
        "odd_symmetry_gap": odd_symmetry_gap(result),
    })
    return summarize_written(out, {"residual": result.residual})


def _eigen_spec(p: EigenParams) -> kreigen.IntegralOperatorSpec:
    if p.r0 is not None:
        r = kreigen.ConstantFunction(p.r0)
        rho = kreigen.ConstantFunction(1.0 if p.rho == "one" else 1.0 / p.r0)
    else:
        pipeline.check_sine_delay(p.lam, p.m)
        r = kreigen.SineDelay(p.lam, p.m)
        rho = kreigen.ConstantFunction(1.0) if p.rho == "one" else kreigen.ReciprocalSineDelay(p.lam, p.m)
    return kreigen.IntegralOperatorSpec(r, rho)


def run_eigen(p: EigenParams, out: OutputHandler) -> Dict[str, Any]:
    spec = _eigen_spec(p)
    result = kreigen.power_iteration(spec, p.G, p.tol, p.max_iter)
    bounds = kreigen.verify_bounds(spec, result)
    out.write_csv("eigenfunction.csv", EIGEN_HEADER, eigen_rows(result.x))
    out.write_json("eigen.json", {
        "command": "eigen",
        "params": p.model_dump(by_alias=True),
        "result": result.to_dict(),
        "bounds": bounds.to_dict(),
        "collatz_wielandt": kreigen.collatz_wielandt(spec, result.x),
    })
    return summarize_written(out, {"kappa": result.kappa})


def run_coexist(p: CoexistParams, out: OutputHandler) -> Dict[str, Any]:
    config = pipeline.CoexistenceConfig(p.lam, p.m, p.n, G=p.G, N=p.N, eigen_tol=p.eigen_tol,
                                        eigen_max_iter=p.eigen_max_iter,
                                        fixed_point_grid=p.fixed_point_grid)
    report = pipeline.run_coexistence(config)
    out.write_csv("eigenfunction.csv", EIGEN_HEADER, eigen_rows(report.eigen.x))
    out.write_csv("w_sequence.csv", W_HEADER, w_rows(report.w_diag))
    out.write_csv("orbit.csv", ORBIT_HEADER, orbit_rows(report.orbit))
    payload = {"command": "coexist", **report.to_dict()}
    if p.control:
        payload["analytic_control"] = pipeline.run_analytic_control(
            p.lam, p.m, G=p.G, N=p.N, tol=p.eigen_tol, max_iter=p.eigen_max_iter)
    out.write_json("coexist.json", payload)
    contractive = report.contractive_record.t_star if report.contractive_record else None
    return summarize_written(out, {"w_inf": report.w_diag.w_inf, "contractive_t": contractive})


def run_steps(p: StepsParams, out: OutputHandler) -> Dict[str, Any]:
    form = PantographForm.constant(p.a0, p.b0, p.lam, STEPS_FORM_ORDER, gamma0=p.gamma0)
    quadrants = stepsim.quadrant_test(form, p.tau, p.depth, p.steps_per_layer)
    if not quadrants.passed:
        raise QuadrantTestFailed(f"corner data do not reach all four quadrants at tau={p.tau}")
    match = stepsim.match_initial(form, p.tau, p.y0, p.depth, p.steps_per_layer, check_quadrants=False)
    K = stepsim.coefficient_bound(form, p.tau)
    gronwall = stepsim.gronwall_check(match.solution, K)
    jets = stepsim.jet_comparison(match.solution, form, p.y0, p.n_max)
    out.write_csv("solution.csv", SOLUTION_HEADER, solution_rows(match.solution))
    out.write_json("steps.json", {
        "command": "steps",
        "params": p.model_dump(by_alias=True),
        "quadrants": quadrants.to_dict(),
        "match": match.to_dict(),
        "richardson_gap": match.solution.richardson_gap,
        "boundary_slope_mismatch": match.solution.boundary_slope_mismatch,
        "gronwall": {"K": K, "holds": gronwall},
        "jets": [row.to_dict() for row in jets],
    })
    return summarize_written(out, {"residual": match.residual})


def run_rotation(p: RotationParams, out: OutputHandler) -> Dict[str, Any]:
    if p.kind == "rigid":
        eta, period = rigid_rotation(p.c), p.period or 1.0
    else:
        eta, period = SineShift(p.lam, p.offset), p.period or 2.0 * math.pi
    estimate = rotation_number(eta, period, p.t0, p.n_iter, check_monotone=p.check_monotone)
    out.write_json("rotation.json", {"command": "rotation", "params": p.model_dump(by_alias=True),
                                     "map": eta.describe(), "rotation": estimate.to_dict()})
    return summarize_written(out, {"omega": estimate.omega})


def run_pn(p: PnParams, out: OutputHandler) -> Optional[Dict[str, Any]]:
    poly = nondegeneracy.build_pn(p.n, p.cap)
    text = poly.render(p.style)
    click.echo(text)
    out.write_json("pn.json", {"command": "pn", "n": p.n, "ascii": poly.render("ascii"),
                               "zeta": poly.render("zeta"), "terms": len(poly.terms)})
    return None


RUNNERS: Dict[str, Callable[[Any, OutputHandler], Optional[Dict[str, Any]]]] = {
    "classify": run_classify,
    "koenigs": run_koenigs,
    "eigen": run_eigen,
    "coexist": run_coexist,
    "steps": run_steps,
    "rotation": run_rotation,
    "pn": run_pn,
}


def dispatch(run: RunConfig, settings: Settings, quiet: bool = False) -> int:
    """
    Run one command and map failures to exit codes: 0 on success, 2 on
    domain errors, 1 on invalid parameters. Errors go to stderr as one
    JSON line.
    """
    handler = OutputHandler(run.output_dir or settings.output_dir, settings.include_meta)
    try:
        params = run.parsed(settings.numerics)
        summary = RUNNERS[run.command](params, handler)
    except ShiftLabError as e:
        logger.error(f"{run.command} failed: {type(e).__name__}: {e}")
        emit_error(e)
        return EXIT_DOMAIN
    except (ValidationError, ValueError) as e:
        logger.error(f"{run.command} rejected its parameters: {e}")
        emit_error(e)
        return EXIT_USAGE
    if summary is not None and not quiet:
        click.echo(json.dumps(summary, sort_keys=True))
    return EXIT_OK

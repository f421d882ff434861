"""
shiftlab command line.

    python -m shiftlab classify --a0 1 --b0 1 --lambda 2 --y0 1
    python -m shiftlab pn --n 2
    python -m shiftlab coexist --lambda 7.4 --m 2 --n 1
    python -m shiftlab sweep --file runs.json
"""
import asyncio
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
from pydantic import ValidationError

from .. import __version__
from ..config.config import get_config
from ..utils.output_handler import OutputHandler
from .models import RunConfig, SweepFile
from .runners import EXIT_OK, EXIT_USAGE, Settings, dispatch, emit_error

logger = logging.getLogger(__name__)


def _load_params(config_file: Optional[str], flags: Dict[str, Any]) -> Dict[str, Any]:
    """JSON parameters from --config, overridden by the flags that were given."""
    params: Dict[str, Any] = {}
    if config_file:
        with open(config_file, 'r', encoding='utf-8') as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise click.BadParameter("the file must hold a JSON object", param_hint="--config")
        params.update(data)
    params.update({k: v for k, v in flags.items() if v is not None})
    return params


def _run(ctx: click.Context, command: str, config_file: Optional[str], **flags) -> int:
    settings: Settings = ctx.obj
    return dispatch(RunConfig(command=command, params=_load_params(config_file, flags)), settings)


config_option = click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
                             default=None, help='JSON file with the command parameters.')


@click.group()
@click.option('--output-dir', envvar='SHIFTLAB_OUTPUT_DIR', default=None,
              help='Directory for reports and CSVs.')
@click.option('--no-meta', is_flag=True, default=False, help='Omit the timestamp block from reports.')
@click.option('--log-level', default=None,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False))
@click.option('--settings', 'settings_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='YAML settings file replacing the packaged config.yaml.')
@click.version_option(__version__, prog_name='shiftlab')
@click.pass_context
def cli(ctx: click.Context, output_dir: Optional[str], no_meta: bool, log_level: Optional[str],
        settings_path: Optional[str]) -> None:
    """Analyticity of solutions of equations with a time-shifted argument."""
    config = get_config(settings_path)
    log_config = config.get_logging_config()
    logging.basicConfig(
        level=getattr(logging, (log_level or log_config['level']).upper()),
        format=log_config['format'],
    )
    output = config.get_output_config()
    ctx.obj = Settings(
        output_dir=output_dir or output['dir'],
        include_meta=output['include_meta'] and not no_meta,
        numerics=config.get_numerics_config(),
    )


@cli.command()
@config_option
@click.option('--a0', type=float)
@click.option('--b0', type=float)
@click.option('--lambda', 'lam', type=float)
@click.option('--y0', type=float)
@click.option('--t0', type=float)
@click.option('--h0', type=float)
@click.option('--N', 'N', type=int, help='Length of the w-sequence.')
@click.option('--decompose/--no-decompose', default=None, help='Split w_inf into data and forcing parts.')
@click.pass_context
def classify(ctx, config_file, **flags):
    """Verdict for x' = a0 x + b0 x(t0 + lambda (t - t0)) + h0 through x(t0) = y0."""
    return _run(ctx, 'classify', config_file, **flags)


@cli.command()
@config_option
@click.option('--lambda', 'lam', type=float)
@click.option('--N', 'N', type=int)
@click.option('--method', type=click.Choice(['series', 'zeta']))
@click.pass_context
def koenigs(ctx, config_file, **flags):
    """Conjugacy jet of t + (lambda - 1) sin t at 0."""
    return _run(ctx, 'koenigs', config_file, **flags)


@cli.command()
@config_option
@click.option('--r0', type=float, help='Constant delay.')
@click.option('--lambda', 'lam', type=float, help='Sine delay -(lambda - 1) sin t + 2 pi m.')
@click.option('--m', type=int)
@click.option('--rho', type=click.Choice(['one', 'reciprocal']))
@click.option('--G', 'G', type=int)
@click.pass_context
def eigen(ctx, config_file, **flags):
    """Dominant eigenpair of the periodic integral operator."""
    return _run(ctx, 'eigen', config_file, **flags)


@cli.command()
@config_option
@click.option('--lambda', 'lam', type=float)
@click.option('--m', type=int)
@click.option('--n', type=int)
@click.option('--G', 'G', type=int)
@click.option('--N', 'N', type=int)
@click.option('--fixed-point-grid', 'fixed_point_grid', type=int, help='Bracketing cells for the fixed-point search.')
@click.option('--control/--no-control', default=None, help='Also run the analytic negative control.')
@click.pass_context
def coexist(ctx, config_file, **flags):
    """Expansive and contractive points of one periodic solution."""
    return _run(ctx, 'coexist', config_file, **flags)


@cli.command()
@config_option
@click.option('--a0', type=float)
@click.option('--b0', type=float)
@click.option('--lambda', 'lam', type=float)
@click.option('--y0', type=float)
@click.option('--tau', type=float)
@click.option('--depth', type=int)
@click.pass_context
def steps(ctx, config_file, **flags):
    """Method-of-steps solution matched to y(0) = y0."""
    return _run(ctx, 'steps', config_file, **flags)


@cli.command()
@config_option
@click.option('--kind', type=click.Choice(['rigid', 'sine']))
@click.option('--c', type=float)
@click.option('--lambda', 'lam', type=float)
@click.option('--offset', type=float)
@click.option('--period', type=float)
@click.option('--n-iter', 'n_iter', type=int)
@click.pass_context
def rotation(ctx, config_file, **flags):
    """Rotation number of a periodic lift."""
    return _run(ctx, 'rotation', config_file, **flags)


@cli.command()
@config_option
@click.option('--n', type=int)
@click.option('--style', type=click.Choice(['ascii', 'zeta']))
@click.pass_context
def pn(ctx, config_file, **flags):
    """Print the derivative polynomial P_n."""
    return _run(ctx, 'pn', config_file, **flags)


def load_sweep(path: str) -> List[RunConfig]:
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if isinstance(data, list):
        data = {"runs": data}
    return SweepFile.model_validate(data).runs


async def run_sweep(runs: Sequence[RunConfig], settings: Settings) -> List[int]:
    """Independent runs in worker threads, each under output_dir/run_<index>/."""
    base = Path(settings.output_dir)
    tasks = [
        asyncio.to_thread(dispatch, run.model_copy(update={'output_dir': str(base / f'run_{i}')}), settings, True)
        for i, run in enumerate(runs)
    ]
    return list(await asyncio.gather(*tasks))


@cli.command()
@click.option('--file', 'file_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def sweep(settings: Settings, file_path: str):
    """Run a list of commands concurrently."""
    try:
        runs = load_sweep(file_path)
    except (ValidationError, ValueError) as e:
        emit_error(e)
        return EXIT_USAGE
    logger.info(f"sweep: {len(runs)} run(s) from {file_path}")
    codes = asyncio.run(run_sweep(runs, settings))
    handler = OutputHandler(settings.output_dir, settings.include_meta)
    summary = {"runs": [{"index": i, "command": run.command, "exit_code": code, "output_dir": f"run_{i}"}
                        for i, (run, code) in enumerate(zip(runs, codes))]}
    handler.write_json("sweep.json", summary)
    click.echo(json.dumps(summary, sort_keys=True))
    return max(codes, default=EXIT_OK)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point returning the process exit code."""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name='shiftlab',
                      standalone_mode=False)
    except click.exceptions.Abort as e:
        emit_error(e)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        emit_error(e)
        return EXIT_USAGE
    except (ValidationError, ValueError, OSError) as e:
        emit_error(e)
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK

import signal
import sys
from pathlib import Path
from typing import List, Optional

import click
from click_help_colors import HelpColorsCommand, HelpColorsGroup
from rich import pretty, traceback

from . import constants
from .checks import CHECKS, run_checks
from .config import load_config
from .exceptions import (
    AcceptanceCheckFailed,
    CentralSpinError,
    ConfigurationError,
    TermInterrupt,
    exit_code_for,
)
from .steps import SweepStep, TabulateReportStep, run_scenario
from .util import print_stderr
from .version import VERSION

_CLICK_GROUP_DEFAULTS = {
    "cls": HelpColorsGroup,
    "help_options_color": "green",
    "help_headers_color": "yellow",
    "context_settings": {"max_content_width": 115},
}

_CLICK_COMMAND_DEFAULTS = {
    "cls": HelpColorsCommand,
    "help_options_color": "green",
    "help_headers_color": "yellow",
    "context_settings": {"max_content_width": 115},
}


def excepthook(exctype, value, tb):
    """
    Used to patch `sys.excepthook` in order to customize handling of uncaught exceptions.
    """
    # Ignore `CentralSpinError` because we don't need a traceback for those.
    if issubclass(exctype, (CentralSpinError,)) and not issubclass(exctype, TermInterrupt):
        print_stderr(f"[red][bold]{exctype.__name__}:[/] [i]{value}[/][/]")
    # For interruptions, call the original exception handler.
    elif issubclass(exctype, (KeyboardInterrupt, TermInterrupt)):
        sys.__excepthook__(exctype, value, tb)
    else:
        print_stderr(traceback.Traceback.from_exception(exctype, value, tb, suppress=[click]))


def handle_sigterm(sig, frame):
    del sig, frame
    raise TermInterrupt


def _scenario_options(f):
    options = [
        click.argument("config_path", required=False, type=click.Path(exists=True, dir_okay=False)),
        click.option("--n-bath", type=int, help="""Number of bath spins N.""", default=None),
        click.option("--alpha-ratio", type=float, help="""Coupling strength alpha0 / omega0.""", default=None),
        click.option("--k0", type=float, help="""Width of the coupling profile (default N/2).""", default=None),
        click.option("--exponent", type=float, help="""Exponent of the coupling profile (default 2).""", default=None),
        click.option(
            "--initial",
            type=click.Choice(constants.INITIAL_STATES),
            help="""Initial state of the central spin and bath.""",
            default=None,
        ),
        click.option("--t-max", type=float, help="""End of the time grid in units of 1/omega0.""", default=None),
        click.option("--points", type=int, help="""Number of points on the time grid.""", default=None),
        click.option(
            "--methods",
            type=str,
            help=f"""Comma-separated methods [{', '.join(constants.METHODS)}].""",
            default=None,
        ),
        click.option("--window", type=str, help="""Comparison window 'start,end'.""", default=None),
        click.option("--workers", type=int, help="""Threads for methods and sectors.""", default=None),
        click.option("-q", "--quiet", is_flag=True, help="""Hide progress bars and status lines."""),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _load(config_path: Optional[str], **flags):
    return load_config(
        config_path,
        n_bath=flags["n_bath"],
        alpha_ratio=flags["alpha_ratio"],
        k0=flags["k0"],
        exponent=flags["exponent"],
        initial=flags["initial"],
        t_max=flags["t_max"],
        points=flags["points"],
        methods=flags["methods"],
        window=flags["window"],
    )


def _comma_list(value: str, cast, name: str) -> List:
    try:
        return [cast(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"'{name}' must be a comma-separated list, got '{value}'")


@click.group(**_CLICK_GROUP_DEFAULTS)
@click.version_option(version=VERSION)
def cli():
    pretty.install()
    # Handle SIGTERM just like KeyboardInterrupt
    signal.signal(signal.SIGTERM, handle_sigterm)


@cli.command(**_CLICK_COMMAND_DEFAULTS)
@_scenario_options
@click.option("-o", "--out-dir", type=click.Path(file_okay=False), help="""Output folder.""", default=None)
def run(config_path: Optional[str], out_dir: Optional[str], workers: Optional[int], quiet: bool, **flags):
    """
    Run one scenario: solve with every requested method, compare, and write CSVs.
    """
    config = _load(config_path, **flags)
    result = run_scenario(config, output_dir=out_dir, workers=workers, progress=not quiet)
    print("\n".join(TabulateReportStep().run(result.report)))


@cli.command(**_CLICK_COMMAND_DEFAULTS)
@_scenario_options
@click.option("--n-baths", type=str, help="""Comma-separated bath sizes.""", required=True)
@click.option("--alpha-ratios", type=str, help="""Comma-separated values of alpha0 / omega0.""", required=True)
@click.option("-o", "--out-dir", type=click.Path(file_okay=False), help="""Output folder.""", default=None)
def sweep(
    config_path: Optional[str],
    n_baths: str,
    alpha_ratios: str,
    out_dir: Optional[str],
    workers: Optional[int],
    quiet: bool,
    **flags,
):
    """
    Run a grid of scenarios over N and alpha0 / omega0.
    """
    base = _load(config_path, **flags)
    step = SweepStep(
        base,
        _comma_list(n_baths, int, "n-baths"),
        _comma_list(alpha_ratios, float, "alpha-ratios"),
        workers=workers,
        progress=not quiet,
    )
    for n_bath, alpha_ratio, result in step.run(Path(out_dir) if out_dir else None):
        for line in TabulateReportStep().run(result.report):
            print(f"N={n_bath}\talpha={alpha_ratio:g}\t{line}")


@cli.command(**_CLICK_COMMAND_DEFAULTS)
@click.option("--quick", is_flag=True, help="""Use N=6 and shorter windows.""")
@click.option(
    "--only",
    type=str,
    help=f"""Comma-separated subset of checks [{', '.join(CHECKS)}].""",
    default=None,
)
def check(quick: bool, only: Optional[str]):
    """
    Run the acceptance suite and print a pass/fail table.
    """
    names = _comma_list(only, str, "only") if only else None
    if names:
        unknown = [name for name in names if name not in CHECKS]
        if unknown:
            raise ConfigurationError(f"Unknown check(s): {', '.join(unknown)}")
    results = run_checks(quick=quick, names=names)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}\t{result.name}\t{result.value:.3e}\t{result.threshold:.1e}\t{result.detail}")
    failed = [result.name for result in results if not result.passed]
    if failed:
        raise AcceptanceCheckFailed(f"{len(failed)} check(s) failed: {', '.join(failed)}")


def main(args: Optional[List[str]] = None):
    sys.excepthook = excepthook
    try:
        cli.main(args=args, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except CentralSpinError as e:
        if isinstance(e, TermInterrupt):
            raise
        print_stderr(f"[red][bold]{type(e).__name__}:[/] [i]{e}[/][/]")
        sys.exit(exit_code_for(e))


if __name__ == "__main__":
    main()

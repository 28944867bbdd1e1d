"""
Bridge Lab Commands

click command group exposing the oracle registry, path simulation,
verification suites, figure export and manifest replay. Results go to stdout;
logging goes to stderr.

Exit codes: 0 success, 1 verification failure or digest mismatch, 2 usage
error or unknown statistic id, 3 domain or numerical error, 4 I/O error.
"""

import functools
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
from pydantic import ValidationError

from . import __version__
from .config import get_settings, load_run_config
from .logic import exporter, output_assembler, path_engine, registry, runner
from .logic.aggregator import block_ranges
from .logic.constants import (
    DEFAULT_GATE,
    DEFAULT_REGION_GRID,
    DEFAULT_REPS,
    DEFAULT_SEED,
    DEFAULT_STEPS,
    EXIT_DOMAIN,
    EXIT_GATE_FAILURE,
    EXIT_IO,
    EXIT_USAGE,
    BridgeKind,
    ProcessFamily,
    Suite,
)
from .logic.contracts import BridgeSpec, ProcessParams, RunManifest, SeedSpec, SimulationOptions, TimeGrid
from .logic.errors import BridgeLabError, RegistryError

logger = logging.getLogger(__name__)

KIND_CHOICE = click.Choice([k.value for k in BridgeKind])
PROCESS_CHOICE = click.Choice([p.value for p in ProcessFamily])
SUITE_CHOICE = click.Choice([s.value for s in Suite])


# =============================================================================
# HELPERS
# =============================================================================

def handle_errors(func):
    """Map bridgelab, validation and I/O errors onto exit codes."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except RegistryError as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(EXIT_USAGE)
        except (BridgeLabError, ValidationError, ValueError) as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(EXIT_DOMAIN)
        except OSError as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(EXIT_IO)
    return wrapper


def _replay_args(ctx: click.Context) -> List[str]:
    """Command path and effective parameters as an argument list (config file resolved)."""
    args: List[str] = [ctx.info_name] if ctx.parent is None or ctx.parent.parent is None else \
        [ctx.parent.info_name, ctx.info_name]
    for param in ctx.command.params:
        value = ctx.params.get(param.name)
        if value is None or param.name == "no_manifest":
            continue
        if isinstance(param, click.Argument):
            args.append(str(value))
        elif isinstance(value, bool):
            if value:
                args.append(param.opts[0])
        else:
            args.extend([param.opts[0], str(value)])
    return args


def _write_manifest(ctx: click.Context, started_at: str, outputs: List[Path], seed: Optional[int],
                    notes: Optional[List[str]] = None) -> None:
    if ctx.params.get("no_manifest"):
        return
    config: Dict[str, Any] = {k: (str(v) if isinstance(v, Path) else v)
                              for k, v in ctx.params.items() if k != "no_manifest"}
    manifest = exporter.build_manifest(_replay_args(ctx), config, __version__, started_at, outputs, seed, notes)
    path = exporter.manifest_path(outputs[0])
    output_assembler.write_json(path, manifest)


def _options(reps: int, seed: int, steps: int, gate: float = DEFAULT_GATE) -> SimulationOptions:
    settings = get_settings()
    return SimulationOptions(reps=reps, seed=seed, steps=steps, gate=gate, block_size=settings.block_size,
                             threads=settings.threads, progress=settings.progress)


def _params(process: str, q: Optional[float], sigma: float) -> Optional[ProcessParams]:
    if process == ProcessFamily.WIENER.value:
        return None
    if q is None:
        raise click.UsageError("--q is required for --process ou")
    return ProcessParams(q=q, sigma=sigma)


no_manifest_option = click.option("--no-manifest", is_flag=True, hidden=True, help="Do not write a run manifest.")


# =============================================================================
# COMMAND GROUP
# =============================================================================

@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="JSON file with flat run settings; explicit flags override it.")
@click.version_option(__version__, prog_name="bridgelab")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path]):
    """Wiener and Ornstein-Uhlenbeck bridge oracles, simulation and verification."""
    if config_path is not None:
        try:
            values = load_run_config(config_path)
        except (ValidationError, BridgeLabError, ValueError) as e:
            raise click.BadParameter(str(e), param_hint="--config")
        ctx.default_map = {name: values for name in ("oracle", "simulate", "verify", "export")}


# =============================================================================
# ORACLE
# =============================================================================

@cli.command()
@click.argument("statistic", required=False)
@click.option("--list", "show_list", is_flag=True, help="List every statistic id with its formula.")
@click.option("--kind", type=KIND_CHOICE)
@click.option("--t", "t", type=float, help="Time.")
@click.option("--s", "s", type=float, help="Second time for covariances.")
@click.option("--a", "a", type=float)
@click.option("--b", "b", type=float)
@click.option("--d", "d", type=float, help="Conditioning value of the driver endpoint.")
@click.option("--T", "T", type=float, help="Horizon.")
@click.option("--q", "q", type=float)
@click.option("--sigma", type=float)
@click.option("--x", "x", type=float)
@click.option("--mean", type=float)
@click.option("--var", type=float)
@click.option("--b-tilde", type=float)
@click.option("--d-tilde", type=float)
@handle_errors
def oracle(statistic: Optional[str], show_list: bool, **values):
    """Evaluate one closed-form statistic, e.g. `oracle wiener.expected_quad_dev --kind ir --b 0 --T 1`."""
    if show_list:
        for name, formula, args in registry.listing():
            click.echo(f"{name}\t{formula}\t[{', '.join(args)}]")
        return
    if not statistic:
        raise click.UsageError("give a statistic id or --list")
    value = registry.evaluate(statistic, values)
    click.echo(output_assembler.format_terminal(value))


# =============================================================================
# SIMULATE
# =============================================================================

@cli.command()
@click.option("--process", type=PROCESS_CHOICE, default=ProcessFamily.WIENER.value, show_default=True)
@click.option("--q", "q", type=float)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--a", "a", type=float, default=0.0, show_default=True)
@click.option("--b", "b", type=float, default=0.0, show_default=True)
@click.option("--d", "d", type=float, help="Condition the Wiener driver on W_T = d.")
@click.option("--T", "T", type=float, default=1.0, show_default=True)
@click.option("--steps", type=int, default=DEFAULT_STEPS, show_default=True)
@click.option("--reps", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@no_manifest_option
@click.pass_context
@handle_errors
def simulate(ctx, process, q, sigma, a, b, d, T, steps, reps, seed, out, no_manifest):
    """Write a path dump CSV: process and the three bridges per replicate."""
    started = exporter.utc_now()
    params = _params(process, q, sigma)
    spec = BridgeSpec(a=a, b=b, T=T)
    grid = TimeGrid.uniform(T, steps)
    settings = get_settings()
    header: List[str] = []
    rows = []
    for start, count in block_ranges(reps, settings.block_size):
        bundle = path_engine.simulate_bundle(grid, spec, SeedSpec(master_seed=seed, replicate_index=start),
                                             count, params=params, d=d)
        header = path_engine.bundle_header(bundle)
        rows.extend(path_engine.bundle_rows(bundle))
    output_assembler.write_csv(out, header, rows)
    _write_manifest(ctx, started, [out], seed)
    click.echo(str(out))


# =============================================================================
# VERIFY
# =============================================================================

@cli.command()
@click.option("--suite", type=SUITE_CHOICE, default=Suite.ALL.value, show_default=True)
@click.option("--reps", type=int, default=DEFAULT_REPS, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--steps", type=int, default=DEFAULT_STEPS, show_default=True)
@click.option("--gate", type=float, default=DEFAULT_GATE, show_default=True)
@click.option("--grid", type=int, default=DEFAULT_REGION_GRID, show_default=True,
              help="Points per axis of the region sweep.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="JSON report path (default: verify-<suite>.json).")
@no_manifest_option
@click.pass_context
@handle_errors
def verify(ctx, suite, reps, seed, steps, gate, grid, out, no_manifest):
    """Run verification suites; exit 0 iff every gate passes."""
    started = exporter.utc_now()
    out = out or Path(f"verify-{suite}.json")
    report = runner.run_verification(Suite(suite), _options(reps, seed, steps, gate), grid)
    output_assembler.write_json(out, report)
    _write_manifest(ctx, started, [out], seed)
    for line in output_assembler.verification_summary(report):
        click.echo(line)
    if not report.passed:
        ctx.exit(EXIT_GATE_FAILURE)


# =============================================================================
# EXPORT
# =============================================================================

@cli.command()
@click.argument("figure", type=click.Choice(list(exporter.FIGURES)))
@click.option("--a", "a", type=float, default=0.0, show_default=True)
@click.option("--b", "b", type=float, default=0.0, show_default=True)
@click.option("--d", "d", type=float, help="Conditioning value for fig2 (default: b).")
@click.option("--T", "T", type=float, default=1.0, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--steps", type=int, default=DEFAULT_STEPS, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@no_manifest_option
@click.pass_context
@handle_errors
def export(ctx, figure, a, b, d, T, sigma, steps, seed, out, no_manifest):
    """Write the CSV data of one figure."""
    started = exporter.utc_now()
    notes = exporter.export_figure(figure, out, BridgeSpec(a=a, b=b, T=T), steps, seed, sigma, d)
    _write_manifest(ctx, started, [out], seed, notes)
    click.echo(str(out))


# =============================================================================
# MANIFEST
# =============================================================================

@cli.group()
def manifest():
    """Run manifests."""


@manifest.command()
@click.argument("manifest_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
@handle_errors
def replay(ctx, manifest_file: Path):
    """Re-run a recorded command and check every output digest."""
    recorded = RunManifest.model_validate_json(manifest_file.read_text(encoding="utf-8"))
    logger.info(f"🔁 Replaying: {' '.join(recorded.command)}")
    code = cli.main(args=recorded.command + ["--no-manifest"], prog_name="bridgelab", standalone_mode=False)
    if code not in (None, 0, EXIT_GATE_FAILURE):
        ctx.exit(code)
    matches = exporter.verify_digests(recorded)
    for name, ok in matches.items():
        click.echo(f"{'OK' if ok else 'MISMATCH'}\t{name}")
    if not all(matches.values()):
        ctx.exit(EXIT_GATE_FAILURE)

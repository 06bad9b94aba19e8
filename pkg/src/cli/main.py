"""
Command-line entry point.

    python -m src.cli simulate --preset opinion_submissive --seed 7
    python -m src.cli converge --preset test3 --replicas 10
    python -m src.cli consistency --config my_system.ini
    python -m src.cli cost --preset population3
    python -m src.cli list-presets

Exit codes: 0 success, 1 configuration error, 2 numerical blow-up,
3 consistency mismatch.
"""

import argparse
import sys
from typing import List, Optional

from ..core.exceptions import EXIT_CONFIG, ConfigurationError
from ..core.logger import logger
from ..core.messages import CliInvocation, CommandResult, OutputFormat, Overrides, Subcommand
from ..core.orchestrator import SimulationOrchestrator


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; here 2 means blow-up, so raise instead"""

    def error(self, message: str):
        raise ConfigurationError(message, location="cli")


def _tuple(values):
    return None if values is None else tuple(values)


def _scenario_options() -> argparse.ArgumentParser:
    parent = _ArgumentParser(add_help=False)
    source = parent.add_argument_group("scenario")
    source.add_argument("--preset", help="Built-in scenario name (see list-presets)")
    source.add_argument("--config", dest="config_path", help="Scenario configuration file")
    source.add_argument("--lenient", action="store_true", help="Ignore unknown config keys with a warning")
    source.add_argument("--force", action="store_true", help="Allow changing values a preset pins")

    overrides = parent.add_argument_group("overrides")
    overrides.add_argument("--seed", type=int, help="Master seed")
    overrides.add_argument("--tau", type=float, nargs="+", help="Step size(s); batch interval length")
    overrides.add_argument("--end-time", type=float, help="Final time T")
    overrides.add_argument("--replicas", type=int, help="Number of independent replicas")
    overrides.add_argument("--batch-sizes", type=int, nargs="+", help="Batch size p_i per species")
    overrides.add_argument("--particle-counts", type=int, nargs="+", help="Particle count N_i per species")
    overrides.add_argument("--ref-refinement", type=int, help="Reference step is tau / 2^s")
    overrides.add_argument("--record-times", type=float, nargs="+", help="Snapshot times")

    output = parent.add_argument_group("output")
    output.add_argument("--output", default="results", help="Output directory (default: results)")
    output.add_argument("--format", dest="output_format", choices=[f.value for f in OutputFormat], default="csv")
    output.add_argument("--workers", type=int, help="Replica worker threads (default: RBM_WORKERS or CPU count)")
    output.add_argument(
        "--legacy-beta",
        action="store_true",
        help="EXPERIMENTAL negative control: drop the b_i/min(b_i, b_j) factor in beta",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _scenario_options()
    parser = _ArgumentParser(prog="rbm-sim", description="Multi-species random batch particle simulator")
    commands = parser.add_subparsers(dest="subcommand", required=True, parser_class=_ArgumentParser)

    simulate = commands.add_parser("simulate", parents=[parent], help="Run batched (or full) dynamics")
    simulate.add_argument("--full", action="store_true", help="Use the full O(N^2) interaction instead")
    simulate.add_argument("--bins", type=int, default=50, help="Histogram bins for d = 1 (default: 50)")
    simulate.add_argument("--range", dest="value_range", type=float, nargs=2, metavar=("LO", "HI"))
    simulate.add_argument("--cluster-gap", type=float, default=1.0, help="Gap separating opinion clusters")
    simulate.add_argument("--no-trajectory", action="store_true", help="Skip the trajectory file")

    converge = commands.add_parser("converge", parents=[parent], help="Coupled error versus step size")
    converge.add_argument("--sweep", action="store_true", help="Error-versus-cost study over batch configurations")

    consistency = commands.add_parser("consistency", parents=[parent], help="Check mean and variance of chi")
    consistency.add_argument("--mc", dest="mc_samples", type=int, help="Monte-Carlo mode with N partitions")

    commands.add_parser("cost", parents=[parent], help="Kernel-evaluation counts per step")
    commands.add_parser("list-presets", help="Print the built-in scenario names")
    return parser


def parse_invocation(argv: Optional[List[str]] = None) -> CliInvocation:
    """
    Turn command-line arguments into a CliInvocation.

    Raises:
        ConfigurationError: Unknown flag or malformed value
    """
    args = build_parser().parse_args(argv)
    subcommand = Subcommand(args.subcommand)
    if subcommand == Subcommand.LIST_PRESETS:
        return CliInvocation(subcommand=subcommand)
    overrides = Overrides(
        seed=args.seed,
        tau=_tuple(args.tau),
        end_time=args.end_time,
        replicas=args.replicas,
        batch_sizes=_tuple(args.batch_sizes),
        particle_counts=_tuple(args.particle_counts),
        ref_refinement=args.ref_refinement,
        record_times=_tuple(args.record_times),
    )
    return CliInvocation(
        subcommand=subcommand,
        preset=args.preset,
        config_path=args.config_path,
        output=args.output,
        output_format=OutputFormat(args.output_format),
        overrides=overrides,
        force=args.force,
        lenient=args.lenient,
        workers=args.workers,
        full=getattr(args, "full", False),
        sweep=getattr(args, "sweep", False),
        bins=getattr(args, "bins", 50),
        value_range=_tuple(getattr(args, "value_range", None)),
        cluster_gap=getattr(args, "cluster_gap", 1.0),
        write_trajectory=not getattr(args, "no_trajectory", False),
        mc_samples=getattr(args, "mc_samples", None),
        legacy_beta=args.legacy_beta,
    )


def run(argv: Optional[List[str]] = None) -> CommandResult:
    """Parse and execute; usage errors become exit code 1"""
    try:
        invocation = parse_invocation(argv)
    except ConfigurationError as e:
        logger.get_logger().error(str(e))
        return CommandResult(exit_code=EXIT_CONFIG, message=str(e))
    return SimulationOrchestrator().handle_command(invocation)


def main(argv: Optional[List[str]] = None) -> int:
    result = run(argv)
    stream = sys.stdout if result.success else sys.stderr
    if result.message:
        print(result.message, file=stream)
    for path in result.files:
        print(f"wrote {path}", file=stream)
    return result.exit_code

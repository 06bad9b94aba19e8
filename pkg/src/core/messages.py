"""Dataclasses passed between the command line and the orchestrator"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from .exceptions import EXIT_OK, ConfigurationError


class Subcommand(str, Enum):
    """Top-level CLI actions"""
    SIMULATE = "simulate"
    CONVERGE = "converge"
    CONSISTENCY = "consistency"
    COST = "cost"
    LIST_PRESETS = "list-presets"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class Overrides:
    """Command-line overrides; None leaves the scenario value unchanged"""
    seed: Optional[int] = None
    tau: Optional[Tuple[float, ...]] = None
    end_time: Optional[float] = None
    replicas: Optional[int] = None
    batch_sizes: Optional[Tuple[int, ...]] = None
    particle_counts: Optional[Tuple[int, ...]] = None
    ref_refinement: Optional[int] = None
    record_times: Optional[Tuple[float, ...]] = None


@dataclass
class CliInvocation:
    """One parsed command line"""
    subcommand: Subcommand
    preset: Optional[str] = None
    config_path: Optional[str] = None
    output: str = "results"
    output_format: OutputFormat = OutputFormat.CSV
    overrides: Overrides = field(default_factory=Overrides)
    force: bool = False
    lenient: bool = False
    workers: Optional[int] = None
    full: bool = False
    sweep: bool = False
    bins: int = 50
    value_range: Optional[Tuple[float, float]] = None
    cluster_gap: float = 1.0
    write_trajectory: bool = True
    mc_samples: Optional[int] = None
    legacy_beta: bool = False  # experimental negative control

    def validate(self) -> None:
        """
        Reject ambiguous or conflicting requests before any computation.

        Raises:
            ConfigurationError: Missing or duplicate scenario source, or
                flags that cannot be combined
        """
        if self.subcommand == Subcommand.LIST_PRESETS:
            return
        if (self.preset is None) == (self.config_path is None):
            raise ConfigurationError("exactly one of --preset or --config is required", location="cli")
        if self.full and self.legacy_beta:
            raise ConfigurationError("--full and --legacy-beta cannot be combined", location="cli")
        if self.sweep and self.overrides.batch_sizes is not None:
            raise ConfigurationError("--sweep sets its own batch sizes; drop --batch-sizes", location="cli")
        if self.mc_samples is not None and self.mc_samples < 2:
            raise ConfigurationError(f"--mc needs at least 2 samples, got {self.mc_samples}", location="cli")
        if self.bins < 1:
            raise ConfigurationError(f"--bins must be positive, got {self.bins}", location="cli")
        if self.value_range is not None and not self.value_range[0] < self.value_range[1]:
            raise ConfigurationError(f"--range needs lo < hi, got {list(self.value_range)}", location="cli")


@dataclass
class CommandResult:
    """Outcome of one subcommand: exit code, console line and written files"""
    exit_code: int = EXIT_OK
    message: str = ""
    files: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.exit_code == EXIT_OK

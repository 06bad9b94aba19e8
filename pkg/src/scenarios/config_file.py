"""
Scenario configuration files.

INI text with sections [system], [species.i], [kernel.i.j], [run] and an
optional [sweep] (i, j are 1-based species ids). Values are plain scalars or
lists: list items are separated by commas, nested lists (point clouds, batch
configurations) by semicolons. Kernel pairs without a section are Zero.
The full grammar is documented in docs/FORMATS.md.
"""

import configparser
import re
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from ..core.exceptions import ConfigParseError, ConfigurationError
from ..core.logger import logger
from ..core.storage import to_json_text
from ..model.diffusion import DiffusionSpec
from ..model.kernels import KernelForm, KernelSpec
from ..model.potentials import PotentialForm, PotentialSpec
from ..model.system import GaussianInit, PointCloudInit, SpeciesSpec, SystemSpec, UniformInit, ensure_valid
from .presets import RunParameters, Scenario, SweepParameters

SPECIES_SECTION = re.compile(r"^species\.(\d+)$")
KERNEL_SECTION = re.compile(r"^kernel\.(\d+)\.(\d+)$")

# validation keys that are spelled differently in the file
_KEY_ALIASES = {"uniform": "lo", "index": None}


def _split_list(value: Any) -> Any:
    if not isinstance(value, str):
        return value
    return [item for item in re.split(r"[,\s]+", value.strip()) if item]


def _split_nested(value: Any) -> Any:
    if not isinstance(value, str):
        return value
    return [_split_list(part) for part in value.split(";") if part.strip()]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSection(_Section):
    name: str = "custom"
    dimension: int
    end_time: float
    noise_as_drift: bool = False
    pinned: bool = False


class SpeciesSection(_Section):
    particle_count: int
    batch_size: int
    diffusion: str = "additive"
    sigma: float = 0.0
    profile: Optional[str] = None
    potential: str = "none"
    convexity_r: float = 0.0
    center: Optional[List[float]] = None
    initial: str = "gaussian"
    mean: Optional[List[float]] = None
    variance: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    positions: Optional[List[List[float]]] = None

    @field_validator("center", "mean", mode="before")
    @classmethod
    def _vector(cls, value):
        return _split_list(value)

    @field_validator("positions", mode="before")
    @classmethod
    def _points(cls, value):
        return _split_nested(value)


class KernelSection(_Section):
    form: KernelForm
    charge_i: float = 0.0
    charge_j: float = 0.0
    strength: float = 0.0
    width: float = 1.0
    orientation: float = 1.0


class RunSection(_Section):
    tau: List[float]
    replicas: int = 1
    seed: int = 0
    record_times: List[float] = []
    ref_refinement: int = 2
    reference_tau: List[float] = []
    substeps: int = 1
    checks: List[str] = []
    particle_count_options: List[List[int]] = []

    @field_validator("tau", "record_times", "reference_tau", "checks", mode="before")
    @classmethod
    def _flat(cls, value):
        return _split_list(value)

    @field_validator("particle_count_options", mode="before")
    @classmethod
    def _nested(cls, value):
        return _split_nested(value)


class SweepSection(_Section):
    batch_sizes: List[List[int]]
    tau: List[float]
    end_time: float
    ref_refinement: int = 2

    @field_validator("tau", mode="before")
    @classmethod
    def _flat(cls, value):
        return _split_list(value)

    @field_validator("batch_sizes", mode="before")
    @classmethod
    def _nested(cls, value):
        return _split_nested(value)


@dataclass
class _SourceMap:
    """1-based (line, column) of every section header and key value in the text"""
    sections: Dict[str, Tuple[int, int]]
    keys: Dict[Tuple[str, str], Tuple[int, int]]

    @classmethod
    def scan(cls, text: str) -> "_SourceMap":
        sections: Dict[str, Tuple[int, int]] = {}
        keys: Dict[Tuple[str, str], Tuple[int, int]] = {}
        current = None
        for number, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped[0] in "#;":
                continue
            if stripped.startswith("[") and stripped.endswith("]"):
                current = stripped[1:-1].strip()
                sections.setdefault(current, (number, line.index("[") + 1))
                continue
            if current is not None and "=" in line:
                key, _, rest = line.partition("=")
                column = len(key) + 2 + (len(rest) - len(rest.lstrip()))
                keys.setdefault((current, key.strip().lower()), (number, column))
        return cls(sections=sections, keys=keys)

    def find(self, location: Optional[str]) -> Tuple[int, int]:
        """Position of a dotted location such as species.1.batch_size (0, 0 when unknown)"""
        if not location:
            return 0, 0
        if location in self.sections:
            return self.sections[location]
        section, _, key = location.rpartition(".")
        key = _KEY_ALIASES.get(key, key)
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section, (0, 0))


def _parse_error(location: str, message: str, source: _SourceMap) -> ConfigParseError:
    line, column = source.find(location)
    return ConfigParseError(message, line=line, column=column, location=location)


def _read_ini(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#",),
        interpolation=None,
        strict=True,
    )
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("expected a [section] header before the first key", line=exc.lineno, column=1) from exc
    except configparser.ParsingError as exc:
        line, content = exc.errors[0]
        raise ConfigParseError(f"cannot parse {content.strip()!r}", line=line, column=1) from exc
    except configparser.Error as exc:
        line = getattr(exc, "lineno", 0) or 0
        raise ConfigParseError(exc.message.splitlines()[0], line=line, column=1) from exc
    return parser


def _section_model(
    parser: configparser.ConfigParser,
    name: str,
    model: type,
    source: _SourceMap,
    lenient: bool,
):
    values = dict(parser.items(name))
    if lenient:
        for key in [k for k in values if k not in model.model_fields]:
            line, _ = source.find(f"{name}.{key}")
            logger.get_logger().warning(f"line {line}: ignoring unknown key '{name}.{key}'")
            del values[key]
    try:
        return model(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else ""
        location = f"{name}.{key}" if key else name
        if first["type"] == "extra_forbidden":
            message = f"unknown key '{key}'"
        elif first["type"] == "missing":
            message = f"missing required key '{key}'"
        else:
            message = first["msg"]
        raise _parse_error(location, message, source) from exc


def _vector(values: Optional[List[float]], dimension: int) -> Tuple[float, ...]:
    if values is None:
        return (0.0,) * dimension
    return tuple(float(v) for v in values)


def _build_species(index: int, section: SpeciesSection, dimension: int, source: _SourceMap) -> SpeciesSpec:
    where = f"species.{index}"
    if section.diffusion == "additive":
        diffusion = DiffusionSpec.additive(section.sigma)
    elif section.diffusion == "multiplicative":
        if section.profile is None:
            raise _parse_error(f"{where}.profile", "multiplicative diffusion needs a profile", source)
        try:
            diffusion = DiffusionSpec.multiplicative(section.profile, section.sigma)
        except ConfigurationError as exc:
            raise _parse_error(f"{where}.profile", str(exc), source) from exc
    else:
        raise _parse_error(f"{where}.diffusion", f"unknown diffusion '{section.diffusion}'", source)

    if section.potential == PotentialForm.QUADRATIC_WELL.value:
        potential = PotentialSpec.quadratic_well(section.convexity_r, _vector(section.center, dimension))
    elif section.potential == PotentialForm.NONE.value:
        potential = PotentialSpec.none()
    else:
        raise _parse_error(f"{where}.potential", f"unknown potential '{section.potential}'", source)

    if section.initial == "gaussian":
        initial = GaussianInit(mean=_vector(section.mean, dimension), variance=section.variance)
    elif section.initial == "uniform":
        initial = UniformInit(lo=section.lo, hi=section.hi)
    elif section.initial == "points":
        if section.positions is None:
            raise _parse_error(f"{where}.positions", "point-cloud initial data needs positions", source)
        initial = PointCloudInit(positions=tuple(tuple(float(v) for v in p) for p in section.positions))
    else:
        raise _parse_error(f"{where}.initial", f"unknown initial distribution '{section.initial}'", source)

    return SpeciesSpec(
        index=index,
        particle_count=section.particle_count,
        batch_size=section.batch_size,
        diffusion=diffusion,
        potential=potential,
        initial=initial,
    )


def _build_kernel(name: str, section: KernelSection, source: _SourceMap) -> KernelSpec:
    try:
        if section.form == KernelForm.ZERO:
            return KernelSpec.zero()
        if section.form == KernelForm.SCALED_CAUCHY:
            return KernelSpec.scaled_cauchy(section.charge_i, section.charge_j)
        if section.form == KernelForm.BUMP_GRADIENT:
            return KernelSpec.bump_gradient(section.strength, section.width, section.orientation)
        if section.form == KernelForm.OPINION:
            return KernelSpec.opinion(section.strength, section.width)
    except ValueError as exc:
        raise _parse_error(f"{name}.form", str(exc), source) from exc
    raise _parse_error(f"{name}.form", "custom kernels cannot be declared in a config file", source)


def load_config(text: str, lenient: bool = False, source: Optional[str] = None) -> Scenario:
    """
    Parse configuration text into a validated Scenario.

    Args:
        text: Configuration file content
        lenient: Drop unknown keys with a warning instead of failing
        source: File name used in log messages

    Returns:
        Fully resolved scenario (not pinned unless the file says so)

    Raises:
        ConfigParseError: Grammar, type or validation problem, with line/column
            and the dotted config location
    """
    log = logger.get_logger()
    where = source or "<config>"
    positions = _SourceMap.scan(text)
    parser = _read_ini(text)

    species_ids: Dict[int, str] = {}
    kernel_ids: Dict[Tuple[int, int], str] = {}
    for name in parser.sections():
        if name in ("system", "run", "sweep"):
            continue
        match = SPECIES_SECTION.match(name)
        if match:
            species_ids[int(match.group(1))] = name
            continue
        match = KERNEL_SECTION.match(name)
        if match:
            kernel_ids[(int(match.group(1)), int(match.group(2)))] = name
            continue
        if lenient:
            log.warning(f"{where}: ignoring unknown section [{name}]")
            continue
        raise _parse_error(name, f"unknown section [{name}]", positions)

    for required in ("system", "run"):
        if not parser.has_section(required):
            raise ConfigParseError(f"missing [{required}] section", location=required)
    n = len(species_ids)
    if sorted(species_ids) != list(range(1, n + 1)):
        raise ConfigParseError(
            f"species sections must be numbered 1..n without gaps, got {sorted(species_ids)}",
            location="species",
        )
    for (i, j), name in kernel_ids.items():
        if not (1 <= i <= n and 1 <= j <= n):
            raise _parse_error(name, f"kernel pair ({i}, {j}) outside species 1..{n}", positions)

    system = _section_model(parser, "system", SystemSection, positions, lenient)
    run = _section_model(parser, "run", RunSection, positions, lenient)
    species = tuple(
        _build_species(
            i, _section_model(parser, species_ids[i], SpeciesSection, positions, lenient), system.dimension, positions
        )
        for i in range(1, n + 1)
    )
    kernels = tuple(
        tuple(
            _build_kernel(kernel_ids[(i, j)], _section_model(
                parser, kernel_ids[(i, j)], KernelSection, positions, lenient), positions)
            if (i, j) in kernel_ids else KernelSpec.zero()
            for j in range(1, n + 1)
        )
        for i in range(1, n + 1)
    )
    if not run.tau:
        raise _parse_error("run.tau", "at least one step size is required", positions)

    spec = SystemSpec(
        dimension=system.dimension,
        species=species,
        kernels=kernels,
        end_time=system.end_time,
        step=min(run.tau),
        noise_as_drift=system.noise_as_drift,
        substeps=run.substeps,
    )
    try:
        ensure_valid(spec)
    except ConfigurationError as exc:
        line, column = positions.find(exc.location)
        first = next((d for d in exc.diagnostics if d.is_error), None)
        message = first.message if first is not None else str(exc)
        raise ConfigParseError(message, line=line, column=column, location=exc.location) from exc

    sweep = None
    if parser.has_section("sweep"):
        section = _section_model(parser, "sweep", SweepSection, positions, lenient)
        sweep = SweepParameters(
            batch_configurations=tuple(tuple(c) for c in section.batch_sizes),
            tau_list=tuple(section.tau),
            end_time=section.end_time,
            ref_refinement=section.ref_refinement,
        )

    scenario = Scenario(
        name=system.name,
        spec=spec,
        run=RunParameters(
            tau_list=tuple(sorted(run.tau, reverse=True)),
            replicas=run.replicas,
            seed=run.seed,
            record_times=tuple(run.record_times),
            ref_refinement=run.ref_refinement,
            reference_tau_list=tuple(run.reference_tau),
        ),
        sweep=sweep,
        checks=tuple(run.checks),
        particle_count_options=tuple(tuple(option) for option in run.particle_count_options),
        pinned=system.pinned,
    )
    log.info(f"Loaded scenario '{scenario.name}' from {where}: n={n}, d={spec.dimension}")
    return scenario


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], (list, tuple)):
            return "; ".join(_format(item) for item in value)
        return ", ".join(_format(item) for item in value)
    return str(value)


def _species_lines(species: SpeciesSpec) -> List[Tuple[str, Any]]:
    diffusion = species.diffusion
    potential = species.potential
    initial = species.initial
    where = f"species.{species.index}"
    lines: List[Tuple[str, Any]] = [
        ("particle_count", species.particle_count),
        ("batch_size", species.batch_size),
    ]
    if diffusion.is_additive:
        lines += [("diffusion", "additive"), ("sigma", diffusion.sigma)]
    elif diffusion.profile is not None:
        lines += [("diffusion", "multiplicative"), ("profile", diffusion.profile), ("sigma", diffusion.sigma)]
    else:
        raise ConfigurationError("custom diffusion cannot be written to a config file", location=f"{where}.diffusion")

    if potential.form == PotentialForm.QUADRATIC_WELL:
        lines += [
            ("potential", potential.form.value),
            ("convexity_r", potential.convexity_r),
            ("center", potential.center),
        ]
    elif potential.form == PotentialForm.NONE:
        lines.append(("potential", potential.form.value))
    else:
        raise ConfigurationError("custom potentials cannot be written to a config file", location=f"{where}.potential")

    if isinstance(initial, GaussianInit):
        lines += [("initial", "gaussian"), ("mean", initial.mean), ("variance", initial.variance)]
    elif isinstance(initial, UniformInit):
        lines += [("initial", "uniform"), ("lo", initial.lo), ("hi", initial.hi)]
    else:
        lines += [("initial", "points"), ("positions", initial.positions)]
    return lines


def _kernel_lines(kernel: KernelSpec, location: str) -> List[Tuple[str, Any]]:
    if kernel.form == KernelForm.SCALED_CAUCHY:
        return [("form", kernel.form.value), ("charge_i", kernel.charge_i), ("charge_j", kernel.charge_j)]
    if kernel.form == KernelForm.BUMP_GRADIENT:
        return [
            ("form", kernel.form.value),
            ("strength", kernel.strength),
            ("width", kernel.width),
            ("orientation", kernel.orientation),
        ]
    if kernel.form == KernelForm.OPINION:
        return [("form", kernel.form.value), ("strength", kernel.strength), ("width", kernel.width)]
    raise ConfigurationError("custom kernels cannot be written to a config file", location=location)


def serialize(scenario: Scenario) -> str:
    """
    Render a scenario in the config grammar; load_config(serialize(s)) == s.

    Floats are written with repr so every value survives the round trip.

    Raises:
        ConfigurationError: The scenario uses custom callables
    """
    spec = scenario.spec
    run = scenario.run
    blocks: List[Tuple[str, List[Tuple[str, Any]]]] = []
    system = [("name", scenario.name), ("dimension", spec.dimension), ("end_time", spec.end_time)]
    if spec.noise_as_drift:
        system.append(("noise_as_drift", True))
    if scenario.pinned:
        system.append(("pinned", True))
    blocks.append(("system", system))

    for species in spec.species:
        blocks.append((f"species.{species.index}", _species_lines(species)))
    for i, row in enumerate(spec.kernels):
        for j, kernel in enumerate(row):
            if kernel.form == KernelForm.ZERO:
                continue
            name = f"kernel.{i + 1}.{j + 1}"
            blocks.append((name, _kernel_lines(kernel, name)))

    run_lines: List[Tuple[str, Any]] = [
        ("tau", run.tau_list),
        ("replicas", run.replicas),
        ("seed", run.seed),
        ("ref_refinement", run.ref_refinement),
    ]
    if spec.substeps != 1:
        run_lines.append(("substeps", spec.substeps))
    if run.record_times:
        run_lines.append(("record_times", run.record_times))
    if run.reference_tau_list:
        run_lines.append(("reference_tau", run.reference_tau_list))
    if scenario.checks:
        run_lines.append(("checks", scenario.checks))
    if scenario.particle_count_options:
        run_lines.append(("particle_count_options", scenario.particle_count_options))
    blocks.append(("run", run_lines))

    if scenario.sweep is not None:
        blocks.append(("sweep", [
            ("batch_sizes", scenario.sweep.batch_configurations),
            ("tau", scenario.sweep.tau_list),
            ("end_time", scenario.sweep.end_time),
            ("ref_refinement", scenario.sweep.ref_refinement),
        ]))

    parts = []
    for name, lines in blocks:
        body = "\n".join(f"{key} = {_format(value)}" for key, value in lines)
        parts.append(f"[{name}]\n{body}\n")
    return "\n".join(parts)


def scenario_json(scenario: Scenario) -> str:
    """Deterministic JSON rendering used in reports"""
    return to_json_text(scenario.to_dict())

"""
Experiment Configuration

Loads a YAML file into nested dataclasses, applies dotted command-line
overrides (section.key=value), rejects unknown keys, validates every
sub-configuration by building the objects it describes, and hashes the
canonical form of the result.
"""

import hashlib
import json
import logging
import math
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import List, Optional

from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from src.carleman.weight import WeightParams
from src.errors import ArgumentError, ConfigError
from src.geometry.cross_section import CrossSection
from src.geometry.modal import KGrid
from src.inverse.reconstruction import InversionConfig
from src.solvers.forward import SourceProfile, TimeGrid

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "WAVEGUIDE_OUTPUT_DIR"
PROFILES = ("constant", "decay")


@dataclass
class CrossSectionConfig:
    a: float = math.pi
    gamma_side: str = "right"
    l_max: int = 16


@dataclass
class GridConfig:
    k_max: float = 4.0
    n_k: int = 64
    T: float = 1.0
    n_t: int = 200


@dataclass
class CarlemanGridConfig:
    n_t: int = 64
    n_x: int = 64


@dataclass
class CarlemanConfig:
    rho: float = 4.0
    rho0: float = 4.0
    c_shift: float = 1.0
    lambda_list: List[float] = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    grid: CarlemanGridConfig = field(default_factory=CarlemanGridConfig)


@dataclass
class InverseConfig:
    l_fit: int = 16
    ridge: Optional[float] = None
    cutoff_policy: str = "adaptive"
    lambda_cut: Optional[float] = None
    m_budget: float = 1.0
    noise_level: Optional[float] = None


@dataclass
class SweepConfig:
    deltas: List[float] = field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    seed: Optional[int] = None
    active_energies: int = 6
    energy_cap: float = 30.0
    draws: int = 1


@dataclass
class ObservabilityConfig:
    sample_size: int = 50
    energy_cap: float = 30.0


@dataclass
class SourceConfig:
    profile: str = "constant"
    mu: float = 1.0


@dataclass
class ForwardConfig:
    noise_level: float = 0.0
    oracle_check: bool = False


@dataclass
class ExperimentConfig:
    """Everything one run needs; energy caps are in units of 1/T."""

    cross_section: CrossSectionConfig = field(default_factory=CrossSectionConfig)
    grids: GridConfig = field(default_factory=GridConfig)
    carleman: CarlemanConfig = field(default_factory=CarlemanConfig)
    inverse: InverseConfig = field(default_factory=InverseConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    observability: ObservabilityConfig = field(default_factory=ObservabilityConfig)
    source: SourceConfig = field(default_factory=SourceConfig)
    forward: ForwardConfig = field(default_factory=ForwardConfig)
    output_dir: str = "output"
    seed: int = 0

    # builders for the domain objects

    def cross_section_obj(self):
        c = self.cross_section
        return CrossSection(a=c.a, gamma_side=c.gamma_side, l_max=c.l_max)

    def kgrid(self):
        return KGrid(k_max=self.grids.k_max, n_k=self.grids.n_k)

    def timegrid(self):
        return TimeGrid(T=self.grids.T, n_t=self.grids.n_t)

    def profile(self, tg=None):
        tg = tg or self.timegrid()
        if self.source.profile == "decay":
            return SourceProfile.decay(self.source.mu, tg)
        return SourceProfile.constant_one(tg)

    def inversion(self):
        i = self.inverse
        return InversionConfig(
            l_fit=i.l_fit,
            ridge=i.ridge,
            cutoff_policy=i.cutoff_policy,
            lambda_cut=i.lambda_cut,
            m_budget=i.m_budget,
            noise_level=i.noise_level,
        )

    def weight_params(self):
        c = self.carleman
        return WeightParams(self.cross_section_obj(), T=self.grids.T, rho=c.rho, c_shift=c.c_shift)

    def sweep_seed(self):
        return self.seed if self.sweep.seed is None else self.sweep.seed

    def validate(self):
        """Build every sub-object once; any domain error becomes a ConfigError."""
        try:
            cs = self.cross_section_obj()
            self.kgrid()
            self.profile()
            self.inversion()
            self.weight_params()
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from exc
        if self.source.profile not in PROFILES:
            raise ConfigError(f"source.profile must be one of {PROFILES}, got {self.source.profile!r}")
        if self.inverse.l_fit > cs.l_max:
            raise ConfigError(f"inverse.l_fit={self.inverse.l_fit} exceeds cross_section.l_max={cs.l_max}")
        if self.carleman.grid.n_t < 4 or self.carleman.grid.n_x < 2:
            raise ConfigError("carleman.grid needs n_t >= 4 and n_x >= 2")
        if any(not m > 0 for m in self.carleman.lambda_list):
            raise ConfigError("carleman.lambda_list entries must be positive multipliers of lambda_0")
        if any(d < 0 for d in self.sweep.deltas):
            raise ConfigError("sweep.deltas must be nonnegative")
        if self.sweep.draws < 1 or self.sweep.active_energies < 1:
            raise ConfigError("sweep.draws and sweep.active_energies must be >= 1")
        if self.observability.sample_size < 1:
            raise ConfigError("observability.sample_size must be >= 1")
        if self.forward.noise_level < 0:
            raise ConfigError("forward.noise_level must be nonnegative")
        return self

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        canonical = json.dumps(_finite(self.to_dict()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _finite(value):
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_finite(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _coerce(value, annotation, path):
    origin = typing.get_origin(annotation)
    if origin is typing.Union:
        inner = [arg for arg in typing.get_args(annotation) if arg is not type(None)][0]
        return None if value is None else _coerce(value, inner, path)
    if origin in (list, List):
        (inner,) = typing.get_args(annotation)
        if not isinstance(value, (list, tuple)):
            value = [value]
        return [_coerce(item, inner, f"{path}[{i}]") for i, item in enumerate(value)]
    if is_dataclass(annotation):
        return _build(annotation, value, path)
    try:
        if annotation is bool:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("true", "false"):
                return str(value).lower() == "true"
            raise ValueError(value)
        if annotation is int:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ValueError(value)
            return int(float(value))
        if annotation is float:
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        if annotation is str:
            return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: cannot interpret {value!r} as {annotation.__name__}") from exc
    raise ConfigError(f"{path}: unsupported type {annotation!r}")


def _build(cls, mapping, path=""):
    if mapping is None:
        mapping = {}
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path or 'config root'}: expected a mapping, got {type(mapping).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(mapping) - set(known))
    if unknown:
        dotted = ", ".join(f"{path}.{key}" if path else str(key) for key in unknown)
        raise ConfigError(f"unknown configuration keys: {dotted}")
    kwargs = {}
    for name, value in mapping.items():
        dotted = f"{path}.{name}" if path else name
        kwargs[name] = _coerce(value, known[name].type, dotted)
    return cls(**kwargs)


def parse_override_value(raw):
    """Interpret an override value as a YAML scalar or flow list."""
    text = raw.strip()
    if not text:
        return None
    try:
        return YAML(typ="safe").load(text)
    except YAMLError as exc:
        raise ConfigError(f"cannot parse override value {raw!r}") from exc


def apply_overrides(payload, overrides):
    """Apply dotted-path overrides (section.key=value) to a raw mapping."""
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"invalid override {item!r}; expected path=value")
        parts = [segment for segment in key.strip().split(".") if segment]
        if not parts:
            raise ConfigError(f"invalid override {item!r}; empty path")
        target = payload
        for segment in parts[:-1]:
            if target.get(segment) is None:
                target[segment] = {}
            target = target[segment]
            if not isinstance(target, dict):
                raise ConfigError(f"cannot traverse into non-mapping for override {item!r} at {segment!r}")
        target[parts[-1]] = parse_override_value(value)
    return payload


def config_from_mapping(payload, overrides=None):
    payload = apply_overrides(dict(payload or {}), overrides)
    return _build(ExperimentConfig, payload).validate()


def load_config(path=None, overrides=None):
    """
    Load and validate a configuration.

    Args:
        path (str or Path): YAML file; None starts from the built-in defaults
        overrides (list): Dotted overrides such as 'grids.n_t=400'

    Returns:
        ExperimentConfig: Validated configuration

    Raises:
        ConfigError: On parse errors, unknown keys or invalid values
        OSError: If the file cannot be read
    """
    payload = {}
    if path is not None:
        source = Path(path)
        with source.open("r", encoding="utf-8") as fh:
            try:
                payload = YAML(typ="safe").load(fh)
            except YAMLError as exc:
                raise ConfigError(f"{source}: {exc}") from exc
        if payload is None:
            payload = {}
        if not isinstance(payload, dict):
            raise ConfigError(f"{source}: the YAML root must be a mapping")
        logger.info("loaded configuration from %s", source)
    return config_from_mapping(payload, overrides)

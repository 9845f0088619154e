import copy
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from es_verify.domain import EsParams, UsageError
from es_verify.utils.rng import DEFAULT_SEED

DEFAULTS_PATH = Path(__file__).with_name("defaults.json")

@dataclass
class EsDefaults:
    c_plus: float = math.log(2.0)
    c_minus: float = -math.log(2.0) / 4.0

    def params(self) -> EsParams:
        return EsParams(self.c_plus, self.c_minus)

@dataclass
class EstimatorSettings:
    confidence: float = 0.95
    chunk_size: int = 50000
    success_samples: int = 100000
    suboptimality_samples: int = 100000
    oracle_reference_samples: int = 200000
    grid_floor_factor: float = 1e-8
    grid_ceiling_factor: float = 1e2
    grid_points: int = 61
    per_point_budget: int = 4000
    bisection_steps: int = 12
    boundary_margin: float = 0.01

@dataclass
class CheckSettings:
    samples: int = 100000
    quantile_fractions: List[float] = None
    quantile_se_multiplier: float = 3.0
    scaling_factors: List[float] = None
    plateau_min_hits: int = 30
    regular_limit_sigmas: List[float] = None
    regular_limit_tolerance: float = 0.02
    rate_allowance: float = 0.01
    jump_corner_epsilon: float = 1e-3
    jump_corner_sigma: float = 1e-5
    jump_corner_allowance: float = 0.02
    probes: Dict[str, List[Dict[str, Any]]] = None
    suite: List[Dict[str, Any]] = None

    def __post_init__(self):
        if self.quantile_fractions is None:
            self.quantile_fractions = [0.1, 0.5, 0.9]
        if self.scaling_factors is None:
            self.scaling_factors = [1.0, 2.0, 4.0]
        if self.regular_limit_sigmas is None:
            self.regular_limit_sigmas = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
        if self.probes is None:
            self.probes = {}
        if self.suite is None:
            self.suite = []

@dataclass
class ExperimentSettings:
    sigma_floor: float = 1e-100
    stall_window: int = 1000
    history_stride: int = 100
    presets: Dict[str, Dict[str, Any]] = None

    def __post_init__(self):
        if self.presets is None:
            self.presets = {}

@dataclass
class RuntimeSettings:
    seed: int = DEFAULT_SEED
    jobs: int = 0
    output_format: str = "json"
    log_level: str = "INFO"

@dataclass
class AppConfig:
    version: str = "1"
    es: EsDefaults = None
    estimators: EstimatorSettings = None
    checks: CheckSettings = None
    experiments: ExperimentSettings = None
    runtime: RuntimeSettings = None

    def __post_init__(self):
        if self.es is None:
            self.es = EsDefaults()
        if self.estimators is None:
            self.estimators = EstimatorSettings()
        if self.checks is None:
            self.checks = CheckSettings()
        if self.experiments is None:
            self.experiments = ExperimentSettings()
        if self.runtime is None:
            self.runtime = RuntimeSettings()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AppConfig":
        sections = {
            "es": EsDefaults,
            "estimators": EstimatorSettings,
            "checks": CheckSettings,
            "experiments": ExperimentSettings,
            "runtime": RuntimeSettings,
        }
        unknown = set(data) - set(sections) - {"version"}
        if unknown:
            raise UsageError(f"unknown configuration sections: {sorted(unknown)}")
        kwargs = {"version": str(data.get("version", "1"))}
        for name, section_cls in sections.items():
            raw = dict(data.get(name) or {})
            allowed = {f.name for f in fields(section_cls)}
            bad = set(raw) - allowed
            if bad:
                raise UsageError(f"unknown keys in configuration section '{name}': {sorted(bad)}")
            kwargs[name] = section_cls(**raw)
        return cls(**kwargs)

def _deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged

def _apply_override(data: Dict[str, Any], dotted_key: str, value: Any) -> None:
    parts = dotted_key.split(".")
    node = data
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise UsageError(f"cannot override '{dotted_key}': '{part}' is not a section")
        node = node[part]
    node[parts[-1]] = value

def load_defaults() -> Dict[str, Any]:
    with open(DEFAULTS_PATH, encoding="utf-8") as handle:
        return json.load(handle)

def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> AppConfig:
    """
    Load configuration: shipped defaults, then an optional JSON file, then
    dotted ``section.key`` overrides.
    """
    data = load_defaults()
    if path:
        try:
            with open(path, encoding="utf-8") as handle:
                data = _deep_merge(data, json.load(handle))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read configuration file {path}: {e}") from e
    for key, value in (overrides or {}).items():
        _apply_override(data, key, value)
    return AppConfig.from_dict(data)

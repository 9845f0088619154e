# domain/models.py

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from es_verify.domain.errors import ParameterError


class OutcomeLabel(Enum):
    """Final classification of a single ES run."""
    CONVERGED_TO_OPTIMUM = "ConvergedToOptimum"
    DIVERGED = "Diverged"
    STALLED = "Stalled"
    BUDGET_EXHAUSTED = "BudgetExhausted"


class StopReason(Enum):
    """Which stopping criterion ended a run."""
    TARGET_REACHED = "target_reached"
    DIVERGED = "diverged"
    STALLED = "stalled"
    BUDGET = "budget"


class SuccessMode(Enum):
    STRICT = "strict"
    WEAK = "weak"


class SigmaRangeStatus(Enum):
    OK = "ok"
    AT_GRID_FLOOR = "at_grid_floor"
    AT_GRID_CEILING = "at_grid_ceiling"
    EMPTY_SET = "empty_set"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class EsParams:
    """
    Step-size rule of the (1+1)-ES.

    sigma is multiplied by exp(c_plus) after a success and by exp(c_minus)
    after a failure. The target success probability tau is always derived
    from the two constants.
    """
    c_plus: float = math.log(2.0)
    c_minus: float = -math.log(2.0) / 4.0

    def __post_init__(self):
        if not (self.c_plus > 0.0):
            raise ParameterError(f"c_plus must be positive, got {self.c_plus}")
        if not (self.c_minus < 0.0):
            raise ParameterError(f"c_minus must be negative, got {self.c_minus}")
        if not (self.c_plus > -self.c_minus):
            raise ParameterError(
                f"c_plus ({self.c_plus}) must exceed -c_minus ({-self.c_minus}) so that tau < 1/2"
            )

    @property
    def tau(self) -> float:
        # c_minus / (c_minus - c_plus); this form gives exactly 0.2 for the 1/5 rule
        return 1.0 / (1.0 - self.c_plus / self.c_minus)

    @classmethod
    def one_fifth(cls) -> "EsParams":
        return cls(math.log(2.0), -math.log(2.0) / 4.0)

    @classmethod
    def dimension_scaled(cls, dimension: int) -> "EsParams":
        if dimension < 1:
            raise ParameterError(f"dimension must be >= 1, got {dimension}")
        return cls(2.0 / dimension, -1.0 / (2.0 * dimension))

    @classmethod
    def with_tau(cls, tau: float, c_plus: float = math.log(2.0)) -> "EsParams":
        """Keep c_plus and solve c_minus so that the target rate equals tau."""
        if not (0.0 < tau < 0.5):
            raise ParameterError(f"tau must lie in (0, 1/2), got {tau}")
        return cls(c_plus, -tau * c_plus / (1.0 - tau))

    def to_dict(self) -> Dict[str, float]:
        return {"c_plus": self.c_plus, "c_minus": self.c_minus}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EsParams":
        if "tau" in data and "c_minus" not in data:
            return cls.with_tau(float(data["tau"]), float(data.get("c_plus", math.log(2.0))))
        return cls(float(data.get("c_plus", math.log(2.0))),
                   float(data.get("c_minus", -math.log(2.0) / 4.0)))


@dataclass(frozen=True, eq=False)
class EsState:
    """Markov-chain state (m, sigma, t). sigma is kept as its logarithm."""
    m: np.ndarray
    log_sigma: float
    t: int = 0
    f: Optional[float] = None

    @property
    def sigma(self) -> float:
        return math.exp(self.log_sigma)

    @property
    def dimension(self) -> int:
        return int(self.m.shape[0])

    @classmethod
    def initial(cls, m0: Sequence[float], sigma0: float, f: Optional[float] = None) -> "EsState":
        m = np.asarray(m0, dtype=float).reshape(-1).copy()
        if not np.all(np.isfinite(m)):
            raise ParameterError(f"initial point must be finite, got {m.tolist()}")
        if not (sigma0 > 0.0) or not math.isfinite(sigma0):
            raise ParameterError(f"initial step size must be positive and finite, got {sigma0}")
        return cls(m=m, log_sigma=math.log(sigma0), t=0, f=f)


@dataclass(frozen=True, eq=False)
class StepRecord:
    """One iteration of the algorithm; sigma values are stored as logarithms."""
    t: int
    m_before: np.ndarray
    log_sigma_before: float
    x: np.ndarray
    f_parent: float
    f_offspring: float
    accepted: bool
    log_sigma_after: float

    @property
    def sigma_before(self) -> float:
        return math.exp(self.log_sigma_before)

    @property
    def sigma_after(self) -> float:
        return math.exp(self.log_sigma_after)

    def to_dict(self) -> Dict[str, Any]:
        # field order is part of the JSON-lines format
        return {
            "t": self.t,
            "m_before": [float(v) for v in self.m_before],
            "sigma_before": self.sigma_before,
            "x": [float(v) for v in self.x],
            "f_parent": float(self.f_parent),
            "f_offspring": float(self.f_offspring),
            "accepted": bool(self.accepted),
            "sigma_after": self.sigma_after,
        }


@dataclass(frozen=True)
class StoppingRule:
    """
    When ``es_run`` stops. ``stall_window`` counts consecutive iterations
    spent with sigma below ``sigma_floor``, accepted or not; a run stalls
    once the count reaches the window. Without a floor nothing stalls.
    """

    max_iterations: int
    f_target: Optional[float] = None
    sigma_floor: Optional[float] = None
    stall_window: int = 1000
    divergence_radius: Optional[float] = None
    divergence_level: Optional[float] = None

    def __post_init__(self):
        if self.max_iterations is None or int(self.max_iterations) < 0:
            raise ParameterError(f"max_iterations must be a non-negative integer, got {self.max_iterations}")
        if self.sigma_floor is not None and not (self.sigma_floor > 0.0):
            raise ParameterError(f"sigma_floor must be positive, got {self.sigma_floor}")
        if self.stall_window < 0:
            raise ParameterError(f"stall_window must be >= 0, got {self.stall_window}")

    @property
    def log_sigma_floor(self) -> Optional[float]:
        return None if self.sigma_floor is None else math.log(self.sigma_floor)

    @property
    def has_divergence_criterion(self) -> bool:
        return self.divergence_radius is not None or self.divergence_level is not None

    def divergence_tripped(self, m: np.ndarray, f: float) -> bool:
        if self.divergence_radius is not None and float(np.linalg.norm(m)) >= self.divergence_radius:
            return True
        if self.divergence_level is not None and -f >= self.divergence_level:
            return True
        return False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_iterations": int(self.max_iterations),
            "f_target": self.f_target,
            "sigma_floor": self.sigma_floor,
            "stall_window": int(self.stall_window),
            "divergence_radius": self.divergence_radius,
            "divergence_level": self.divergence_level,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StoppingRule":
        def _opt(key):
            value = data.get(key)
            return None if value is None else float(value)
        return cls(
            max_iterations=int(data["max_iterations"]),
            f_target=_opt("f_target"),
            sigma_floor=_opt("sigma_floor"),
            stall_window=int(data.get("stall_window", 1000)),
            divergence_radius=_opt("divergence_radius"),
            divergence_level=_opt("divergence_level"),
        )


@dataclass(eq=False)
class RunTrace:
    """Full (or stride-thinned) history of one run."""
    params: EsParams
    objective_id: str
    seed: int
    stopping: StoppingRule
    initial_state: EsState
    final_state: EsState
    records: List[StepRecord] = field(default_factory=list)
    record_stride: int = 1
    stop_reason: StopReason = StopReason.BUDGET
    accepted_count: int = 0
    low_sigma_streak: int = 0
    outcome: Optional[OutcomeLabel] = None

    @property
    def iterations(self) -> int:
        return self.final_state.t - self.initial_state.t

    def f_parent_sequence(self) -> List[float]:
        return [r.f_parent for r in self.records]


@dataclass(frozen=True)
class CantorSpec:
    variant: str = "fat"
    depth: int = 40

    def __post_init__(self):
        if self.variant not in ("fat", "null"):
            raise ParameterError(f"Cantor variant must be 'fat' or 'null', got {self.variant!r}")
        if int(self.depth) < 1:
            raise ParameterError(f"Cantor depth must be >= 1, got {self.depth}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box."""
    low: Tuple[float, ...]
    high: Tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.low)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.high) - np.asarray(self.low)))

    @classmethod
    def cube(cls, half_width: float, dimension: int) -> "Box":
        return cls((-half_width,) * dimension, (half_width,) * dimension)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        low = np.asarray(self.low)
        high = np.asarray(self.high)
        return low + (high - low) * rng.random((n, self.dimension))


@dataclass(frozen=True)
class KnownOptimum:
    point: Tuple[float, ...]
    tolerance: float = 1e-6


@dataclass(frozen=True)
class RatePoint:
    """A named point with its closed-form limiting success rate."""
    name: str
    point: Tuple[float, ...]
    rate: float


@dataclass(frozen=True)
class EstimationResult:
    estimate: float
    ci_halfwidth: float
    n_samples: int
    seed: int
    ci_low: float = 0.0
    ci_high: float = 0.0
    successes: Optional[int] = None
    kind: str = ""
    inputs: Dict[str, Any] = field(default_factory=dict)
    warnings: Tuple[str, ...] = ()

    @property
    def standard_error(self) -> float:
        """Binomial standard error for proportion estimates, CI-derived otherwise."""
        if self.successes is not None and self.n_samples > 0:
            p = self.estimate
            return math.sqrt(max(p * (1.0 - p), 0.0) / self.n_samples)
        return self.ci_halfwidth / 1.959963984540054


@dataclass(frozen=True)
class SigmaGrid:
    floor: float
    ceiling: float
    points: int = 61

    def __post_init__(self):
        if not (0.0 < self.floor < self.ceiling):
            raise ParameterError(f"sigma grid needs 0 < floor < ceiling, got {self.floor}, {self.ceiling}")
        if self.points < 32:
            raise ParameterError(f"sigma grid needs at least 32 points, got {self.points}")

    def values(self) -> np.ndarray:
        return np.geomspace(self.floor, self.ceiling, self.points)

    @classmethod
    def around(cls, m: Sequence[float], floor_factor: float = 1e-8,
               ceiling_factor: float = 1e2, points: int = 61) -> "SigmaGrid":
        scale = max(float(np.linalg.norm(np.asarray(m, dtype=float))), 1.0)
        return cls(floor_factor * scale, ceiling_factor * scale, points)


@dataclass(frozen=True)
class SigmaRangeEstimate:
    """Estimates of xi_p (too-small threshold) and/or eta_p (too-large threshold)."""
    p: float
    grid: SigmaGrid
    per_point_budget: int
    seed: int
    xi_hat: Optional[float] = None
    xi_status: Optional[SigmaRangeStatus] = None
    xi_bracket: Optional[Tuple[float, float]] = None
    eta_hat: Optional[float] = None
    eta_status: Optional[SigmaRangeStatus] = None
    eta_bracket: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    sigmas: Tuple[float, ...]
    estimates: Tuple[float, ...]
    dropped_sigmas: Tuple[float, ...] = ()
    seed: int = 0


@dataclass(frozen=True)
class CumulativeSuccess:
    """Success probabilities along the pure-rejection step-size ladder."""
    total: float
    never_success: float
    sigma0: float
    c_minus: float
    horizon: int
    per_step: Tuple[float, ...]
    n_samples: int
    seed: int


@dataclass(frozen=True)
class PlateauStats:
    levels: Tuple[float, ...]
    r_less: Tuple[float, ...]
    r_leq: Tuple[float, ...]
    zeta: float
    zeta_below: float
    level_mass: float
    density_sup: float
    residual_mass: float = 0.0
    undersampled_levels: Tuple[float, ...] = ()


@dataclass(frozen=True)
class BoundCheckReport:
    check_id: str
    parameters: Dict[str, Any]
    empirical: Dict[str, Any]
    bound: Dict[str, Any]
    slack: float
    tolerance: float
    passed: bool
    n_samples: int
    seed: int
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_slack(cls, check_id: str, parameters: Dict[str, Any], empirical: Dict[str, Any],
                   bound: Dict[str, Any], slack: float, tolerance: float, n_samples: int,
                   seed: int, details: Optional[Dict[str, Any]] = None) -> "BoundCheckReport":
        passed = bool(slack >= -tolerance) if math.isfinite(slack) else slack > 0
        return cls(check_id, parameters, empirical, bound, float(slack), float(tolerance),
                   passed, int(n_samples), int(seed), details or {})


@dataclass(frozen=True)
class InitPolicy:
    """Fixed (m0, sigma0), or uniform m0 in a box with log-uniform sigma0."""
    m0: Optional[Tuple[float, ...]] = None
    sigma0: Optional[float] = None
    box_low: Optional[Tuple[float, ...]] = None
    box_high: Optional[Tuple[float, ...]] = None
    log_sigma_range: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.m0 is None and (self.box_low is None or self.box_high is None):
            raise ParameterError("init policy needs m0 or a sampling box")
        if self.sigma0 is None and self.log_sigma_range is None:
            raise ParameterError("init policy needs sigma0 or log_sigma_range")

    def draw(self, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
        if self.m0 is not None:
            m0 = np.asarray(self.m0, dtype=float)
        else:
            low = np.asarray(self.box_low, dtype=float)
            high = np.asarray(self.box_high, dtype=float)
            m0 = low + (high - low) * rng.random(low.shape[0])
        if self.sigma0 is not None:
            sigma0 = float(self.sigma0)
        else:
            lo, hi = self.log_sigma_range
            sigma0 = math.exp(lo + (hi - lo) * rng.random())
        return m0, sigma0

    def to_dict(self) -> Dict[str, Any]:
        def _tuple(v):
            return None if v is None else [float(x) for x in v]
        return {
            "m0": _tuple(self.m0),
            "sigma0": self.sigma0,
            "box_low": _tuple(self.box_low),
            "box_high": _tuple(self.box_high),
            "log_sigma_range": _tuple(self.log_sigma_range),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InitPolicy":
        def _tuple(key):
            value = data.get(key)
            return None if value is None else tuple(float(x) for x in value)
        sigma0 = data.get("sigma0")
        return cls(
            m0=_tuple("m0"),
            sigma0=None if sigma0 is None else float(sigma0),
            box_low=_tuple("box_low"),
            box_high=_tuple("box_high"),
            log_sigma_range=_tuple("log_sigma_range"),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    objective: str
    params: EsParams
    init: InitPolicy
    replicates: int
    stopping: StoppingRule
    master_seed: int
    record_stride: int = 1
    history_stride: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise ParameterError(f"replicates must be >= 1, got {self.replicates}")
        if self.record_stride < 1:
            raise ParameterError(f"record_stride must be >= 1, got {self.record_stride}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "objective": self.objective,
            "params": self.params.to_dict(),
            "init": self.init.to_dict(),
            "replicates": int(self.replicates),
            "stopping": self.stopping.to_dict(),
            "master_seed": int(self.master_seed),
            "record_stride": int(self.record_stride),
            "history_stride": int(self.history_stride),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        return cls(
            name=str(data.get("name", "experiment")),
            objective=str(data["objective"]),
            params=EsParams.from_dict(data.get("params", {})),
            init=InitPolicy.from_dict(data["init"]),
            replicates=int(data.get("replicates", 1)),
            stopping=StoppingRule.from_dict(data["stopping"]),
            master_seed=int(data.get("master_seed", 0)),
            record_stride=int(data.get("record_stride", 1)),
            history_stride=int(data.get("history_stride", 0)),
        )


@dataclass(frozen=True)
class ReplicateResult:
    group: str
    replicate: int
    seed: int
    outcome: OutcomeLabel
    final_f: float
    final_log_sigma: float
    iterations: int
    accepted: int
    target_iteration: Optional[int] = None
    log_f_slope: Optional[float] = None
    history: Tuple[Tuple[int, float, float], ...] = ()
    elitist: bool = True

    @property
    def final_sigma(self) -> float:
        return math.exp(self.final_log_sigma)


@dataclass(frozen=True)
class GroupSummary:
    label: str
    parameters: Dict[str, Any]
    replicates: int
    outcome_counts: Dict[str, int]
    outcome_frequencies: Dict[str, Dict[str, float]]
    median_iterations_to_target: Optional[float] = None
    median_log_f_slope: Optional[float] = None
    guaranteed: Optional[bool] = None
    extras: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    config: Dict[str, Any]
    replicates: Tuple[ReplicateResult, ...]
    groups: Tuple[GroupSummary, ...]
    aggregates: Dict[str, Any] = field(default_factory=dict)
    assertions: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def group(self, label: str) -> GroupSummary:
        for group in self.groups:
            if group.label == label:
                return group
        raise KeyError(label)

# services/objectives.py

"""
Benchmark objectives.

Every objective evaluates whole batches of points with numpy, and
``evaluate`` on a single point goes through the same code path. The one
exception is ``CantorBarrier``: its per-iteration membership walk is a
plain-float loop (``cantor_contains``) that repeats the batch arithmetic
step for step. Either way, a value computed for the ES and a value computed
inside an estimator are bit-identical.

Objectives are addressed by spec strings such as ``sphere:d=2``,
``quadratic_saddle:a=9`` or ``cantor_barrier:variant=fat,depth=40``.
"""

import logging
import math
from abc import abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from es_verify.domain import (
    Box,
    CantorSpec,
    IObjective,
    KnownOptimum,
    ObjectiveSpecError,
    ParameterError,
    RatePoint,
    SuccessMode,
)

logger = logging.getLogger(__name__)

STAR_AMPLITUDE = 0.3
JUMP_BALL_RADIUS = 0.5
JUMP_CORNER_OFFSET = 1e-3


def unit_ball_volume(d: int) -> float:
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def unit_ball_suboptimality(x, d: int) -> float:
    """Volume of the open ball of radius ||x|| in R^d."""
    radius = float(np.linalg.norm(np.asarray(x, dtype=float)))
    if radius == 0.0:
        return 0.0
    return unit_ball_volume(d) * radius ** d


def _acot(a: float) -> float:
    return math.atan2(1.0, a)


def quadratic_saddle_rate(a: float) -> float:
    return 2.0 * _acot(math.sqrt(a)) / math.pi


def linear_ridge_rate(a: float) -> float:
    return _acot(a) / math.pi


def jump_corner_rate(a: float) -> float:
    return math.atan(a) / (2.0 * math.pi)


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


class Objective(IObjective):
    """Base class: shape checking and the shared batch evaluation path."""

    name = "objective"

    def __init__(self, dimension: int, box: Box, parameters: Optional[Dict[str, Any]] = None,
                 optimum: Optional[KnownOptimum] = None):
        if dimension < 1:
            raise ParameterError(f"dimension must be >= 1, got {dimension}")
        self.dimension = int(dimension)
        self.parameters = dict(parameters or {})
        self._box = box
        self._optimum = optimum
        self.id = self.name if not self.parameters else self.name + ":" + ",".join(
            f"{k}={_format_value(v)}" for k, v in self.parameters.items()
        )

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.id}>"

    def _as_batch(self, points) -> np.ndarray:
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != self.dimension:
            raise ParameterError(
                f"{self.id} expects points of dimension {self.dimension}, got shape {arr.shape}"
            )
        return arr

    @abstractmethod
    def _values(self, points: np.ndarray) -> np.ndarray:
        pass

    def evaluate(self, x) -> float:
        return float(self._values(self._as_batch(x))[0])

    def evaluate_batch(self, points) -> np.ndarray:
        return self._values(self._as_batch(points))

    @property
    def bounding_box(self) -> Box:
        return self._box

    @property
    def known_optimum(self) -> Optional[KnownOptimum]:
        return self._optimum


class Sphere(Objective):
    name = "sphere"

    def __init__(self, d: int = 2):
        super().__init__(d, Box.cube(2.0, d), {"d": int(d)}, KnownOptimum((0.0,) * d))

    def _values(self, points: np.ndarray) -> np.ndarray:
        return np.sum(points * points, axis=1)

    @property
    def has_analytic_suboptimality(self) -> bool:
        return True

    def suboptimality(self, points, mode: SuccessMode = SuccessMode.STRICT) -> np.ndarray:
        radii = np.linalg.norm(self._as_batch(points), axis=1)
        return unit_ball_volume(self.dimension) * radii ** self.dimension


class Rosenbrock2d(Objective):
    name = "rosenbrock2d"

    def __init__(self):
        super().__init__(2, Box((-2.0, -1.0), (2.0, 3.0)), None, KnownOptimum((1.0, 1.0)))

    def _values(self, points: np.ndarray) -> np.ndarray:
        x1, x2 = points[:, 0], points[:, 1]
        return 100.0 * (x1 * x1 - x2) ** 2 + (x1 - 1.0) ** 2


class QuadraticSaddle(Objective):
    name = "quadratic_saddle"

    def __init__(self, a: float = 1.0):
        if not a > 0:
            raise ParameterError(f"quadratic_saddle needs a > 0, got {a}")
        self.a = float(a)
        super().__init__(2, Box.cube(4.0, 2), {"a": self.a})

    def _values(self, points: np.ndarray) -> np.ndarray:
        return self.a * points[:, 0] ** 2 - points[:, 1] ** 2

    @property
    def rate_table(self) -> Tuple[RatePoint, ...]:
        return (RatePoint("saddle", (0.0, 0.0), quadratic_saddle_rate(self.a)),)


class CubicSaddle(Objective):
    name = "cubic_saddle"

    def __init__(self):
        super().__init__(2, Box.cube(4.0, 2))

    def _values(self, points: np.ndarray) -> np.ndarray:
        return points[:, 0] ** 3 + points[:, 1] ** 2

    @property
    def rate_table(self) -> Tuple[RatePoint, ...]:
        return (RatePoint("saddle", (0.0, 0.0), 0.0),)


class LinearRidge(Objective):
    name = "linear_ridge"

    def __init__(self, a: float = 1.0):
        if not a > 0:
            raise ParameterError(f"linear_ridge needs a > 0, got {a}")
        self.a = float(a)
        super().__init__(2, Box.cube(4.0, 2), {"a": self.a})

    def _values(self, points: np.ndarray) -> np.ndarray:
        return points[:, 0] + self.a * np.abs(points[:, 1])

    @property
    def rate_table(self) -> Tuple[RatePoint, ...]:
        return (RatePoint("ridge", (0.0, 0.0), linear_ridge_rate(self.a)),)


class SphereJump(Objective):
    """
    ||x||^2 plus a unit penalty on a set S.

    star:        S = {x : ||x|| > rho(x/||x||)}, rho(u) = 1 + 0.3 u1 u2
    open_ball:   S = open ball of radius 1/2 around e1
    closed_ball: S = closed ball of radius 1/2 around e1
    strip:       S = (a, inf) x (0, 1), two-dimensional only
    """

    name = "sphere_jump"
    variants = ("star", "open_ball", "closed_ball", "strip")

    def __init__(self, variant: str = "closed_ball", a: float = 1.0, d: int = 2):
        if variant not in self.variants:
            raise ObjectiveSpecError(f"unknown sphere_jump variant {variant!r}",
                                     [f"sphere_jump:variant={v}" for v in self.variants])
        if not a > 0:
            raise ParameterError(f"sphere_jump needs a > 0, got {a}")
        if variant == "strip" and d != 2:
            raise ParameterError("the strip variant is two-dimensional")
        self.variant = variant
        self.a = float(a)
        parameters = {"variant": variant, "d": int(d)}
        half_width = 2.0
        if variant == "strip":
            parameters = {"variant": variant, "a": self.a}
            half_width = self.a + 3.0
        super().__init__(d, Box.cube(half_width, d), parameters, KnownOptimum((0.0,) * d))

    def penalty_set_contains(self, points: np.ndarray) -> np.ndarray:
        if self.variant == "strip":
            return (points[:, 0] > self.a) & (points[:, 1] > 0.0) & (points[:, 1] < 1.0)
        if self.variant == "star":
            radii = np.linalg.norm(points, axis=1)
            rho = np.ones_like(radii)
            if self.dimension >= 2:
                safe = np.where(radii > 0.0, radii, 1.0)
                rho = 1.0 + STAR_AMPLITUDE * points[:, 0] * points[:, 1] / (safe * safe)
            return radii > rho
        offset = points.copy()
        offset[:, 0] -= 1.0
        distance = np.linalg.norm(offset, axis=1)
        if self.variant == "open_ball":
            return distance < JUMP_BALL_RADIUS
        return distance <= JUMP_BALL_RADIUS

    def _values(self, points: np.ndarray) -> np.ndarray:
        return np.sum(points * points, axis=1) + self.penalty_set_contains(points).astype(float)

    @property
    def rate_table(self) -> Tuple[RatePoint, ...]:
        if self.variant == "strip":
            corner = (self.a + JUMP_CORNER_OFFSET, 1.0)
            return (RatePoint("corner", corner, jump_corner_rate(self.a)),)
        return ()


class SteppedSphere(Objective):
    """ceil(k ||x||^2) / k: annular plateaus of positive volume."""

    name = "stepped_sphere"

    def __init__(self, k: int = 4, d: int = 2):
        if int(k) < 1:
            raise ParameterError(f"stepped_sphere needs k >= 1, got {k}")
        self.k = int(k)
        super().__init__(d, Box.cube(2.0, d), {"k": self.k, "d": int(d)}, KnownOptimum((0.0,) * d))

    def level_index(self, points) -> np.ndarray:
        points = self._as_batch(points)
        return np.ceil(self.k * np.sum(points * points, axis=1))

    def level_value(self, j) -> np.ndarray:
        return np.asarray(j, dtype=float) / self.k

    def _values(self, points: np.ndarray) -> np.ndarray:
        return self.level_value(self.level_index(points))

    def _ball_of_level(self, j: np.ndarray) -> np.ndarray:
        j = np.maximum(np.asarray(j, dtype=float), 0.0)
        return unit_ball_volume(self.dimension) * (j / self.k) ** (0.5 * self.dimension)

    def level_mass(self, j) -> np.ndarray:
        """Volume of the plateau {f = j/k}; the level {0} is a single point."""
        j = np.asarray(j, dtype=float)
        return np.where(j >= 1.0, self._ball_of_level(j) - self._ball_of_level(j - 1.0), 0.0)

    @property
    def has_analytic_suboptimality(self) -> bool:
        return True

    @property
    def level_sets_null(self) -> bool:
        return False

    def suboptimality(self, points, mode: SuccessMode = SuccessMode.STRICT) -> np.ndarray:
        j = self.level_index(points)
        if mode == SuccessMode.WEAK:
            return self._ball_of_level(j)
        return np.where(j >= 1.0, self._ball_of_level(j - 1.0), 0.0)


def cantor_contains(x: float, spec: CantorSpec) -> bool:
    """
    Membership in the stage-``depth`` approximation of the Cantor set on [-1, 0].

    The fat variant removes a centred gap of length 4^-n from every interval
    at stage n; the null variant removes the middle third. Gap endpoints stay
    in the set.
    """
    x = float(x)
    if not (-1.0 <= x <= 0.0):
        return False
    lo, hi = -1.0, 0.0
    fat = spec.variant == "fat"
    for n in range(1, spec.depth + 1):
        gap = 0.25 ** n if fat else (hi - lo) / 3.0
        mid = 0.5 * (lo + hi)
        gap_lo = mid - 0.5 * gap
        gap_hi = mid + 0.5 * gap
        if gap_lo < x < gap_hi:
            return False
        if x <= gap_lo:
            hi = gap_lo
        else:
            lo = gap_hi
    return True


def cantor_contains_batch(xs, spec: CantorSpec) -> np.ndarray:
    """Vectorized ``cantor_contains``; same arithmetic, element by element."""
    xs = np.asarray(xs, dtype=float).reshape(-1)
    inside = (xs >= -1.0) & (xs <= 0.0)
    lo = np.full(xs.shape, -1.0)
    hi = np.zeros(xs.shape)
    fat = spec.variant == "fat"
    for n in range(1, spec.depth + 1):
        gap = np.full(xs.shape, 0.25 ** n) if fat else (hi - lo) / 3.0
        mid = 0.5 * (lo + hi)
        gap_lo = mid - 0.5 * gap
        gap_hi = mid + 0.5 * gap
        inside &= ~((gap_lo < xs) & (xs < gap_hi))
        left = xs <= gap_lo
        hi = np.where(left, gap_lo, hi)
        lo = np.where(left, lo, gap_hi)
    return inside


def cantor_measure(spec: CantorSpec) -> float:
    """Lebesgue measure of the stage-``depth`` approximation."""
    if spec.variant == "fat":
        return 0.5 + 2.0 ** (-spec.depth - 1)
    return (2.0 / 3.0) ** spec.depth


class CantorBarrier(Objective):
    """x + 1_S(x) on the line; S is a (fat or null) Cantor set on [-1, 0]."""

    name = "cantor_barrier"

    def __init__(self, variant: str = "fat", depth: int = 40):
        try:
            self.spec = CantorSpec(variant, int(depth))
        except ParameterError as e:
            raise ObjectiveSpecError(str(e), ["cantor_barrier:variant=fat", "cantor_barrier:variant=null"]) from e
        super().__init__(1, Box((-2.0,), (1.0,)), {"variant": variant, "depth": int(depth)})

    def evaluate(self, x) -> float:
        value = float(self._as_batch(x)[0, 0])
        return value + (1.0 if cantor_contains(value, self.spec) else 0.0)

    def _values(self, points: np.ndarray) -> np.ndarray:
        xs = points[:, 0]
        return xs + cantor_contains_batch(xs, self.spec).astype(float)


class TransformedObjective(Objective):
    """phi composed with an objective; phi must be strictly increasing."""

    def __init__(self, inner: Objective, phi: Callable[[np.ndarray], np.ndarray], label: str = "phi"):
        self.inner = inner
        self.phi = phi
        self.name = f"{label}({inner.id})"
        super().__init__(inner.dimension, inner.bounding_box, None, inner.known_optimum)

    def _values(self, points: np.ndarray) -> np.ndarray:
        return self.phi(self.inner.evaluate_batch(points))

    @property
    def rate_table(self) -> Tuple[RatePoint, ...]:
        return self.inner.rate_table

    @property
    def has_analytic_suboptimality(self) -> bool:
        return self.inner.has_analytic_suboptimality

    @property
    def level_sets_null(self) -> bool:
        return self.inner.level_sets_null

    def suboptimality(self, points, mode: SuccessMode = SuccessMode.STRICT) -> np.ndarray:
        return self.inner.suboptimality(points, mode)


def cubic_plus_linear(y: np.ndarray) -> np.ndarray:
    return y ** 3 + 5.0 * y


def transformed(objective: Objective, phi: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> TransformedObjective:
    if phi is None:
        return TransformedObjective(objective, cubic_plus_linear, "cubic_plus_linear")
    return TransformedObjective(objective, phi, getattr(phi, "__name__", "phi"))


@dataclass(frozen=True)
class ObjectiveEntry:
    name: str
    factory: Callable[..., Objective]
    defaults: Dict[str, Any]
    description: str
    variants: Tuple[str, ...] = ()


_REGISTRY: Dict[str, ObjectiveEntry] = {}


def register_objective(entry: ObjectiveEntry) -> None:
    _REGISTRY[entry.name] = entry


for _entry in (
    ObjectiveEntry("sphere", Sphere, {"d": 2}, "||x||^2"),
    ObjectiveEntry("rosenbrock2d", Rosenbrock2d, {}, "100 (x1^2 - x2)^2 + (x1 - 1)^2"),
    ObjectiveEntry("quadratic_saddle", QuadraticSaddle, {"a": 1.0}, "a x1^2 - x2^2"),
    ObjectiveEntry("cubic_saddle", CubicSaddle, {}, "x1^3 + x2^2"),
    ObjectiveEntry("linear_ridge", LinearRidge, {"a": 1.0}, "x1 + a |x2|"),
    ObjectiveEntry("sphere_jump", SphereJump, {"variant": "closed_ball", "a": 1.0, "d": 2},
                   "||x||^2 + 1_S(x)", SphereJump.variants),
    ObjectiveEntry("stepped_sphere", SteppedSphere, {"k": 4, "d": 2}, "ceil(k ||x||^2) / k"),
    ObjectiveEntry("cantor_barrier", CantorBarrier, {"variant": "fat", "depth": 40},
                   "x + 1_S(x), S a Cantor set on [-1, 0]", ("fat", "null")),
):
    register_objective(_entry)


def objective_ids() -> List[str]:
    return list(_REGISTRY)


def _convert(name: str, key: str, raw: str, default: Any) -> Any:
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            value = float(raw)
            if not value.is_integer():
                raise ValueError(f"{raw} is not an integer")
            return int(value)
        if isinstance(default, float):
            return float(raw)
    except ValueError as e:
        raise ObjectiveSpecError(f"bad value for {name}.{key}: {e}") from e
    return raw


def parse_objective_spec(spec: str) -> Tuple[str, Dict[str, Any]]:
    """Split ``name:k=v,k=v`` into the registry name and typed parameters."""
    text = str(spec).strip()
    name, _, rest = text.partition(":")
    name = name.strip()
    if name not in _REGISTRY:
        raise ObjectiveSpecError(f"unknown objective {name!r}", objective_ids())
    entry = _REGISTRY[name]
    params: Dict[str, Any] = {}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in entry.defaults:
            raise ObjectiveSpecError(
                f"bad parameter {item!r} for {name}; accepted: {sorted(entry.defaults) or 'none'}",
                objective_ids(),
            )
        params[key] = _convert(name, key, raw.strip(), entry.defaults[key])
    return name, params


def make_objective(spec: str, **overrides: Any) -> Objective:
    name, params = parse_objective_spec(spec)
    params.update(overrides)
    try:
        objective = _REGISTRY[name].factory(**params)
    except ParameterError as e:
        raise ObjectiveSpecError(f"{spec}: {e}") from e
    logger.debug(f"Built objective {objective.id}")
    return objective


def list_objectives() -> List[Dict[str, Any]]:
    """Registry listing in registration order, with the hooks of the default instance."""
    listing = []
    for entry in _REGISTRY.values():
        instance = entry.factory(**entry.defaults)
        optimum = instance.known_optimum
        listing.append({
            "id": entry.name,
            "formula": entry.description,
            "parameters": dict(entry.defaults),
            "variants": list(entry.variants),
            "dimension": instance.dimension,
            "analytic_suboptimality": instance.has_analytic_suboptimality,
            "known_optimum": None if optimum is None else list(optimum.point),
            "rate_table": [
                {"name": r.name, "point": list(r.point), "rate": r.rate} for r in instance.rate_table
            ],
            "level_sets_null": instance.level_sets_null,
            "bounding_box": {"low": list(instance.bounding_box.low), "high": list(instance.bounding_box.high)},
        })
    return listing

"""Serializable value types shared across kernbound modules."""

import math
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_serializer, field_validator, model_validator

from .errors import ConstraintError, InputError
from .options import FEASIBILITY_TOLERANCE, INEQUALITY_TOLERANCE, EstimateMethod, Family, KernelKind


NOT_APPLICABLE = "n/a"


class NotApplicable(BaseModel):
    """A bound whose premises fail for the given inputs."""
    model_config = ConfigDict(frozen=True)

    reason: str

    def __bool__(self) -> bool:
        return False


class Sample(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: List[List[float]]
    labels: Optional[List[int]] = None

    _x: np.ndarray = PrivateAttr()
    _y: Optional[np.ndarray] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_shape(self) -> "Sample":
        if not self.points:
            raise InputError("Sample must contain at least one point")
        d = len(self.points[0])
        if d < 1:
            raise InputError("Points must have dimension >= 1")
        for i, point in enumerate(self.points):
            if len(point) != d:
                raise InputError(
                    f"Point {i} has dimension {len(point)}, expected {d}",
                    {"index": i, "dimension": len(point), "expected": d},
                )
        if self.labels is not None:
            if len(self.labels) != len(self.points):
                raise InputError(
                    f"Got {len(self.labels)} labels for {len(self.points)} points",
                    {"labels": len(self.labels), "points": len(self.points)},
                )
            bad = [i for i, y in enumerate(self.labels) if y not in (-1, 1)]
            if bad:
                raise InputError(f"Labels must be -1 or +1 (first bad index {bad[0]})", {"index": bad[0]})
        self._freeze_arrays()
        return self

    def _freeze_arrays(self) -> None:
        x = np.asarray(self.points, dtype=np.float64)
        x.setflags(write=False)
        self._x = x
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.float64)
            y.setflags(write=False)
            self._y = y

    @classmethod
    def from_arrays(cls, x: np.ndarray, y: Optional[np.ndarray] = None) -> "Sample":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        labels = None if y is None else [int(v) for v in np.asarray(y).ravel()]
        return cls(points=x.tolist(), labels=labels)

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def y(self) -> Optional[np.ndarray]:
        return self._y

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return len(self.points[0])

    @property
    def has_labels(self) -> bool:
        return self.labels is not None


class KernelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    kind: KernelKind
    degree: Optional[int] = None
    offset: float = 0.0
    gamma: Optional[float] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "KernelSpec":
        if self.kind is KernelKind.POLYNOMIAL:
            if self.degree is None or self.degree < 1:
                raise ValueError(f"polynomial kernel '{self.name}' needs degree >= 1")
            if self.offset < 0:
                raise ValueError(f"polynomial kernel '{self.name}' needs offset >= 0")
        if self.kind is KernelKind.GAUSSIAN:
            if self.gamma is None or not self.gamma > 0:
                raise ValueError(f"gaussian kernel '{self.name}' needs gamma > 0")
        return self

    @classmethod
    def linear(cls, name: str = "linear") -> "KernelSpec":
        return cls(name=name, kind=KernelKind.LINEAR)

    @classmethod
    def polynomial(cls, degree: int, offset: float = 0.0, name: Optional[str] = None) -> "KernelSpec":
        return cls(name=name or f"poly{degree}", kind=KernelKind.POLYNOMIAL, degree=degree, offset=offset)

    @classmethod
    def gaussian(cls, gamma: float, name: Optional[str] = None) -> "KernelSpec":
        return cls(name=name or f"gaussian{gamma:g}", kind=KernelKind.GAUSSIAN, gamma=gamma)

    def parameters(self) -> Dict[str, Any]:
        params: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is KernelKind.POLYNOMIAL:
            params.update(degree=self.degree, offset=self.offset)
        elif self.kind is KernelKind.GAUSSIAN:
            params.update(gamma=self.gamma)
        return params


class CombinationWeights(BaseModel):
    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...]
    tag: Family

    @field_validator("values")
    @classmethod
    def _finite(cls, values: Tuple[float, ...]) -> Tuple[float, ...]:
        if not values:
            raise ValueError("weights must not be empty")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("weights must be finite")
        return values

    @classmethod
    def of(cls, values: Any, tag: Family) -> "CombinationWeights":
        return cls(values=tuple(float(v) for v in np.asarray(values, dtype=np.float64).ravel()), tag=tag)

    @classmethod
    def uniform(cls, p: int, tag: Family) -> "CombinationWeights":
        if tag is Family.L1:
            return cls.of(np.full(p, 1.0 / p), tag)
        return cls.of(np.full(p, 1.0 / math.sqrt(p)), tag)

    @classmethod
    def vertex(cls, p: int, k: int, tag: Family) -> "CombinationWeights":
        mu = np.zeros(p)
        mu[k] = 1.0
        return cls.of(mu, tag)

    @property
    def p(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def feasibility_defect(self) -> float:
        mu = self.as_array()
        negative = 0.0 if self.tag is Family.L2_SIGNED else float(max(0.0, -mu.min()))
        if self.tag is Family.L1:
            return max(negative, abs(float(mu.sum()) - 1.0))
        return max(negative, abs(float(np.dot(mu, mu)) - 1.0))

    def is_feasible(self, tol: float = FEASIBILITY_TOLERANCE) -> bool:
        return self.feasibility_defect() <= tol

    def require_feasible(self, tol: float = FEASIBILITY_TOLERANCE) -> None:
        defect = self.feasibility_defect()
        if defect > tol:
            raise ConstraintError(
                f"Weights are infeasible for {self.tag.value} (defect {defect:.3g})",
                {"tag": self.tag.value, "defect": defect, "values": list(self.values)},
            )


class HypothesisFamily(BaseModel):
    """Weight constraint plus the margin that sets the alpha-ball radius 1/rho."""
    model_config = ConfigDict(frozen=True)

    tag: Family
    rho: float = Field(gt=0)

    @classmethod
    def of(cls, tag: Any, rho: float) -> "HypothesisFamily":
        return cls(tag=Family.parse(tag), rho=rho)


class MarginConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    rho: float = Field(gt=0)
    delta: float = Field(gt=0, lt=1)


class PsdDiagnostics(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    min_eig: float
    max_eig: float
    symmetric_defect: float
    passed: bool = Field(alias="pass")


class BoundReport(BaseModel):
    """One evaluated bound; ``value`` None means not applicable (see ``reason``)."""
    model_config = ConfigDict(frozen=True)

    family: Family
    form: str
    r: Optional[int] = None
    value: Optional[float] = None
    reason: Optional[str] = None
    fallback: Optional[float] = None
    p: int
    m: int
    rho: float
    r2: Optional[float] = None
    traces: Optional[List[float]] = None

    @property
    def applicable(self) -> bool:
        return self.value is not None

    @field_serializer("value")
    def _serialize_value(self, value: Optional[float]) -> Any:
        return NOT_APPLICABLE if value is None else value

    @field_serializer("family")
    def _serialize_family(self, family: Family) -> str:
        return family.value


class RademacherEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0)
    stderr: float = Field(ge=0)
    trials: int
    method: EstimateMethod
    seed: Optional[int] = None
    family: Family
    rho: float
    m: int
    p: int

    @model_validator(mode="after")
    def _check_exact(self) -> "RademacherEstimate":
        if self.method is EstimateMethod.EXACT and (self.stderr != 0.0 or self.trials != 2 ** self.m):
            raise ValueError("exact estimates must have stderr 0 and 2^m trials")
        return self

    @field_serializer("method", "family")
    def _serialize_enum(self, value: Any) -> str:
        return value.value


class InequalityResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    lhs: float
    rhs: float
    holds: bool
    slack: float
    relation: Literal["le", "eq"] = "le"
    stderr: Optional[float] = None
    detail: Optional[Dict[str, Any]] = None

    @classmethod
    def at_most(
        cls,
        name: str,
        lhs: float,
        rhs: float,
        tol: float = INEQUALITY_TOLERANCE,
        **extra: Any,
    ) -> "InequalityResult":
        lhs, rhs = float(lhs), float(rhs)
        holds = lhs <= rhs + tol * max(1.0, abs(rhs))
        return cls(name=name, lhs=lhs, rhs=rhs, holds=holds, slack=rhs - lhs, relation="le", **extra)

    @classmethod
    def equal(
        cls,
        name: str,
        lhs: float,
        rhs: float,
        tol: float = 0.0,
        **extra: Any,
    ) -> "InequalityResult":
        lhs, rhs = float(lhs), float(rhs)
        holds = abs(lhs - rhs) <= tol * max(1.0, abs(rhs))
        return cls(name=name, lhs=lhs, rhs=rhs, holds=holds, slack=rhs - lhs, relation="eq", **extra)


class OracleResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid_max: float
    achiever_check: float
    mu_star: List[float]
    degenerate: bool = False
    ball_residual: float = 0.0
    grid_points: int


class Certificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    margin_loss: float = Field(ge=0, le=1)
    complexity_term: float = Field(ge=0)
    confidence_term: float = Field(ge=0)
    total: float
    bound_choice: str
    rademacher_value: float
    family: Family
    rho: float
    delta: float
    m: int
    p: int
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_total(self) -> "Certificate":
        if self.total != self.margin_loss + self.complexity_term + self.confidence_term:
            raise ValueError("total must equal margin_loss + complexity_term + confidence_term")
        return self

    @field_serializer("family")
    def _serialize_family(self, family: Family) -> str:
        return family.value

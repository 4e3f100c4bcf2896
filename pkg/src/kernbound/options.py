from dataclasses import dataclass
from enum import Enum
from typing import Optional


class KernelKind(Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    GAUSSIAN = "gaussian"


class Family(Enum):
    """Constraint on the combination weights mu."""
    L1 = "L1"
    L2 = "L2"
    L2_SIGNED = "L2Signed"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        normalized = str(value).strip().lower()
        for member in cls:
            if member.value.lower() == normalized:
                return member
        raise ValueError(f"Unknown family: {value}")


class BoundForm(Enum):
    TRACE = "trace"
    CEILING = "ceiling"
    EVEN_R_OPTIMIZED = "evenROptimized"
    COMPARATOR_SB = "comparatorSB"


class BoundChoice(Enum):
    TRACE = "trace"
    CEILING = "ceiling"
    EMPIRICAL_EXACT = "empiricalExact"
    EMPIRICAL_MC = "empiricalMC"

    @classmethod
    def parse(cls, value: "str | BoundChoice") -> "BoundChoice":
        if isinstance(value, BoundChoice):
            return value
        aliases = {"exact": cls.EMPIRICAL_EXACT, "mc": cls.EMPIRICAL_MC}
        normalized = str(value).strip()
        if normalized.lower() in aliases:
            return aliases[normalized.lower()]
        for member in cls:
            if member.value.lower() == normalized.lower():
                return member
        raise ValueError(f"Unknown bound choice: {value}")


class EstimateMethod(Enum):
    MONTE_CARLO = "monteCarlo"
    EXACT = "exactEnumeration"


@dataclass(frozen=True)
class CeilingPolicy:
    """``user_value`` None means the ceiling is read off the sample diagonals."""
    user_value: Optional[float] = None

    @classmethod
    def from_sample(cls) -> "CeilingPolicy":
        return cls()

    @classmethod
    def user(cls, value: float) -> "CeilingPolicy":
        return cls(user_value=float(value))

    @property
    def is_from_sample(self) -> bool:
        return self.user_value is None


PSD_TOLERANCE = 1e-8
QUADRATIC_CLAMP = 1e-12
FEASIBILITY_TOLERANCE = 1e-9
INEQUALITY_TOLERANCE = 1e-9

DEFAULT_EXACT_CAP = 14
HARD_EXACT_CAP = 24
TRIAL_BLOCK = 1024


@dataclass(frozen=True)
class TrainOptions:
    reg_c: float = 1.0
    max_outer: int = 50
    tol: float = 1e-6
    inner_iter: int = 2000
    inner_tol: float = 1e-10
    mu_step: float = 1.0
    max_backtrack: int = 20

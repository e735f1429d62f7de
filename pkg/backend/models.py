"""
Tipos de dominio: exponentes, pares gaussianos, evaluaciones de series y veredictos
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from backend.errors import DomainError


def _require_finite(name: str, value: float):
    """Rechaza NaN e infinitos"""
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise DomainError(f"{name} debe ser un real finito, se recibió {value!r}")


def is_non_positive_integer(value: float) -> bool:
    """True si value pertenece a {0, -1, -2, ...}"""
    return value <= 0 and float(value).is_integer()


class Regime(enum.Enum):
    """Patrón de signos de (alpha1, alpha2)"""
    SAME_SIGN_POSITIVE = "SameSignPositive"
    SAME_SIGN_NEGATIVE = "SameSignNegative"
    OPPOSITE_SIGN = "OppositeSign"
    DEGENERATE = "Degenerate"

    @property
    def is_same_sign(self) -> bool:
        return self in (Regime.SAME_SIGN_POSITIVE, Regime.SAME_SIGN_NEGATIVE)


class MomentMethod(enum.Enum):
    """Origen del valor de un momento"""
    CLOSED_FORM = "closed_form"
    HYPERGEOMETRIC = "hypergeometric"
    LIMIT_RHO_ONE = "limit_rho_one"


class Statement(enum.Enum):
    """Desigualdad que se está certificando"""
    BIVARIATE_GPI = "BivariateGPI"
    BIVARIATE_OPPOSITE_GPI = "BivariateOppositeGPI"
    ONE_DIM_UPPER = "OneDimUpper"
    ONE_DIM_LOWER = "OneDimLower"
    MONOTONE_DECREASING = "MonotoneDecreasing"
    MONOTONE_INCREASING = "MonotoneIncreasing"


class Verdict(enum.Enum):
    """Resultado de una verificación"""
    HOLDS_STRICT = "HoldsStrict"
    EQUALITY = "Equality"
    VIOLATED = "Violated"


class Direction(enum.Enum):
    """Signo esperado de margin = ratio - threshold"""
    POSITIVE = 1
    NEGATIVE = -1
    ZERO = 0


@dataclass(frozen=True)
class HypergeometricInput:
    """Argumentos de F(a, b; c; z)"""
    a: float
    b: float
    c: float
    z: float

    def __post_init__(self):
        for name in ("a", "b", "c", "z"):
            _require_finite(name, getattr(self, name))
        if abs(self.z) >= 1.0:
            raise DomainError(f"|z| debe ser < 1, se recibió z={self.z}")
        if is_non_positive_integer(self.c):
            raise DomainError(f"c no puede ser un entero no positivo (c={self.c})")

    @property
    def terminates(self) -> bool:
        return is_non_positive_integer(self.a) or is_non_positive_integer(self.b)


@dataclass(frozen=True)
class SeriesEvaluation:
    """Valor de una serie/producto truncado con su cota de cola certificada"""
    value: float
    terms_used: int
    tail_bound: float

    def __post_init__(self):
        if self.terms_used < 1:
            raise DomainError(f"terms_used debe ser >= 1, se recibió {self.terms_used}")
        if not math.isfinite(self.tail_bound) or self.tail_bound < 0:
            raise DomainError(f"tail_bound inválida: {self.tail_bound}")


@dataclass(frozen=True)
class ExponentPair:
    """Par de exponentes (alpha1, alpha2), ambos > -1"""
    alpha1: float
    alpha2: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value <= -1:
                raise DomainError(f"{name} debe ser > -1 (momento divergente), se recibió {value}")

    def swapped(self) -> "ExponentPair":
        return ExponentPair(self.alpha2, self.alpha1)

    def to_dict(self) -> Dict[str, float]:
        return {"alpha1": self.alpha1, "alpha2": self.alpha2}


@dataclass(frozen=True)
class BivariatePairSpec:
    """Desviaciones estándar y correlación del par gaussiano centrado"""
    sigma1: float = 1.0
    sigma2: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "rho"):
            _require_finite(name, getattr(self, name))
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise DomainError(
                f"Las desviaciones deben ser positivas (sigma1={self.sigma1}, sigma2={self.sigma2})"
            )
        if abs(self.rho) > 1:
            raise DomainError(f"rho debe estar en [-1, 1], se recibió {self.rho}")

    def to_dict(self) -> Dict[str, float]:
        return {"sigma1": self.sigma1, "sigma2": self.sigma2, "rho": self.rho}


@dataclass(frozen=True)
class MomentValue:
    """Momento absoluto con su método y cota de error absoluta"""
    value: float
    method: MomentMethod
    error_bound: float

    def __post_init__(self):
        if not self.value > 0:
            raise DomainError(f"Un momento absoluto debe ser positivo, se obtuvo {self.value}")


@dataclass(frozen=True)
class InequalityVerdict:
    """Comparación de un cociente contra el umbral que predice la desigualdad"""
    statement: Statement
    ratio: float
    threshold: float
    margin: float
    verdict: Verdict
    tolerance: float
    error_bound: float = 0.0
    method: str = "hypergeometric"

    @property
    def violated(self) -> bool:
        return self.verdict is Verdict.VIOLATED


@dataclass(frozen=True)
class VerdictRecord:
    """Entradas de una verificación junto con su veredicto"""
    inputs: Dict[str, Any]
    verdict: InequalityVerdict


@dataclass(frozen=True)
class SkippedRecord:
    """Combinación de la malla que no se evaluó y por qué"""
    inputs: Dict[str, Any]
    reason: str


@dataclass(frozen=True)
class IdentityCheck:
    """Peor discrepancia de una identidad numérica sobre su malla"""
    name: str
    points: int
    worst_gap: float
    limit: float

    @property
    def passed(self) -> bool:
        return self.worst_gap <= self.limit

    def to_dict(self) -> Dict[str, Any]:
        # JSON no admite Infinity/NaN: un cálculo que no terminó se reporta como null con motivo
        row = {
            "inputs": {"check": self.name, "points": self.points},
            "worst_gap": self.worst_gap if math.isfinite(self.worst_gap) else None,
            "limit": self.limit,
            "passed": self.passed,
            "method": "identity",
        }
        if not math.isfinite(self.worst_gap):
            row["reason"] = "algún punto no convergió"
        return row


@dataclass(frozen=True)
class SweepGrid:
    """Malla de barrido alpha1 x alpha2 x rho"""
    alpha1_values: List[float]
    alpha2_values: List[float]
    rho_values: List[float]

    def __post_init__(self):
        for name in ("alpha1_values", "alpha2_values", "rho_values"):
            values = getattr(self, name)
            if not values:
                raise DomainError(f"{name} no puede estar vacía")
            for value in values:
                _require_finite(name, value)

    @property
    def size(self) -> int:
        return len(self.alpha1_values) * len(self.alpha2_values) * len(self.rho_values)


@dataclass
class SweepReport:
    """Resultado de un barrido, en el orden de iteración de la malla"""
    records: List[VerdictRecord]
    skipped: List[SkippedRecord]
    metadata: Dict[str, Any]
    counts: Dict[str, Dict[str, int]] = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(1 for record in self.records if record.verdict.violated)


@dataclass
class SelftestReport:
    """Barrido por defecto, veredictos adicionales e identidades numéricas"""
    sweep: SweepReport
    verdicts: List[VerdictRecord]
    identities: List[IdentityCheck]

    @property
    def violations(self) -> int:
        return self.sweep.violations + sum(1 for record in self.verdicts if record.verdict.violated)

    @property
    def failed_identities(self) -> List[str]:
        return [check.name for check in self.identities if not check.passed]


@dataclass(frozen=True)
class McEstimate:
    """Estimación Monte Carlo con error estándar"""
    mean: float
    std_error: float
    n_samples: int
    seed: int
    variance_finite: bool


@dataclass(frozen=True)
class QuadratureEstimate:
    """Estimación por cuadratura adaptativa"""
    value: float
    abs_error_estimate: float
    subdivisions: int


@dataclass
class RunConfig:
    """Parámetros ya validados de una invocación de la CLI"""
    subcommand: str
    alpha1: Optional[float] = None
    alpha2: Optional[float] = None
    rho: float = 0.0
    sigma1: float = 1.0
    sigma2: float = 1.0
    m: Optional[int] = None
    alpha1_grid: Optional[List[float]] = None
    alpha2_grid: Optional[List[float]] = None
    rho_grid: Optional[List[float]] = None
    z_grid: Optional[List[float]] = None
    samples: int = 10 ** 6
    seed: int = 0
    tolerance: Optional[float] = None
    format: str = "text"
    workers: int = 1
    oracles: bool = True

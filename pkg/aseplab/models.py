import math
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)


class Phase(str, Enum):
    """Phase of open ASEP in the (A, C) plane."""
    LD = "LD"
    HD = "HD"
    MC = "MC"
    BOUNDARY = "boundary"


class Region(str, Enum):
    """Fan (AC < 1) or shock (AC > 1) region."""
    FAN = "fan"
    SHOCK = "shock"
    BOUNDARY = "boundary"


class Which(str, Enum):
    """Which end of the lattice a marginal keeps."""
    FIRST = "FIRST"
    LAST = "LAST"


class MeasureKind(str, Enum):
    PROBABILITY = "probability"
    SIGNED = "signed"


class GridSide(str, Enum):
    """Side of t = 1 on which generating-function nodes are placed."""
    AT_OR_ABOVE_ONE = "AT_OR_ABOVE_ONE"
    AT_OR_BELOW_ONE = "AT_OR_BELOW_ONE"


class Generator(str, Enum):
    """Which parameter slot generated an atom (POINT for bare point masses)."""
    A = "a"
    B = "b"
    C = "c"
    D = "d"
    POINT = "point"


class CheckStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


class RunStatus(str, Enum):
    """Status of a ledger run."""
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


# ---------------------------------------------------------------------------
# Open ASEP parameterizations
# ---------------------------------------------------------------------------


class OpenAsepRates(BaseModel):
    """Boundary rates (alpha, gamma on the left, beta, delta on the right) and bulk q."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)
    gamma: float = Field(default=0.0, ge=0)
    delta: float = Field(default=0.0, ge=0)
    q: float = Field(default=0.0, ge=0, lt=1)


class BoundaryParams(BaseModel):
    """The (A, B, C, D) parameterization of the boundary rates."""
    model_config = ConfigDict(frozen=True)

    A: float = Field(ge=0)
    B: float = Field(default=0.0, gt=-1, le=0)
    C: float = Field(ge=0)
    D: float = Field(default=0.0, gt=-1, le=0)
    q: float = Field(default=0.0, ge=0, lt=1)

    def dual(self) -> "BoundaryParams":
        """Parameters of the particle-hole dual system (C, D, A, B)."""
        return BoundaryParams(A=self.C, B=self.D, C=self.A, D=self.B, q=self.q)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.A, self.B, self.C, self.D, self.q)


class PhaseInfo(BaseModel):
    """Phase and region labels with the boundary decay rate."""
    phase: Phase
    region: Region
    theta: Optional[float] = None
    budget_s: Optional[float] = None


# ---------------------------------------------------------------------------
# Askey-Wilson parameters and signed measures
# ---------------------------------------------------------------------------


class AwPolyParams(BaseModel):
    """Askey-Wilson parameters at base q.

    When ``conjugate`` is set, (c, d) denotes the complex pair c +/- i*d, that is
    ``c`` is the common real part and ``d`` the imaginary part.
    """
    model_config = ConfigDict(frozen=True)

    a: float
    b: float
    c: float
    d: float
    q: float = Field(ge=0, lt=1)
    conjugate: bool = False

    @classmethod
    def from_pair(cls, a: float, b: float, pair_sum: float, pair_product: float, q: float, **extra):
        """Build from c + d and c*d; conjugate iff the pair has no real roots."""
        disc = pair_sum * pair_sum - 4.0 * pair_product
        if disc < 0:
            return cls(a=a, b=b, c=pair_sum / 2.0, d=math.sqrt(-disc) / 2.0, q=q, conjugate=True, **extra)
        root = math.sqrt(disc)
        # larger-modulus root first; the other from the product to keep digits
        big = (pair_sum + math.copysign(root, pair_sum)) / 2.0 if pair_sum != 0 else root / 2.0
        small = pair_product / big if big != 0 else 0.0
        return cls(a=a, b=b, c=big, d=small, q=q, **extra)

    @property
    def pair(self) -> tuple[complex, complex]:
        if self.conjugate:
            return complex(self.c, self.d), complex(self.c, -self.d)
        return complex(self.c), complex(self.d)

    @property
    def pair_sum(self) -> float:
        return 2.0 * self.c if self.conjugate else self.c + self.d

    @property
    def pair_product(self) -> float:
        return self.c * self.c + self.d * self.d if self.conjugate else self.c * self.d

    @property
    def abcd(self) -> float:
        return self.a * self.b * self.pair_product

    def values(self) -> list[complex]:
        c, d = self.pair
        return [complex(self.a), complex(self.b), c, d]

    def real_values(self) -> dict[str, float]:
        """Real parameters by slot name (the conjugate pair is never real)."""
        out = {"a": self.a, "b": self.b}
        if not self.conjugate:
            out["c"] = self.c
            out["d"] = self.d
        return out


class ConditionCheck(BaseModel):
    """Outcome of one admissibility condition."""
    condition: int  # 1, 2 or 3
    passed: bool
    margin: float
    nearest_l: Optional[int] = None
    pair: Optional[str] = None  # e.g. "c/a" for condition 2
    warning: bool = False


class AdmissibilityReport(BaseModel):
    conditions: list[ConditionCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def warnings(self) -> list[ConditionCheck]:
        return [c for c in self.conditions if c.warning]

    def failed(self) -> list[ConditionCheck]:
        return [c for c in self.conditions if not c.passed]


class AwQuadruple(AwPolyParams):
    """Askey-Wilson parameters with their admissibility report (set by the builder)."""
    admissibility: Optional[AdmissibilityReport] = None


class Atom(BaseModel):
    """Point mass of a signed measure at (v + 1/v)/2, v = e*q^k the generating value."""
    model_config = ConfigDict(frozen=True)

    location: float
    mass: float
    generator: Generator
    k: int = 0
    value: Optional[float] = None


class AwSignedMeasure(BaseModel):
    """An Askey-Wilson signed measure (or a point mass) ready for integration."""
    model_config = ConfigDict(frozen=True)

    quadruple: Optional[AwQuadruple] = None
    atoms: list[Atom] = Field(default_factory=list)
    has_continuous: bool = False
    density_sign: int = 0
    density_constant: float = 0.0  # (q,ab,ac,ad,bc,bd,cd)_inf / (abcd)_inf
    continuous_mass: float = 0.0
    support_top: float
    support_second: Optional[float] = None
    tol: float = 1e-12

    @property
    def total_mass(self) -> float:
        return sum(atom.mass for atom in self.atoms) + self.continuous_mass

    def support_atoms(self, floor: float = 0.0) -> list[Atom]:
        """Atoms that belong to the support (mass above `floor` in modulus)."""
        return [atom for atom in self.atoms if abs(atom.mass) > floor]

    @property
    def is_point_mass(self) -> bool:
        return self.quadruple is None


class KernelSpec(BaseModel):
    """Transition kernel P_{s,t}(x, dy) for boundary parameters (A, B)."""
    model_config = ConfigDict(frozen=True)

    A: float
    B: float
    q: float = Field(ge=0, lt=1)
    s: float = Field(gt=0)
    t: float = Field(gt=0)
    x: float
    source: Optional[float] = None  # generating value v of x = (v + 1/v)/2, when x is an atom

    @model_validator(mode="after")
    def _ordered(self):
        if self.s > self.t:
            raise ValueError(f"kernel times must satisfy s <= t, got s={self.s}, t={self.t}")
        return self


class MultiAwSpec(BaseModel):
    """Multi-time measure pi_{t_1..t_m} for (A, B, C, D)."""
    model_config = ConfigDict(frozen=True)

    A: float
    B: float
    C: float
    D: float
    q: float = Field(ge=0, lt=1)
    times: tuple[float, ...]

    @field_validator("times")
    @classmethod
    def _nondecreasing(cls, times):
        if not times:
            raise ValueError("at least one time is required")
        if any(t <= 0 for t in times):
            raise ValueError("times must be positive")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError(f"times must be nondecreasing, got {times}")
        return times

    @property
    def m(self) -> int:
        return len(self.times)

    def reversed_dual(self) -> "MultiAwSpec":
        """(C, D, A, B) with times 1/t_m <= ... <= 1/t_1."""
        return MultiAwSpec(
            A=self.C, B=self.D, C=self.A, D=self.B, q=self.q,
            times=tuple(1.0 / t for t in reversed(self.times)),
        )


class Factor(BaseModel):
    """Polynomial factor g(x) = sum coefficients[k] * x**k."""
    model_config = ConfigDict(frozen=True)

    coefficients: tuple[float, ...]

    @classmethod
    def affine(cls, u: float, v: float) -> "Factor":
        return cls(coefficients=(u, v))

    @classmethod
    def gf(cls, t: float, scale: float = 1.0) -> "Factor":
        """(1 + t + 2 sqrt(t) x) / scale, the generating-function factor at time t."""
        return cls(coefficients=((1.0 + t) / scale, 2.0 * math.sqrt(t) / scale))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)


# ---------------------------------------------------------------------------
# Measures on {0,1}^m
# ---------------------------------------------------------------------------


class BinaryMeasure(BaseModel):
    """Weights on {0,1}^m; site i is bit i-1 of the word index."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    m: int = Field(ge=1)
    weights: np.ndarray
    kind: MeasureKind = MeasureKind.PROBABILITY

    @field_validator("weights", mode="before")
    @classmethod
    def _as_array(cls, value):
        return np.array(value, dtype=float).ravel()

    @model_validator(mode="after")
    def _check(self):
        weights = self.weights
        if weights.shape != (2 ** self.m,):
            raise ValueError(f"expected {2 ** self.m} weights for m={self.m}, got {weights.size}")
        total = float(weights.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        if self.kind == MeasureKind.PROBABILITY:
            if weights.min() < -1e-12:
                raise ValueError(f"probability weights must be nonnegative, min={weights.min()!r}")
            weights = np.clip(weights, 0.0, None)
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        return self

    @field_serializer("weights")
    def _serialize_weights(self, weights: np.ndarray) -> list[float]:
        return [float(w) for w in weights]

    def word(self, index: int) -> str:
        """Occupation word of an index, site 1 first."""
        return "".join(str((index >> i) & 1) for i in range(self.m))

    def as_tensor(self) -> np.ndarray:
        """Weights shaped (2,)*m with axes ordered tau_m, ..., tau_1."""
        return self.weights.reshape((2,) * self.m)


class StationarySolution(BaseModel):
    """Exact stationary measure with solver diagnostics."""
    measure: BinaryMeasure
    residual: float
    sigma2: Optional[float] = None  # second-smallest singular value of the generator
    method: str


class Applicability(BaseModel):
    """Hypotheses of the Askey-Wilson generating-function identity at a test point."""
    abcd_resonance: bool  # q^l ABCD = 1 for some l
    ratio_resonance: bool  # A/C in {q^l} with A, C >= 1
    epsilon: Optional[float] = None
    in_interval: bool = True  # every t_i in [1, 1 + epsilon)

    @property
    def applicable(self) -> bool:
        return not self.abcd_resonance and not self.ratio_resonance and self.in_interval


class GfIdentity(BaseModel):
    """Right-hand side of the generating-function identity and its applicability."""
    value: float
    numerator: float
    denominator: float
    backend: str
    applicability: Applicability


class Statistic(BaseModel):
    """Observable for Monte-Carlo estimation: site occupation or prefix-word indicator."""
    model_config = ConfigDict(frozen=True)

    kind: str = Field(pattern="^(site|word)$")
    site: int = 1
    word: str = ""

    @classmethod
    def parse(cls, text: str) -> "Statistic":
        """'site:3' or 'word:10' (word over the first sites, site 1 first)."""
        kind, _, value = text.partition(":")
        if kind == "site":
            return cls(kind="site", site=int(value))
        if kind == "word":
            if not value or set(value) - {"0", "1"}:
                raise ValueError(f"word statistic needs a 0/1 string, got {value!r}")
            return cls(kind="word", word=value)
        raise ValueError(f"unknown statistic {text!r}")

    @property
    def label(self) -> str:
        return f"site:{self.site}" if self.kind == "site" else f"word:{self.word}"


class McEstimate(BaseModel):
    label: str
    mean: float
    stderr: float
    samples: int = Field(gt=0)
    seed: int
    burn_in: float = Field(ge=0)
    batches: int = Field(ge=20)


class NodeGrid(BaseModel):
    """Per-site node pairs (t_{i,0}, t_{i,1}) for generating-function inversion."""
    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    epsilon: float = Field(gt=0)
    side: GridSide
    nodes: tuple[tuple[float, float], ...]

    def selection(self, bits) -> tuple[float, ...]:
        return tuple(self.nodes[i][int(b)] for i, b in enumerate(bits))


class ConvergenceRow(BaseModel):
    n: int
    m: int
    tv: float = Field(ge=0, le=1)
    theta_pow: float
    fitted_bound: float = 0.0


class ScanResult(BaseModel):
    """Convergence scan rows with the sidecar metadata."""
    params: BoundaryParams
    rates: OpenAsepRates
    phase: PhaseInfo
    target: str
    theta: float
    epsilon: Optional[float] = None
    fitted_H: float
    nodes: Optional[list[list[float]]] = None
    rows: list[ConvergenceRow]


class BudgetReport(BaseModel):
    theta: float
    H: float
    s: float
    N: Optional[int]
    n_max: int
    final_log10: float
    below_target_at: Optional[int] = None


class CheckReport(BaseModel):
    """Result of one verification check at one parameter point."""
    name: str
    point: dict[str, Any] = Field(default_factory=dict)
    residual: float
    threshold: float
    status: CheckStatus
    reason: Optional[str] = None
    runtime: Optional[float] = None

    @model_validator(mode="after")
    def _status_matches(self):
        if self.status != CheckStatus.SKIPPED:
            expected = CheckStatus.PASS if self.residual <= self.threshold else CheckStatus.FAIL
            if self.status != expected:
                raise ValueError(f"status {self.status.value} inconsistent with residual/threshold")
        return self


class RunConfig(BaseModel):
    """One CLI invocation: exactly one parameterization given, the other derived."""
    command: str
    rates: Optional[OpenAsepRates] = None
    params: Optional[BoundaryParams] = None
    n: Optional[int] = None
    n_list: Optional[list[int]] = None
    m: Optional[int] = None
    precision_bits: int = Field(default=128, ge=64)
    tolerances: dict[str, float] = Field(default_factory=dict)
    seed: int = 0
    output: Optional[str] = None
    format: str = Field(default="json", pattern="^(json|csv)$")

    @model_validator(mode="before")
    @classmethod
    def _one_parameterization(cls, data):
        if not isinstance(data, dict):
            return data
        rates, params = data.get("rates"), data.get("params")
        if rates is not None and params is not None:
            raise ValueError("give either rates (alpha, beta, gamma, delta) or params (A, B, C, D), not both")
        from aseplab.services import asep_exact

        if rates is not None:
            rates = rates if isinstance(rates, OpenAsepRates) else OpenAsepRates(**rates)
            data = {**data, "rates": rates, "params": asep_exact.rates_to_boundary(rates)}
        elif params is not None:
            params = params if isinstance(params, BoundaryParams) else BoundaryParams(**params)
            data = {**data, "params": params, "rates": asep_exact.boundary_to_rates(params)}
        return data


class LedgerRun(BaseModel):
    """One stored CLI run of the ledger."""
    id: str
    command: str
    status: RunStatus = RunStatus.RUNNING
    config: dict[str, Any] = Field(default_factory=dict)
    created_at: Optional[str] = None  # ISO format timestamp
    completed_at: Optional[str] = None
    error: Optional[str] = None

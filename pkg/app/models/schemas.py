from math import gcd, isqrt, log, prod
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Any, Dict, List, Optional, Tuple, Union


# Arithmetic schemas
class FactoredInteger(BaseModel):
    """n together with its prime factorization, primes ascending"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    factors: Tuple[Tuple[int, int], ...] = ()

    @model_validator(mode="after")
    def _check_factorization(self):
        primes = [ell for ell, _ in self.factors]
        if any(a >= b for a, b in zip(primes, primes[1:])):
            raise ValueError("factors must be strictly increasing in the prime")
        if any(h < 1 for _, h in self.factors):
            raise ValueError("exponents must be >= 1")
        if prod(ell ** h for ell, h in self.factors) != self.n:
            raise ValueError(f"factors do not recompose to {self.n}")
        return self

    @property
    def primes(self) -> List[int]:
        return [ell for ell, _ in self.factors]

    def valuation(self, ell: int) -> int:
        """v_l(n)"""
        for q, h in self.factors:
            if q == ell:
                return h
        return 0

    def is_squarefree(self) -> bool:
        return all(h == 1 for _, h in self.factors)

    def mobius(self) -> int:
        if not self.is_squarefree():
            return 0
        return -1 if len(self.factors) % 2 else 1

    def totient(self) -> int:
        return prod((ell - 1) * ell ** (h - 1) for ell, h in self.factors)

    def num_divisors(self) -> int:
        return prod(h + 1 for _, h in self.factors)

    def von_mangoldt(self) -> float:
        """Lambda(n): log l for n = l^h, zero otherwise"""
        if len(self.factors) != 1:
            return 0.0
        return log(self.factors[0][0])

    def divisors(self) -> List[int]:
        divs = [1]
        for ell, h in self.factors:
            divs = [d * ell ** e for d in divs for e in range(h + 1)]
        return sorted(divs)


class PrimeRange(BaseModel):
    """Primes p with lo < p < hi and p = a (mod q)"""
    lo: int
    hi: int
    q: int = Field(default=1, ge=1)
    a: int = 0

    @model_validator(mode="after")
    def _check_progression(self):
        if self.hi < self.lo:
            raise ValueError("hi must not be below lo")
        if not 0 <= self.a < self.q:
            raise ValueError("residue a must satisfy 0 <= a < q")
        if self.q > 1 and gcd(self.a, self.q) != 1:
            raise ValueError("residue a must be coprime to q")
        return self


# Occurrence schemas
class GroupShape(BaseModel):
    """The group Z/m x Z/mk"""
    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    k: int = Field(ge=1)

    @property
    def order(self) -> int:
        return self.m * self.m * self.k

    @property
    def exponent(self) -> int:
        return self.m * self.k

    def sort_key(self) -> Tuple[int, int]:
        return (self.m, self.k)


class SearchWindow(BaseModel):
    """I_{m^2 k} restricted to p = 1 (mod m)"""
    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    k: int = Field(ge=1)

    @property
    def j_max(self) -> int:
        """Largest j with j^2 < 4k"""
        return isqrt(4 * self.k - 1)

    def contains(self, p: int) -> bool:
        """Exact test of (p - 1 - km^2)^2 < 4km^2 with m | p - 1"""
        if (p - 1) % self.m:
            return False
        t = self.k * self.m * self.m
        return (p - 1 - t) ** 2 < 4 * t


class Witness(BaseModel):
    """A prime p = km^2 + jm + 1 with j^2 < 4k"""
    p: int
    j: int


class OccurrenceResult(BaseModel):
    """Verdict for one G_{m,k} plus its witnesses"""
    shape: GroupShape
    occurs: bool
    witnesses: List[Witness] = []
    candidates: List[int] = []  # every km^2 + jm + 1 >= 2 that was tested


class CountReport(BaseModel):
    """#S(M,K) with the strategy that produced it"""
    M: int = Field(ge=1)
    K: int = Field(ge=1)
    count: int = Field(ge=0)
    strategy: str
    elapsed_ms: int = 0
    per_m: Optional[List[int]] = None
    per_k: Optional[List[int]] = None


# Curve schemas
class CurveRecord(BaseModel):
    """y^2 = x^3 + ax + b over F_p with its group of points"""
    p: int
    a: int
    b: int
    N: int
    trace: int
    shape: GroupShape


class RuckConstraint(BaseModel):
    """Allowed b_l ranges for groups of order N over F_p"""
    N: FactoredInteger
    p: int
    bounds: Dict[int, int]  # l -> largest allowed b_l
    h_p: int = 0


class ShapeCount(BaseModel):
    shape: GroupShape
    count: int = Field(ge=0)


class Census(BaseModel):
    """M_p(G) for every G realized over F_p"""
    p: int
    mode: str  # raw | iso
    counts: List[ShapeCount]

    @property
    def total(self) -> int:
        return sum(c.count for c in self.counts)

    def as_dict(self) -> Dict[GroupShape, int]:
        return {c.shape: c.count for c in self.counts}


class MOfGResult(BaseModel):
    """M(G): census counts summed over the primes of the Hasse window of N"""
    shape: GroupShape
    total: int = Field(ge=0)
    per_prime: Dict[int, int]
    censored: bool  # window contains primes below 5, left out of the sum
    mode: str


class CohenLenstraRatio(BaseModel):
    """Both sides of the Cohen-Lenstra proportionality, constant left out"""
    shape: GroupShape
    m_of_g: int
    aut: int
    lhs: float
    rhs_unnormalized: float
    censored: bool


# Sieve schemas
class RhoSpec(BaseModel):
    """Root counts of kc^2 + jc + 1"""
    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)
    j: int

    @property
    def discriminant(self) -> int:
        return self.j * self.j - 4 * self.k


class CharacterSpec(BaseModel):
    """The Kronecker character (-d / .) and its conductor data"""
    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)
    d1: int = Field(ge=1)
    a: int = Field(ge=1)


class SieveInstance(BaseModel):
    """A = {km^2 + jm + 1 : m <= M}"""
    k: int = Field(ge=1)
    j: int
    M: int = Field(ge=0)

    @property
    def X(self) -> int:
        return self.M

    @property
    def rho_spec(self) -> RhoSpec:
        return RhoSpec(k=self.k, j=self.j)


class DiscrepancyQuery(BaseModel):
    """E(y,h;q,a)"""
    y: Union[int, float] = Field(ge=0)
    h: Union[int, float] = Field(ge=0)
    q: int = Field(default=1, ge=1)
    a: int = 0

    @model_validator(mode="after")
    def _check_residue(self):
        if gcd(self.a, self.q) != 1:
            raise ValueError(f"gcd(a, q) must be 1, got gcd({self.a}, {self.q})")
        return self


class TheoremRatios(BaseModel):
    """Normalized #S(M,K) for the three counting theorems"""
    M: int
    K: int
    count: int
    thm12: float
    thm13_density: float
    thm14_ratio: float


# Experiment schemas
class ExperimentConfig(BaseModel):
    """One command line invocation"""
    command: str
    params: Dict[str, Any] = {}
    format: str = Field(default="csv", pattern="^(csv|json)$")
    output: Optional[str] = None
    threads: int = Field(default=1, ge=1)
    mem_budget: Optional[int] = None


class Report(BaseModel):
    """Rows emitted by one subcommand under its documented column schema"""
    command: str
    columns: List[str]
    rows: List[Dict[str, Any]]

    @model_validator(mode="after")
    def _check_schema(self):
        for row in self.rows:
            if list(row.keys()) != self.columns:
                raise ValueError(f"row keys {list(row.keys())} do not match schema {self.columns}")
        return self

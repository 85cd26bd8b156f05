"""
Sieve Estimates
Root counts of kc^2 + jc + 1, exact sieve survivors against their main terms,
Kronecker Euler products and prime-counting discrepancies
"""

import math
from fractions import Fraction
from itertools import combinations
from typing import List, Optional

import mpmath
import numpy as np
from loguru import logger

from app.core.errors import DomainOverflowError, PreconditionError, SieveHypothesisError
from app.models.schemas import (
    CharacterSpec,
    DiscrepancyQuery,
    RhoSpec,
    SieveInstance,
    TheoremRatios,
)
from app.services.arithmetic import factorize, jacobi, kronecker, sqrt_mod, totient
from app.services.occurrence import occurrence_service
from app.services.primes import I64_LIMIT, iter_prime_segments, small_primes

RHO_MAX_D = 10 ** 6
SURVIVOR_MAX_M = 10 ** 7
SURVIVOR_MAX_Y = 10 ** 5
MAIN_TERM_MAX_Y = 10 ** 6
EULER_MAX_Y = 10 ** 8
PSI_MAX = 10 ** 10
L1_TERMS = 10 ** 6


def _roots_mod_prime(k: int, j: int, ell: int) -> List[int]:
    """Residues c mod l with kc^2 + jc + 1 = 0"""
    k, j = k % ell, j % ell
    if ell == 2:
        return [c for c in (0, 1) if (k * c + j) * c % 2 == 1]
    if k == 0:
        return [(-pow(j, -1, ell)) % ell] if j else []
    disc = (j * j - 4 * k) % ell
    inv = pow(2 * k, -1, ell)
    if disc == 0:
        return [(-j) * inv % ell]
    if jacobi(disc, ell) != 1:
        return []
    s = sqrt_mod(disc, ell)
    return sorted({(-j + s) * inv % ell, (-j - s) * inv % ell})


def _rho_prime(k: int, j: int, ell: int) -> int:
    if ell == 2:
        return 1 if (k - j) % 2 else 0
    if k % ell == 0:
        return 0 if j % ell == 0 else 1
    return 1 + jacobi(j * j - 4 * k, ell)


def _pow_mod(base: np.ndarray, exp: np.ndarray, mod: np.ndarray) -> np.ndarray:
    """Elementwise base^exp mod mod for moduli below 2^31"""
    result = np.ones_like(base)
    base = base % mod
    exp = exp.copy()
    while exp.any():
        odd = (exp & 1).astype(bool)
        result[odd] = result[odd] * base[odd] % mod[odd]
        base = base * base % mod
        exp >>= 1
    return result


def _character_values(d: int, primes: np.ndarray) -> np.ndarray:
    """(-d / l) for an ascending array of primes"""
    chi = np.zeros(primes.size, dtype=np.int64)
    odd = primes != 2
    ell = primes[odd]
    residue = _pow_mod((-d) % ell, (ell - 1) // 2, ell)
    chi[odd] = np.where(residue == 1, 1, np.where(residue == 0, 0, -1))
    if not odd.all():
        chi[~odd] = kronecker(-d, 2)
    return chi


class SieveEstimator:
    """The sieve side: rho, survivors, main terms, characters and discrepancies"""

    def rho(self, spec: RhoSpec, d: int) -> int:
        """rho_{k,j}(d); multiplicative formula on squarefree d, root counting otherwise"""
        if d < 1 or d > RHO_MAX_D:
            raise PreconditionError(f"rho: d must lie in [1, {RHO_MAX_D}], got {d}")
        fac = factorize(d)
        if not fac.is_squarefree():
            return self.rho_brute(spec, d)
        return math.prod(_rho_prime(spec.k, spec.j, ell) for ell in fac.primes)

    def rho_brute(self, spec: RhoSpec, d: int) -> int:
        c = np.arange(d, dtype=np.int64)
        values = ((spec.k % d) * c % d * c + (spec.j % d) * c + 1) % d
        return int(np.count_nonzero(values == 0))

    def sieve_survivors(self, instance: SieveInstance, y: int) -> int:
        """#{m <= M : km^2 + jm + 1 has no prime factor <= y}, exactly"""
        if instance.M > SURVIVOR_MAX_M or y > SURVIVOR_MAX_Y:
            raise PreconditionError(f"sieve_survivors: need M <= {SURVIVOR_MAX_M} and y <= {SURVIVOR_MAX_Y}")
        alive = np.ones(instance.M + 1, dtype=bool)
        alive[0] = False
        # l divides km^2 + jm + 1 exactly when m falls in one of its root classes
        for ell in small_primes(y).tolist():
            for r in _roots_mod_prime(instance.k, instance.j, ell):
                alive[r or ell::ell] = False
        return int(np.count_nonzero(alive))

    def legendre_survivors(self, instance: SieveInstance, y: int) -> int:
        """Inclusion-exclusion over d | P(y) with direct divisibility counts"""
        m = np.arange(1, instance.M + 1, dtype=np.int64)
        bound = instance.k * instance.M ** 2 + abs(instance.j) * instance.M + 1
        if bound >= I64_LIMIT // 2:
            raise DomainOverflowError("legendre_survivors: polynomial values leave the int64 range")
        values = instance.k * m * m + instance.j * m + 1

        # primes without roots never divide a value; only subsets of the rest contribute
        primes = [ell for ell in small_primes(y).tolist() if _rho_prime(instance.k, instance.j, ell)]
        total = 0
        for size in range(len(primes) + 1):
            sign = -1 if size % 2 else 1
            for subset in combinations(primes, size):
                d = math.prod(subset)
                total += sign * int(np.count_nonzero(values % d == 0))
        return total

    def sieve_main_term(self, instance: SieveInstance, y: int) -> float:
        """M * prod_{l <= y} (1 - rho(l)/l)"""
        if y > MAIN_TERM_MAX_Y:
            raise PreconditionError(f"sieve_main_term: y must be <= {MAIN_TERM_MAX_Y}")
        logs = []
        for ell in small_primes(y).tolist():
            r = _rho_prime(instance.k, instance.j, ell)
            if r > min(2, ell - 1):
                raise SieveHypothesisError(ell, r)
            logs.append(math.log1p(-r / ell))
        return instance.X * math.exp(math.fsum(logs))

    def character_spec(self, d: int) -> CharacterSpec:
        d1, a = self.fundamental_discriminant(d)
        return CharacterSpec(d=d, d1=d1, a=a)

    def character(self, d: int, n: int) -> int:
        """chi(n) = (-d / n)"""
        return kronecker(-d, n)

    def euler_product(self, char: CharacterSpec, y: float, y_lo: float = 0) -> float:
        """prod over primes y_lo < l <= y of (1 - chi(l)/l)"""
        if y > EULER_MAX_Y:
            raise PreconditionError(f"euler_product: y must be <= {EULER_MAX_Y}")
        partial = []
        for primes in iter_prime_segments(int(math.floor(y_lo)), int(math.floor(y)) + 1):
            chi = _character_values(char.d, primes)
            partial.append(math.fsum(np.log1p(-chi / primes).tolist()))
        logger.debug("euler product d={} over ({}, {}]: {} segments", char.d, y_lo, y, len(partial))
        return math.exp(math.fsum(partial))

    def l1_reference(self, d: int, terms: int = L1_TERMS) -> float:
        """Partial sum of (-d/n)/n for n <= terms"""
        period = 4 * d
        table = np.array([kronecker(-d, n) for n in range(period)], dtype=np.float64)
        n = np.arange(1, terms + 1, dtype=np.int64)
        return math.fsum((table[n % period] / n).tolist())

    def fundamental_discriminant(self, d: int):
        """(d1, a) with -d = -a^2 d1 when -d is a discriminant, and -4d = -a^2 d1 otherwise"""
        if d < 1:
            raise PreconditionError(f"fundamental_discriminant: d must be positive, got {d}")
        s, f = 1, 1
        for ell, h in factorize(d).factors:
            s *= ell ** (h % 2)
            f *= ell ** (h // 2)
        if (-s) % 4 == 1:
            return s, f
        if f % 2 == 0:
            return 4 * s, f // 2
        return 4 * s, f

    def T_sum(self, d: int, K: int) -> float:
        """Sum of k/phi(k) over (k, j) with j^2 + d = 4k, k <= K, both signs of j"""
        if d < 1 or d > 4 * K:
            raise PreconditionError(f"T_sum: need 1 <= d <= 4K, got d={d}, K={K}")
        total = Fraction(0)
        j = 0
        while j * j + d <= 4 * K:
            if (j * j + d) % 4 == 0:
                k = (j * j + d) // 4
                total += Fraction(k, totient(k)) * (1 if j == 0 else 2)
            j += 1
        return float(total)

    def psi_discrepancy(self, query: DiscrepancyQuery) -> float:
        """|psi(y+h; q, a) - psi(y; q, a) - h/phi(q)|"""
        lo = int(math.floor(query.y))
        hi = int(math.floor(query.y + query.h))
        if hi > PSI_MAX:
            raise PreconditionError(f"psi_discrepancy: y + h must be <= {PSI_MAX}")
        q, a = query.q, query.a % query.q

        partial = []
        for primes in iter_prime_segments(lo, hi + 1):
            if q > 1:
                primes = primes[primes % q == a]
            partial.append(math.fsum(np.log(primes.astype(np.float64)).tolist()))

        # prime powers l^e with e >= 2
        powers = []
        for ell in small_primes(math.isqrt(hi)).tolist():
            power = ell * ell
            while power <= hi:
                if power > lo and power % q == a:
                    powers.append(math.log(ell))
                power *= ell
        partial.append(math.fsum(powers))

        return abs(math.fsum(partial) - query.h / totient(q))

    def pi_discrepancy(self, x: float, q: int = 1, a: int = 0) -> float:
        """pi(x; q, a) - li(x)/phi(q)"""
        if x < 2:
            raise PreconditionError(f"pi_discrepancy: x must be >= 2, got {x}")
        if q < 1 or math.gcd(a, q) != 1:
            raise PreconditionError(f"pi_discrepancy: gcd(a, q) must be 1, got gcd({a}, {q})")
        a %= q
        count = 0
        for primes in iter_prime_segments(0, int(math.floor(x)) + 1):
            count += int(np.count_nonzero(primes % q == a)) if q > 1 else int(primes.size)
        return count - float(mpmath.li(x)) / totient(q)

    def theorem_ratios(self, M: int, K: int, strategy: str = "auto", threads: Optional[int] = None) -> TheoremRatios:
        count = occurrence_service.count_S(M, K, strategy=strategy, threads=threads).count
        density = count / (M * K)
        return TheoremRatios(
            M=M,
            K=K,
            count=count,
            thm12=count * math.log(M) / (M * K ** 1.5),
            thm13_density=density,
            thm14_ratio=density,
        )


# Singleton instance
sieve_estimator = SieveEstimator()

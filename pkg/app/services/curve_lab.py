"""
Curve Lab
Brute-force elliptic curves over small prime fields: point counts, group shapes,
Rueck's admissible groups, curve censuses and Cohen-Lenstra quantities
"""

import math
from collections import Counter
from functools import lru_cache
from itertools import product
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import ConsistencyError, PreconditionError
from app.models.schemas import (
    Census,
    CohenLenstraRatio,
    CurveRecord,
    GroupShape,
    MOfGResult,
    RuckConstraint,
    ShapeCount,
)
from app.services.arithmetic import factorize, isqrt, jacobi
from app.services.cache import cache
from app.services.primes import is_prime
from app.services.workers import resolve_threads, run_ordered, split_range

CENSUS_MODES = ("raw", "iso")

Point = Optional[Tuple[int, int]]  # None is the point at infinity


def _check_field(p: int) -> None:
    if p < 5 or not is_prime(p):
        raise PreconditionError(f"p={p} must be a prime >= 5 for short Weierstrass curves")


def _is_singular(p: int, a: int, b: int) -> bool:
    return (4 * a ** 3 + 27 * b ** 2) % p == 0


@lru_cache(maxsize=64)
def _square_roots(p: int) -> Tuple[Tuple[int, ...], ...]:
    roots: List[List[int]] = [[] for _ in range(p)]
    for y in range(p):
        roots[y * y % p].append(y)
    return tuple(tuple(r) for r in roots)


@lru_cache(maxsize=64)
def _legendre_table(p: int) -> np.ndarray:
    table = -np.ones(p, dtype=np.int64)
    table[(np.arange(p, dtype=np.int64) ** 2) % p] = 1
    table[0] = 0
    table.flags.writeable = False
    return table


def _count_row(p: int, a: int) -> np.ndarray:
    """#E(F_p) for y^2 = x^3 + ax + b, every b at once"""
    x = np.arange(p, dtype=np.int64)
    base = (x * x * x + a * x) % p
    values = (base[:, None] + np.arange(p, dtype=np.int64)[None, :]) % p
    return p + 1 + _legendre_table(p)[values].sum(axis=0)


def _add(P: Point, Q: Point, a: int, p: int) -> Point:
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def _mul(n: int, P: Point, a: int, p: int) -> Point:
    result: Point = None
    while n:
        if n & 1:
            result = _add(result, P, a, p)
        P = _add(P, P, a, p)
        n >>= 1
    return result


def _point_order(P: Point, N: int, primes: List[int], a: int, p: int) -> int:
    """Order of P by descent from the group order"""
    order = N
    for ell in primes:
        while order % ell == 0 and _mul(order // ell, P, a, p) is None:
            order //= ell
    return order


def _affine_points(p: int, a: int, b: int) -> Iterator[Tuple[int, int]]:
    roots = _square_roots(p)
    for x in range(p):
        for y in roots[(x * x * x + a * x + b) % p]:
            yield x, y


def _shape_tuple(p: int, a: int, b: int, N: int) -> Tuple[int, int]:
    primes = factorize(N).primes
    e = 1
    for P in _affine_points(p, a, b):
        if e == N:
            break
        e = math.lcm(e, _point_order(P, N, primes, a, p))

    m = N // e
    if m * e != N or e % m:
        raise ConsistencyError(f"curve ({a}, {b}) over F_{p}: exponent {e} incompatible with order {N}")
    return m, e // m


def _iso_multipliers(p: int) -> Tuple[np.ndarray, np.ndarray]:
    u = np.arange(1, p, dtype=np.int64)
    u2 = u * u % p
    return u2 * u2 % p, u2 * u2 % p * u2 % p


def _census_block(p: int, a_lo: int, a_hi: int, mode: str) -> Dict[Tuple[int, int], int]:
    counts: Counter = Counter()
    if mode == "iso":
        u4, u6 = _iso_multipliers(p)
    bs = np.arange(p, dtype=np.int64)
    for a in range(a_lo, a_hi + 1):
        row = _count_row(p, a)
        keep = (4 * a ** 3 + 27 * bs * bs) % p != 0
        if mode == "iso":
            # canonical representative: least (u^4 a, u^6 b) over u in F_p^*
            orbit = (u4[:, None] * a % p) * p + (u6[:, None] * bs[None, :] % p)
            keep &= orbit.min(axis=0) == a * p + bs
        for b in np.flatnonzero(keep).tolist():
            counts[_shape_tuple(p, a, b, int(row[b]))] += 1
    return dict(counts)


def _aut_prime_part(ell: int, exps: List[int]) -> int:
    """#Aut of the abelian l-group with cyclic factors l^e, e in exps (ascending, all >= 1)"""
    n = len(exps)
    total = 1
    for i in range(n):
        d = max(t for t in range(n) if exps[t] == exps[i]) + 1
        c = min(t for t in range(n) if exps[t] == exps[i]) + 1
        total *= ell ** d - ell ** i
        total *= ell ** (exps[i] * (n - d))
        total *= ell ** ((exps[i] - 1) * (n - c + 1))
    return total


class CurveLab:
    """Exhaustive elliptic-curve experiments over F_p"""

    def ec_point_count(self, p: int, a: int, b: int) -> int:
        """#E(F_p) = 1 + sum over x of (1 + (x^3 + ax + b / p))"""
        _check_field(p)
        a, b = a % p, b % p
        if _is_singular(p, a, b):
            raise PreconditionError(f"curve y^2 = x^3 + {a}x + {b} is singular over F_{p}")
        return 1 + sum(1 + jacobi(x * x * x + a * x + b, p) for x in range(p))

    def group_shape_of_curve(self, p: int, a: int, b: int) -> GroupShape:
        N = self.ec_point_count(p, a, b)
        m, k = _shape_tuple(p, a % p, b % p, N)
        return GroupShape(m=m, k=k)

    def curve_record(self, p: int, a: int, b: int) -> CurveRecord:
        N = self.ec_point_count(p, a, b)
        m, k = _shape_tuple(p, a % p, b % p, N)
        return CurveRecord(p=p, a=a % p, b=b % p, N=N, trace=p + 1 - N, shape=GroupShape(m=m, k=k))

    def ruck_constraints(self, N: int, p: int) -> RuckConstraint:
        if not is_prime(p):
            raise PreconditionError(f"p={p} is not prime")
        if N < 1 or (p + 1 - N) ** 2 >= 4 * p:
            raise PreconditionError(f"N={N} is outside the Hasse window of p={p}")
        fac = factorize(N)
        p_minus = factorize(p - 1)
        bounds = {
            ell: min(p_minus.valuation(ell), h // 2)
            for ell, h in fac.factors
            if ell != p
        }
        return RuckConstraint(N=fac, p=p, bounds=bounds, h_p=fac.valuation(p))

    def ruck_enumerate(self, N: int, p: int) -> List[GroupShape]:
        """Every group of order N that Rueck's theorem allows over F_p, sorted"""
        constraint = self.ruck_constraints(N, p)
        primes = sorted(constraint.bounds)
        shapes = set()
        for choice in product(*(range(constraint.bounds[ell] + 1) for ell in primes)):
            m = math.prod(ell ** b for ell, b in zip(primes, choice))
            shapes.add(GroupShape(m=m, k=N // (m * m)))
        return sorted(shapes, key=GroupShape.sort_key)

    def census(self, p: int, mode: str = "raw", threads: Optional[int] = None) -> Census:
        """M_p(G) for all G, by running through every nonsingular (a, b)"""
        _check_field(p)
        if p > settings.CENSUS_MAX_P:
            raise PreconditionError(f"census bound is p <= {settings.CENSUS_MAX_P}, got {p}")
        if mode not in CENSUS_MODES:
            raise PreconditionError(f"unknown census mode {mode!r}, expected one of {CENSUS_MODES}")

        cache_key = f"census:{p}:{mode}"
        cached = cache.get(cache_key)
        if cached is not None:
            return cached

        workers = resolve_threads(threads)
        parts = 1 if workers == 1 else 4 * workers
        tasks = [(p, lo, hi, mode) for lo, hi in split_range(0, p - 1, parts)]
        totals: Counter = Counter()
        for part in run_ordered(_census_block, tasks, threads):
            totals.update(part)

        result = Census(
            p=p,
            mode=mode,
            counts=[
                ShapeCount(shape=GroupShape(m=m, k=k), count=n)
                for (m, k), n in sorted(totals.items())
            ],
        )
        logger.debug("census p={} mode={}: {} curves, {} shapes", p, mode, result.total, len(result.counts))
        cache.set(cache_key, result)
        return result

    def M_of_G(self, shape: GroupShape, mode: str = "raw", threads: Optional[int] = None) -> MOfGResult:
        """Sum of M_p(G) over the primes p with (p + 1 - N)^2 < 4p"""
        N = shape.order
        s = isqrt(4 * N)
        window = [
            p for p in range(max(2, N - s), N + s + 3)
            if (p + 1 - N) ** 2 < 4 * p and is_prime(p)
        ]
        if window and window[-1] > settings.CENSUS_MAX_P:
            raise PreconditionError(
                f"Hasse window of N={N} reaches p={window[-1]}, beyond the census bound {settings.CENSUS_MAX_P}"
            )

        per_prime = {}
        for p in window:
            if p < 5:
                continue
            if (p - 1) % shape.m:
                per_prime[p] = 0  # Weil pairing: E[m] inside E(F_p) forces m | p - 1
                continue
            per_prime[p] = self.census(p, mode, threads).as_dict().get(shape, 0)

        return MOfGResult(
            shape=shape,
            total=sum(per_prime.values()),
            per_prime=per_prime,
            censored=any(p < 5 for p in window),
            mode=mode,
        )

    def aut_order(self, shape: GroupShape, method: str = "closed") -> int:
        """#Aut(Z/m x Z/mk)"""
        if method == "brute":
            return self._aut_order_brute(shape)
        if method != "closed":
            raise PreconditionError(f"unknown method {method!r}, expected closed or brute")
        m, n = shape.m, shape.m * shape.k
        fm, fn = factorize(m), factorize(n)
        total = 1
        for ell in fn.primes:
            exps = [e for e in (fm.valuation(ell), fn.valuation(ell)) if e > 0]
            total *= _aut_prime_part(ell, exps)
        return total

    def cohen_lenstra_ratio(self, shape: GroupShape, mode: str = "raw", threads: Optional[int] = None) -> CohenLenstraRatio:
        """M(G) log N / (4 sqrt N) beside (#G / #Aut G) N^{3/2}"""
        m_of_g = self.M_of_G(shape, mode, threads)
        aut = self.aut_order(shape)
        N = shape.order
        lhs = m_of_g.total * math.log(N) / (4 * math.sqrt(N)) if N > 1 else 0.0
        return CohenLenstraRatio(
            shape=shape,
            m_of_g=m_of_g.total,
            aut=aut,
            lhs=lhs,
            rhs_unnormalized=(N / aut) * N ** 1.5,
            censored=m_of_g.censored,
        )

    def _aut_order_brute(self, shape: GroupShape) -> int:
        N = shape.order
        if N > settings.AUT_BRUTE_MAX_ORDER:
            raise PreconditionError(f"brute-force automorphism count is limited to order {settings.AUT_BRUTE_MAX_ORDER}")
        m, n, k = shape.m, shape.m * shape.k, shape.k
        x1 = np.repeat(np.arange(m, dtype=np.int64), n)
        x2 = np.tile(np.arange(n, dtype=np.int64), m)
        d = np.arange(n, dtype=np.int64)
        chunk = max(1, (1 << 22) // N)

        # f(e1) = (a, c) must be killed by m, so c runs over multiples of k; f(e2) = (b, d) is free
        count = 0
        for a, b in product(range(m), repeat=2):
            on_first = (a * x1 + b * x2) % m == 0
            s1, s2 = x1[on_first], x2[on_first]
            for c in range(0, n, k):
                base = c * s1
                for start in range(0, n, chunk):
                    ds = d[start:start + chunk]
                    zeros = ((base[None, :] + ds[:, None] * s2[None, :]) % n == 0).sum(axis=1)
                    count += int(np.count_nonzero(zeros == 1))
        return count


# Singleton instance
curve_lab = CurveLab()

"""
Prime Service
Deterministic 64-bit primality, cached small-prime tables and a numpy segmented sieve
"""

from functools import lru_cache
from math import isqrt
from typing import Iterator, List, Optional

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import DomainOverflowError
from app.models.schemas import PrimeRange

U64_LIMIT = 1 << 64
I64_LIMIT = 1 << 63

# Strong-probable-prime bases that decide primality for every n < 3.3 * 10^24
MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
TRIAL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


def _strong_probable_prime(n: int, base: int, d: int, s: int) -> bool:
    x = pow(base, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """Deterministic primality for 0 <= n < 2^64"""
    if n >= U64_LIMIT:
        raise DomainOverflowError(f"is_prime: {n} is outside [0, 2^64)")
    if n < 2:
        return False
    for ell in TRIAL_PRIMES:
        if n % ell == 0:
            return n == ell
    if n < 97 * 97:
        return True

    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    return all(_strong_probable_prime(n, base, d, s) for base in MR_BASES)


@lru_cache(maxsize=None)
def _sieve_table(bits: int) -> np.ndarray:
    limit = 1 << bits
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if flags[p]:
            flags[p * p::p] = False
    table = np.flatnonzero(flags).astype(np.int64)
    table.flags.writeable = False
    logger.debug("built prime table up to 2^{} ({} primes)", bits, table.size)
    return table


def small_primes(limit: int) -> np.ndarray:
    """All primes <= limit from a cached, read-only table"""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    table = _sieve_table(max(4, int(limit).bit_length()))
    return table[:np.searchsorted(table, limit, side="right")]


def iter_prime_segments(lo: int, hi: int, segment_odd: Optional[int] = None) -> Iterator[np.ndarray]:
    """
    Stream the primes p with lo < p < hi, one ascending int64 array per segment.
    Odd-only segmented sieve of Eratosthenes.
    """
    first, last = max(lo + 1, 2), hi - 1
    if first > last:
        return
    if last >= I64_LIMIT:
        raise DomainOverflowError(f"sieve bound {hi} exceeds the int64 range")

    segment_odd = segment_odd or settings.SIEVE_SEGMENT_ODD
    if first <= 2 <= last:
        yield np.array([2], dtype=np.int64)

    base = small_primes(isqrt(last))[1:]  # odd base primes
    span = 2 * segment_odd
    low = max(3, first)
    if low % 2 == 0:
        low += 1

    while low <= last:
        high = min(low + span, last + 1)  # exclusive
        mask = np.ones((high - low + 1) // 2, dtype=bool)
        for p in base.tolist():
            p2 = p * p
            if p2 >= high:
                break
            start = max(p2, -(-low // p) * p)
            if start % 2 == 0:
                start += p
            if start < high:
                mask[(start - low) // 2::p] = False
        idx = np.flatnonzero(mask)
        if idx.size:
            yield low + 2 * idx.astype(np.int64)
        low = high + 1 if high % 2 == 0 else high


def _primes_direct(rng: PrimeRange) -> List[int]:
    start = rng.lo + 1
    offset = (rng.a - start) % rng.q
    return [n for n in range(start + offset, rng.hi, rng.q) if is_prime(n)]


def _primes_sieved(rng: PrimeRange) -> List[int]:
    found: List[int] = []
    for segment in iter_prime_segments(rng.lo, rng.hi):
        if rng.q > 1:
            segment = segment[segment % rng.q == rng.a]
        found.extend(segment.tolist())
    return found


def primes_in(rng: PrimeRange) -> List[int]:
    """Primes in (lo, hi) congruent to a mod q, ascending"""
    if rng.hi - rng.lo <= settings.SHORT_RANGE_MAX or rng.hi >= I64_LIMIT:
        return _primes_direct(rng)
    return _primes_sieved(rng)

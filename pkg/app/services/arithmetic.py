"""
Arithmetic Service
Exact integer primitives: square roots, Jacobi/Kronecker symbols, factorization
"""

import math
import random
from functools import lru_cache
from typing import Dict, List

from app.core.config import settings
from app.core.errors import DomainOverflowError, PreconditionError
from app.models.schemas import FactoredInteger
from app.services.primes import U64_LIMIT, is_prime, small_primes


def isqrt(n: int) -> int:
    """floor(sqrt(n)) exactly"""
    if n < 0:
        raise PreconditionError(f"isqrt: negative argument {n}")
    return math.isqrt(n)


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n >= 1, by reciprocity"""
    if n <= 0 or n % 2 == 0:
        raise PreconditionError(f"jacobi: modulus must be odd and positive, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for any integer n"""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -1
    twos = (n & -n).bit_length() - 1
    if twos:
        if a % 2 == 0:
            return 0
        if twos % 2 and a % 8 in (3, 5):
            result = -result
        n >>= twos
    return result * jacobi(a, n)


def _brent(n: int, rng: random.Random) -> int:
    """One nontrivial factor of an odd composite n (Pollard rho, Brent's cycle finding)"""
    while True:
        y, c, batch = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            done = 0
            while done < r and g == 1:
                ys = y
                for _ in range(min(batch, r - done)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                done += batch
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def _split(n: int, rng: random.Random, out: Dict[int, int]) -> None:
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    root = math.isqrt(n)
    if root * root == n:
        _split(root, rng, out)
        _split(root, rng, out)
        return
    f = _brent(n, rng)
    _split(f, rng, out)
    _split(n // f, rng, out)


@lru_cache(maxsize=4096)
def factorize(n: int) -> FactoredInteger:
    """Complete factorization of 1 <= n < 2^64"""
    if n < 1:
        raise PreconditionError(f"factorize: argument must be positive, got {n}")
    if n >= U64_LIMIT:
        raise DomainOverflowError(f"factorize: {n} is outside [1, 2^64)")

    found: Dict[int, int] = {}
    rest = n
    for ell in small_primes(settings.TRIAL_DIVISION_BOUND).tolist():
        if ell * ell > rest:
            break
        while rest % ell == 0:
            rest //= ell
            found[ell] = found.get(ell, 0) + 1
    if rest > 1:
        _split(rest, random.Random(settings.FACTOR_SEED), found)

    return FactoredInteger(n=n, factors=tuple(sorted(found.items())))


def divisors(n: int) -> List[int]:
    return factorize(n).divisors()


def totient(n: int) -> int:
    return factorize(n).totient()


def sqrt_mod(a: int, p: int) -> int:
    """Some x with x^2 = a (mod p), p an odd prime and a a square mod p (Tonelli-Shanks)"""
    a %= p
    if a == 0:
        return 0
    if jacobi(a, p) != 1:
        raise PreconditionError(f"sqrt_mod: {a} is not a square modulo {p}")
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)

    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while jacobi(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r

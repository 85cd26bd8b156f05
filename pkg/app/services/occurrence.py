"""
Occurrence Service
Decides which G_{m,k} occur as E(F_p) and counts #S(M,K) and #R(M,K)
"""

import math
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import DomainOverflowError, MemoryBudgetError, PreconditionError
from app.models.schemas import CountReport, GroupShape, OccurrenceResult, Witness
from app.services.arithmetic import divisors, isqrt
from app.services.primes import I64_LIMIT, is_prime, iter_prime_segments
from app.services.workers import iter_ordered, resolve_threads, split_range

STRATEGIES = ("direct", "prime_driven", "auto")

# Float sqrt in the vectorized window stays exact below this bound
PRIME_DRIVEN_LIMIT = 1 << 52

# Largest block of occurrence cells a direct worker holds at once
DIRECT_BLOCK_CELLS = 1 << 22

# Cells unpacked at a time when summing a packed occurrence bitset
UNPACK_SLAB_CELLS = 1 << 20


def _check_shape(m: int, k: int) -> None:
    if m < 1 or k < 1:
        raise PreconditionError(f"m and k must be positive, got m={m}, k={k}")
    top = m * m * k + m * isqrt(4 * k - 1) + 1
    if top >= I64_LIMIT:
        raise DomainOverflowError(f"window of G_{{{m},{k}}} reaches {top}, beyond 2^63")


def _has_witness(m: int, k: int) -> bool:
    t = k * m * m
    j_max = isqrt(4 * k - 1)
    for j in range(-j_max, j_max + 1):
        c = t + j * m + 1
        if c >= 2 and is_prime(c):
            return True
    return False


def _hasse_t_range(p: int) -> Tuple[int, int]:
    """Integers t with (p - 1 - t)^2 < 4t form [p + 1 - s, p + 1 + s], s = isqrt(4p)"""
    s = isqrt(4 * p)
    return p + 1 - s, p + 1 + s


def _k_range(t_lo: int, t_hi: int, m: int) -> Tuple[int, int]:
    m2 = m * m
    return max(1, -(-t_lo // m2)), t_hi // m2


def _direct_block(m_lo: int, m_hi: int, k_lo: int, k_hi: int) -> np.ndarray:
    block = np.zeros((m_hi - m_lo + 1, k_hi - k_lo + 1), dtype=bool)
    for row, m in enumerate(range(m_lo, m_hi + 1)):
        for col, k in enumerate(range(k_lo, k_hi + 1)):
            block[row, col] = _has_witness(m, k)
    return block


def _direct_tally(m_lo: int, m_hi: int, K: int) -> Tuple[np.ndarray, np.ndarray]:
    block = _direct_block(m_lo, m_hi, 1, K)
    return block.sum(axis=1, dtype=np.int64), block.sum(axis=0, dtype=np.int64)


def _row_bytes(K: int) -> int:
    return (K + 7) // 8


def _t_window(primes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    four_p = 4 * primes
    s = np.floor(np.sqrt(four_p.astype(np.float64))).astype(np.int64)
    for _ in range(2):
        s -= (s * s > four_p).astype(np.int64)
        s += ((s + 1) * (s + 1) <= four_p).astype(np.int64)
    return primes + 1 - s, primes + 1 + s


def _mark_row(row: np.ndarray, k_lo: np.ndarray, k_hi: np.ndarray) -> None:
    """OR the union of the 1-based intervals [k_lo, k_hi] into a packed bit row"""
    first, last = int(k_lo.min()), int(k_hi.max())
    width = last - first + 2
    diff = np.bincount(k_lo - first, minlength=width) - np.bincount(k_hi - first + 1, minlength=width)
    cover = np.cumsum(diff)[:width - 1] > 0
    b0, b1 = (first - 1) // 8, (last - 1) // 8 + 1
    bits = np.unpackbits(row[b0:b1])
    offset = first - 1 - 8 * b0
    bits[offset:offset + cover.size] |= cover
    row[b0:b1] = np.packbits(bits)


def _mark_segment(packed: np.ndarray, primes: np.ndarray, M: int, K: int, stride: bool) -> None:
    """
    Mark every G_{m,k} (m <= M, k <= K) witnessed by a prime of one sieve segment.
    Only m with m^2 <= t_hi(p) and m^2 K >= t_lo(p) for some p in the segment can mark.
    """
    p_first, p_last = int(primes[0]), int(primes[-1])
    m_from = max(1, isqrt(max(p_first + 1 - isqrt(4 * p_first), 0) // K))
    m_to = min(M, isqrt(p_last + 1 + isqrt(4 * p_last)))
    if stride:
        bitmap = np.zeros(p_last - p_first + 1, dtype=bool)
        bitmap[primes - p_first] = True

    for m in range(m_from, m_to + 1):
        if stride:
            start = (1 - p_first) % m
            hits = np.flatnonzero(bitmap[start::m]).astype(np.int64) * m + (p_first + start)
        elif m == 1:
            hits = primes
        else:
            hits = primes[(primes - 1) % m == 0]
        if hits.size == 0:
            continue
        t_lo, t_hi = _t_window(hits)
        m2 = m * m
        k_lo = np.maximum(-(-t_lo // m2), 1)
        k_hi = np.minimum(t_hi // m2, K)
        ok = k_lo <= k_hi
        if ok.any():
            _mark_row(packed[m - 1], k_lo[ok], k_hi[ok])


def _prime_driven_block(lo: int, hi: int, M: int, K: int, stride: bool) -> np.ndarray:
    packed = np.zeros((M, _row_bytes(K)), dtype=np.uint8)
    for primes in iter_prime_segments(lo, hi):
        if primes.size:
            _mark_segment(packed, primes, M, K, stride)
    return packed


def _packed_counts(packed: np.ndarray, K: int, m_lo: int = 1, k_lo: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column sums of the cells m >= m_lo, k >= k_lo, unpacked a slab at a time"""
    rows = packed[m_lo - 1:]
    per_m = np.zeros(rows.shape[0], dtype=np.int64)
    per_k = np.zeros(K - k_lo + 1, dtype=np.int64)
    step = max(1, UNPACK_SLAB_CELLS // K)
    for top in range(0, rows.shape[0], step):
        slab = np.unpackbits(rows[top:top + step], axis=1, count=K)[:, k_lo - 1:]
        per_m[top:top + step] = slab.sum(axis=1, dtype=np.int64)
        per_k += slab.sum(axis=0, dtype=np.int64)
    return per_m, per_k


class OccurrenceService:
    """Occurrence of G_{m,k} by exact window search"""

    def occurs(self, m: int, k: int, want_witnesses: bool = False) -> OccurrenceResult:
        """
        Scan p = km^2 + jm + 1 over all j with j^2 < 4k.
        Stops at the first prime unless want_witnesses is set.
        """
        _check_shape(m, k)
        t = k * m * m
        j_max = isqrt(4 * k - 1)
        witnesses, candidates = [], []
        for j in range(-j_max, j_max + 1):
            c = t + j * m + 1
            if c < 2:
                continue
            candidates.append(c)
            if is_prime(c):
                witnesses.append(Witness(p=c, j=j))
                if not want_witnesses:
                    break

        return OccurrenceResult(
            shape=GroupShape(m=m, k=k),
            occurs=bool(witnesses),
            witnesses=witnesses,
            candidates=candidates,
        )

    def window_prime_count(self, m: int, k: int) -> int:
        """Number of primes p = 1 (mod m) in I_{m^2 k}"""
        return len(self.occurs(m, k, want_witnesses=True).witnesses)

    def shapes_for_prime(self, p: int, M: int) -> List[GroupShape]:
        """All G_{m,k} with m <= M that some curve over F_p can realize"""
        if p >= I64_LIMIT:
            raise DomainOverflowError(f"p={p} is beyond 2^63")
        if not is_prime(p):
            raise PreconditionError(f"p={p} is not prime")
        t_lo, t_hi = _hasse_t_range(p)
        shapes = []
        for m in divisors(p - 1):
            if m > M:
                break
            k_lo, k_hi = _k_range(t_lo, t_hi, m)
            shapes.extend(GroupShape(m=m, k=k) for k in range(k_lo, k_hi + 1))
        return shapes

    def resolve_strategy(self, M: int, K: int, strategy: str = "auto", mem_budget: Optional[int] = None) -> str:
        if strategy not in STRATEGIES:
            raise PreconditionError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
        if strategy != "auto":
            return strategy
        if M * K < settings.AUTO_MIN_CELLS or M * _row_bytes(K) > self._budget(mem_budget):
            return "direct"
        # sieving costs ~M^2 K numbers, the direct scan ~M K sqrt(K) primality tests
        if M * M > settings.AUTO_COST_RATIO ** 2 * K:
            return "direct"
        return "prime_driven"

    def occurrence_matrix(
        self,
        M: int,
        K: int,
        strategy: str = "auto",
        threads: Optional[int] = None,
        mem_budget: Optional[int] = None,
    ) -> np.ndarray:
        """M x K indicator of occurrence; entry [m-1, k-1] is True iff G_{m,k} occurs"""
        self._check_bounds(M, K)
        budget = self._budget(mem_budget)
        if M * K > budget:
            raise MemoryBudgetError(M * K, budget)
        if self.resolve_strategy(M, K, strategy, mem_budget) == "prime_driven":
            if M * K + M * _row_bytes(K) > budget:
                raise MemoryBudgetError(M * K + M * _row_bytes(K), budget)
            packed = self._prime_driven_packed(M, K, threads, budget - M * K)
            return np.unpackbits(packed, axis=1, count=K).view(bool)

        matrix = np.zeros((M, K), dtype=bool)
        blocks = self._direct_blocks(1, M, 1, K, threads)
        for (lo, hi, _, _), block in zip(blocks, iter_ordered(_direct_block, blocks, threads)):
            matrix[lo - 1:hi] = block
        return matrix

    def count_S(
        self,
        M: int,
        K: int,
        strategy: str = "auto",
        threads: Optional[int] = None,
        mem_budget: Optional[int] = None,
        marginals: bool = False,
    ) -> CountReport:
        """Exact #S(M,K)"""
        start = time.perf_counter()
        used, per_m, per_k = self._tally(M, K, strategy, threads, mem_budget)
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        count = int(per_m.sum())
        logger.info("#S({}, {}) = {} via {} in {} ms", M, K, count, used, elapsed_ms)
        return CountReport(
            M=M,
            K=K,
            count=count,
            strategy=used,
            elapsed_ms=elapsed_ms,
            per_m=per_m.tolist() if marginals else None,
            per_k=per_k.tolist() if marginals else None,
        )

    def count_R(
        self,
        M: int,
        K: int,
        strategy: str = "auto",
        threads: Optional[int] = None,
        mem_budget: Optional[int] = None,
    ) -> int:
        """Exact #R(M,K): pairs with M/2 < m <= M, K/2 < k <= K and no witness"""
        self._check_bounds(M, K)
        m_lo, k_lo = M // 2 + 1, K // 2 + 1
        cells = (M - m_lo + 1) * (K - k_lo + 1)
        if self.resolve_strategy(M, K, strategy, mem_budget) == "prime_driven":
            packed = self._prime_driven_packed(M, K, threads, self._budget(mem_budget))
            per_m, _ = _packed_counts(packed, K, m_lo, k_lo)
            return cells - int(per_m.sum())

        blocks = self._direct_blocks(m_lo, M, k_lo, K, threads)
        return cells - sum(int(np.count_nonzero(b)) for b in iter_ordered(_direct_block, blocks, threads))

    def density_scan(
        self,
        M: int,
        k_grid: Sequence[int],
        strategy: str = "auto",
        threads: Optional[int] = None,
        mem_budget: Optional[int] = None,
    ) -> List[Tuple[int, float]]:
        """#S(M,K)/(MK) for every K in the grid, from one tally at the largest K"""
        grid = list(k_grid)
        if not grid:
            return []
        if any(a >= b for a, b in zip(grid, grid[1:])):
            raise PreconditionError(f"K grid must be strictly ascending, got {grid}")
        _, per_m, per_k = self._tally(M, grid[-1], strategy, threads, mem_budget)
        prefix = np.cumsum(per_k)
        return [(K, int(prefix[K - 1]) / (M * K)) for K in grid]

    def heuristic_density(self, M: int, K: int) -> float:
        """Mean of 1 - (1 - 1/log(m^2 k))^{4 sqrt k} over m <= M, k <= K"""
        self._check_bounds(M, K)
        m = np.arange(1, M + 1, dtype=np.float64)[:, None]
        k = np.arange(1, K + 1, dtype=np.float64)[None, :]
        N = m * m * k
        with np.errstate(divide="ignore", invalid="ignore"):
            miss = np.power(1.0 - 1.0 / np.log(N), 4.0 * np.sqrt(k))
            hit = np.where(N < 3, 1.0, 1.0 - miss)
        return math.fsum(hit.ravel().tolist()) / (M * K)

    def _tally(self, M, K, strategy, threads, mem_budget) -> Tuple[str, np.ndarray, np.ndarray]:
        self._check_bounds(M, K)
        used = self.resolve_strategy(M, K, strategy, mem_budget)
        logger.debug("tallying S({}, {}) with strategy {}", M, K, used)
        if used == "prime_driven":
            packed = self._prime_driven_packed(M, K, threads, self._budget(mem_budget))
            per_m, per_k = _packed_counts(packed, K)
            return used, per_m, per_k

        stripes = [(lo, hi, K) for lo, hi, _, _ in self._direct_blocks(1, M, 1, K, threads)]
        per_m, per_k = [], np.zeros(K, dtype=np.int64)
        for rows, cols in iter_ordered(_direct_tally, stripes, threads):
            per_m.append(rows)
            per_k += cols
        return used, np.concatenate(per_m), per_k

    def prime_driven_workers(self, M: int, K: int, threads: Optional[int], budget: int) -> int:
        """
        Workers the packed M x K bitset allows within `budget` bytes.
        Fanned out, the merged bitset, one per busy worker and one per
        unmerged result are alive at once: (1 + 2 * workers) bitsets.
        """
        size = M * _row_bytes(K)
        if size > budget:
            raise MemoryBudgetError(size, budget)
        workers = resolve_threads(threads)
        fit = max(1, (budget // size - 1) // 2)
        if workers > fit:
            logger.info("memory budget {} bytes fits {} bitsets of {} bytes; using {} workers", budget, 1 + 2 * fit, size, fit)
            workers = fit
        return workers

    def _prime_driven_packed(self, M: int, K: int, threads: Optional[int], budget: int) -> np.ndarray:
        p_max = M * M * K + M * isqrt(4 * K - 1) + 1
        if p_max >= PRIME_DRIVEN_LIMIT:
            raise DomainOverflowError(f"prime_driven sieve bound {p_max} exceeds 2^52; use --strategy direct")
        workers = self.prime_driven_workers(M, K, threads, budget)
        stride = M > settings.RESIDUE_SCAN_MAX_M
        parts = 1 if workers == 1 else 4 * workers
        tasks = [(lo - 1, hi + 1, M, K, stride) for lo, hi in split_range(2, p_max, parts)]
        logger.debug("prime_driven: sieving to {} in {} blocks (stride={})", p_max, len(tasks), stride)
        packed = None
        for block in iter_ordered(_prime_driven_block, tasks, workers):
            if packed is None:
                packed = block
            else:
                packed |= block
        return packed

    def _direct_blocks(self, m_lo, m_hi, k_lo, k_hi, threads) -> List[Tuple[int, int, int, int]]:
        width = k_hi - k_lo + 1
        rows = m_hi - m_lo + 1
        workers = resolve_threads(threads)
        parts = max(1 if workers == 1 else 4 * workers, -(-rows * width // DIRECT_BLOCK_CELLS))
        return [(lo, hi, k_lo, k_hi) for lo, hi in split_range(m_lo, m_hi, parts)]

    def _check_bounds(self, M: int, K: int) -> None:
        if M < 1 or K < 1:
            raise PreconditionError(f"M and K must be positive, got M={M}, K={K}")
        _check_shape(M, K)

    def _budget(self, mem_budget: Optional[int] = None) -> int:
        return mem_budget if mem_budget is not None else settings.ECG_MEM_BUDGET_BYTES


# Singleton instance
occurrence_service = OccurrenceService()

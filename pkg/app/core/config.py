from pydantic_settings import BaseSettings
from typing import Optional
import os


class Settings(BaseSettings):
    """Toolkit settings and configuration"""

    # Application
    APP_NAME: str = "EC Group Census"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "WARNING"

    # Memory budget for the S(M,K) occurrence bitset (bytes)
    ECG_MEM_BUDGET_BYTES: int = 2 * 1024 ** 3

    # Primes
    SIEVE_SEGMENT_ODD: int = 1 << 20  # odd numbers per sieve segment
    SHORT_RANGE_MAX: int = 4096  # ranges up to this length use direct primality tests
    TRIAL_DIVISION_BOUND: int = 1000
    FACTOR_SEED: int = 0x5EED

    # Counting
    AUTO_MIN_CELLS: int = 1 << 16  # auto picks prime_driven from M*K >= this
    AUTO_COST_RATIO: int = 1000  # auto keeps direct once M > this * sqrt(K)
    RESIDUE_SCAN_MAX_M: int = 64  # above this, prime_driven strides multiples of m through each segment

    # Curves
    CENSUS_MAX_P: int = 499
    AUT_BRUTE_MAX_ORDER: int = 10_000

    # Workers (None = logical cores)
    THREADS: Optional[int] = None

    # Reports and golden files
    GOLDEN_DIR: str = "golden"
    FLOAT_SIG_DIGITS: int = 12
    GOLDEN_REL_TOL: float = 1e-9

    # In-process result cache
    ENABLE_CACHING: bool = True
    CACHE_MAX_ENTRIES: int = 512

    class Config:
        env_file = ".env"
        case_sensitive = True

    def get_threads(self) -> int:
        """Resolve the worker count"""
        if self.THREADS and self.THREADS > 0:
            return self.THREADS
        return os.cpu_count() or 1


settings = Settings()

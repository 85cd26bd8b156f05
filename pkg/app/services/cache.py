"""
Result Cache
In-process keyed cache for expensive, deterministic results (census histograms)
"""

from collections import OrderedDict
from threading import Lock
from typing import Any, Dict, Optional

from loguru import logger

from app.core.config import settings


class CacheService:
    """Bounded LRU cache with hit/miss statistics"""

    def __init__(self, max_entries: int = None, enabled: bool = None):
        """Initialize the store"""
        self.max_entries = max_entries or settings.CACHE_MAX_ENTRIES
        self.enabled = settings.ENABLE_CACHING if enabled is None else enabled
        self._store: "OrderedDict[str, Any]" = OrderedDict()
        self._lock = Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[Any]:
        """Get cached value"""
        if not self.enabled:
            return None

        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                self.hits += 1
                return self._store[key]
            self.misses += 1
        return None

    def set(self, key: str, value: Any) -> bool:
        """Set cache value, evicting the least recently used entry when full"""
        if not self.enabled:
            return False

        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self.max_entries:
                evicted, _ = self._store.popitem(last=False)
                logger.debug("cache evicted {}", evicted)
        return True

    def delete(self, key: str) -> bool:
        """Delete cache entry"""
        with self._lock:
            return self._store.pop(key, None) is not None

    def clear_all(self) -> bool:
        """Clear all cache"""
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0
        return True

    def get_stats(self) -> Dict:
        """Get cache statistics"""
        return {
            'enabled': self.enabled,
            'keys': len(self._store),
            'max_entries': self.max_entries,
            'hits': self.hits,
            'misses': self.misses,
        }

    def is_healthy(self) -> bool:
        """Check if cache is usable"""
        return self.enabled and len(self._store) <= self.max_entries


# Singleton instance
cache = CacheService()

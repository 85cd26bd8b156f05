"""
Tests for the in-process result cache
"""

import pytest

from app.services.cache import CacheService


class TestCacheService:
    """Test cases for CacheService"""

    def test_round_trip_and_stats(self):
        """Test that a stored value is returned and counted as a hit"""
        store = CacheService(max_entries=4, enabled=True)
        assert store.get("census:7:raw") is None
        assert store.set("census:7:raw", [1, 2])
        assert store.get("census:7:raw") == [1, 2]
        stats = store.get_stats()
        assert stats["hits"] == 1
        assert stats["misses"] == 1
        assert stats["keys"] == 1

    def test_least_recently_used_is_evicted(self):
        """Test that the oldest untouched key goes first"""
        store = CacheService(max_entries=2, enabled=True)
        store.set("a", 1)
        store.set("b", 2)
        store.get("a")
        store.set("c", 3)
        assert store.get("b") is None
        assert store.get("a") == 1
        assert store.is_healthy()

    def test_delete(self):
        """Test deleting present and absent keys"""
        store = CacheService(max_entries=2, enabled=True)
        store.set("a", 1)
        assert store.delete("a")
        assert not store.delete("a")

    def test_disabled(self):
        """Test that a disabled cache stores nothing"""
        store = CacheService(max_entries=2, enabled=False)
        assert not store.set("a", 1)
        assert store.get("a") is None
        assert not store.is_healthy()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

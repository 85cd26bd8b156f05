"""
Shared pytest configuration
"""

import pytest

from app.services.cache import cache


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the desk-scale acceptance checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale run, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def fresh_cache():
    """Empty result cache for the duration of a test"""
    cache.clear_all()
    yield cache
    cache.clear_all()

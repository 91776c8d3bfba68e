from functools import lru_cache

import pytest

from cmch.env import default_window, sample_environment


@lru_cache(maxsize=None)
def cached_env(N, mode, seed=0, **kw):
    return sample_environment(N, mode=mode, seed=seed, **kw)


@pytest.fixture
def env_factory():
    return cached_env


@pytest.fixture
def window():
    return default_window


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.SUMMARY:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.SUMMARY:
            terminalreporter.write_line(line)

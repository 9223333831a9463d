"""
Shared fixtures for the rmt test-suite
"""
import pytest

from rmt.utils.streams import derive_stream


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-size acceptance runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size acceptance run (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_environment(monkeypatch):
    """No file sink, default solver and seed, whatever the developer's .env says"""
    monkeypatch.setenv("RMT_LOG_DIR", "")
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    monkeypatch.setenv("RMT_EIGENSOLVER", "householder_ql")
    monkeypatch.setenv("RMT_MASTER_SEED", "20240601")
    monkeypatch.setenv("RMT_THREADS", "1")
    monkeypatch.setenv("RMT_ENUMERATION_GUARD", "100000000")


@pytest.fixture
def stream():
    """A fresh seeded stream per test"""
    return derive_stream(20240601, 0)


@pytest.fixture
def rademacher():
    from rmt.services.mixtures import SpinLaw
    return SpinLaw(t=0.0)

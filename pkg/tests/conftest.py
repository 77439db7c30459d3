import pytest
from hypothesis import HealthCheck, settings

from tapredict.modelio import bundled_model

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def G():
    return bundled_model("G")


@pytest.fixture(scope="session")
def G_untimed():
    return bundled_model("G_untimed")


@pytest.fixture(scope="session")
def B():
    return bundled_model("B")


_START = {}


def pytest_sessionstart(session):
    import time

    _START["t"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import time

    elapsed = time.perf_counter() - _START["t"]
    status = "PASS" if elapsed < 300 else "FAIL"
    terminalreporter.write_line(f"criterion 6 (suite time): {status}  full run took {elapsed:.1f} s (limit 300 s)")

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "semipar", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("semipar")


def fd(func, x, step=1e-4):
    """Central first difference."""
    return (func(x + step) - func(x - step)) / (2.0 * step)


def fd2(func, x, step=1e-3):
    return (func(x + step) - 2.0 * func(x) + func(x - step)) / step ** 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])

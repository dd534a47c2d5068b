import numpy as np
import pytest

from renormlab import AnalyticMap, build_tower, feigenbaum_parameter

CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def feigenbaum_map():
    return AnalyticMap.quadratic(feigenbaum_parameter())


@pytest.fixture(scope="session")
def feigenbaum_tower(feigenbaum_map):
    return build_tower(feigenbaum_map, depth=7)


@pytest.fixture(scope="session")
def basilica():
    return AnalyticMap.quadratic(-1.0)


@pytest.fixture(scope="session")
def bimodal_single():
    a = 2.3
    b = float(np.sqrt(1 + a))
    return AnalyticMap.polynomial([0.0, -a, 0.0, 1.0], [-b, b])


@pytest.fixture(scope="session")
def bimodal_shared():
    a = 1.6
    b = float(np.sqrt(1 + a))
    return AnalyticMap.polynomial([0.0, -a, 0.0, 1.0], [-b, b])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion."""

    def record(n: int, passed: bool, detail: str) -> bool:
        CRITERIA[n] = (bool(passed), detail)
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        passed, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

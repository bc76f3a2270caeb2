import pytest

from orliczgen.core import normalize, power, smooth_normalized


@pytest.fixture(scope="session")
def quad2():
    return normalize(power(2.0))


@pytest.fixture(scope="session")
def q15():
    return normalize(power(1.5))


@pytest.fixture(scope="session")
def q15_smooth(q15):
    return smooth_normalized(q15, 1.1)


@pytest.fixture(scope="session")
def q3():
    return normalize(power(3.0))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])

import pytest

from tentlim.chains import assign_links, stipulated_chain
from tentlim.folding import locate_window
from tentlim.harness import LINK_GROUPS
from tentlim.kneading import KneadingData, KneadingMap
from tentlim.numeric import fibonacci_params, solve_slope
from tentlim.symmetry import Source

# A map whose first return below c after time 2 happens at time 5.
KAPPA5_VALUES = (0, 1) + tuple(max(k - 3, 0) for k in range(3, 80))


@pytest.fixture(scope="session")
def fib():
    return fibonacci_params()


@pytest.fixture(scope="session")
def P(fib):
    return fib[0]


@pytest.fixture(scope="session")
def kd(fib):
    return fib[1]


@pytest.fixture(scope="session")
def kd5():
    return KneadingData.build(KneadingMap(KAPPA5_VALUES), 16384)


@pytest.fixture(scope="session")
def P5(kd5):
    return solve_slope(kd5.nu)


@pytest.fixture(scope="session")
def grouped_links(P):
    spec = stipulated_chain(P, LINK_GROUPS, 2e-3, 150)
    return assign_links(spec, P, 150)


@pytest.fixture(scope="session")
def located(kd, grouped_links):
    cache = {}

    def get(window):
        key = tuple(window)
        if key not in cache:
            loc = locate_window(kd, key)
            assert loc is not None, "window not found"
            cache[key] = (Source(loc.context, grouped_links), loc.offset)
        return cache[key]

    return get


# --- acceptance summary -------------------------------------------------------------
#
# Tests marked ``criterion(n, title)`` report one PASS/FAIL line each at the
# end of the run, whether or not output capture is on.

_CRITERIA: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA[number] = (title, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title}")

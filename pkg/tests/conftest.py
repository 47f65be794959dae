import pytest

from skelplan.bench import builtin_env
from skelplan.geometry import Environment, Point2, Polygon, Query
from skelplan.skeleton import build_skeleton


def open_world(w=10.0, h=10.0, r=0.5, obstacles=(), query=None, **kw):
    return Environment((0.0, 0.0, w, h), tuple(obstacles), r, query, **kw)


def corridor_env(width=2.0, length=12.0, r=0.25):
    """A straight horizontal corridor of the given width, walled above and below."""
    h = width + 4.0
    lo, hi = 2.0, 2.0 + width
    return Environment(
        (0.0, 0.0, length, h),
        (Polygon.rect(0.0, 0.0, length, lo), Polygon.rect(0.0, hi, length, h)),
        r,
        Query(Point2(1.0, lo + width / 2), Point2(length - 1.0, lo + width / 2)),
    )


@pytest.fixture(scope="session")
def walls():
    return builtin_env("walls")


@pytest.fixture(scope="session")
def walls_skeleton(walls):
    return build_skeleton(walls)


@pytest.fixture(scope="session")
def twotunnel():
    return builtin_env("twotunnel")


# -- acceptance reporting ----------------------------------------------------------

_CRITERIA: dict[int, tuple[bool, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    props = dict(report.user_properties)
    n = props.get("criterion")
    if n is not None:
        _CRITERIA[n] = (report.passed, props.get("detail", ""))


@pytest.fixture
def criterion(request):
    """Attach a criterion number and a one-line measurement to the test report."""
    marker = request.node.get_closest_marker("criterion")
    request.node.user_properties.append(("criterion", marker.args[0]))

    def detail(text):
        request.node.user_properties.append(("detail", text))

    return detail


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, text = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")

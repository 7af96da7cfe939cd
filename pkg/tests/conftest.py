import numpy as np
import pytest

from heteroclinic.minimize import MinimizeConfig, minimize_action
from heteroclinic.path import Grid
from heteroclinic.potential import get_potential

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    number, title = crit
    entry = _criteria.setdefault(number, {"title": title, "ok": True})
    entry["ok"] = entry["ok"] and report.passed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if entry['ok'] else 'FAIL'}  {entry['title']}")


@pytest.fixture(scope="session")
def quartic():
    return get_potential("quartic1d")


@pytest.fixture(scope="session")
def planar():
    return get_potential("planar-embedded")


@pytest.fixture(scope="session")
def grid20():
    return Grid.from_spacing(20.0, 0.01)


@pytest.fixture(scope="session")
def quartic_solution(quartic, grid20):
    return minimize_action(quartic, MinimizeConfig(grid20))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import math

import numpy as np
import pytest

from logkde.estimator import Sample

E = math.e
THREE_POINTS = (1.0, E, E * E)


@pytest.fixture
def three_points():
    return Sample(THREE_POINTS)


@pytest.fixture
def lognormal_sample():
    def make(n, seed=7, mu=0.0, sigma=1.0):
        rng = np.random.default_rng(seed)
        return Sample(np.exp(rng.normal(mu, sigma, n)))
    return make


# -- acceptance summary: one PASS/FAIL line per criterion ------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    entry = _CRITERIA.setdefault(props["criterion"], {"title": props["title"], "ok": True, "details": []})
    entry["ok"] &= report.outcome == "passed"
    if props.get("detail"):
        entry["details"].append(("ok " if report.outcome == "passed" else "BAD ") + props["detail"])


@pytest.fixture(autouse=True)
def _criterion_properties(request, record_property):
    mark = request.node.get_closest_marker("criterion")
    if mark is not None:
        record_property("criterion", mark.args[0])
        record_property("title", mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        tr.write_line(f"criterion {number:2d}: {'PASS' if entry['ok'] else 'FAIL'}  {entry['title']}")
        for d in entry["details"]:
            tr.write_line(f"              {d}")

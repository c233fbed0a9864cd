import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    marker = "::test_criterion_"
    if marker not in report.nodeid:
        return
    key = report.nodeid.split(marker, 1)[1].split("[", 1)[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _ACCEPTANCE.get(key, "PASS")
        ok = report.outcome == "passed"
        _ACCEPTANCE[key] = "PASS" if ok and prev == "PASS" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def order(k):
        head = k.split("_", 1)[0]
        return (int(head) if head.isdigit() else 99, k)

    for key in sorted(_ACCEPTANCE, key=order):
        num, _, name = key.partition("_")
        terminalreporter.write_line(f"criterion {num:>2} {name.replace('_', ' ')}: {_ACCEPTANCE[key]}")

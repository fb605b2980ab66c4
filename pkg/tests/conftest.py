import sys

import pytest

from varreg.geneq import example

from fixtures import ideal_diode, threshold


@pytest.fixture
def diode():
    return ideal_diode()


@pytest.fixture
def relay():
    return threshold()


@pytest.fixture(scope="session")
def diac_models():
    return {a: example("diac", a=a) for a in (0.5, 1.0, 2.0)}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance")
        for n in sorted(results):
            terminalreporter.write_line(results[n])

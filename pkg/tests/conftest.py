import sys

import numpy as np
import pytest

from hapd import build_grid, build_pldi, fit_nldi, reference_model, verify_coverage


@pytest.fixture(scope="session")
def model():
    return reference_model()


@pytest.fixture(scope="session")
def pldi(model):
    return build_pldi(build_grid(), model)


@pytest.fixture(scope="session")
def nldi(pldi):
    return fit_nldi(pldi, strict=False)


@pytest.fixture(scope="session")
def coverage(nldi, pldi):
    return verify_coverage(nldi, pldi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[n])

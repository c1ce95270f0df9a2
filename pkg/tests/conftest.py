import sys

import numpy as np
import pytest

from phasekit.models import model_a_mu


@pytest.fixture(params=[1, 2, 3], ids=["A1", "A2", "A3"])
def model(request):
    return model_a_mu(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)

import math

import pytest
from hypothesis import settings

from dualpol.scenario import make_scenario

settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def fig4_scenario():
    """Clustered four-group cell used throughout the experiments."""
    return make_scenario(M=120, G=4, n_bar=8, chi=0.0)


@pytest.fixture(scope="session")
def small_scenario():
    """Cheap two-group cell for Monte Carlo heavy tests."""
    return make_scenario(M=24, G=2, n_bar=4, spread=math.pi / 8,
                         thetas=[-math.pi / 5, math.pi / 5], chi=0.0)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criterion verdict lines after the run."""
    import sys

    module = next((m for name, m in sys.modules.items()
                   if name.endswith("test_acceptance")), None)
    lines = getattr(module, "CRITERION_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

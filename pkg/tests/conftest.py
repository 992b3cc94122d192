import numpy as np
import pytest

from xylab.model import ChainParameters

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_chain(rng, n, isotropic=False):
    gamma = np.zeros(n - 1) if isotropic else rng.uniform(-0.5, 0.5, n - 1)
    return ChainParameters(n, rng.uniform(0.5, 1.5, n - 1), gamma, rng.uniform(0.0, 4.0, n))

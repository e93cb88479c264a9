import numpy as np
import pytest

from motionaug.dynamics import N_DOF, RigidBodyModel
from motionaug.motion import default_skeleton


@pytest.fixture(scope="session")
def skel():
    return default_skeleton()


@pytest.fixture(scope="session")
def rbm(skel):
    return RigidBodyModel(skel)


def random_state(rng, spread=0.5):
    q = rng.normal(0.0, spread, N_DOF)
    q[:3] = rng.normal(0.0, 1.0, 3)
    return q, rng.normal(0.0, 1.0, N_DOF), rng.normal(0.0, 1.0, N_DOF)


ACCEPTANCE_LINES = {}


def report(number, title, ok, detail):
    """Record and print the result line of one acceptance criterion."""
    line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'} {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])

from pathlib import Path

import numpy as np
import pytest

from knowtraj.network import BiLayerNetwork

FIXTURES = Path(__file__).parent / "fixtures"


def make_toy(phi_13: float = 3.0) -> BiLayerNetwork:
    return BiLayerNetwork.from_edges(
        ["A", "B"],
        ["T1", "T2", "T3"],
        aa={(0, 1): 1},
        tt={(0, 1): 1, (0, 2): phi_13},
        at={(0, 0): 2, (1, 0): 1, (1, 1): 1},
    )


@pytest.fixture
def toy1() -> BiLayerNetwork:
    return make_toy(3.0)


@pytest.fixture
def toy2() -> BiLayerNetwork:
    return make_toy(1.0)


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)

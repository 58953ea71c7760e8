import json
import pathlib

import numpy as np
import pytest

from anicap.grid import make_grid
from anicap.norm import ellipsoidal, euclidean, quartic

FROZEN = json.loads((pathlib.Path(__file__).parent / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def norms():
    return {"euclidean": euclidean(), "ellipsoidal": ellipsoidal([4.0, 1.0, 1.0]),
            "quartic": quartic(0.1)}


@pytest.fixture(scope="session", params=["euclidean", "ellipsoidal", "quartic"])
def norm(request, norms):
    return norms[request.param]


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, 64)


@pytest.fixture(scope="session")
def grid48():
    return make_grid(48, 96)


@pytest.fixture(scope="session")
def grid96():
    return make_grid(96, 192)


def random_dirs(count, seed=0, n=3):
    x = np.random.default_rng(seed).standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.line(line)

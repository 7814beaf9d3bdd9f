from pathlib import Path

import numpy as np
import pytest

from marketbayes import compile_network, load_network, solve
from marketbayes.network import BayesNet, node
from marketbayes.oracle import marginals

DATA = Path(__file__).resolve().parent.parent / "data"
GOLDEN = DATA / "golden.json"


@pytest.fixture(scope="session")
def golden():
    return load_network(GOLDEN)


@pytest.fixture(scope="session")
def golden_econ(golden):
    return compile_network(golden)


@pytest.fixture(scope="session")
def golden_truth(golden_econ):
    return np.array(marginals(golden_econ.network, [g.prop for g in golden_econ.goods]))


@pytest.fixture(scope="session")
def golden_solved(golden_econ):
    return solve(golden_econ)


@pytest.fixture
def diamond():
    return BayesNet(
        (
            node("a", (), 0.3),
            node("b", ("a",), [0.6, 0.2]),
            node("c", ("a",), [0.7, 0.4]),
            node("d", ("b", "c"), [0.9, 0.5, 0.3, 0.1]),
        )
    )


@pytest.fixture
def single_root():
    return BayesNet((node("a", (), 0.4),))


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)

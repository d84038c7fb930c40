import numpy as np
import pytest

from indemnify import (
    BackgroundRisk,
    LossDistribution,
    MarketScenario,
    Piece,
    PowerUtility,
    TruncatedPareto,
)
from indemnify import scenario_io


def pareto_loss():
    return LossDistribution(
        atoms=((0.0, 0.1), (10.0, 0.1)),
        pieces=(Piece(0.0, 10.0, TruncatedPareto(10.0, 3.0), 0.8),),
    )


@pytest.fixture
def loss():
    return pareto_loss()


@pytest.fixture
def single_state():
    """Constant reserve 5, power utility with gamma 1/2, wealth 15."""
    return scenario_io.builtin_scenario(2)


@pytest.fixture
def two_state():
    """Reserve 2 w.p. 0.1 and 8 w.p. 0.9, loading 0.1."""
    return scenario_io.builtin_scenario(4)


def make_scenario(points=((5.0, 1.0),), w=15.0, eta=0.2, tau=1.0, gamma=0.5):
    return MarketScenario(pareto_loss(), BackgroundRisk(points), w, eta, tau, PowerUtility(gamma))


def monte_carlo(values):
    values = np.asarray(values, dtype=float)
    return values.mean(), values.std(ddof=1) / np.sqrt(values.size)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        title, ok, detail = mod.RESULTS[number]
        terminalreporter.write_line(f"{number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")

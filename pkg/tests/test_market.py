import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indemnify import (
    BackgroundRisk,
    LossDistribution,
    MarketScenario,
    Piece,
    PowerUtility,
    TruncatedExponential,
    TruncatedPareto,
    Uniform,
)
from indemnify import market
from indemnify.errors import ScenarioError
from indemnify.utility import LogUtility

from conftest import make_scenario, monte_carlo

# independent oracle values, frozen (composite Simpson, 1e6 nodes, on the reference density)
PARETO_MEAN = 3.2857142857142865
PARETO_STOP_LOSS_453 = 0.9443131316835858


def sample_pareto(rng, size):
    """Inverse-CDF draws from the reference mixture, independent of the package sampler."""
    u = rng.random(size)
    out = np.where(u < 0.1, 0.0, 10.0)
    mid = (u >= 0.1) & (u < 0.9)
    # continuous part: F(x) = (96/35)(1000/3)(1e-3 - (x + 10)^-3) on (0, 10)
    v = (u[mid] - 0.1) * 35.0 * 3.0 / 96000.0
    out[mid] = (1e-3 - v) ** (-1.0 / 3.0) - 10.0
    return out


@pytest.fixture(scope="module")
def draws():
    return sample_pareto(np.random.default_rng(20240601), 10**7)


def test_cdf_atoms(loss):
    assert market.cdf(loss, 0.0) == pytest.approx(0.1)
    assert market.cdf(loss, 10.0) == pytest.approx(1.0)
    assert market.cdf(loss, -1.0) == 0.0
    assert loss.cdf(10.0 - 1e-12) == pytest.approx(0.9)


def test_cdf_monte_carlo(loss, draws):
    m, se = monte_carlo(draws <= 5.0)
    assert abs(loss.cdf(5.0) - m) < 3 * se


def test_mean_and_stop_loss_against_quadrature_oracle(loss):
    assert loss.mean == pytest.approx(PARETO_MEAN, rel=1e-12)
    assert market.stop_loss(loss, 4.53) == pytest.approx(PARETO_STOP_LOSS_453, rel=1e-8)
    assert loss.stop_loss(0.0) == pytest.approx(loss.mean, rel=1e-14)
    assert loss.stop_loss(loss.M) == 0.0


def test_layer_expectation_monte_carlo(loss, draws):
    m, se = monte_carlo(np.clip(draws - 4.6, 0.0, 2.74))
    assert abs(market.layer_expectation(loss, 4.6, 2.74) - m) < 3 * se
    assert loss.layer_expectation(3.0, 0.0) == 0.0
    assert loss.layer_expectation(0.0, loss.M) == pytest.approx(loss.mean)


def test_expect_piecewise(loss, draws):
    assert market.expect_piecewise(loss, lambda x: np.ones_like(x)) == pytest.approx(1.0, rel=1e-12)
    assert loss.expect(lambda x: x) == pytest.approx(loss.mean, rel=1e-12)
    u = PowerUtility(0.5)
    f = lambda x: u.prime(15.0 - np.minimum(x, 4.53) - 1.0)
    m, se = monte_carlo(f(draws))
    assert abs(market.expect_piecewise(loss, f, [4.53]) - m) < 3 * se


def test_stop_loss_shape(loss):
    ys = np.linspace(0.0, loss.M, 1000)
    sl = np.array([loss.stop_loss(y) for y in ys])
    h = ys[1] - ys[0]
    assert np.all(np.diff(sl) <= 1e-15)
    assert np.all(np.abs(np.diff(sl)) <= h + 1e-12)
    assert np.all(sl[:-2] - 2 * sl[1:-1] + sl[2:] >= -1e-12)


@settings(max_examples=60)
@given(st.floats(0, 10), st.floats(0, 12))
def test_layer_bounds(y, c):
    loss = make_scenario().loss
    v = loss.layer_expectation(y, c)
    assert -1e-15 <= v <= min(c, loss.stop_loss(y)) + 1e-12
    assert v == pytest.approx(loss.stop_loss(y) - loss.stop_loss(y + c), abs=1e-12)


def test_cdf_right_continuous_jumps_only_at_atoms(loss):
    xs = np.linspace(-0.5, 10.5, 2000)
    c = np.array([loss.cdf(x) for x in xs])
    assert np.all(np.diff(c) >= 0)
    jumps = xs[1:][np.diff(c) > 0.01]
    assert all(min(abs(j - 0.0), abs(j - 10.0)) < 0.01 for j in jumps)


@pytest.mark.parametrize(
    "kernel", [Uniform(), TruncatedPareto(3.0, 1.0), TruncatedPareto(2.0, 2.5), TruncatedExponential(0.4)]
)
def test_kernels_closed_form_vs_quadrature(kernel):
    dist = LossDistribution(pieces=(Piece(1.0, 6.0, kernel, 1.0),))
    assert dist.expect(lambda x: np.ones_like(x)) == pytest.approx(1.0, rel=1e-12)
    for y in (0.0, 2.0, 4.5):
        assert dist.stop_loss(y) == pytest.approx(dist.expect(lambda x: np.maximum(x - y, 0.0), [y]), rel=1e-10)
    rng = np.random.default_rng(3)
    m, se = monte_carlo(dist.sample(rng, 200_000))
    assert abs(dist.mean - m) < 4 * se


@pytest.mark.parametrize(
    "kwargs, path",
    [
        (dict(atoms=((0.0, 0.5),)), "loss"),
        (dict(atoms=((-1.0, 1.0),)), "loss.atoms[0]"),
        (dict(atoms=((0.0, 0.0), (1.0, 1.0))), "loss.atoms[0]"),
        (dict(atoms=((0.0, 1.0),)), "loss.M"),
        (dict(atoms=((2.0, 1.0),), M=3.0), "loss.M"),
    ],
)
def test_loss_validation(kwargs, path):
    with pytest.raises(ScenarioError) as info:
        LossDistribution(**kwargs)
    assert info.value.path == path


def test_piece_validation():
    with pytest.raises(ScenarioError, match="pieces"):
        LossDistribution(pieces=(Piece(2.0, 1.0, Uniform(), 1.0),))


def test_kinks_sorted(loss):
    assert loss.kinks == (0.0, 10.0)
    two = LossDistribution(((3.0, 0.2),), (Piece(0.0, 2.0, Uniform(), 0.3), Piece(2.0, 5.0, Uniform(), 0.5)))
    assert two.kinks == (0.0, 2.0, 3.0, 5.0)
    assert two.has_full_support()


def test_background_validation():
    with pytest.raises(ScenarioError):
        BackgroundRisk(((2.0, 0.5), (1.0, 0.5)))
    with pytest.raises(ScenarioError):
        BackgroundRisk(((1.0, 0.7),))
    with pytest.raises(ScenarioError):
        BackgroundRisk(())
    bg = BackgroundRisk(((-1.0, 0.25), (3.0, 0.75)))
    assert bg.shifted(2.0).values.tolist() == [1.0, 5.0]


def test_scenario_wealth_domain(loss):
    with pytest.raises(ScenarioError, match="^w"):
        MarketScenario(loss, BackgroundRisk.constant(5.0), 12.0, 0.2, 1.0, LogUtility())
    with pytest.raises(ScenarioError):
        MarketScenario(loss, BackgroundRisk.constant(5.0), 15.0, -0.1, 1.0, LogUtility())
    with pytest.raises(ScenarioError):
        MarketScenario(loss, BackgroundRisk.constant(5.0), 15.0, 0.1, 1.5, LogUtility())


def test_mixed_layer_expectation():
    sc = make_scenario(points=((-3.0, 0.5), (4.0, 0.5)))
    assert market.mixed_layer_expectation(sc, 1.0, 2.0) == pytest.approx(
        0.5 * sc.loss.layer_expectation(1.0, 6.0)
    )
    neg = make_scenario(points=((-3.0, 1.0),))
    assert neg.mixed_layer_expectation(0.0, 1.0) == 0.0
    single = make_scenario(points=((5.0, 1.0),))
    assert single.mixed_layer_expectation(2.0, 1.0) == single.loss.layer_expectation(2.0, 6.0)


def test_assumption_failures(loss):
    assert make_scenario().assumption_failures() == []
    assert "condition1_nonnegative_background" in make_scenario(points=((-1.0, 0.5), (3.0, 0.5))).assumption_failures()
    gap = LossDistribution(((0.0, 0.5),), (Piece(5.0, 10.0, Uniform(), 0.5),))
    sc = MarketScenario(gap, BackgroundRisk.constant(2.0), 20.0, 0.1, 1.0, LogUtility())
    assert "condition3_strictly_increasing_cdf" in sc.assumption_failures()

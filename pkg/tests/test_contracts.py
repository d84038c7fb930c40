import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indemnify import contracts
from indemnify.contracts import (
    DeductibleLimitContract,
    GridContract,
    MultiLayerContract,
    contract_from_dict,
)
from indemnify.errors import ScenarioError

from conftest import make_scenario

# rounded optimum of the two-state loss-only problem
PUBLISHED_LAYERS = MultiLayerContract(0.74, (4.6, 6.44), (2.0, 8.0))


def test_deductible_limit_indemnity():
    c = DeductibleLimitContract(d=4.53, a=1.00)
    assert contracts.indemnity(c, 3.0, 5.0) == 0.0
    assert contracts.indemnity(c, 10.0, 2.0) == pytest.approx(3.0)
    assert c.indemnity(5.0, -2.0) == 0.0


def test_multi_layer_indemnity():
    assert PUBLISHED_LAYERS.indemnity(10.0) == pytest.approx(3.56)
    assert PUBLISHED_LAYERS.breakpoints() == pytest.approx((4.6, 7.34, 9.18, 15.18))
    assert PUBLISHED_LAYERS.indemnity(0.0) == 0.0


def test_multi_layer_empty_first_layer():
    # reserve increment of the first state is zero when a + s1 <= 0
    c = MultiLayerContract(1.0, (2.0, 3.0), (-1.0, 4.0))
    xs = np.linspace(0, 10, 101)
    assert np.allclose(c.indemnity(xs), np.clip(xs - 3.0, 0.0, 5.0))


def test_multi_layer_validation():
    with pytest.raises(ScenarioError):
        MultiLayerContract(1.0, (3.0, 2.0), (1.0, 2.0))
    with pytest.raises(ScenarioError):
        MultiLayerContract(1.0, (1.0,), (1.0, 2.0))
    with pytest.raises(ScenarioError):
        DeductibleLimitContract(-1.0, 0.0)


def test_settle_default(two_state):
    out = contracts.settle(two_state, PUBLISHED_LAYERS, 9.5, 2.0)
    assert out.contractual == pytest.approx(3.06)
    assert out.reserve == pytest.approx(2.74)
    assert out.defaulted and out.actual == pytest.approx(2.74)
    assert out.wealth == pytest.approx(15.0 - 9.5 - 0.74 + 2.74)


def test_settle_partial_recovery(two_state):
    sc = two_state.replace(tau=0.5)
    out = contracts.settle(sc, PUBLISHED_LAYERS, 9.5, 2.0)
    assert out.actual == pytest.approx(0.5 * 2.74)


def test_settle_zero_loss(two_state):
    for c in (PUBLISHED_LAYERS, DeductibleLimitContract(4.53, 1.0)):
        out = contracts.settle(two_state, c, 0.0, 8.0)
        assert out.contractual == 0.0 and not out.defaulted
        assert out.wealth == pytest.approx(15.0 - c.a)


@settings(max_examples=80)
@given(st.floats(0, 10), st.sampled_from([2.0, 8.0]), st.floats(0, 10), st.floats(0, 3))
def test_settle_invariants(x, s, d, a):
    sc = make_scenario(points=((2.0, 0.1), (8.0, 0.9)))
    for c in (DeductibleLimitContract(d, a), MultiLayerContract(a, (d, min(d + 1.0, 10.0)), (2.0, 8.0))):
        out = contracts.settle(sc, c, x, s)
        assert 0.0 <= out.actual <= out.contractual + 1e-12 <= x + 1e-12
        assert out.actual <= out.reserve + 1e-12
        assert out.wealth <= sc.w - x - c.a + out.reserve + 1e-12
    assert not contracts.settle(sc, DeductibleLimitContract(d, a), x, s).defaulted


def test_premium_of(two_state):
    assert contracts.premium_of(two_state, contracts.zero_contract(two_state)) == 0.0
    assert contracts.premium_of(two_state, PUBLISHED_LAYERS) == pytest.approx(0.74, abs=0.01)
    full = GridContract((0.0, 10.0), (0.0, 10.0))
    assert contracts.premium_of(two_state, full) == pytest.approx(two_state.full_premium)


def test_premium_monotone_in_d_and_a(two_state):
    ds = np.linspace(0, 10, 41)
    for a in (0.2, 1.0, 2.5):
        p = [contracts.premium_of(two_state, DeductibleLimitContract(d, a)) for d in ds]
        assert np.all(np.diff(p) <= 1e-14)
    for d in (0.0, 3.0, 7.0):
        p = [contracts.premium_of(two_state, DeductibleLimitContract(d, a)) for a in np.linspace(0, 3, 31)]
        assert np.all(np.diff(p) >= -1e-14)


def test_expected_utility_zero_contract(two_state):
    eu = contracts.expected_utility(two_state, contracts.zero_contract(two_state))
    direct = two_state.loss.expect(lambda x: two_state.utility.u(15.0 - x))
    assert eu == pytest.approx(direct, rel=1e-12)


def test_expected_utility_full_insurance_is_deterministic():
    sc = make_scenario(points=((20.0, 1.0),), eta=0.1)
    pf = sc.full_premium
    full = DeductibleLimitContract(0.0, pf)
    assert contracts.expected_utility(sc, full) == pytest.approx(float(sc.utility.u(sc.w - pf)), rel=1e-13)


def test_expected_utility_matches_pointwise_settlement(two_state):
    # integrate the settled wealth on a fine grid and compare
    from indemnify.oracle import discretize, discrete_objective, contract_matrix

    m = discretize(two_state, 4096, PUBLISHED_LAYERS.breakpoints())
    disc = discrete_objective(m, two_state, contract_matrix(m, PUBLISHED_LAYERS), 0.74)
    assert contracts.expected_utility(two_state, PUBLISHED_LAYERS) == pytest.approx(disc, abs=1e-6)


def test_checks():
    c = DeductibleLimitContract(4.53, 1.0)
    assert contracts.ic_check(c, states=(2.0, 8.0), upper=10.0)
    half = GridContract(np.linspace(0, 10, 11), np.linspace(0, 5, 11))
    assert contracts.ic_check(half)
    steep = GridContract((0.0, 1.0, 2.0), (0.0, 0.0, 1.5))
    assert not contracts.ic_check(steep)
    with pytest.raises(ValueError):
        contracts.ic_check(c, grid_n=1)


def test_default_free_check(two_state):
    assert contracts.default_free_check(two_state, DeductibleLimitContract(4.53, 1.0))
    assert not contracts.default_free_check(two_state, PUBLISHED_LAYERS)


def test_default_threshold(two_state):
    assert contracts.default_threshold(two_state, PUBLISHED_LAYERS, 2.0) == pytest.approx(9.18)
    assert contracts.default_threshold(two_state, PUBLISHED_LAYERS, 8.0) is None


def test_serialization_roundtrip():
    for c in (DeductibleLimitContract(1.0, 2.0), PUBLISHED_LAYERS, GridContract((0.0, 1.0), (0.0, 0.5), 0.1)):
        assert contract_from_dict(c.to_dict()) == c
    with pytest.raises(ScenarioError):
        contract_from_dict({"type": "quota"})

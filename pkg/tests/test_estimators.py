import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from indemnify import BackgroundRisk, joint
from indemnify.errors import ScenarioError
from indemnify.estimators import ContractDesigner

from conftest import pareto_loss


def test_fit_matches_functional_api(two_state):
    est = ContractDesigner(w=15.0, eta=0.1).fit(pareto_loss(), two_state.background)
    rep = joint.solve_global(two_state)
    assert est.a_star_ == rep.a_star
    assert est.score() == pytest.approx(rep.objective)
    x = np.linspace(0, 10, 11)
    assert np.array_equal(est.predict(x, 8.0), rep.contract.indemnity(x, 8.0))


def test_constant_background_and_params():
    est = ContractDesigner(eta=0.2, utility_params={"gamma": 0.5})
    est.fit(pareto_loss(), 5.0)
    assert est.report_.case_taken == "Interior"
    assert est.get_params()["eta"] == 0.2
    other = clone(est).set_params(eta=0.47)
    assert not hasattr(other, "report_")
    assert other.fit(pareto_loss(), 5.0).report_.case_taken == "NoInsurance"


def test_loss_only_designer():
    est = ContractDesigner(problem="loss-only").fit(pareto_loss(), BackgroundRisk.constant(5.0))
    assert est.report_.case_taken == "SingleState"
    assert est.predict([0.0])[0] == 0.0


def test_score_on_other_market():
    est = ContractDesigner().fit(pareto_loss(), 5.0)
    assert est.score(background=0.2) != est.score()


def test_errors():
    with pytest.raises(NotFittedError):
        ContractDesigner().predict([1.0])
    with pytest.raises(ScenarioError):
        ContractDesigner(problem="both").fit(pareto_loss(), 5.0)

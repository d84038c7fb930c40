"""scikit-learn style wrapper over the solvers.

The functional API (``joint.solve_global``, ``layers.solve_layers_global``)
is the primary interface; this class only bundles market parameters so a
designer can be configured with ``set_params`` and reused across losses.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .contracts import expected_utility
from .errors import ScenarioError
from .joint import solve_global
from .layers import solve_layers_global
from .market import BackgroundRisk, LossDistribution, MarketScenario
from .utility import from_dict


class ContractDesigner(BaseEstimator):
    """Fit the optimal contract for a loss law and a background risk.

    Parameters mirror the scalar fields of a scenario; ``utility_params`` is
    the params block of the utility (``{"gamma": 0.5}`` for power utility).
    """

    def __init__(self, w=15.0, eta=0.1, tau=1.0, utility="power", utility_params=None, problem="joint"):
        self.w = w
        self.eta = eta
        self.tau = tau
        self.utility = utility
        self.utility_params = utility_params
        self.problem = problem

    def _scenario(self, loss: LossDistribution, background) -> MarketScenario:
        if not isinstance(background, BackgroundRisk):
            background = BackgroundRisk.constant(float(background))
        params = {"gamma": 0.5} if self.utility_params is None else dict(self.utility_params)
        util = from_dict({"kind": self.utility, "params": params})
        return MarketScenario(loss, background, float(self.w), float(self.eta), float(self.tau), util)

    def fit(self, loss: LossDistribution, background=0.0):
        """Solve for the optimal contract; ``background`` may be a constant reserve."""
        if self.problem not in ("joint", "loss-only"):
            raise ScenarioError("problem", "must be 'joint' or 'loss-only'")
        self.scenario_ = self._scenario(loss, background)
        solver = solve_global if self.problem == "joint" else solve_layers_global
        self.report_ = solver(self.scenario_)
        self.contract_ = self.report_.contract
        self.a_star_ = self.report_.a_star
        return self

    def predict(self, x, s=None):
        """Contractual indemnity at losses ``x`` (state ``s``, default the lowest state)."""
        check_is_fitted(self, "contract_")
        if s is None:
            s = float(self.scenario_.background.values[0])
        return np.asarray(self.contract_.indemnity(np.asarray(x, dtype=float), s))

    def score(self, loss: LossDistribution = None, background=None) -> float:
        """Expected utility of the fitted contract, on the fitted market unless another is given."""
        check_is_fitted(self, "contract_")
        scen = self.scenario_
        if loss is not None or background is not None:
            scen = self._scenario(loss or scen.loss, scen.background if background is None else background)
        return expected_utility(scen, self.contract_)

"""Optimal insurance design under endogenous seller default and background risk."""

from .contracts import (
    ContractOutcome,
    DeductibleLimitContract,
    GridContract,
    MultiLayerContract,
    default_free_check,
    expected_utility,
    ic_check,
    indemnity,
    premium_of,
    settle,
    zero_contract,
)
from .errors import *  # noqa: F401,F403
from .market import (
    BackgroundRisk,
    LossDistribution,
    MarketScenario,
    Piece,
    TruncatedExponential,
    TruncatedPareto,
    Uniform,
)
from .utility import ExponentialUtility, LogUtility, PowerUtility

__version__ = "0.1.0"

"""Concave utility families with analytic derivatives.

All evaluators accept scalars or numpy arrays and raise
:class:`DomainViolation` if any wealth falls at or below ``domain_lo``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, ScenarioError


class UtilityModel:
    """Common interface; subclasses implement the ``_u``/``_d1``/``_d2`` kernels."""

    kind: str = ""
    domain_lo: float = 0.0
    #: "strict" when absolute risk aversion strictly decreases, "weak" when constant
    dara: str = "strict"

    def _check(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr <= self.domain_lo) or np.any(np.isnan(arr)):
            bad = float(np.min(arr)) if arr.size else float("nan")
            raise DomainViolation(
                f"{self.kind} utility needs wealth > {self.domain_lo}, got {bad:.6g}"
            )
        return arr

    def u(self, x):
        return self._u(self._check(x))

    def prime(self, x):
        return self._d1(self._check(x))

    def second(self, x):
        return self._d2(self._check(x))

    def risk_aversion(self, x):
        arr = self._check(x)
        return -self._d2(arr) / self._d1(arr)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerUtility(UtilityModel):
    """``u(x) = x**(1 - gamma) / (1 - gamma)`` on ``x > 0``."""

    gamma: float
    kind = "power"

    def __post_init__(self):
        if not (self.gamma > 0) or self.gamma == 1 or not math.isfinite(self.gamma):
            raise ScenarioError("utility.params.gamma", "must be > 0 and != 1 (use kind 'log')")

    def _u(self, x):
        return x ** (1.0 - self.gamma) / (1.0 - self.gamma)

    def _d1(self, x):
        return x ** (-self.gamma)

    def _d2(self, x):
        return -self.gamma * x ** (-self.gamma - 1.0)

    def to_dict(self):
        return {"kind": "power", "params": {"gamma": self.gamma}}


@dataclass(frozen=True)
class LogUtility(UtilityModel):
    kind = "log"

    def _u(self, x):
        return np.log(x)

    def _d1(self, x):
        return 1.0 / x

    def _d2(self, x):
        return -1.0 / (x * x)

    def to_dict(self):
        return {"kind": "log", "params": {}}


@dataclass(frozen=True)
class ExponentialUtility(UtilityModel):
    """CARA utility ``-exp(-alpha x) / alpha``; defined on the whole line."""

    alpha: float
    kind = "exponential"
    domain_lo = -math.inf
    dara = "weak"

    def __post_init__(self):
        if not (self.alpha > 0) or not math.isfinite(self.alpha):
            raise ScenarioError("utility.params.alpha", "must be a finite number > 0")

    def _u(self, x):
        return -np.exp(-self.alpha * x) / self.alpha

    def _d1(self, x):
        return np.exp(-self.alpha * x)

    def _d2(self, x):
        return -self.alpha * np.exp(-self.alpha * x)

    def to_dict(self):
        return {"kind": "exponential", "params": {"alpha": self.alpha}}


def u(model: UtilityModel, x):
    return model.u(x)


def u_prime(model: UtilityModel, x):
    return model.prime(x)


def u_double_prime(model: UtilityModel, x):
    return model.second(x)


def risk_aversion(model: UtilityModel, x):
    """Arrow-Pratt coefficient ``-u''/u'``."""
    return model.risk_aversion(x)


def is_dara(model: UtilityModel) -> bool:
    # constant absolute risk aversion counts as (weakly) decreasing
    return model.dara in ("strict", "weak")


def dara_strictness(model: UtilityModel) -> str:
    return model.dara


def from_dict(block: dict, path: str = "utility") -> UtilityModel:
    """Build a utility from ``{"kind": ..., "params": {...}}``."""
    kind = block.get("kind")
    params = block.get("params") or {}
    try:
        if kind == "power":
            return PowerUtility(float(params["gamma"]))
        if kind == "log":
            return LogUtility()
        if kind == "exponential":
            return ExponentialUtility(float(params["alpha"]))
    except KeyError as exc:
        raise ScenarioError(f"{path}.params.{exc.args[0]}", "missing required parameter") from None
    raise ScenarioError(f"{path}.kind", f"unknown utility kind {kind!r}")

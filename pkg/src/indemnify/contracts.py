"""Indemnity schedules, settlement under seller default, and buyer objective."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ScenarioError
from .market import MarketScenario

# slack absorbing float rounding when comparing indemnity with reserve
DEFAULT_EPS = 1e-12
EU_RTOL = 1e-12


@dataclass(frozen=True)
class DeductibleLimitContract:
    """Deductible ``d`` with a state-dependent cap equal to the seller's reserve.

    ``I(x, s) = min((x - d)^+, (s + a)^+)`` so the seller can always pay.
    """

    d: float
    a: float
    depends_on_state = True

    def __post_init__(self):
        if self.d < 0 or self.a < 0:
            raise ScenarioError("contract", "deductible and premium must be >= 0")

    def indemnity(self, x, s=0.0):
        x = np.asarray(x, dtype=float)
        return np.minimum(np.maximum(x - self.d, 0.0), max(s + self.a, 0.0))

    def breakpoints(self, s=0.0) -> tuple[float, ...]:
        return (self.d, self.d + max(s + self.a, 0.0))

    def to_dict(self) -> dict:
        return {"type": "deductible_limit", "a": self.a, "d": self.d}


@dataclass(frozen=True)
class MultiLayerContract:
    """Loss-only stack of unit-slope layers whose widths are the reserve increments.

    Layer ``i`` attaches at ``l_i + c_{i-1}`` and exhausts at ``l_i + c_i`` with
    ``c_i = (a + s_i)^+`` and ``c_0 = 0``.
    """

    a: float
    layers: tuple[float, ...]
    states: tuple[float, ...]
    depends_on_state = False

    def __post_init__(self):
        layers = tuple(float(v) for v in self.layers)
        states = tuple(float(v) for v in self.states)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "states", states)
        if len(layers) != len(states):
            raise ScenarioError("contract.layers", "need one layer parameter per background state")
        if any(b < a for a, b in zip(layers, layers[1:])) or (layers and layers[0] < 0):
            raise ScenarioError("contract.layers", "layer parameters must satisfy 0 <= l1 <= ... <= lN")
        if self.a < 0:
            raise ScenarioError("contract.a", "premium must be >= 0")

    @property
    def caps(self) -> np.ndarray:
        """Cumulative reserve levels ``c_0 = 0, c_1, ..., c_N``."""
        c = np.maximum(self.a + np.asarray(self.states), 0.0)
        return np.concatenate([[0.0], c])

    def indemnity(self, x, s=None):
        x = np.asarray(x, dtype=float)
        c = self.caps
        out = np.zeros_like(x)
        for i, l in enumerate(self.layers):
            width = c[i + 1] - c[i]
            if width > 0:
                out = out + np.clip(x - l - c[i], 0.0, width)
        return out

    def breakpoints(self, s=None) -> tuple[float, ...]:
        c = self.caps
        pts = []
        for i, l in enumerate(self.layers):
            if c[i + 1] > c[i]:
                pts.extend((l + c[i], l + c[i + 1]))
        return tuple(sorted(set(pts)))

    def to_dict(self) -> dict:
        return {"type": "multi_layer", "a": self.a, "layers": list(self.layers), "states": list(self.states)}


@dataclass(frozen=True)
class GridContract:
    """Loss-only indemnity tabulated on a grid and interpolated linearly."""

    x: tuple[float, ...]
    values: tuple[float, ...]
    a: float | None = None
    depends_on_state = False

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.x) != len(self.values) or len(self.x) < 2:
            raise ScenarioError("contract", "grid and values need equal length >= 2")

    def indemnity(self, x, s=None):
        return np.interp(np.asarray(x, dtype=float), self.x, self.values)

    def breakpoints(self, s=None) -> tuple[float, ...]:
        return self.x

    def to_dict(self) -> dict:
        return {"type": "grid", "a": self.a, "x": list(self.x), "values": list(self.values)}


Contract = DeductibleLimitContract | MultiLayerContract | GridContract


@dataclass(frozen=True)
class ContractOutcome:
    contractual: float
    reserve: float
    defaulted: bool
    actual: float
    wealth: float


def zero_contract(scenario: MarketScenario) -> DeductibleLimitContract:
    return DeductibleLimitContract(d=scenario.loss.M, a=0.0)


def contract_from_dict(block: dict) -> Contract:
    kind = block.get("type")
    if kind == "deductible_limit":
        return DeductibleLimitContract(float(block["d"]), float(block["a"]))
    if kind == "multi_layer":
        return MultiLayerContract(float(block["a"]), tuple(block["layers"]), tuple(block["states"]))
    if kind == "grid":
        return GridContract(tuple(block["x"]), tuple(block["values"]), block.get("a"))
    raise ScenarioError("contract.type", f"unknown contract type {kind!r}")


def indemnity(contract: Contract, x, s=0.0):
    """Contractual indemnity; loss-only contracts ignore ``s``."""
    return contract.indemnity(x, s)


def premium_of(scenario: MarketScenario, contract: Contract) -> float:
    """Expected-value premium ``(1 + eta) E[I(X, S)]``."""
    loss = scenario.loss
    if isinstance(contract, DeductibleLimitContract):
        expected = scenario.mixed_layer_expectation(contract.d, contract.a)
    elif isinstance(contract, MultiLayerContract):
        c = contract.caps
        expected = sum(
            loss.layer_expectation(l + c[i], c[i + 1] - c[i]) for i, l in enumerate(contract.layers)
        )
    else:
        expected = loss.expect(contract.indemnity, contract.breakpoints())
    return (1.0 + scenario.eta) * expected


def charged_premium(scenario: MarketScenario, contract: Contract) -> float:
    return contract.a if contract.a is not None else premium_of(scenario, contract)


def _actual(scenario: MarketScenario, contractual, reserve: float):
    defaulted = contractual > reserve + DEFAULT_EPS * (1.0 + reserve)
    return np.where(defaulted, scenario.tau * reserve, contractual), defaulted


def settle(scenario: MarketScenario, contract: Contract, x: float, s: float) -> ContractOutcome:
    """Contractual vs. paid indemnity and terminal wealth for one ``(x, s)``."""
    a = charged_premium(scenario, contract)
    reserve = max(s + a, 0.0)
    contractual = float(contract.indemnity(x, s))
    actual, defaulted = _actual(scenario, contractual, reserve)
    return ContractOutcome(
        contractual=contractual,
        reserve=reserve,
        defaulted=bool(defaulted),
        actual=float(actual),
        wealth=scenario.w - x - a + float(actual),
    )


def default_threshold(scenario: MarketScenario, contract: Contract, s: float) -> float | None:
    """Smallest loss beyond which the seller defaults in state ``s`` (None if never)."""
    a = charged_premium(scenario, contract)
    reserve = max(s + a, 0.0)
    M = scenario.loss.M
    pts = np.unique(np.clip([0.0, M, *contract.breakpoints(s)], 0.0, M))
    vals = contract.indemnity(pts, s)
    limit = reserve + DEFAULT_EPS * (1.0 + reserve)
    over = np.flatnonzero(vals > limit)
    if not over.size:
        return None
    k = over[0]
    if k == 0:
        return 0.0
    x0, x1, v0, v1 = pts[k - 1], pts[k], vals[k - 1], vals[k]
    return float(x0 + (reserve - v0) * (x1 - x0) / (v1 - v0))


def expected_utility(scenario: MarketScenario, contract: Contract, *, rtol: float = EU_RTOL) -> float:
    """``sum_i p_i E[u(W)]`` with each inner expectation split at every kink."""
    a = charged_premium(scenario, contract)
    util, w = scenario.utility, scenario.w
    total = 0.0
    for s, p in scenario.background.points:
        reserve = max(s + a, 0.0)
        kinks = list(contract.breakpoints(s))
        thr = default_threshold(scenario, contract, s)
        if thr is not None:
            kinks.append(thr)

        def f(x, s=s, reserve=reserve):
            paid, _ = _actual(scenario, contract.indemnity(x, s), reserve)
            return util.u(w - x - a + paid)

        total += p * scenario.loss.expect(f, kinks, rtol=rtol)
    return total


def _check_grid(contract: Contract, grid_n: int, upper: float, s) -> np.ndarray:
    pts = np.linspace(0.0, upper, grid_n)
    extra = [b for b in contract.breakpoints(s) if 0.0 <= b <= upper]
    return np.unique(np.concatenate([pts, extra]))


def ic_check(
    contract: Contract,
    grid_n: int = 2001,
    *,
    upper: float | None = None,
    states: Sequence[float] = (0.0,),
    tol: float = 1e-12,
) -> bool:
    """``0 <= I(x) - I(x') <= x - x'`` and ``0 <= I(x) <= x`` on the grid plus breakpoints."""
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    if upper is None:
        bps = contract.breakpoints(states[0])
        upper = max(bps) if bps else 1.0
    for s in states if contract.depends_on_state else (None,):
        x = _check_grid(contract, grid_n, upper, s)
        v = contract.indemnity(x, s)
        dv, dx = np.diff(v), np.diff(x)
        if np.any(dv < -tol) or np.any(dv > dx + tol):
            return False
        if np.any(v < -tol) or np.any(v > x + tol):
            return False
    return True


def default_free_check(scenario: MarketScenario, contract: Contract, grid_n: int = 2001) -> bool:
    """True when the contractual payout never exceeds the reserve on the grid."""
    a = charged_premium(scenario, contract)
    for s in scenario.background.values:
        x = _check_grid(contract, grid_n, scenario.loss.M, s)
        reserve = max(s + a, 0.0)
        if np.any(contract.indemnity(x, s) > reserve + DEFAULT_EPS * (1.0 + reserve)):
            return False
    return True

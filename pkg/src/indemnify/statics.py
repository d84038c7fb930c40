"""Parameter sweeps of the joint optimum with monotonicity verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import IndemnifyError, ScenarioError
from .joint import solve_global
from .market import MarketScenario
from .utility import LogUtility, PowerUtility, is_dara

AXES = ("w", "gamma", "eta", "s_shift")
MONO_TOL = 1e-9

# expected direction of (a*, d*, a* + d*) as the axis value grows; None = no claim
_EXPECTED = {
    "s_shift": {"a_star": "up", "limit": "up", "d_star": "down"},
    "w": {"a_star": "down", "d_star": "up", "limit": "up"},
    "gamma": {"a_star": "up", "d_star": "down", "limit": "down"},
    "eta": {"a_star": "down", "d_star": "up"},
}
# claims that need decreasing absolute risk aversion
_NEEDS_DARA = {("s_shift", "d_star"), ("w", "a_star"), ("w", "d_star"), ("w", "limit")}


@dataclass
class SweepRow:
    value: float
    a_star: float = math.nan
    d_star: float = math.nan
    limit: float = math.nan
    objective: float = math.nan
    case: str = "NA"
    error: str = ""

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "a_star": self.a_star,
            "d_star": self.d_star,
            "limit": self.limit,
            "objective": self.objective,
            "case": self.case,
            "error": self.error,
        }


@dataclass
class SweepTable:
    axis: str
    rows: list[SweepRow]
    verdicts: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "rows": [r.as_dict() for r in self.rows],
            "verdicts": dict(self.verdicts),
        }


def vary(scenario: MarketScenario, axis: str, value: float) -> MarketScenario:
    """Copy of ``scenario`` with one axis moved to ``value``."""
    if axis == "w":
        return scenario.replace(w=float(value))
    if axis == "eta":
        return scenario.replace(eta=float(value))
    if axis == "s_shift":
        return scenario.replace(background=scenario.background.shifted(float(value)))
    if axis == "gamma":
        if scenario.utility.kind not in ("power", "log"):
            raise ScenarioError("utility.kind", "gamma sweeps need a power or log utility")
        util = LogUtility() if value == 1 else PowerUtility(float(value))
        return scenario.replace(utility=util)
    raise ScenarioError("axis", f"unknown sweep axis {axis!r}; choose from {AXES}")


def monotone(values: np.ndarray, direction: str, strict: bool = False, tol: float = MONO_TOL) -> bool:
    """Nondecreasing ("up") or nonincreasing ("down") up to ``tol``; NaNs skipped."""
    v = values[~np.isnan(values)]
    if v.size < 2:
        return True
    diff = np.diff(v) if direction == "up" else -np.diff(v)
    return bool(np.all(diff > 0)) if strict else bool(np.all(diff >= -tol))


def _solve_row(scenario: MarketScenario, axis: str, value: float) -> SweepRow:
    try:
        rep = solve_global(vary(scenario, axis, value))
    except IndemnifyError as exc:
        return SweepRow(float(value), error=f"{type(exc).__name__}: {exc}")
    return SweepRow(float(value), rep.a_star, rep.d_star, rep.limit, rep.objective, rep.case_taken)


def comparative_sweep(scenario: MarketScenario, axis: str, grid) -> SweepTable:
    """Solve the joint problem along ``grid`` and judge the expected monotonicity.

    A failing row is kept with NaNs and its error text; the sweep goes on.
    """
    if axis not in AXES:
        raise ScenarioError("axis", f"unknown sweep axis {axis!r}; choose from {AXES}")
    grid = sorted(float(v) for v in grid)
    if not grid:
        raise ScenarioError("grid", "sweep grid is empty")
    rows = numerics.parallel_map(lambda v: _solve_row(scenario, axis, v), grid)
    table = SweepTable(axis, rows)
    dara = is_dara(scenario.utility)
    for col, direction in _EXPECTED[axis].items():
        key = f"{col}_{'nondecreasing' if direction == 'up' else 'nonincreasing'}"
        if (axis, col) in _NEEDS_DARA and not dara:
            table.verdicts[key] = None
        else:
            table.verdicts[key] = monotone(table.column(col), direction)
    table.verdicts["failed_rows"] = sum(bool(r.error) for r in rows)
    return table

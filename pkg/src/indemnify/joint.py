"""Optimal contract when indemnities may depend on the loss and the background risk.

Pipeline: threshold premium ``a_bar`` (largest premium worth paying), the
deductible ``d(a)`` that prices a capped layer at premium ``a``, the
loading threshold separating interior from no-insurance solutions, and the
first-order condition pinning the optimal premium. All roots are bracketed
bisections; every monotonicity they rely on is checked by the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .contracts import (
    DeductibleLimitContract,
    default_free_check,
    expected_utility,
    ic_check,
    zero_contract,
)
from .errors import AssumptionViolation, BracketFailure, DegenerateDenominator
from .market import MarketScenario

TIE_EPS = 1e-12
EXPECT_RTOL = 1e-12


@dataclass
class GlobalSolveReport:
    case_taken: str  # "EtaZero" | "Interior" | "NoInsurance"
    a_star: float
    d_star: float
    a_bar: float
    eta_threshold: float
    contract: DeductibleLimitContract
    objective: float
    residuals: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    reason: str = ""

    @property
    def limit(self) -> float:
        """``a* + d*``; adding a state ``s`` gives the maximum covered loss."""
        return self.a_star + self.d_star

    def to_dict(self) -> dict:
        return {
            "problem": "joint",
            "case_taken": self.case_taken,
            "reason": self.reason,
            "a_star": self.a_star,
            "d_star": self.d_star,
            "a_bar": self.a_bar,
            "eta_threshold": self.eta_threshold,
            "limit": self.limit,
            "objective": self.objective,
            "contract": self.contract.to_dict(),
            "residuals": dict(self.residuals),
            "iterations": dict(self.iterations),
            "warnings": list(self.warnings),
        }


def full_premium(scenario: MarketScenario) -> float:
    return scenario.full_premium


def g_of_a(scenario: MarketScenario, a: float) -> float:
    """Loaded price of full cover up to the reserve, minus the premium ``a``."""
    loss = scenario.loss
    covered = sum(
        p * (loss.mean - loss.stop_loss(max(s + a, 0.0))) for s, p in scenario.background.points
    )
    return (1.0 + scenario.eta) * covered - a


def find_a_bar(scenario: MarketScenario, *, return_iterations: bool = False):
    """``inf{a in [0, pi_f] : g(a) <= 0}``."""
    pf = scenario.full_premium
    g0 = g_of_a(scenario, 0.0)
    if g0 <= 0:
        return (0.0, 0) if return_iterations else 0.0
    # g is concave when S >= 0; the scan keeps the infimum honest otherwise
    cell = numerics.first_sign_change(lambda a: g_of_a(scenario, a), 0.0, pf, n=64)
    if cell is None:
        g_pf = g_of_a(scenario, pf)
        # reserves cover every loss at full premium, so g(pf) is zero up to rounding
        if g_pf <= 1e-12 * (1.0 + pf):
            return (pf, 0) if return_iterations else pf
        raise BracketFailure("g stays positive on [0, full premium]", 0.0, pf, g0, g_pf)
    lo, hi, f_lo, f_hi = cell
    res = numerics.bisect(lambda a: g_of_a(scenario, a), lo, hi, f_lo=f_lo, f_hi=f_hi)
    return (res.root, res.iterations) if return_iterations else res.root


def g_a_of_y(scenario: MarketScenario, a: float, y: float) -> float:
    """Premium of the capped layer above deductible ``y`` minus ``a``."""
    return (1.0 + scenario.eta) * scenario.mixed_layer_expectation(y, a) - a


def find_deductible(scenario: MarketScenario, a: float, *, return_iterations: bool = False):
    """Smallest root ``d(a)`` of ``g_a`` on ``[0, M]``.

    ``g_a`` is nonincreasing in ``y`` for every law, so the boundary of
    ``{g_a > 0}`` is the smallest root even when roots are not unique.
    """
    M = scenario.loss.M
    if a <= 0:
        return (M, 0) if return_iterations else M
    f = lambda y: g_a_of_y(scenario, a, y)  # noqa: E731
    f0 = f(0.0)
    if f0 < 0:
        # tolerate rounding right at a = a_bar
        if f0 > -1e-12 * (1.0 + a):
            return (0.0, 0) if return_iterations else 0.0
        raise AssumptionViolation(
            f"g_a(0) = {f0:.3g} < 0 at a = {a:.6g}: premium exceeds the threshold premium"
        )
    if f0 == 0:
        return (0.0, 0) if return_iterations else 0.0
    res = numerics.bisect(f, 0.0, M, f_lo=f0, f_hi=-a)
    return (res.root, res.iterations) if return_iterations else res.root


def deductible_is_unique(scenario: MarketScenario, a: float, d: float, probe: float = 1e-6) -> bool:
    """False if ``g_a`` is flat at zero just above ``d`` (several deductibles price to ``a``)."""
    M = scenario.loss.M
    if a <= 0 or d >= M - probe:
        return True
    return g_a_of_y(scenario, a, d + probe) < -1e-15


def eta_threshold(scenario: MarketScenario) -> float:
    """Loading at or above which buying no insurance is optimal."""
    util, w, loss = scenario.utility, scenario.w, scenario.loss
    denom = loss.expect(lambda x: util.prime(w - x), rtol=EXPECT_RTOL)
    return float(util.prime(w - loss.M)) / denom - 1.0


def foc_at(scenario: MarketScenario, a: float, d: float) -> float:
    util, w = scenario.utility, scenario.w
    expected = scenario.loss.expect(
        lambda x: util.prime(w - np.minimum(x, d) - a), (d,), rtol=EXPECT_RTOL
    )
    return expected - float(util.prime(w - d - a)) / (1.0 + scenario.eta)


def foc(scenario: MarketScenario, a: float) -> float:
    """``E[u'(w - min(X, d(a)) - a)] - u'(w - d(a) - a) / (1 + eta)``.

    Increasing in ``a``; the negated value is the derivative of the value
    of the best contract at premium ``a``.
    """
    return foc_at(scenario, a, find_deductible(scenario, a))


def find_a_star(scenario: MarketScenario, a_bar: float | None = None, *, return_iterations: bool = False):
    if a_bar is None:
        a_bar = find_a_bar(scenario)
    f_lo, f_hi = foc(scenario, 0.0), foc(scenario, a_bar)
    if not (f_lo < 0 < f_hi):
        raise BracketFailure("first-order condition does not change sign on [0, a_bar]", 0.0, a_bar, f_lo, f_hi)
    # bisect the sign of -foc so the split matches f > 0 / f <= 0
    res = numerics.bisect(lambda a: -foc(scenario, a), 0.0, a_bar, f_lo=-f_lo, f_hi=-f_hi)
    return (res.root, res.iterations) if return_iterations else res.root


def d_prime(scenario: MarketScenario, a: float, d: float | None = None) -> float:
    """Derivative of the deductible with respect to the premium level."""
    if d is None:
        d = find_deductible(scenario, a)
    loss, k = scenario.loss, 1.0 + scenario.eta
    above = below = 0.0
    for s, p in scenario.background.points:
        top = d + max(s + a, 0.0)
        above += p * loss.survival(top)
        below += p * loss.prob_between(d, top)
    if below < 1e-12:
        raise DegenerateDenominator(f"no loss mass in the covered layer at a = {a:.6g}")
    return (k * above - 1.0) / (k * below)


def kink_premiums(scenario: MarketScenario) -> np.ndarray:
    """Premiums near which ``d(a)`` may fail to be differentiable (atoms shifted by states)."""
    atoms = np.array([p for p, _ in scenario.loss.atoms] + list(scenario.loss.kinks))
    s = scenario.background.values
    return np.unique((atoms[:, None] - s[None, :]).ravel())


def solve_global(scenario: MarketScenario) -> GlobalSolveReport:
    """Globally optimal loss-and-background-dependent contract."""
    loss, eta = scenario.loss, scenario.eta
    thr = eta_threshold(scenario)
    if scenario.background.values.max() <= 0:
        contract = zero_contract(scenario)
        return GlobalSolveReport(
            "NoInsurance", 0.0, loss.M, 0.0, thr, contract,
            expected_utility(scenario, contract), reason="nonpositive_background",
        )
    a_bar, it_abar = find_a_bar(scenario, return_iterations=True)
    residuals = {"g_at_abar": float(g_of_a(scenario, a_bar))}
    iterations = {"a_bar": it_abar}
    warnings = []
    if a_bar <= 0:
        contract = zero_contract(scenario)
        return GlobalSolveReport(
            "NoInsurance", 0.0, loss.M, a_bar, thr, contract,
            expected_utility(scenario, contract), residuals, iterations, reason="zero_threshold_premium",
        )

    failures = scenario.assumption_failures()
    if eta == 0:
        case, a_star, reason = "EtaZero", a_bar, "zero_loading"
    elif eta >= thr - TIE_EPS:
        case, a_star, reason = "NoInsurance", 0.0, "loading_above_threshold"
        if abs(eta - thr) <= TIE_EPS:
            warnings.append("loading ties the threshold within 1e-12; dispatched to no insurance")
    else:
        case, reason = "Interior", "interior_optimum"
        warnings.extend(f"assumption_failed:{c}" for c in failures)
        a_star, iterations["a_star"] = find_a_star(scenario, a_bar, return_iterations=True)

    if case == "NoInsurance":
        d_star = loss.M
        contract = zero_contract(scenario)
    else:
        d_star, iterations["d_star"] = find_deductible(scenario, a_star, return_iterations=True)
        contract = DeductibleLimitContract(d=d_star, a=a_star)
        residuals["g_a_at_d"] = float(g_a_of_y(scenario, a_star, d_star))
        if not deductible_is_unique(scenario, a_star, d_star):
            warnings.append("deductible_not_unique: smallest root reported")
    if case == "Interior":
        residuals["foc_at_astar"] = float(foc_at(scenario, a_star, d_star))
    return GlobalSolveReport(
        case, a_star, d_star, a_bar, thr, contract,
        expected_utility(scenario, contract), residuals, iterations, warnings, reason,
    )


def validate_report(scenario: MarketScenario, report: GlobalSolveReport, grid_n: int = 2001) -> list[str]:
    """Re-run the structural checks on a report's contract; returns failure labels."""
    problems = []
    if not ic_check(report.contract, grid_n, upper=scenario.loss.M, states=tuple(scenario.background.values)):
        problems.append("ic_check")
    if not default_free_check(scenario, report.contract, grid_n):
        problems.append("default_free_check")
    for name, value in report.residuals.items():
        if not math.isfinite(value) or abs(value) >= 1e-9:
            problems.append(f"residual:{name}")
    return problems

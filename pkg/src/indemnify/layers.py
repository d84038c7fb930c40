"""Optimal loss-only (incentive-compatible) contract under a discrete background risk.

For a fixed premium ``a`` the optimum is a stack of unit-slope layers, one
per background state, whose widths are the reserve increments
``(a + s_i)^+ - (a + s_{i-1})^+``. Two states with full recovery admit a
semi-explicit solution; other shapes use a best-effort coordinate descent.
The premium itself is found by a one-dimensional outer search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .contracts import (
    MultiLayerContract,
    default_threshold,
    expected_utility,
    premium_of,
    zero_contract,
)
from .errors import (
    AssumptionViolation,
    BracketFailure,
    CaseDispatchAmbiguity,
    UnsupportedDimension,
)
from .market import MarketScenario

MAX_STATES = 3
SCAN_CELLS = 64
TIE_TOL = 1e-6
OUTER_TOL = 1e-9
FP_SCAN = 256


@dataclass
class InnerSolution:
    layers: tuple[float, ...]
    case: str
    underline_l1: float | None = None
    overline_l2: float | None = None
    overline_l1: float | None = None


@dataclass
class LayeredSolveReport:
    case_taken: str  # "Case1" | "Case2" | "Case3" | "SingleState" | "NumericOuter" | "NoInsurance"
    a_bar_N: float
    a_star: float
    layers_star: tuple[float, ...]
    contract: MultiLayerContract
    objective: float
    fixed_point_residual: float
    default_states: list = field(default_factory=list)
    underline_l1: float | None = None
    overline_l2: float | None = None
    ties: list = field(default_factory=list)
    evaluations: int = 0
    warnings: list = field(default_factory=list)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.contract.breakpoints()

    def to_dict(self) -> dict:
        return {
            "problem": "loss-only",
            "case_taken": self.case_taken,
            "a_bar_N": self.a_bar_N,
            "a_star": self.a_star,
            "layers_star": list(self.layers_star),
            "breakpoints": list(self.breakpoints),
            "underline_l1": self.underline_l1,
            "overline_l2": self.overline_l2,
            "objective": self.objective,
            "fixed_point_residual": self.fixed_point_residual,
            "default_states": [
                {"s": s, "default_above": thr} for s, thr in self.default_states
            ],
            "contract": self.contract.to_dict(),
            "ties": list(self.ties),
            "evaluations": self.evaluations,
            "warnings": list(self.warnings),
        }


# -- premium bookkeeping ----------------------------------------------------


def _caps(a: float, states) -> np.ndarray:
    return np.concatenate([[0.0], np.maximum(a + np.asarray(states, dtype=float), 0.0)])


def expected_indemnity(scenario: MarketScenario, a: float, layers) -> float:
    """``E[I(X; a, l)]`` for the layer stack, using closed-form layer prices."""
    loss = scenario.loss
    c = _caps(a, scenario.background.values)
    return sum(loss.layer_expectation(l + c[i], c[i + 1] - c[i]) for i, l in enumerate(layers))


def phi(scenario: MarketScenario, a: float, layers) -> float:
    """Loaded price of the stack minus the premium; zero on the feasible set."""
    return (1.0 + scenario.eta) * expected_indemnity(scenario, a, layers) - a


def _smallest_root(f, lo: float, hi: float) -> float:
    """``inf{x in [lo, hi] : f(x) <= 0}`` for nonincreasing ``f``; ``hi`` if never.

    Returns the right end of the final bracket, so ``f(x) <= 0`` holds exactly.
    """
    f_lo = f(lo)
    if f_lo <= 0:
        return lo
    f_hi = f(hi)
    if f_hi > 0:
        return hi
    return numerics.bisect(f, lo, hi, f_lo=f_lo, f_hi=f_hi).bracket[1]


def find_a_bar_N(scenario: MarketScenario) -> float:
    """Root of ``(1 + eta) E[min(X, s_N + a)] - a``: the largest premium a stack can absorb."""
    s_top = float(scenario.background.values.max())
    if s_top <= 0:
        return 0.0
    loss, k = scenario.loss, 1.0 + scenario.eta
    f = lambda a: k * (loss.mean - loss.stop_loss(s_top + a)) - a  # noqa: E731
    pf = scenario.full_premium
    f_hi = f(pf)
    if f_hi > 0:
        raise BracketFailure("top-state premium equation stays positive", 0.0, pf, f(0.0), f_hi)
    return numerics.bisect(f, 0.0, pf, f_hi=f_hi).root


def premium_fixed_point(scenario: MarketScenario, layers) -> float:
    """Premium ``a`` with ``a = (1 + eta) E[I(X; a, l)]`` for fixed attachments ``l``.

    Returns the first downward crossing of ``h(a) = (1 + eta) E[I] - a`` on
    ``[0, pi_f]``; 0 when ``h`` never turns positive.
    """
    layers = tuple(float(v) for v in layers)
    if len(layers) != scenario.background.n:
        raise ValueError("need one attachment per background state")
    pf = scenario.full_premium
    h = lambda a: phi(scenario, a, layers)  # noqa: E731
    grid = np.linspace(0.0, pf, FP_SCAN + 1)
    prev_x, prev_f = grid[0], h(grid[0])
    for x in grid[1:]:
        fx = h(x)
        if prev_f > 0 >= fx:
            return numerics.bisect(h, prev_x, x, f_lo=prev_f, f_hi=fx).root
        prev_x, prev_f = x, fx
    if prev_f > 0:
        raise BracketFailure("premium equation positive at the full premium", 0.0, pf, h(0.0), prev_f)
    return 0.0


# -- inner problems at a fixed premium --------------------------------------


def _single_layer(scenario: MarketScenario, a: float, width: float) -> float:
    """Attachment of one layer of the given width priced at ``a``."""
    loss, k = scenario.loss, 1.0 + scenario.eta
    return _smallest_root(lambda l: k * loss.layer_expectation(l, width) - a, 0.0, loss.M)


def solve_n2_at_premium(scenario: MarketScenario, a: float) -> InnerSolution:
    """Optimal attachments ``(l1, l2)`` for two states with full recovery."""
    bg = scenario.background
    if bg.n != 2:
        raise UnsupportedDimension(f"two-state solver called with {bg.n} states")
    if scenario.tau != 1.0:
        raise AssumptionViolation("two-state closed-form solver needs full recovery (tau = 1)")
    (s1, _), (s2, p2) = bg.points
    util, w, M = scenario.utility, scenario.w, scenario.loss.M
    c1 = a + s1

    if c1 <= 0:
        l2 = _single_layer(scenario, a, max(a + s2, 0.0))
        return InnerSolution((l2, l2), "Case1")

    phi_pair = lambda l1, l2: phi(scenario, a, (l1, l2))  # noqa: E731

    # first layer alone carries the premium once the second sits above M
    lo1 = _smallest_root(lambda l: phi_pair(l, M), 0.0, M)

    def l2_of(l1: float) -> float:
        return _smallest_root(lambda l: phi_pair(l1, l), l1, M)

    hi2 = l2_of(lo1)
    ratio = float(util.prime(w - lo1 - a) / util.prime(w - hi2 - a))
    if p2 <= ratio:
        return InnerSolution((lo1, hi2), "Case2", underline_l1=lo1, overline_l2=hi2)

    hi1 = _smallest_root(lambda l: phi_pair(l, l), 0.0, M)

    def psi(l1: float) -> float:
        return float(-util.prime(w - l1 - a) + p2 * util.prime(w - l2_of(l1) - a))

    f_lo, f_hi = psi(lo1), psi(hi1)
    if not (f_lo > 0 >= f_hi):
        raise CaseDispatchAmbiguity(
            "marginal-utility gap has no sign change between the attachment bounds",
            lo1, hi1, f_lo, f_hi,
        )
    l1 = numerics.bisect(psi, lo1, hi1, f_lo=f_lo, f_hi=f_hi).root
    return InnerSolution(
        (l1, l2_of(l1)), "Case3", underline_l1=lo1, overline_l2=hi2, overline_l1=hi1
    )


def _contract(scenario: MarketScenario, a: float, layers) -> MultiLayerContract:
    return MultiLayerContract(a, tuple(layers), tuple(scenario.background.values))


def _numeric_inner(
    scenario: MarketScenario, a: float, *, sweeps: int = 8, tol: float = 1e-7
) -> InnerSolution:
    """Coordinate ascent over ``l_1..l_{N-1}`` with ``l_N`` pinned by the premium.

    Each free attachment is written as a fraction ``z_j`` of its feasible
    interval given the attachments below it, so the search runs on the unit
    box and can slide along the premium boundary, where the optimum usually
    sits. Best effort only: each coordinate is maximised by a short scan plus
    golden section.
    """
    M, n = scenario.loss.M, scenario.background.n
    c = _caps(a, scenario.background.values)
    if n == 1 or a <= 0:
        return InnerSolution((_single_layer(scenario, a, c[-1]),) * n, "NumericOuter")

    def price(ls) -> float:
        return phi(scenario, a, list(ls))

    def interval(fixed: list[float]) -> tuple[float, float]:
        """Feasible range of the next attachment after ``fixed``.

        Lowest: everything above it pushed to M must not overprice.
        Highest: everything above it collapsed onto it must not underprice.
        """
        k = n - len(fixed)
        lo = fixed[-1] if fixed else 0.0
        t_lo = _smallest_root(lambda t: price(fixed + [t] + [M] * (k - 1)), lo, M)
        t_hi = _smallest_root(lambda t: price(fixed + [t] * k), t_lo, M)
        return t_lo, t_hi

    def layers_of(z) -> list[float]:
        ls: list[float] = []
        for zj in z:
            lo, hi = interval(ls)
            ls.append(float(lo + zj * (hi - lo)))
        top = _smallest_root(lambda l: price(ls + [l]), ls[-1], M)
        return ls + [float(top)]

    def value(z) -> float:
        return expected_utility(scenario, _contract(scenario, a, layers_of(z)), rtol=1e-10)

    # coarse start on the box; z = 1 everywhere is the single stacked layer
    ticks = np.linspace(0.0, 1.0, 5)
    starts = [np.array(z) for z in np.stack(np.meshgrid(*[ticks] * (n - 1)), -1).reshape(-1, n - 1)]
    z = max(starts, key=value)
    best = value(z)
    for _ in range(sweeps):
        before = best
        for j in range(n - 1):
            def obj(t, j=j):
                trial = z.copy()
                trial[j] = t
                return value(trial)

            grid = np.linspace(0.0, 1.0, 9)
            vals = [obj(t) for t in grid]
            i = int(np.argmax(vals))
            res = numerics.golden_section_max(obj, grid[max(i - 1, 0)], grid[min(i + 1, 8)], tol=tol)
            cand, cand_val = (res.x, res.value) if res.value >= vals[i] else (grid[i], vals[i])
            if cand_val > best:
                z[j] = cand
                best = cand_val
        if best - before <= 1e-12 * (1.0 + abs(best)):
            break
    return InnerSolution(tuple(layers_of(z)), "NumericOuter")


def solve_at_premium(scenario: MarketScenario, a: float) -> InnerSolution:
    """Dispatch to the exact, two-state, or numeric inner solver."""
    n = scenario.background.n
    if n > MAX_STATES:
        raise UnsupportedDimension(f"loss-only solver supports at most {MAX_STATES} states, got {n}")
    if n == 1:
        c = max(a + scenario.background.values[0], 0.0)
        return InnerSolution((_single_layer(scenario, a, c),), "SingleState")
    if n == 2 and scenario.tau == 1.0:
        return solve_n2_at_premium(scenario, a)
    return _numeric_inner(scenario, a)


# -- outer premium search ---------------------------------------------------


def solve_layers_global(scenario: MarketScenario) -> LayeredSolveReport:
    """Best loss-only contract: scan the premium range, then golden-section refine."""
    n = scenario.background.n
    if n > MAX_STATES:
        raise UnsupportedDimension(f"loss-only solver supports at most {MAX_STATES} states, got {n}")
    states = tuple(scenario.background.values)
    M = scenario.loss.M
    if max(states) <= 0:
        zero = zero_contract(scenario)
        contract = _contract(scenario, 0.0, (M,) * n)
        return LayeredSolveReport(
            "NoInsurance", 0.0, 0.0, (M,) * n, contract, expected_utility(scenario, zero), 0.0,
            [(s, None) for s in states],
        )

    a_bar = find_a_bar_N(scenario)
    cache: dict[float, tuple[float, InnerSolution]] = {}

    def evaluate(a: float) -> tuple[float, InnerSolution]:
        if a not in cache:
            inner = solve_at_premium(scenario, a)
            cache[a] = (expected_utility(scenario, _contract(scenario, a, inner.layers)), inner)
        return cache[a]

    grid = np.linspace(0.0, a_bar, SCAN_CELLS + 1)
    scanned = numerics.parallel_map(lambda a: (a, *_eval_fresh(scenario, a)), list(grid))
    for a, v, inner in scanned:
        cache[a] = (v, inner)
    values = np.array([cache[a][0] for a in grid])
    i = int(np.argmax(values))
    res = numerics.golden_section_max(
        lambda a: evaluate(a)[0], grid[max(i - 1, 0)], grid[min(i + 1, SCAN_CELLS)], tol=OUTER_TOL
    )
    a_star = float(res.x)
    objective, inner = evaluate(a_star)

    ties = [
        float(grid[j]) for j in range(grid.size)
        if abs(j - i) > 1 and values[j] >= values[i] - TIE_TOL
    ]
    warnings = []
    if ties:
        warnings.append("outer_scan_ties: several separated premiums within 1e-6 of the best")
    if n == 2 and scenario.tau == 1.0:
        # the two-state characterisation assumes a strictly increasing CDF
        warnings.extend(
            f"assumption_failed:{c}" for c in scenario.assumption_failures()
            if c == "condition3_strictly_increasing_cdf"
        )
    if inner.case == "NumericOuter":
        warnings.append("numeric_inner_solver: attachments found by best-effort coordinate ascent")

    contract = _contract(scenario, a_star, inner.layers)
    residual = premium_of(scenario, contract) - a_star
    defaults = [(float(s), default_threshold(scenario, contract, s)) for s in states]
    case = inner.case if n == 2 and scenario.tau == 1.0 else (
        "SingleState" if n == 1 else "NumericOuter"
    )
    return LayeredSolveReport(
        case, a_bar, a_star, inner.layers, contract, objective, float(residual), defaults,
        inner.underline_l1, inner.overline_l2, ties, len(cache), warnings,
    )


def _eval_fresh(scenario: MarketScenario, a: float) -> tuple[float, InnerSolution]:
    inner = solve_at_premium(scenario, a)
    return expected_utility(scenario, _contract(scenario, a, inner.layers)), inner

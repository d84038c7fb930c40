"""Brute-force checks of the analytic optima on a discretized market.

The loss law is replaced by point masses on a grid whose nodes include
every atom, piece endpoint and caller-declared breakpoint. Density mass on
each cell is split between its two end nodes so that mass and first moment
are preserved ("hat" weights); expectations of functions that are linear on
every cell, such as the premium of a piecewise-linear contract whose kinks
are nodes, are therefore exact.

Random search is a falsification device, not a proof: a passing verdict
means no sampled admissible contract beat the analytic one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import numerics
from .contracts import default_threshold
from .errors import DominanceViolation, InfeasiblePremium
from .joint import GlobalSolveReport
from .layers import LayeredSolveReport
from .market import MarketScenario

N_PROBES = 32
PROJ_MAXITER = 100
PROJ_TOL = 1e-12
DOMINANCE_TOL = 1e-7
# slack when comparing an indemnity with the reserve (matches the contracts module)
DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class DiscreteMarket:
    x: np.ndarray
    q: np.ndarray
    s: np.ndarray
    p: np.ndarray
    eta: float
    tau: float
    probe_error: float = 0.0

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def mean(self) -> float:
        return float(self.q @ self.x)

    @property
    def full_premium(self) -> float:
        return (1.0 + self.eta) * self.mean

    def stop_loss(self, y: float) -> float:
        return float(self.q @ np.maximum(self.x - y, 0.0))

    def premium(self, indemnity: np.ndarray) -> float:
        """Loaded price of a loss-only vector ``(n,)`` or a state matrix ``(n, N)``."""
        ind = np.asarray(indemnity, dtype=float)
        if ind.ndim == 1:
            return (1.0 + self.eta) * float(self.q @ ind)
        return (1.0 + self.eta) * float(self.q @ ind @ self.p)


def discretize(scenario: MarketScenario, n: int = 2048, extra_points=()) -> DiscreteMarket:
    """Hat-weight discretization on ``n`` uniform nodes plus all kinks and ``extra_points``."""
    if n < 16:
        raise ValueError("need n >= 16")
    loss = scenario.loss
    M = loss.M
    extra = [float(v) for v in extra_points if v is not None and 0.0 <= v <= M]
    nodes = np.unique(np.concatenate([np.linspace(0.0, M, n), loss.kinks, extra]))
    q = np.zeros(nodes.size)
    for point, mass in loss.atoms:
        q[np.searchsorted(nodes, point)] += mass
    for pc in loss.pieces:
        i0, i1 = np.searchsorted(nodes, pc.lo), np.searchsorted(nodes, pc.hi)
        for k in range(i0, i1):
            lo, hi = nodes[k], nodes[k + 1]
            m = pc.mass(lo, hi)
            if m <= 0:
                continue
            right = (pc.moment(lo, hi) - lo * m) / (hi - lo)
            right = min(max(right, 0.0), m)
            q[k + 1] += right
            q[k] += m - right
    q /= q.sum()
    market = DiscreteMarket(nodes, q, scenario.background.values, scenario.background.probs,
                            scenario.eta, scenario.tau)
    probes = np.linspace(0.0, M, N_PROBES + 2)[1:-1]
    err = max(abs(market.stop_loss(y) - loss.stop_loss(y)) for y in probes)
    err = max(err, abs(market.mean - loss.mean))
    return DiscreteMarket(nodes, q, market.s, market.p, market.eta, market.tau, float(err))


# -- objective ----------------------------------------------------------------


def _as_matrix(market: DiscreteMarket, indemnity) -> np.ndarray:
    ind = np.asarray(indemnity, dtype=float)
    if ind.ndim == 1:
        ind = np.repeat(ind[:, None], market.s.size, axis=1)
    if ind.shape != (market.n, market.s.size):
        raise ValueError(f"indemnity shape {ind.shape} does not match market ({market.n}, {market.s.size})")
    return ind


def discrete_objective(market: DiscreteMarket, scenario: MarketScenario, indemnity, premium: float) -> float:
    """``sum_i p_i sum_j q_j u(w - x_j - premium + paid_ji)`` with default settled at ``tau * reserve``."""
    ind = _as_matrix(market, indemnity)
    reserve = np.maximum(market.s + premium, 0.0)[None, :]
    defaulted = ind > reserve + DEFAULT_EPS * (1.0 + reserve)
    paid = np.where(defaulted, market.tau * reserve, ind)
    wealth = scenario.w - market.x[:, None] - premium + paid
    return float(market.q @ scenario.utility.u(wealth) @ market.p)


def contract_matrix(market: DiscreteMarket, contract) -> np.ndarray:
    return np.column_stack([contract.indemnity(market.x, s) for s in market.s])


# -- samplers -----------------------------------------------------------------


def project_premium(market: DiscreteMarket, base: np.ndarray, a: float) -> np.ndarray:
    """Scale ``base`` (clipped to ``[0, x]``) until its loaded price equals ``a``.

    The price of ``clip(t * base)`` is concave and nondecreasing in ``t``, so
    Newton steps from below never overshoot. Raises InfeasiblePremium when
    ``a`` is out of reach or the iteration stalls.
    """
    cap = np.broadcast_to(market.x[:, None], base.shape) if base.ndim == 2 else market.x
    if a <= 0:
        return np.zeros_like(base)
    top = market.premium(np.where(base > 0, cap, 0.0))
    if a > top * (1.0 + PROJ_TOL) + PROJ_TOL:
        raise InfeasiblePremium(f"premium {a:.6g} exceeds the largest reachable price {top:.6g}")
    if a >= top:
        return np.where(base > 0, cap, 0.0).astype(float)
    k = 1.0 + market.eta
    t = 0.0
    for _ in range(PROJ_MAXITER):
        cand = np.minimum(t * base, cap)
        price = market.premium(cand)
        gap = a - price
        if abs(gap) <= PROJ_TOL * (1.0 + a):
            return cand
        free = (t * base < cap)
        if base.ndim == 1:
            slope = k * float(market.q @ np.where(free, base, 0.0))
        else:
            slope = k * float(market.q @ np.where(free, base, 0.0) @ market.p)
        if slope <= 0:
            break
        t += gap / slope
    raise InfeasiblePremium(f"clip-rescale projection did not reach premium {a:.6g}")


def _random_shape(market: DiscreteMarket, rng: np.random.Generator, cols: int | None) -> np.ndarray:
    """Nonnegative raw shape with one of several textures; ``cols=None`` gives a vector."""
    shape = (market.n,) if cols is None else (market.n, cols)
    kind = rng.integers(4)
    x = market.x if cols is None else market.x[:, None]
    if kind == 0:
        return rng.random(shape) * x
    if kind == 1:
        # deductible per column
        d = rng.random(() if cols is None else (cols,)) * market.x[-1]
        return np.broadcast_to(np.maximum(x - d, 0.0), shape).copy()
    if kind == 2:
        # smooth random proportion
        knots = rng.random(6)
        frac = np.interp(market.x / market.x[-1], np.linspace(0, 1, 6), knots)
        out = frac * market.x
        return out if cols is None else out[:, None] * rng.uniform(0.5, 1.5, cols)
    # sparse spikes
    mask = rng.random(shape) < rng.uniform(0.01, 0.3)
    return np.where(mask, x, 0.0)


def sample_admissible_joint(market: DiscreteMarket, a: float, rng_seed) -> np.ndarray:
    """Random ``I[j, i]`` in ``[0, x_j]`` priced at exactly ``a`` (no monotonicity imposed)."""
    rng = np.random.default_rng(rng_seed)
    if a > market.full_premium * (1.0 + PROJ_TOL) + PROJ_TOL:
        raise InfeasiblePremium(f"premium {a:.6g} exceeds the full premium {market.full_premium:.6g}")
    if a >= market.full_premium:
        return np.repeat(market.x[:, None], market.s.size, axis=1)
    base = _random_shape(market, rng, market.s.size)
    if market.premium(np.where(base > 0, market.x[:, None], 0.0)) < a:
        base = rng.random(base.shape) * market.x[:, None] + base
    return project_premium(market, base, a)


def _slopes_to_vector(market: DiscreteMarket, slopes: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(slopes * np.diff(market.x))])


def sample_admissible_ic(market: DiscreteMarket, rng_seed) -> np.ndarray:
    """Random nondecreasing 1-Lipschitz vector with ``I(0) = 0`` from per-cell slopes in [0, 1]."""
    rng = np.random.default_rng(rng_seed)
    cells = market.n - 1
    kind = rng.integers(3)
    if kind == 0:
        slopes = rng.random(cells)
    elif kind == 1:
        # a few unit-slope layers
        on = np.zeros(cells)
        for _ in range(rng.integers(1, 4)):
            i, j = np.sort(rng.integers(0, cells + 1, 2))
            on[i:j] = 1.0
        slopes = on
    else:
        # piecewise-constant slopes with random levels
        cuts = np.sort(rng.integers(0, cells, rng.integers(1, 6)))
        levels = rng.random(cuts.size + 1) * (rng.random(cuts.size + 1) < 0.7)
        slopes = levels[np.searchsorted(cuts, np.arange(cells), side="right")]
    return _slopes_to_vector(market, slopes)


# -- dominance ------------------------------------------------------------------


@dataclass
class DominanceVerdict:
    problem: str
    passed: bool
    trials: int
    analytic_objective: float
    best_candidate_objective: float
    max_violation: float
    worst_trial: int | None
    worst_kind: str
    probe_error: float
    counterexample: dict | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "problem", "passed", "trials", "analytic_objective", "best_candidate_objective",
            "max_violation", "worst_trial", "worst_kind", "probe_error", "notes")}
        out["counterexample"] = self.counterexample
        return out


def discrete_deductible(market: DiscreteMarket, a: float) -> float:
    """Deductible pricing ``min((x - d)^+, (s + a)^+)`` at ``a`` in the discrete market."""
    caps = np.maximum(market.s + a, 0.0)

    def g(d):
        return market.premium(np.minimum(np.maximum(market.x[:, None] - d, 0.0), caps[None, :])) - a

    if a <= 0:
        return float(market.x[-1])
    if g(0.0) <= 0:
        return 0.0
    return numerics.bisect(g, 0.0, float(market.x[-1])).bracket[1]


def _joint_candidates(market, a, analytic_matrix, trial, seed):
    rng = np.random.default_rng([seed, trial])
    kind = trial % 4
    if kind == 3:
        # local perturbation: mixture of the analytic optimum and a random contract at the same price
        other = sample_admissible_joint(market, a, [seed, trial, 1])
        lam = rng.uniform(0.5, 1.0) if rng.random() < 0.5 else 1.0 - 10.0 ** rng.uniform(-6, -1)
        return lam * analytic_matrix + (1.0 - lam) * other, "mixture"
    return sample_admissible_joint(market, a, [seed, trial]), "random"


def _ic_candidates(market, analytic_vector, trial, seed):
    rng = np.random.default_rng([seed, trial])
    kind = trial % 4
    if kind == 3:
        other = sample_admissible_ic(market, [seed, trial, 1])
        lam = 1.0 - 10.0 ** rng.uniform(-6, 0)
        return lam * analytic_vector + (1.0 - lam) * other, "mixture"
    return sample_admissible_ic(market, [seed, trial]), "random"


def dominance_test(
    scenario: MarketScenario,
    analytic_report,
    trials: int = 1000,
    rng_seed: int = 1,
    *,
    n: int = 2048,
    tol: float = DOMINANCE_TOL,
    strict: bool = False,
) -> DominanceVerdict:
    """Search for an admissible contract that beats the analytic one.

    Joint reports are challenged by contracts priced at the same premium
    (plus the canonical deductible contract solved on the discrete market);
    loss-only reports by incentive-compatible vectors charged their own
    price. With ``strict=True`` a violation raises DominanceViolation.
    """
    contract = analytic_report.contract
    a = float(contract.a)
    pts = []
    for s in scenario.background.values:
        pts.extend(contract.breakpoints(s))
        pts.append(default_threshold(scenario, contract, s))
    market = discretize(scenario, n, pts)
    analytic_matrix = contract_matrix(market, contract)

    if isinstance(analytic_report, GlobalSolveReport):
        problem = "joint"
        base = discrete_objective(market, scenario, analytic_matrix, a)
        d_disc = discrete_deductible(market, a)
        canon = np.minimum(np.maximum(market.x[:, None] - d_disc, 0.0), np.maximum(market.s + a, 0.0)[None, :])
        named = [(canon, "canonical_deductible", a)]

        def make(t):
            m, kind = _joint_candidates(market, a, analytic_matrix, t, rng_seed)
            return m, kind, a
    elif isinstance(analytic_report, LayeredSolveReport):
        problem = "loss-only"
        vec = analytic_matrix[:, 0]
        base = discrete_objective(market, scenario, vec, a)
        named = [(np.zeros(market.n), "zero", 0.0)]

        def make(t):
            v, kind = _ic_candidates(market, vec, t, rng_seed)
            return v, kind, market.premium(v)
    else:
        raise TypeError("analytic_report must be a joint or loss-only solve report")

    def score(item):
        ind, kind, prem = item
        return discrete_objective(market, scenario, ind, prem) - base

    results = [(score(c), -1 - i, c[1], c) for i, c in enumerate(named)] if trials > 0 else []

    def run(t):
        cand = make(t)
        return score(cand), t, cand[1]

    results.extend(numerics.parallel_map(run, list(range(trials))))
    if not results:
        return DominanceVerdict(problem, True, 0, base, -math.inf, -math.inf, None, "", market.probe_error)

    worst = max(results, key=lambda r: (r[0], -r[1]))
    violation, idx, kind = worst[0], worst[1], worst[2]
    passed = violation <= tol
    counter = None
    if not passed:
        if idx < 0:
            ind, _, prem = named[-1 - idx]
        else:
            ind, _, prem = make(idx)
        counter = {"trial": idx, "kind": kind, "premium": prem, "x": market.x.tolist(),
                   "indemnity": np.asarray(ind).tolist()}
    verdict = DominanceVerdict(
        problem, passed, trials, base, base + violation, violation,
        idx if idx >= 0 else None, kind, market.probe_error, counter,
    )
    if strict and not passed:
        raise DominanceViolation(
            f"{kind} candidate beats the analytic {problem} objective by {violation:.3g}", counter
        )
    return verdict


def finite_difference_check(
    f: Callable[[float], float], x: float, h: float = 1e-5, analytic: float | Callable | None = None
) -> tuple[float, float, float]:
    """Central difference of ``f`` at ``x`` against ``analytic`` (a value or a callable)."""
    numeric = (f(x + h) - f(x - h)) / (2.0 * h)
    if callable(analytic):
        analytic = analytic(x)
    if analytic is None:
        analytic = numeric
    rel = abs(analytic - numeric) / max(abs(analytic), 1e-300)
    return float(analytic), float(numeric), float(rel)


def random_scenario(seed: int, *, states: int = 2) -> MarketScenario:
    """Seeded market with full-support loss, positive reserves and an interior loading."""
    from .joint import eta_threshold
    from .market import (BackgroundRisk, LossDistribution, Piece, TruncatedExponential,
                         TruncatedPareto, Uniform)
    from .utility import ExponentialUtility, LogUtility, PowerUtility

    rng = np.random.default_rng([seed, 9173])
    M = float(rng.uniform(5.0, 20.0))
    atoms = []
    if rng.random() < 0.6:
        atoms.append((0.0, float(rng.uniform(0.02, 0.15))))
    if rng.random() < 0.6:
        atoms.append((M, float(rng.uniform(0.02, 0.15))))
    rest = 1.0 - sum(m for _, m in atoms)
    kernels = [Uniform(), TruncatedPareto(float(rng.uniform(0.5, 2.0) * M), float(rng.uniform(1.0, 4.0))),
               TruncatedExponential(float(rng.uniform(0.05, 0.5)))]
    if rng.random() < 0.5:
        pieces = [Piece(0.0, M, kernels[rng.integers(3)], rest)]
    else:
        cut = float(rng.uniform(0.2, 0.8) * M)
        share = float(rng.uniform(0.2, 0.8))
        pieces = [Piece(0.0, cut, kernels[rng.integers(3)], rest * share),
                  Piece(cut, M, kernels[rng.integers(3)], rest * (1.0 - share))]
    loss = LossDistribution(tuple(atoms), tuple(pieces))
    s = np.cumsum(rng.uniform(0.03, 0.3, states) * M)
    # a light lowest state makes the interior two-layer case common
    p = rng.dirichlet(np.r_[1.0, np.full(states - 1, 4.0)])
    background = BackgroundRisk(tuple(zip(s.tolist(), p.tolist())))
    kind = rng.integers(3)
    if kind == 0:
        gamma = float(rng.uniform(0.3, 3.0))
        util = PowerUtility(gamma if abs(gamma - 1.0) > 0.05 else 1.2)
    elif kind == 1:
        util = LogUtility()
    else:
        util = ExponentialUtility(float(rng.uniform(0.05, 0.4)))
    w = M + 2.0 * loss.mean + float(rng.uniform(2.0, 15.0))
    probe = MarketScenario(loss, background, w, 0.0, 1.0, util, name=f"random-{seed}")
    # keep worst-case wealth at least one unit above zero at the drawn loading
    eta_cap = (w - M - 1.0) / loss.mean - 1.0
    eta = float(rng.uniform(0.1, 0.8)) * min(eta_threshold(probe), eta_cap)
    return probe.replace(eta=eta)

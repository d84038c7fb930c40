"""Loss law, background risk, and the expectation primitives the solvers share.

The loss ``X`` is a finite mixture of atoms and density pieces on
``[0, M]``; each piece carries one of three parametric kernels whose
antiderivatives are closed form, so probabilities and partial moments
are exact. General expectations ``E[f(X)]`` go through adaptive
Gauss-Legendre split at every kink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import numerics
from .errors import ScenarioError
from .utility import UtilityModel

SUM_TOL = 1e-12


# --------------------------------------------------------------------------
# density kernels (unnormalised; a Piece rescales them to its interval)


@dataclass(frozen=True)
class Uniform:
    kind = "uniform"

    def pdf_raw(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def cdf_raw(self, x: float) -> float:
        return x

    def moment_raw(self, x: float) -> float:
        return 0.5 * x * x

    def cdf_raw_inv(self, y):
        return y

    def to_dict(self):
        return {"kind": "uniform"}


@dataclass(frozen=True)
class TruncatedPareto:
    """Shifted (Lomax) Pareto shape: density proportional to ``(x + scale)**-(shape + 1)``."""

    scale: float
    shape: float
    kind = "truncated_pareto"

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ScenarioError("kernel.scale", "must be a finite number > 0")
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ScenarioError("kernel.shape", "must be a finite number > 0")

    def pdf_raw(self, x):
        return (np.asarray(x, dtype=float) + self.scale) ** (-self.shape - 1.0)

    def cdf_raw(self, x: float) -> float:
        return -((x + self.scale) ** -self.shape) / self.shape

    def moment_raw(self, x: float) -> float:
        v, a = x + self.scale, self.shape
        if a == 1.0:
            return math.log(v) + self.scale / v
        return v ** (1.0 - a) / (1.0 - a) + self.scale * v ** (-a) / a

    def cdf_raw_inv(self, y):
        return (-self.shape * np.asarray(y)) ** (-1.0 / self.shape) - self.scale

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale, "shape": self.shape}


@dataclass(frozen=True)
class TruncatedExponential:
    rate: float
    kind = "truncated_exponential"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ScenarioError("kernel.rate", "must be a finite number > 0")

    def pdf_raw(self, x):
        return np.exp(-self.rate * np.asarray(x, dtype=float))

    def cdf_raw(self, x: float) -> float:
        return -math.exp(-self.rate * x) / self.rate

    def moment_raw(self, x: float) -> float:
        return -(x + 1.0 / self.rate) * math.exp(-self.rate * x) / self.rate

    def cdf_raw_inv(self, y):
        return -np.log(-self.rate * np.asarray(y)) / self.rate

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


Kernel = Uniform | TruncatedPareto | TruncatedExponential


@dataclass(frozen=True)
class Piece:
    """A kernel restricted to ``[lo, hi]`` carrying probability ``weight``."""

    lo: float
    hi: float
    kernel: Kernel
    weight: float

    @property
    def _norm(self) -> float:
        return self.kernel.cdf_raw(self.hi) - self.kernel.cdf_raw(self.lo)

    def mass(self, a: float, b: float) -> float:
        """Probability (within the mixture) that this piece lands in ``[a, b]``."""
        a, b = max(a, self.lo), min(b, self.hi)
        if b <= a:
            return 0.0
        k = self.kernel
        return self.weight * (k.cdf_raw(b) - k.cdf_raw(a)) / self._norm

    def moment(self, a: float, b: float) -> float:
        """``E[X; X in [a, b], X from this piece]``."""
        a, b = max(a, self.lo), min(b, self.hi)
        if b <= a:
            return 0.0
        k = self.kernel
        return self.weight * (k.moment_raw(b) - k.moment_raw(a)) / self._norm

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, self.weight * self.kernel.pdf_raw(x) / self._norm, 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        k = self.kernel
        c_lo = k.cdf_raw(self.lo)
        v = c_lo + rng.random(size) * self._norm
        return np.clip(k.cdf_raw_inv(v), self.lo, self.hi)


@dataclass(frozen=True)
class LossDistribution:
    """Mixture of atoms ``(point, mass)`` and density pieces on ``[0, M]``."""

    atoms: tuple[tuple[float, float], ...] = ()
    pieces: tuple[Piece, ...] = ()
    M: float | None = None

    def __post_init__(self):
        atoms = tuple(sorted((float(p), float(m)) for p, m in self.atoms))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        for i, (p, m) in enumerate(atoms):
            if not (m > 0):
                raise ScenarioError(f"loss.atoms[{i}]", "mass must be > 0")
            if p < 0:
                raise ScenarioError(f"loss.atoms[{i}]", "point must be >= 0")
        for i, pc in enumerate(self.pieces):
            if not (pc.lo < pc.hi):
                raise ScenarioError(f"loss.pieces[{i}]", "need lo < hi")
            if pc.lo < 0:
                raise ScenarioError(f"loss.pieces[{i}].lo", "must be >= 0")
            if not (pc.weight > 0):
                raise ScenarioError(f"loss.pieces[{i}].weight", "must be > 0")
        total = sum(m for _, m in atoms) + sum(pc.weight for pc in self.pieces)
        if abs(total - 1.0) > SUM_TOL:
            raise ScenarioError("loss", f"atom masses and piece weights sum to {total!r}, not 1")
        top = max([p for p, _ in atoms] + [pc.hi for pc in self.pieces], default=0.0)
        if self.M is None:
            object.__setattr__(self, "M", top)
        elif abs(self.M - top) > 1e-12 * max(1.0, top):
            raise ScenarioError("loss.M", f"essential supremum is {top!r}, got {self.M!r}")
        if not (self.M > 0):
            raise ScenarioError("loss.M", "loss must not be identically zero (need M > 0)")

    # -- distribution queries ------------------------------------------------

    @property
    def kinks(self) -> tuple[float, ...]:
        """Atom points and piece endpoints, sorted and deduplicated."""
        pts = {p for p, _ in self.atoms}
        for pc in self.pieces:
            pts.update((pc.lo, pc.hi))
        return tuple(sorted(pts))

    @property
    def mean(self) -> float:
        return sum(p * m for p, m in self.atoms) + sum(pc.moment(pc.lo, pc.hi) for pc in self.pieces)

    def cdf(self, x: float) -> float:
        """Right-continuous ``P(X <= x)``."""
        out = sum(m for p, m in self.atoms if p <= x)
        out += sum(pc.mass(pc.lo, x) for pc in self.pieces)
        return min(out, 1.0)

    def survival(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def prob_between(self, a: float, b: float) -> float:
        """``P(a < X <= b)``."""
        if b <= a:
            return 0.0
        out = sum(m for p, m in self.atoms if a < p <= b)
        out += sum(pc.mass(a, b) for pc in self.pieces)
        return out

    def stop_loss(self, y: float) -> float:
        """``E[(X - y)^+]``."""
        out = 0.0
        for p, m in self.atoms:
            if p > y:
                out += m * (p - y)
        for pc in self.pieces:
            if pc.hi > y:
                a = max(y, pc.lo)
                out += pc.moment(a, pc.hi) - y * pc.mass(a, pc.hi)
        return max(out, 0.0)

    def layer_expectation(self, y: float, c: float) -> float:
        """``E[(X - y)^+ - (X - y - c)^+]``, the expected payout of layer ``(y, y + c]``."""
        if c <= 0:
            return 0.0
        return max(self.stop_loss(y) - self.stop_loss(y + c), 0.0)

    def expect(
        self,
        f: Callable[[np.ndarray], np.ndarray],
        kinks: Iterable[float] = (),
        *,
        rtol: float = numerics.RTOL,
        atol: float = numerics.ATOL,
    ) -> float:
        """``E[f(X)]`` with density pieces split at ``kinks`` before quadrature."""
        kinks = tuple(kinks)
        total = 0.0
        if self.atoms:
            pts = np.array([p for p, _ in self.atoms])
            ms = np.array([m for _, m in self.atoms])
            total += float(ms @ np.asarray(f(pts), dtype=float))
        for pc in self.pieces:
            k = pc.kernel
            scale = pc.weight / pc._norm
            edges = numerics.split_points(pc.lo, pc.hi, kinks)

            def g(x, k=k):
                return np.asarray(f(x), dtype=float) * k.pdf_raw(x)

            for a, b in zip(edges[:-1], edges[1:]):
                total += scale * numerics.gauss_legendre(g, a, b, rtol=rtol, atol=atol)
        return total

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` iid losses."""
        probs = np.array([m for _, m in self.atoms] + [pc.weight for pc in self.pieces])
        comp = rng.choice(probs.size, size=size, p=probs / probs.sum())
        out = np.empty(size)
        n_atoms = len(self.atoms)
        for j in range(probs.size):
            idx = np.flatnonzero(comp == j)
            if not idx.size:
                continue
            if j < n_atoms:
                out[idx] = self.atoms[j][0]
            else:
                out[idx] = self.pieces[j - n_atoms].sample(rng, idx.size)
        return out

    def has_full_support(self) -> bool:
        """True when the CDF strictly increases on ``[0, M]`` (no density gaps)."""
        spans = sorted((pc.lo, pc.hi) for pc in self.pieces)
        reach = 0.0
        for lo, hi in spans:
            if lo > reach + 1e-12:
                return False
            reach = max(reach, hi)
        return reach >= self.M - 1e-12

    def to_dict(self) -> dict:
        return {
            "atoms": [[p, m] for p, m in self.atoms],
            "pieces": [
                {"lo": pc.lo, "hi": pc.hi, "kernel": pc.kernel.to_dict(), "weight": pc.weight}
                for pc in self.pieces
            ],
            "M": self.M,
        }


@dataclass(frozen=True)
class BackgroundRisk:
    """Finite law of the seller's reserve shock, independent of the loss."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(s), float(p)) for s, p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ScenarioError("background.points", "need at least one support point")
        for i, (s, p) in enumerate(pts):
            if not (p > 0):
                raise ScenarioError(f"background.points[{i}]", "probability must be > 0")
            if not math.isfinite(s):
                raise ScenarioError(f"background.points[{i}]", "support point must be finite")
            if i and not (s > pts[i - 1][0]):
                raise ScenarioError(f"background.points[{i}]", "support points must strictly increase")
        total = sum(p for _, p in pts)
        if abs(total - 1.0) > SUM_TOL:
            raise ScenarioError("background.points", f"probabilities sum to {total!r}, not 1")

    @classmethod
    def constant(cls, r: float) -> "BackgroundRisk":
        return cls(((r, 1.0),))

    @property
    def values(self) -> np.ndarray:
        return np.array([s for s, _ in self.points])

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.points])

    @property
    def n(self) -> int:
        return len(self.points)

    def shifted(self, delta: float) -> "BackgroundRisk":
        return BackgroundRisk(tuple((s + delta, p) for s, p in self.points))

    def to_dict(self) -> dict:
        return {"points": [[s, p] for s, p in self.points]}


@dataclass(frozen=True)
class MarketScenario:
    """Loss, background risk, and the buyer/seller parameters of one market."""

    loss: LossDistribution
    background: BackgroundRisk
    w: float
    eta: float
    tau: float
    utility: UtilityModel
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ScenarioError("eta", "loading must be finite and >= 0")
        if not (0.0 <= self.tau <= 1.0):
            raise ScenarioError("tau", "recovery ratio must lie in [0, 1]")
        if not math.isfinite(self.w):
            raise ScenarioError("w", "initial wealth must be finite")
        floor = self.w - self.loss.M - self.full_premium
        if not floor > self.utility.domain_lo:
            raise ScenarioError(
                "w",
                f"worst-case wealth w - M - full premium = {floor:.6g} must exceed "
                f"the utility domain bound {self.utility.domain_lo}",
            )

    @property
    def full_premium(self) -> float:
        return (1.0 + self.eta) * self.loss.mean

    def replace(self, **changes) -> "MarketScenario":
        return replace(self, **changes)

    def mixed_layer_expectation(self, y: float, a: float) -> float:
        """``E[(X - y)^+ - (X - y - (S + a)^+)^+]`` with ``S`` independent of ``X``."""
        return sum(
            p * self.loss.layer_expectation(y, max(s + a, 0.0)) for s, p in self.background.points
        )

    def assumption_failures(self) -> list[str]:
        """Labels of the standing regularity conditions this market violates."""
        failed = []
        if self.background.values.min() < 0:
            failed.append("condition1_nonnegative_background")
        if not self.loss.has_full_support():
            failed.append("condition3_strictly_increasing_cdf")
        if not self._layer_mass_positive():
            failed.append("condition4_positive_layer")
        return failed

    def _layer_mass_positive(self) -> bool:
        M = self.loss.M
        for y in np.linspace(0.0, M, 257)[:-1]:
            val = sum(
                p * self.loss.layer_expectation(y, max(s, 0.0)) for s, p in self.background.points
            )
            if val <= 0:
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "loss": self.loss.to_dict(),
            "background": self.background.to_dict(),
            "w": self.w,
            "eta": self.eta,
            "tau": self.tau,
            "utility": self.utility.to_dict(),
        }


# module-level spellings of the primitives


def cdf(dist: LossDistribution, x: float) -> float:
    return dist.cdf(x)


def stop_loss(dist: LossDistribution, y: float) -> float:
    return dist.stop_loss(y)


def layer_expectation(dist: LossDistribution, y: float, c: float) -> float:
    return dist.layer_expectation(y, c)


def expect_piecewise(
    dist: LossDistribution, f: Callable, kinks: Sequence[float] = (), **tol
) -> float:
    return dist.expect(f, kinks, **tol)


def mixed_layer_expectation(scenario: MarketScenario, y: float, a: float) -> float:
    return scenario.mixed_layer_expectation(y, a)

"""Root finding, line search, quadrature and worker-pool helpers.

Everything downstream is piecewise smooth with known kinks, so the
primitives here are deliberately simple: sign-change bisection, golden
section, and Gauss-Legendre panels refined by halving.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BracketFailure, QuadratureNonConvergence

XTOL = 1e-12
MAXITER = 200
RTOL = 1e-10
ATOL = 1e-14

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RootResult:
    root: float
    iterations: int
    bracket: tuple[float, float]


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = XTOL,
    maxiter: int = MAXITER,
    f_lo: float | None = None,
    f_hi: float | None = None,
) -> RootResult:
    """Locate the sign change of ``f`` between ``lo`` and ``hi``.

    Signs are split as ``f > 0`` versus ``f <= 0``, so for a nonincreasing
    function the result converges to ``inf{x : f(x) <= 0}`` even when the
    function has a flat zero stretch.
    """
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    pos_lo = f_lo > 0
    if pos_lo == (f_hi > 0):
        raise BracketFailure("no sign change on bracket", lo, hi, f_lo, f_hi)
    it = 0
    while hi - lo > xtol and it < maxiter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if (f(mid) > 0) == pos_lo:
            lo = mid
        else:
            hi = mid
        it += 1
    return RootResult(0.5 * (lo + hi), it, (lo, hi))


def first_sign_change(
    f: Callable[[float], float], lo: float, hi: float, n: int = 256
) -> tuple[float, float, float, float] | None:
    """Scan ``n`` uniform cells for the first one where ``f`` drops to <= 0.

    Returns ``(a, b, f(a), f(b))`` or None if ``f`` stays positive.
    """
    grid = np.linspace(lo, hi, n + 1)
    prev_x, prev_f = grid[0], f(grid[0])
    if prev_f <= 0:
        return prev_x, prev_x, prev_f, prev_f
    for x in grid[1:]:
        fx = f(x)
        if fx <= 0:
            return prev_x, x, prev_f, fx
        prev_x, prev_f = x, fx
    return None


@dataclass(frozen=True)
class LineSearchResult:
    x: float
    value: float
    evaluations: int


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, *, tol: float = 1e-9, maxiter: int = 200
) -> LineSearchResult:
    """Maximise a unimodal ``f`` on ``[lo, hi]``; endpoints are compared too."""
    f_lo, f_hi = f(lo), f(hi)
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    a, b = lo, hi
    evals = 4
    while b - a > tol and evals < maxiter:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
        evals += 1
    best = max([(f1, x1), (f2, x2), (f_lo, lo), (f_hi, hi)], key=lambda t: t[0])
    return LineSearchResult(best[1], best[0], evals)


@lru_cache(maxsize=8)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    order: int = 16,
    max_depth: int = 40,
) -> float:
    """Adaptive Gauss-Legendre integral of a vectorised ``f`` over ``[a, b]``.

    Each panel is accepted when the ``order``-point rule on the panel and
    the sum of the rules on its two halves agree to ``max(atol, rtol*|I|)``
    (scaled by the panel's share of the interval).
    """
    if b <= a:
        return 0.0
    x, w = _leggauss(order)
    width = b - a
    lo = np.array([a])
    hi = np.array([b])
    coarse = _panels(f, lo, hi, x, w)
    total = 0.0
    for _ in range(max_depth):
        mid = 0.5 * (lo + hi)
        left = _panels(f, lo, mid, x, w)
        right = _panels(f, mid, hi, x, w)
        fine = left + right
        scale = (hi - lo) / width
        est = abs(total + fine.sum())
        tol = np.maximum(atol * scale, rtol * est * scale)
        done = np.abs(fine - coarse) <= tol
        total += fine[done].sum()
        if done.all():
            return float(total)
        keep = ~done
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    raise QuadratureNonConvergence(
        f"adaptive depth {max_depth} exceeded on [{a}, {b}] with {lo.size} open panels"
    )


def _panels(f, lo: np.ndarray, hi: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    half = 0.5 * (hi - lo)
    centre = 0.5 * (hi + lo)
    nodes = centre[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return half * (vals @ w)


def split_points(a: float, b: float, kinks: Iterable[float]) -> np.ndarray:
    """Sorted breakpoints of ``[a, b]`` including every kink strictly inside."""
    pts = [a, b]
    pts.extend(k for k in kinks if a < k < b)
    return np.unique(np.asarray(pts, dtype=float))


def worker_count() -> int:
    raw = os.environ.get("INDEMNIFY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded when ``INDEMNIFY_THREADS`` > 1."""
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))

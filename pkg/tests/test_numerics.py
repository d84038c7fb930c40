import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indemnify import numerics
from indemnify.errors import BracketFailure, QuadratureNonConvergence


@given(st.floats(-50, 50))
def test_bisect_finds_linear_root(r):
    res = numerics.bisect(lambda x: r - x, -100.0, 100.0)
    assert abs(res.root - r) < 1e-10
    assert res.iterations <= numerics.MAXITER


def test_bisect_flat_zero_returns_infimum():
    # nonincreasing with a flat zero stretch on [1, 2]
    f = lambda x: max(1.0 - x, 0.0) - max(x - 2.0, 0.0)
    assert numerics.bisect(f, 0.0, 3.0).root == pytest.approx(1.0, abs=1e-10)


def test_bisect_rejects_bad_bracket():
    with pytest.raises(BracketFailure) as info:
        numerics.bisect(lambda x: 1.0 + x * x, -1.0, 1.0)
    assert info.value.f_lo == 2.0 and info.value.f_hi == 2.0


def test_first_sign_change():
    cell = numerics.first_sign_change(lambda x: math.cos(x), 0.0, 10.0, n=100)
    lo, hi, f_lo, f_hi = cell
    assert lo < math.pi / 2 <= hi and f_lo > 0 >= f_hi
    assert numerics.first_sign_change(lambda x: 1.0, 0.0, 1.0) is None


@given(st.floats(-3, 3))
def test_golden_section_quadratic(c):
    res = numerics.golden_section_max(lambda x: -(x - c) ** 2, -5.0, 5.0, tol=1e-10)
    assert abs(res.x - c) < 1e-6


def test_golden_section_prefers_endpoint():
    res = numerics.golden_section_max(lambda x: x, 0.0, 1.0)
    assert res.x == 1.0


@pytest.mark.parametrize(
    "f, a, b, exact",
    [
        (np.sin, 0.0, np.pi, 2.0),
        (lambda x: x**5, -1.0, 2.0, (64 - 1) / 6),
        (lambda x: x**2.5, 0.0, 1.0, 1 / 3.5),
        (lambda x: 1.0 / (1.0 + x * x), -10.0, 10.0, 2 * np.arctan(10.0)),
    ],
)
def test_gauss_legendre(f, a, b, exact):
    assert numerics.gauss_legendre(f, a, b, rtol=1e-12) == pytest.approx(exact, rel=1e-11)


def test_gauss_legendre_depth_limit():
    with pytest.raises(QuadratureNonConvergence):
        numerics.gauss_legendre(lambda x: np.sign(x - 0.1234567), 0.0, 1.0, rtol=1e-15, atol=0.0, max_depth=3)


def test_split_points_keeps_inner_kinks_only():
    pts = numerics.split_points(0.0, 1.0, [-1.0, 0.5, 0.5, 1.0, 2.0])
    assert pts.tolist() == [0.0, 0.5, 1.0]


@settings(deadline=None, max_examples=10)
@given(st.integers(1, 4))
def test_parallel_map_is_order_preserving(threads):
    import os

    old = os.environ.get("INDEMNIFY_THREADS")
    os.environ["INDEMNIFY_THREADS"] = str(threads)
    try:
        assert numerics.parallel_map(lambda v: v * v, list(range(20))) == [v * v for v in range(20)]
    finally:
        if old is None:
            os.environ.pop("INDEMNIFY_THREADS")
        else:
            os.environ["INDEMNIFY_THREADS"] = old


def test_worker_count_ignores_garbage(monkeypatch):
    monkeypatch.setenv("INDEMNIFY_THREADS", "lots")
    assert numerics.worker_count() == 1

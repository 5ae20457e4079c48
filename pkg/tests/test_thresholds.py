import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uecsp.thresholds import critical, d_k, d_star, h, pi_k, profile, rho


def rho_by_bisection(k, d):
    """Largest root of g(x) = x - 1 + exp(-d x^(k-1)): bracket it by a grid
    scan down from 1, then bisect."""
    g = lambda x: x - 1 + math.exp(-d * x ** (k - 1))
    xs = np.linspace(1, 0, 100_001)
    lo = xs[np.flatnonzero([g(x) < 0 for x in xs])[0]]
    hi = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_rho_limits():
    assert rho(3, 0.5) == 0
    assert rho(3, 50) > 0.999
    assert rho(3, 3.0) == pytest.approx(rho_by_bisection(3, 3.0), abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 6), st.floats(0, 1))
def test_rho_is_a_fixed_point(k, t):
    d = d_star(k) + 0.01 + 5 * t
    x = rho(k, d)
    assert x > 0
    assert x == pytest.approx(1 - math.exp(-d * x ** (k - 1)), abs=1e-9)
    assert x == pytest.approx(rho_by_bisection(k, d), abs=1e-8)


def test_d_star_k3():
    ds = d_star(3)
    assert ds == pytest.approx(2.4554, abs=1e-4)
    # d* is the minimum of -log(1 - x) / x^2 on (0, 1)
    xs = np.linspace(1e-3, 1 - 1e-6, 2_000_001)
    assert ds == pytest.approx(np.min(-np.log1p(-xs) / xs**2), abs=1e-5)
    tol = 1e-6
    assert rho(3, ds - 10 * tol) == 0 and rho(3, ds + 10 * tol) > 0


def test_tolerance_stability():
    assert abs(d_star(4, 1e-6) - d_star(4, 1e-8)) < 1e-5
    assert abs(d_k(4, 1e-6) / 4 - d_k(4, 1e-8) / 4) < 1e-5


def test_d_k_values():
    assert d_k(3) / 3 == pytest.approx(0.917935, abs=1e-6)
    for k in (3, 4, 5, 6):
        assert d_k(k) > d_star(k)
        assert h(k, d_star(k) + 1e-3) > 0


def test_profile_identities():
    low = profile(3, 2, 1.0)
    assert low.rho == low.pi_k == low.core_row_fraction == low.cluster_count_exponent == 0
    assert low.cluster_size_exponent == pytest.approx((1 - 1 / 3) * math.log(2))
    for d in (2.5, 2.6, 2.7):
        p = profile(3, 5, d)
        assert p.cluster_count_exponent + p.cluster_size_exponent == pytest.approx((1 - d / 3) * math.log(5))


def test_profile_formulas_direct():
    x = rho_by_bisection(3, 2.6)
    p = profile(3, 2, 2.6)
    assert p.pi_k == pytest.approx(x - 2.6 * x**2 + 2.6 * x**3, abs=1e-9)
    assert p.cluster_count_exponent == pytest.approx(
        (x - 2.6 * x**2 + (2.6 - 2.6 / 3) * x**3) * math.log(2), abs=1e-9
    )
    assert pi_k(3, 2.6) == p.pi_k


def test_critical_keys():
    c = critical(4)
    assert set(c) == {"k", "d_star", "d_k", "d_k_over_k", "d_star_over_k"}
    assert c["d_k_over_k"] == pytest.approx(0.976770, abs=1e-5)
    assert critical(5)["d_k_over_k"] == pytest.approx(0.992438, abs=1e-5)


def test_bad_arguments():
    with pytest.raises(ValueError):
        rho(2, 1.0)
    with pytest.raises(ValueError):
        profile(3, 1, 2.0)

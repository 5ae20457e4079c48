"""Closed-form threshold quantities for random UE-CSPs with k-ary constraints.

rho(k, d) is the largest fixed point of x = 1 - exp(-d x^(k-1)); the core
emerges at d_star(k) and satisfiability is lost at d_k(k).  Densities d are
per variable degree, so m/n = d/k.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

MAX_ITER = 10**6


class ConvergenceError(RuntimeError):
    pass


def rho(k: int, d: float, tol: float = 1e-12) -> float:
    """Largest fixed point, by descending iteration from x = 1.

    The map is increasing, so the iterates decrease monotonically to the
    largest fixed point; returns 0 once they fall below ``tol``.
    """
    if k < 3 or d <= 0 or tol <= 0:
        raise ValueError("need k >= 3, d > 0, tol > 0")
    x = 1.0
    for _ in range(MAX_ITER):
        nxt = 1.0 - math.exp(-d * x ** (k - 1))
        if nxt < tol:
            return 0.0
        if abs(nxt - x) < tol:
            return nxt
        x = nxt
    raise ConvergenceError(f"rho({k}, {d}) did not converge in {MAX_ITER} steps")


def d_star(k: int, tol: float = 1e-6) -> float:
    """inf{d : rho(k, d) > 0}, by bisection on [tol, 10k]."""
    lo, hi = tol, 10.0 * k
    if rho(k, lo) > 0 or rho(k, hi) == 0:
        raise ValueError("bracket does not contain the core threshold")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rho(k, mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def h(k: int, d: float) -> float:
    """rho - d rho^(k-1) + (1 - 1/k) d rho^k: positive while satisfiable."""
    x = rho(k, d)
    return x - d * x ** (k - 1) + (1.0 - 1.0 / k) * d * x**k


def d_k(k: int, tol: float = 1e-6) -> float:
    """Sign change of h on (d_star + tol, 10k], by bisection."""
    lo, hi = d_star(k, tol) + tol, 10.0 * k
    if h(k, lo) <= 0 or h(k, hi) >= 0:
        raise ValueError("h does not change sign on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(k, mid) < 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def pi_k(k: int, d: float) -> float:
    """Limiting fraction of variables in the 2-core."""
    x = rho(k, d)
    return x - d * x ** (k - 1) + d * x**k


@dataclass(frozen=True)
class ThresholdProfile:
    k: int
    r: int
    d: float
    rho: float
    d_k: float
    d_star: float
    pi_k: float
    core_row_fraction: float
    cluster_count_exponent: float  # nats
    cluster_size_exponent: float  # nats

    def to_json(self) -> dict:
        return asdict(self)


def profile(k: int, r: int, d: float, tol: float = 1e-6) -> ThresholdProfile:
    if r < 2:
        raise ValueError("need r >= 2")
    x = rho(k, d)
    log_r = math.log(r)
    count = (x - d * x ** (k - 1) + (d - d / k) * x**k) * log_r
    size = (1.0 - d / k) * log_r - count
    return ThresholdProfile(
        k=k,
        r=r,
        d=d,
        rho=x,
        d_k=d_k(k, tol),
        d_star=d_star(k, tol),
        pi_k=pi_k(k, d),
        core_row_fraction=(d / k) * x**k,
        cluster_count_exponent=count,
        cluster_size_exponent=size,
    )


def critical(k: int, tol: float = 1e-6) -> dict:
    ds = d_star(k, tol)
    dk = d_k(k, tol)
    return {"k": k, "d_star": ds, "d_k": dk, "d_k_over_k": dk / k, "d_star_over_k": ds / k}

"""Multi-ary quasigroup operations attached to UE constraints.

An a-ary operation is an integer array of shape ``(r,) * a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintFunction, uniqueness_violation


def extension_operation(psi: ConstraintFunction) -> np.ndarray:
    """f_psi as a (k-1)-ary operation."""
    w = uniqueness_violation(psi)
    if w is not None:
        raise ValueError(f"{psi.name} is not uniquely extendable: {w.data}")
    return np.asarray(psi.completion(psi.k - 1))


def quasigroup_f_prime(psi: ConstraintFunction, alpha: int = 0) -> np.ndarray:
    """The k-ary operation

        f'(t_1..t_k) = f(f(t_1..t_{k-1}), f(t_k alpha^{k-3} beta), c, ..., c)

    with beta = f(alpha^{k-1}) and c = f(alpha^{k-2} beta) repeated k-3 times.
    """
    F = extension_operation(psi)
    k, r = psi.k, psi.r
    if k < 3:
        raise ValueError("f' needs k >= 3")
    if not 0 <= alpha < r:
        raise ValueError(f"alpha {alpha} outside the spin set")
    beta = int(F[(alpha,) * (k - 1)])
    head = F[..., None]  # t_1..t_{k-1}, broadcast over t_k
    tail = F[(np.arange(r),) + (alpha,) * (k - 3) + (beta,)]
    c = int(F[(alpha,) * (k - 2) + (beta,)])
    return F[(head, tail) + (c,) * (k - 3)]


@dataclass
class QuasigroupReport:
    arity: int
    is_quasigroup: bool
    neutral_elements: tuple[int, ...]
    is_associative: bool
    is_totally_symmetric: bool
    is_exchangeable: bool
    witnesses: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "arity": self.arity,
            "is_quasigroup": self.is_quasigroup,
            "neutral_elements": list(self.neutral_elements),
            "is_associative": self.is_associative,
            "is_totally_symmetric": self.is_totally_symmetric,
            "is_exchangeable": self.is_exchangeable,
            "witnesses": self.witnesses,
        }


def _shape(op: np.ndarray) -> tuple[int, int]:
    op = np.asarray(op)
    a, r = op.ndim, op.shape[0]
    if a < 1 or op.shape != (r,) * a:
        raise ValueError(f"operation table shape {op.shape} is not (r,)*a")
    return a, r


def latin_violation(op) -> dict | None:
    op = np.asarray(op)
    a, r = _shape(op)
    target = np.arange(r)
    for axis in range(a):
        srt = np.moveaxis(np.sort(op, axis=axis), axis, -1)
        bad = np.argwhere(np.any(srt != target, axis=-1))
        if bad.size:
            return {"position": axis, "others": [int(v) for v in bad[0]]}
    return None


def neutral_elements(op) -> tuple[int, ...]:
    """Spins alpha with op(alpha..alpha t alpha..alpha) = t at every position."""
    op = np.asarray(op)
    a, r = _shape(op)
    t = np.arange(r)
    out = []
    for alpha in range(r):
        if all(
            np.array_equal(op[(alpha,) * i + (t,) + (alpha,) * (a - i - 1)], t)
            for i in range(a)
        ):
            out.append(alpha)
    return tuple(out)


def _nested(op: np.ndarray, i: int) -> np.ndarray:
    """op with op applied to arguments i..i+a-1, over all 2a-1 arguments."""
    a, r = _shape(op)
    n = 2 * a - 1
    grid = np.ogrid[tuple(slice(0, r) for _ in range(n))]
    inner = op[tuple(grid[i:i + a])]
    args = tuple(grid[:i]) + (inner,) + tuple(grid[i + a:])
    return op[args]


def associativity_violation(op) -> dict | None:
    op = np.asarray(op)
    a, r = _shape(op)
    if a == 1:
        return None
    base = _nested(op, 0)
    for i in range(1, a):
        bad = np.argwhere(_nested(op, i) != base)
        if bad.size:
            return {"positions": [0, i], "args": [int(v) for v in bad[0]]}
    return None


def total_symmetry_violation(op) -> dict | None:
    """The graph {(x_1..x_a, op(x))} must be closed under permuting all a+1 slots."""
    op = np.asarray(op)
    a, r = _shape(op)
    graph = op[..., None] == np.arange(r)
    for t in range(a):
        bad = np.argwhere(graph & ~np.swapaxes(graph, t, t + 1))
        if bad.size:
            return {"tuple": [int(v) for v in bad[0]], "transposition": [t, t + 1]}
    return None


def _first_occurrence(rows: np.ndarray, r: int) -> np.ndarray:
    C, M = rows.shape
    first = np.full((C, r), M, dtype=np.int64)
    ci = np.repeat(np.arange(C), M)
    mi = np.tile(np.arange(M), C)
    np.minimum.at(first, (ci, rows.reshape(-1)), mi)
    return np.take_along_axis(first, rows, axis=1)


def exchangeability_violation(op) -> dict | None:
    """For every window i..j, whether op(s1 eta s2) = op(s1 eta' s2) must not
    depend on the context (s1, s2)."""
    op = np.asarray(op)
    a, r = _shape(op)
    for i in range(a):
        for j in range(i, a):
            w = j - i + 1
            moved = np.moveaxis(op, list(range(i, j + 1)), list(range(a - w, a)))
            rows = moved.reshape(-1, r**w)
            labels = _first_occurrence(rows, r)
            bad = np.argwhere(labels != labels[0])
            if bad.size == 0:
                continue
            c, m = (int(v) for v in bad[0])
            # one of the two first-occurrence partners separates the contexts
            pc, p0 = int(labels[c, m]), int(labels[0, m])
            if rows[0, m] != rows[0, pc]:
                ctx_eq, ctx_ne, e2 = c, 0, pc
            else:
                ctx_eq, ctx_ne, e2 = 0, c, p0
            ctx_shape = (r,) * (a - w)
            return {
                "window": [i, j],
                "context_equal": [int(v) for v in np.unravel_index(ctx_eq, ctx_shape)] if a > w else [],
                "context_unequal": [int(v) for v in np.unravel_index(ctx_ne, ctx_shape)] if a > w else [],
                "eta": [int(v) for v in np.unravel_index(m, (r,) * w)],
                "eta_prime": [int(v) for v in np.unravel_index(e2, (r,) * w)],
            }
    return None


def quasigroup_checks(op) -> QuasigroupReport:
    op = np.asarray(op)
    a, _ = _shape(op)
    checks = {
        "quasigroup": latin_violation(op),
        "associative": associativity_violation(op),
        "totally_symmetric": total_symmetry_violation(op),
        "exchangeable": exchangeability_violation(op),
    }
    return QuasigroupReport(
        arity=a,
        is_quasigroup=checks["quasigroup"] is None,
        neutral_elements=neutral_elements(op),
        is_associative=checks["associative"] is None,
        is_totally_symmetric=checks["totally_symmetric"] is None,
        is_exchangeable=checks["exchangeable"] is None,
        witnesses={k: v for k, v in checks.items() if v is not None},
    )

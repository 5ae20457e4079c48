import numpy as np
import pytest
from hypothesis import strategies as st

from uecsp.abelian import AbelianGroup, group_constraint
from uecsp.constraints import ConstraintFunction
from uecsp.products import nongroup_family

# every abelian group of order <= 8, as (label, cyclic factor orders)
SMALL_GROUPS = [
    ("Z2", (2,)), ("Z3", (3,)), ("Z4", (4,)), ("Z2^2", (2, 2)), ("Z5", (5,)),
    ("Z6", (6,)), ("Z7", (7,)), ("Z8", (8,)), ("Z4xZ2", (4, 2)), ("Z2^3", (2, 2, 2)),
]

NONGROUP_CASES = [(3, 3, 2), (4, 3, 3), (3, 4, 3), (5, 3, 2)]

# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def xor3(extra=()) -> ConstraintFunction:
    return ConstraintFunction(3, 2, (0, 3, 5, 6) + tuple(extra), "xor3")


def relabel_set(psis, perm):
    return [p.relabeled(perm) for p in psis]


def group_family(orders, k):
    G = AbelianGroup(orders)
    return G, [group_constraint(G, b, k) for b in range(G.order)]


@st.composite
def group_constraint_sets(draw, max_order=6, ks=(3, 4)):
    """A relabeled nonempty set of sum constraints over a small abelian group."""
    choices = [g for g in SMALL_GROUPS if np.prod(g[1]) <= max_order]
    label, orders = draw(st.sampled_from(choices))
    k = draw(st.sampled_from(ks))
    G, fam = group_family(orders, k)
    bs = draw(st.lists(st.integers(0, G.order - 1), min_size=1, max_size=3, unique=True))
    perm = draw(st.permutations(range(G.order)))
    return G, k, relabel_set([fam[b] for b in bs], perm)


@pytest.fixture(scope="session")
def nongroup_members():
    return {case: nongroup_family(*case) for case in NONGROUP_CASES}

"""Shared fixtures, independent brute-force oracles, and strategies.

The oracles here deliberately avoid the production code paths: partition
functions are summed over all subsets with a pairwise compatibility scan,
and series coefficients are summed over all edge subsets with an explicit
connectivity check.  Production results are tested against these.
"""

import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import strategies as st

import polygas as pg


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------


def xi_bruteforce(universe, region, zmap):
    """Sum over all pairwise-compatible subsets, no pruning, no recursion."""
    ids = list(universe.polymers) if region is None else list(region)
    total = 0
    for r in range(len(ids) + 1):
        for combo in combinations(ids, r):
            if any(universe.incompatible(a, b) for a, b in combinations(combo, 2)):
                continue
            term = 1
            for g in combo:
                term = term * zmap.get(g, 0)
            total = total + term
    return total


def ursell_bruteforce(universe, gammas):
    """Signed sum over all connected spanning edge subsets, enumerated raw."""
    gs = list(gammas)
    n = len(gs)
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if universe.incompatible(gs[i], gs[j])
    ]
    total = 0
    for k in range(len(edges) + 1):
        for chosen in combinations(edges, k):
            parent = list(range(n))

            def find(v):
                while parent[v] != v:
                    parent[v] = parent[parent[v]]
                    v = parent[v]
                return v

            for i, j in chosen:
                parent[find(i)] = find(j)
            if len({find(v) for v in range(n)}) == 1:
                total += (-1) ** k
    return total


# ---------------------------------------------------------------------------
# seeded random instances
# ---------------------------------------------------------------------------


def random_fraction(rng, lo=-4, hi=4, max_den=5, nonzero=False):
    while True:
        f = Fraction(rng.randint(lo, hi), rng.randint(1, max_den))
        if not nonzero or f != 0:
            return f


def random_universe(rng, min_polymers=1, max_polymers=8, p_edge=0.4):
    n = rng.randint(min_polymers, max_polymers)
    ids = [f"g{i}" for i in range(n)]
    pairs = [
        (ids[i], ids[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p_edge
    ]
    return pg.build_universe(ids, pairs)


def random_subset_universe(rng, min_sites=2, max_sites=6, max_polymers=8, max_support=3):
    n = rng.randint(min_sites, max_sites)
    sites = [f"s{i}" for i in range(n)]
    count = rng.randint(1, max_polymers)
    seen = set()
    decls = []
    for k in range(count):
        size = rng.randint(1, min(max_support, n))
        sup = tuple(sorted(rng.sample(sites, size)))
        if sup in seen:
            continue
        seen.add(sup)
        decls.append(sup)
    if not decls:
        decls = [(sites[0],)]
    return pg.build_subset_universe(sites, supports=decls)


# ---------------------------------------------------------------------------
# hypothesis strategies
# ---------------------------------------------------------------------------


@st.composite
def universes(draw, max_polymers=6):
    n = draw(st.integers(min_value=1, max_value=max_polymers))
    ids = [f"g{i}" for i in range(n)]
    all_pairs = [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(all_pairs), unique=True)) if all_pairs else []
    return pg.build_universe(ids, chosen)


def rationals(lo=-2, hi=2, max_den=6):
    return st.fractions(
        min_value=Fraction(lo), max_value=Fraction(hi), max_denominator=max_den
    )


def nonneg_rationals(hi=2, max_den=6):
    return rationals(0, hi, max_den)


# ---------------------------------------------------------------------------
# shared universes
# ---------------------------------------------------------------------------


@pytest.fixture
def single():
    return pg.build_universe(["g"])


@pytest.fixture
def pair_incompatible():
    return pg.build_universe(["a", "b"], [("a", "b")])


@pytest.fixture
def pair_compatible():
    return pg.build_universe(["a", "b"])


@pytest.fixture
def path3():
    return pg.build_universe(["a", "b", "c"], [("a", "b"), ("b", "c")])


@pytest.fixture
def triangle():
    return pg.build_universe(["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "c")])


@pytest.fixture
def su_two_sites():
    # ground set {1,2} with polymers {1}, {2}, {1,2}
    return pg.build_subset_universe(["1", "2"], max_size=2)


@pytest.fixture
def su_one_site():
    return pg.build_subset_universe(["x"], max_size=1)


@pytest.fixture
def interval_model():
    # intervals of length <= 2 on 1..6
    spec = pg.generate_model("subsets-on-interval", n=6, k=2)
    return pg.build(spec).universe

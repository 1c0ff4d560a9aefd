"""Exact finite-volume computations for abstract polymer gases.

A gas is a finite family of polymer identities with a symmetric, reflexive
incompatibility relation (written g !~ g') and an activity z_g per polymer.
Everything reduces to the grand-canonical partition function

    Xi_L(z) = sum over pairwise-compatible subsets {g1..gn} of L
              of z_g1 * ... * z_gn          (the empty subset contributes 1),

the multivariate independence polynomial of the incompatibility graph.
Enumeration is pruned through the relation: processing polymers in the
universe's fixed order, the branch that takes polymer g drops the whole
neighborhood Gamma(g) from the remaining pool.  The same fixed order makes
float-mode summation deterministic; with rational activities every value
and every identity residual below is exact.

Derived quantities:

    pressure        log(Xi_L) / |L|
    phi_bar(X)      Xi_{L\\X} / Xi_L                    (reduced correlation)
    Theta_g         log Xi_L - log Xi_{L\\{g}}           (pinned log series)
    Pi_g            Xi_{L\\Gamma(g)} / Xi_L = d log Xi_L / d z_g
    phi_T           signed sum over connected spanning subgraphs of the
                    tuple's incompatibility graph (series coefficients)

The "abs" modes evaluate at z = -rho, which for nonnegative radius families
rho turns the pinned series into their positive-term majorants:
|Theta|(rho) = -Theta(-rho) and |Pi|(rho) = Pi(-rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, combinations_with_replacement
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from .errors import (
    DivergenceIndicator,
    NormalizationFailure,
    ResourceLimit,
    UniverseError,
)
from .values import Num, div

PolymerId = Hashable

DEFAULT_URSELL_MAX = 7
DEFAULT_MAYER_MAX = 8
_MAYER_TERM_CAP = 2_000_000


# ---------------------------------------------------------------------------
# universe and activities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolymerUniverse:
    """Finite polymer family with its incompatibility relation.

    ``polymers`` fixes the enumeration order used for pivots, tie-breaks
    and deterministic summation.  ``inc_masks[i]`` is the bitmask of the
    neighborhood Gamma(polymers[i]); reflexivity means bit i is always set.
    """

    polymers: tuple
    inc_masks: tuple
    _index: dict = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.polymers)

    def __contains__(self, gamma) -> bool:
        return gamma in self._index

    def index(self, gamma) -> int:
        try:
            return self._index[gamma]
        except KeyError:
            raise UniverseError(f"unknown polymer id: {gamma!r}") from None

    @property
    def full_mask(self) -> int:
        return (1 << len(self.polymers)) - 1

    def mask_of(self, region: Optional[Iterable]) -> int:
        """Bitmask for a region given as an iterable of ids (None = all)."""
        if region is None:
            return self.full_mask
        mask = 0
        for gamma in region:
            mask |= 1 << self.index(gamma)
        return mask

    def ids_of(self, mask: int) -> tuple:
        return tuple(g for i, g in enumerate(self.polymers) if mask >> i & 1)

    def incompatible(self, a, b) -> bool:
        return bool(self.inc_masks[self.index(a)] >> self.index(b) & 1)

    def neighborhood_mask(self, gamma, region_mask: Optional[int] = None) -> int:
        m = self.inc_masks[self.index(gamma)]
        return m if region_mask is None else m & region_mask


def build_universe(ids: Sequence, incompatible_pairs: Iterable = ()) -> PolymerUniverse:
    """Build a universe from ids (enumeration order) and unordered pairs.

    The stored relation is the reflexive and symmetric closure of the given
    pairs: every polymer is incompatible with itself.
    """
    ids = tuple(ids)
    index = {}
    for i, g in enumerate(ids):
        if g in index:
            raise UniverseError(f"duplicate polymer id: {g!r}")
        index[g] = i
    masks = [1 << i for i in range(len(ids))]
    for a, b in incompatible_pairs:
        if a not in index:
            raise UniverseError(f"unknown polymer id in pair: {a!r}")
        if b not in index:
            raise UniverseError(f"unknown polymer id in pair: {b!r}")
        i, j = index[a], index[b]
        masks[i] |= 1 << j
        masks[j] |= 1 << i
    return PolymerUniverse(ids, tuple(masks), index)


def neighborhood(universe: PolymerUniverse, X: Iterable, punctured: bool = False) -> frozenset:
    """Gamma(X) = all polymers incompatible with some member of X.

    With ``punctured`` the members of X themselves are removed, giving
    Gamma*(g) = Gamma({g}) \\ {g} for singletons.
    """
    xmask = universe.mask_of(X)
    mask = 0
    for i in range(len(universe)):
        if xmask >> i & 1:
            mask |= universe.inc_masks[i]
    if punctured:
        mask &= ~xmask
    return frozenset(universe.ids_of(mask))


@dataclass(frozen=True)
class ActivityMap:
    """Per-polymer signed activities z_g plus a nonnegative radius family rho_g.

    Values are stored aligned with the universe's enumeration order so the
    map is hashable and partition-function caches can key on it.
    """

    universe: PolymerUniverse
    values: tuple
    radii: tuple

    @classmethod
    def build(cls, universe: PolymerUniverse, values=0, radii=0) -> "ActivityMap":
        return cls(universe, _aligned(universe, values), _aligned(universe, radii, nonneg=True))

    def value_of(self, gamma) -> Num:
        return self.values[self.universe.index(gamma)]

    def radius_of(self, gamma) -> Num:
        return self.radii[self.universe.index(gamma)]

    def at_minus_radii(self) -> "ActivityMap":
        """The evaluation point z = -rho of the positive-term majorants."""
        return ActivityMap(self.universe, tuple(-r for r in self.radii), self.radii)

    def inside_polydisc(self) -> bool:
        return all(abs(z) <= r for z, r in zip(self.values, self.radii))

    def with_values(self, values) -> "ActivityMap":
        return ActivityMap(self.universe, _aligned(self.universe, values), self.radii)


def _aligned(universe: PolymerUniverse, spec, nonneg: bool = False) -> tuple:
    if isinstance(spec, Mapping):
        for g in spec:
            universe.index(g)
        vec = [spec.get(g, 0) for g in universe.polymers]
    else:
        vec = [spec] * len(universe)
    if nonneg and any(v < 0 for v in vec):
        raise UniverseError("radius family must be nonnegative")
    return tuple(vec)


def _zvec(universe: PolymerUniverse, z) -> tuple:
    if isinstance(z, ActivityMap):
        if z.universe is not universe and z.universe != universe:
            raise UniverseError("activity map belongs to a different universe")
        return z.values
    if isinstance(z, Mapping):
        for g in z:
            universe.index(g)
        return tuple(z.get(g, 0) for g in universe.polymers)
    return tuple([z] * len(universe))


# ---------------------------------------------------------------------------
# partition function
# ---------------------------------------------------------------------------


class _XiCache:
    """Memoized Xi(mask) for one (universe, activity vector) pair."""

    __slots__ = ("inc", "z", "memo")

    def __init__(self, universe: PolymerUniverse, zvals: tuple):
        self.inc = universe.inc_masks
        self.z = zvals
        self.memo = {0: 1}

    def xi(self, mask: int) -> Num:
        memo = self.memo
        hit = memo.get(mask)
        if hit is not None:
            return hit
        stack = [mask]
        while stack:
            m = stack[-1]
            if m in memo:
                stack.pop()
                continue
            low = m & -m
            i = low.bit_length() - 1
            skip = m ^ low
            take = m & ~self.inc[i]
            a = memo.get(skip)
            if a is None:
                stack.append(skip)
                continue
            b = memo.get(take)
            if b is None:
                stack.append(take)
                continue
            memo[m] = a + self.z[i] * b
            stack.pop()
        return memo[mask]


@lru_cache(maxsize=256)
def _xi_cache(universe: PolymerUniverse, zvals: tuple) -> _XiCache:
    return _XiCache(universe, zvals)


def _xi(universe: PolymerUniverse, mask: int, zvals: tuple) -> Num:
    value = _xi_cache(universe, zvals).xi(mask)
    if isinstance(value, float) and not math.isfinite(value):
        raise OverflowError("partition function overflowed the float range")
    return value


def partition_function(universe: PolymerUniverse, region: Optional[Iterable], z) -> Num:
    """Xi_L(z), the sum over pairwise-compatible subsets of the region."""
    return _xi(universe, universe.mask_of(region), _zvec(universe, z))


def config_probability(universe: PolymerUniverse, region: Optional[Iterable], z, config: Iterable) -> Num:
    """Weight of one configuration under the normalized gas measure.

    Incompatible configurations get probability zero; the empty
    configuration gets 1 / Xi_L(z).
    """
    zvals = _zvec(universe, z)
    region_mask = universe.mask_of(region)
    cfg = tuple(dict.fromkeys(config))
    cfg_mask = universe.mask_of(cfg)
    if cfg_mask & ~region_mask:
        raise UniverseError("configuration is not contained in the region")
    denom = _xi(universe, region_mask, zvals)
    if denom == 0:
        raise NormalizationFailure("Xi_L(z) = 0, measure undefined")
    weight = 1
    for a, b in combinations(cfg, 2):
        if universe.incompatible(a, b):
            return 0 * div(weight, denom)
    for g in cfg:
        weight = weight * zvals[universe.index(g)]
    return div(weight, denom)


def pressure(universe: PolymerUniverse, region: Iterable, z) -> float:
    """log Xi_L(z) / |L| (natural log)."""
    region_mask = universe.mask_of(region)
    size = region_mask.bit_count()
    if size == 0:
        raise UniverseError("pressure needs a nonempty region")
    xi = _xi(universe, region_mask, _zvec(universe, z))
    if xi <= 0:
        raise DivergenceIndicator("Xi_L(z) <= 0, log pressure undefined")
    return math.log(float(xi)) / size


def reduced_correlation(universe: PolymerUniverse, region: Optional[Iterable], X: Iterable, z) -> Num:
    """phi_bar(X) = Xi_{L\\X} / Xi_L."""
    zvals = _zvec(universe, z)
    region_mask = universe.mask_of(region)
    xmask = universe.mask_of(X)
    if xmask & ~region_mask:
        raise UniverseError("X is not contained in the region")
    denom = _xi(universe, region_mask, zvals)
    if denom == 0:
        raise NormalizationFailure("Xi_L(z) = 0")
    return div(_xi(universe, region_mask & ~xmask, zvals), denom)


def correlation(universe: PolymerUniverse, region: Optional[Iterable], gammas: Sequence, z) -> Num:
    """Joint correlation of a configuration: activity product times the
    reduced correlation of its neighborhood, zero on incompatible tuples."""
    zvals = _zvec(universe, z)
    region_mask = universe.mask_of(region)
    gs = tuple(dict.fromkeys(gammas))
    gmask = universe.mask_of(gs)
    if gmask & ~region_mask:
        raise UniverseError("polymers are not contained in the region")
    denom = _xi(universe, region_mask, zvals)
    if denom == 0:
        raise NormalizationFailure("Xi_L(z) = 0")
    if len(gs) < len(tuple(gammas)):
        return 0 * div(1, denom)
    for a, b in combinations(gs, 2):
        if universe.incompatible(a, b):
            return 0 * div(1, denom)
    nbhd_mask = 0
    weight = 1
    for g in gs:
        weight = weight * zvals[universe.index(g)]
        nbhd_mask |= universe.inc_masks[universe.index(g)]
    return weight * div(_xi(universe, region_mask & ~nbhd_mask, zvals), denom)


# ---------------------------------------------------------------------------
# pinned series Theta and Pi
# ---------------------------------------------------------------------------


def _pick_eval_point(activities: ActivityMap, mode: str) -> tuple:
    if mode == "signed":
        return activities.values
    if mode == "abs":
        return activities.at_minus_radii().values
    raise ValueError(f"mode must be 'signed' or 'abs', got {mode!r}")


def theta(universe: PolymerUniverse, region: Iterable, gamma, activities: ActivityMap, mode: str = "signed") -> float:
    """Theta_g = log Xi_L - log Xi_{L\\{g}}; in abs mode, -Theta at z = -rho.

    Both modes are computed from the two exact partition functions, never by
    summing the series.  Nonpositive Xi at the evaluation point raises
    DivergenceIndicator (the radius family is outside the safe region).
    """
    zvals = _pick_eval_point(activities, mode)
    region_mask = universe.mask_of(region)
    gbit = 1 << universe.index(gamma)
    if not region_mask & gbit:
        raise UniverseError(f"polymer {gamma!r} is not in the region")
    xi_full = _xi(universe, region_mask, zvals)
    xi_del = _xi(universe, region_mask & ~gbit, zvals)
    if xi_full <= 0 or xi_del <= 0:
        raise DivergenceIndicator("Xi <= 0 at the evaluation point")
    value = math.log(float(xi_full)) - math.log(float(xi_del))
    return -value if mode == "abs" else value


def theta_telescope(
    universe: PolymerUniverse,
    region: Iterable,
    activities: ActivityMap,
    order: Optional[Sequence] = None,
    mode: str = "signed",
) -> list:
    """The Theta terms along a deletion order with shrinking regions.

    With order [g1..gm] listing the region, the i-th term is Theta of g_i in
    the region {g1..gi}; the signed terms sum to log Xi_L exactly.
    """
    region_ids = universe.ids_of(universe.mask_of(region))
    order = list(order) if order is not None else list(region_ids)
    if sorted(map(universe.index, order)) != sorted(map(universe.index, region_ids)):
        raise UniverseError("deletion order must enumerate the region exactly once")
    terms = []
    current = list(order)
    for i in range(len(order) - 1, -1, -1):
        terms.append(theta(universe, current, order[i], activities, mode))
        current.pop()
    terms.reverse()
    return terms


def telescope_residual(
    universe: PolymerUniverse,
    region: Iterable,
    activities: ActivityMap,
    order: Optional[Sequence] = None,
    mode: str = "signed",
) -> Num:
    """Residual of the telescoped reconstruction of Xi_L.

    Multiplicative form: the product of the ratios Xi_{L_i} / Xi_{L_{i-1}}
    along the deletion order minus Xi_L itself.  Exactly zero for rational
    activities, for every order.
    """
    zvals = _pick_eval_point(activities, mode)
    region_ids = universe.ids_of(universe.mask_of(region))
    order = list(order) if order is not None else list(region_ids)
    if sorted(map(universe.index, order)) != sorted(map(universe.index, region_ids)):
        raise UniverseError("deletion order must enumerate the region exactly once")
    product: Num = 1
    current = list(order)
    for i in range(len(order) - 1, -1, -1):
        num = _xi(universe, universe.mask_of(current), zvals)
        current.pop()
        den = _xi(universe, universe.mask_of(current), zvals)
        if den == 0:
            raise NormalizationFailure("intermediate Xi = 0 along the telescope")
        product = product * div(num, den)
    return product - _xi(universe, universe.mask_of(region_ids), zvals)


def pi(universe: PolymerUniverse, region: Optional[Iterable], gamma, activities: ActivityMap, mode: str = "signed") -> Num:
    """Pi_g = Xi_{L\\Gamma(g)} / Xi_L, the z_g-derivative of log Xi_L.

    For g outside the region, Gamma(g) is intersected with it, which matches
    extending the region by g at zero activity.  Abs mode evaluates at -rho.
    """
    zvals = _pick_eval_point(activities, mode)
    region_mask = universe.mask_of(region)
    nbhd = universe.neighborhood_mask(gamma, region_mask)
    denom = _xi(universe, region_mask, zvals)
    numer = _xi(universe, region_mask & ~nbhd, zvals)
    if mode == "abs":
        if denom <= 0 or numer <= 0:
            raise DivergenceIndicator("Xi(-rho) <= 0")
    elif denom == 0:
        raise NormalizationFailure("Xi_L(z) = 0")
    return div(numer, denom)


# ---------------------------------------------------------------------------
# series coefficients and partial sums
# ---------------------------------------------------------------------------


@lru_cache(maxsize=65536)
def _connected_signed_sum(n: int, edges: frozenset) -> int:
    """Signed sum over connected spanning subgraphs of the graph
    ({0..n-1}, edges): each subgraph contributes (-1)^(number of edges).

    Computed by peeling off the component of the lowest vertex: writing
    a(W) = 1 if W spans no edge else 0 (the unconstrained signed sum over
    subgraphs of W), the values c(W) of this function satisfy
    a(W) = sum over S containing the pivot of c(S) * a(W \\ S).
    """
    adj = [0] * n
    for i, j in edges:
        adj[i] |= 1 << j
        adj[j] |= 1 << i

    full = (1 << n) - 1
    # connectivity shortcut: disconnected graphs contribute zero
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        for i in range(n):
            if frontier >> i & 1:
                nxt |= adj[i]
        frontier = nxt & ~seen
        seen |= nxt
    if seen != full:
        return 0

    def independent(mask: int) -> int:
        m = mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if adj[i] & mask:
                return 0
            m ^= low
        return 1

    memo = {}

    def c(mask: int) -> int:
        hit = memo.get(mask)
        if hit is not None:
            return hit
        if mask & (mask - 1) == 0:
            memo[mask] = 1
            return 1
        pivot = mask & -mask
        rest = mask ^ pivot
        total = independent(mask)
        # proper submasks of `mask` that contain the pivot vertex
        sub = rest
        while True:
            sub = (sub - 1) & rest
            s = sub | pivot
            if s != mask:
                other = mask ^ s
                if independent(other):
                    total -= c(s)
            if sub == 0:
                break
        memo[mask] = total
        return total

    return c(full)


def ursell_coefficient(universe: PolymerUniverse, gammas: Sequence, n_max: int = DEFAULT_URSELL_MAX) -> int:
    """Truncated series coefficient of an ordered polymer tuple.

    Depends only on the tuple's incompatibility graph: zero when that graph
    is disconnected, one for a single polymer, and in general the signed sum
    over its connected spanning subgraphs.  Repetitions are allowed (equal
    polymers are incompatible by reflexivity).
    """
    gs = tuple(gammas)
    n = len(gs)
    if n < 1:
        raise UniverseError("tuple must contain at least one polymer")
    if n > n_max:
        raise ResourceLimit(f"tuple length {n} exceeds the cap {n_max}")
    idx = [universe.index(g) for g in gs]
    edges = frozenset(
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if universe.inc_masks[idx[i]] >> idx[j] & 1
    )
    return _connected_signed_sum(n, edges)


def mayer_partial_sum(
    universe: PolymerUniverse,
    region: Optional[Iterable],
    z,
    order: int,
    pinned=None,
    pinned_mode: str = "contains",
    n_max: int = DEFAULT_MAYER_MAX,
) -> Num:
    """Partial sum of the activity expansion of log Xi_L up to the given order.

    Without pinning this is the plain series.  ``pinned_mode='contains'``
    keeps only tuples containing the pinned polymer (the Theta series);
    ``pinned_mode='prefix'`` prepends the pinned polymer to every tuple and
    starts at order zero (the Pi series; the pinned activity is excluded
    from the product).
    """
    if order > n_max:
        raise ResourceLimit(f"order {order} exceeds the cap {n_max}")
    if order < 0:
        raise UniverseError("order must be nonnegative")
    zvals = _zvec(universe, z)
    region_ids = universe.ids_of(universe.mask_of(region))
    prefix = ()
    if pinned is not None and pinned_mode == "prefix":
        prefix = (pinned,)
    elif pinned is not None and pinned_mode != "contains":
        raise ValueError(f"pinned_mode must be 'contains' or 'prefix', got {pinned_mode!r}")

    total: Num = 0
    lo = 0 if prefix else 1
    budget = 0
    for n in range(lo, order + 1):
        budget += math.comb(len(region_ids) + n - 1, n) if region_ids else (n == 0)
        if budget > _MAYER_TERM_CAP:
            raise ResourceLimit("partial-sum enumeration exceeds the term cap")
        for combo in combinations_with_replacement(region_ids, n):
            if pinned is not None and not prefix and pinned not in combo:
                continue
            coeff = ursell_coefficient(universe, prefix + combo, n_max=order + len(prefix))
            if coeff == 0:
                continue
            weight: Num = coeff
            mult = 1
            run = 1
            for k in range(n):
                weight = weight * zvals[universe.index(combo[k])]
                if k > 0 and combo[k] == combo[k - 1]:
                    run += 1
                    mult *= run
                else:
                    run = 1
            total = total + div(weight, mult)
    return total


# ---------------------------------------------------------------------------
# the polymer-addition identity
# ---------------------------------------------------------------------------


def fundamental_identity_residual(universe: PolymerUniverse, Z: Iterable, gamma0, z) -> Num:
    """Residual of Xi_{Z + g0} = Xi_Z + z_g0 * Xi_{Z \\ Gamma*(g0)}.

    Exactly zero for rational activities; float mode carries only the
    rounding of the fixed summation order.
    """
    zvals = _zvec(universe, z)
    zmask = universe.mask_of(Z)
    i = universe.index(gamma0)
    gbit = 1 << i
    if zmask & gbit:
        raise UniverseError(f"polymer {gamma0!r} must lie outside Z")
    star = universe.inc_masks[i] & ~gbit
    lhs = _xi(universe, zmask | gbit, zvals)
    rhs = _xi(universe, zmask, zvals) + zvals[i] * _xi(universe, zmask & ~star, zvals)
    return lhs - rhs

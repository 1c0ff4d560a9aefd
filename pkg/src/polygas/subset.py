"""Subset polymer gases: polymers realized as nonempty site sets.

The ground set V of sites carries the geometry.  Incompatibility is support
intersection, which is automatically reflexive, so the derived abstract
universe can reuse everything in :mod:`polygas.gas`.  Regions are subsets
of V; removing a site from a region removes every polymer whose support
contains it, which is exactly how the pinned site quantities are defined:

    Theta_x = log Xi_L - log Xi_{L\\{x}}        (site deletion)
    site-addition:  Xi_{Y+x} = Xi_Y + sum_{S subset Y} z_{{x}+S} Xi_{Y\\S}

Activities of supports that are not listed as polymers are zero.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from . import gas
from .errors import (
    DivergenceIndicator,
    NormalizationFailure,
    ResourceLimit,
    UniverseError,
)
from .gas import ActivityMap, PolymerUniverse
from .values import Num, div
from .weights import SiteWeights

SiteId = Hashable

GENERATOR_POLYMER_CAP = 1 << 20


@dataclass(frozen=True)
class SubsetUniverse:
    """Ground set plus listed polymers (id, support) and the derived universe.

    Polymer enumeration order is by support size, then lexicographically in
    the ground-set order; that order fixes pivots and tie-breaks downstream.
    """

    sites: tuple
    polymer_ids: tuple
    supports: tuple
    universe: PolymerUniverse = field(compare=False, repr=False)
    _site_index: dict = field(compare=False, repr=False)
    _support_by_id: dict = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.polymer_ids)

    def site_index(self, x) -> int:
        try:
            return self._site_index[x]
        except KeyError:
            raise UniverseError(f"unknown site: {x!r}") from None

    def support_of(self, pid) -> frozenset:
        try:
            return self._support_by_id[pid]
        except KeyError:
            raise UniverseError(f"unknown polymer id: {pid!r}") from None

    def region(self, sites: Optional[Iterable]) -> frozenset:
        if sites is None:
            return frozenset(self.sites)
        region = frozenset(sites)
        for x in region:
            self.site_index(x)
        return region

    def polymers_in_region(self, sites: Optional[Iterable]) -> tuple:
        region = self.region(sites)
        return tuple(
            pid for pid, sup in zip(self.polymer_ids, self.supports) if sup <= region
        )

    def polymers_at_site(self, x) -> tuple:
        self.site_index(x)
        return tuple(
            pid for pid, sup in zip(self.polymer_ids, self.supports) if x in sup
        )


def build_subset_universe(
    sites: Sequence,
    supports: Optional[Iterable] = None,
    max_size: Optional[int] = None,
) -> SubsetUniverse:
    """Build a subset universe from explicit supports or a size-k generator.

    ``supports`` entries are either bare site sets (the id becomes the
    sorted tuple of sites) or (id, support) pairs; explicit ids permit
    several polymers sharing one support.  ``max_size=k`` lists every
    nonempty subset of the ground set with at most k sites instead.
    """
    sites = tuple(sites)
    site_index = {}
    for i, x in enumerate(sites):
        if x in site_index:
            raise UniverseError(f"duplicate site: {x!r}")
        site_index[x] = i

    if (supports is None) == (max_size is None):
        raise UniverseError("give exactly one of supports or max_size")

    decls = []
    if max_size is not None:
        if max_size < 1:
            raise UniverseError("generator needs max_size >= 1")
        count = sum(math.comb(len(sites), k) for k in range(1, min(max_size, len(sites)) + 1))
        if count > GENERATOR_POLYMER_CAP:
            raise ResourceLimit(f"generator would list {count} polymers")
        for k in range(1, min(max_size, len(sites)) + 1):
            for combo in combinations(sites, k):
                decls.append((combo, frozenset(combo)))
    else:
        seen_bare = set()
        for entry in supports:
            if (
                isinstance(entry, tuple)
                and len(entry) == 2
                and not isinstance(entry[0], (set, frozenset))
                and isinstance(entry[1], (set, frozenset, list, tuple))
            ):
                pid, sup = entry
                sup = frozenset(sup)
            else:
                sup = frozenset(entry)
                pid = tuple(sorted(sup, key=lambda x: site_index.get(x, -1)))
                if pid in seen_bare:
                    raise UniverseError(
                        f"duplicate support {pid!r}; give explicit distinct ids to allow it"
                    )
                seen_bare.add(pid)
            if not sup:
                raise UniverseError("polymer support must be nonempty")
            for x in sup:
                if x not in site_index:
                    raise UniverseError(f"support of {pid!r} uses unknown site {x!r}")
            decls.append((pid, sup))

    def order_key(decl):
        pid, sup = decl
        return (len(sup), tuple(sorted(site_index[x] for x in sup)))

    decls.sort(key=order_key)
    ids = tuple(pid for pid, _ in decls)
    sups = tuple(sup for _, sup in decls)
    pairs = [
        (ids[i], ids[j])
        for i in range(len(ids))
        for j in range(i + 1, len(ids))
        if sups[i] & sups[j]
    ]
    universe = gas.build_universe(ids, pairs)
    return SubsetUniverse(sites, ids, sups, universe, site_index, dict(zip(ids, sups)))


def subset_activities(su: SubsetUniverse, values=0, radii=0) -> ActivityMap:
    """Activity map keyed by polymer id on the derived universe."""
    return ActivityMap.build(su.universe, values, radii)


def region_partition_function(su: SubsetUniverse, region: Optional[Iterable], z) -> Num:
    """Xi_L over the polymers whose support fits inside the region."""
    return gas.partition_function(su.universe, su.polymers_in_region(region), z)


def site_reduced_correlation(su: SubsetUniverse, region: Optional[Iterable], X: Iterable, z) -> Num:
    """Xi_{L\\X} / Xi_L for a region X of sites."""
    lam = su.region(region)
    X = su.region(X)
    if not X <= lam:
        raise UniverseError("X must be contained in the region")
    denom = region_partition_function(su, lam, z)
    if denom == 0:
        raise NormalizationFailure("Xi_L(z) = 0")
    return div(region_partition_function(su, lam - X, z), denom)


def site_theta(
    su: SubsetUniverse,
    region: Iterable,
    x,
    activities: ActivityMap,
    mode: str = "signed",
) -> float:
    """Theta_x = log Xi_L - log Xi_{L\\{x}}; abs mode evaluates at -rho."""
    lam = su.region(region)
    if x not in lam:
        raise UniverseError(f"site {x!r} is not in the region")
    z = activities if mode == "signed" else activities.at_minus_radii()
    if mode not in ("signed", "abs"):
        raise ValueError(f"mode must be 'signed' or 'abs', got {mode!r}")
    xi_full = region_partition_function(su, lam, z)
    xi_del = region_partition_function(su, lam - {x}, z)
    if xi_full <= 0 or xi_del <= 0:
        raise DivergenceIndicator("Xi <= 0 at the evaluation point")
    value = math.log(float(xi_full)) - math.log(float(xi_del))
    return -value if mode == "abs" else value


def site_addition_residual(su: SubsetUniverse, Y: Iterable, x, z) -> Num:
    """Residual of Xi_{Y+x} = Xi_Y + sum over listed g with x in g, g\\{x} in Y
    of z_g Xi_{Y \\ (g\\{x})}.  Exactly zero for rational activities."""
    Y = su.region(Y)
    su.site_index(x)
    if x in Y:
        raise UniverseError(f"site {x!r} must lie outside Y")
    lhs = region_partition_function(su, Y | {x}, z)
    rhs = region_partition_function(su, Y, z)
    zvals = gas._zvec(su.universe, z)
    for pid, sup in zip(su.polymer_ids, su.supports):
        if x in sup and sup - {x} <= Y:
            rhs = rhs + zvals[su.universe.index(pid)] * region_partition_function(
                su, Y - sup, z
            )
    return lhs - rhs


def site_deletion_residual(
    su: SubsetUniverse, region: Iterable, X: Iterable, z, pivot=None
) -> Num:
    """Residual of the site-deletion form: Xi_{L\\X} against the pivot
    expansion Xi_{L\\(X\\{x1})} - sum_S z_{{x1}+S} Xi_{L\\(X+S)}."""
    lam = su.region(region)
    X = su.region(X)
    if not X or not X <= lam:
        raise UniverseError("X must be a nonempty subset of the region")
    x1 = pivot if pivot is not None else min(X, key=su.site_index)
    if x1 not in X:
        raise UniverseError("pivot must belong to X")
    lhs = region_partition_function(su, lam - X, z)
    rhs = region_partition_function(su, lam - (X - {x1}), z)
    zvals = gas._zvec(su.universe, z)
    for pid, sup in zip(su.polymer_ids, su.supports):
        if sup & X == {x1} and sup <= lam:
            rhs = rhs - zvals[su.universe.index(pid)] * region_partition_function(
                su, lam - (X | sup), z
            )
    return lhs - rhs


def site_telescope_residual(
    su: SubsetUniverse,
    region: Iterable,
    z,
    order: Optional[Sequence] = None,
) -> Num:
    """Residual of the site-deletion telescope through shrinking regions.

    The product of Xi_{L_i} / Xi_{L_i \\ {x_i}} along any deletion order of
    the region's sites equals Xi_L exactly (rational activities give residual
    zero; the log form of the same telescope recovers log Xi_L).
    """
    lam = su.region(region)
    order = list(order) if order is not None else sorted(lam, key=su.site_index)
    if frozenset(order) != lam or len(order) != len(lam):
        raise UniverseError("deletion order must enumerate the region's sites once")
    product: Num = 1
    current = list(order)
    for i in range(len(order) - 1, -1, -1):
        num = region_partition_function(su, current, z)
        current.pop()
        den = region_partition_function(su, current, z)
        if den == 0:
            raise NormalizationFailure("intermediate Xi = 0 along the telescope")
        product = product * div(num, den)
    return product - region_partition_function(su, lam, z)


# ---------------------------------------------------------------------------
# inductive per-site bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioCheck:
    sites: tuple
    ratio: Num
    bound: Num
    ok: bool


@dataclass(frozen=True)
class InductiveBoundReport:
    """Per-site criterion margins and, when they all clear, the verified
    partition-ratio bounds they imply on the chosen region."""

    margins: Mapping
    holds: bool
    failing_sites: tuple
    site_checks: tuple
    region_checks: tuple
    divergent: bool = False

    @property
    def all_ok(self) -> bool:
        return (
            self.holds
            and not self.divergent
            and all(c.ok for c in self.site_checks)
            and all(c.ok for c in self.region_checks)
        )


def inductive_bound_report(
    su: SubsetUniverse,
    region: Iterable,
    rho,
    weights: SiteWeights,
    seed: int = 0,
    exhaustive_limit: int = 10,
    sample_size: int = 1000,
) -> InductiveBoundReport:
    """Check the per-site weight condition and the ratio bounds it implies.

    Margin at site x: (xi_x - 1) - sum over listed polymers g containing x
    of rho_g * xi^g.  If every margin is >= 0, verify for each x in the
    region that Xi_{L\\{x}}(-rho) / Xi_L(-rho) <= xi_x, and for a family of
    site sets S that the ratio for S is at most xi^S (exhaustive when the
    region is small, seeded random sampling otherwise).
    """
    lam = su.region(region)
    rho_map = _rho_by_polymer(su, rho)

    margins = {}
    for x in su.sites:
        acc: Num = 0
        for pid, sup in zip(su.polymer_ids, su.supports):
            if x in sup:
                acc = acc + rho_map[pid] * weights.xi_prod(sup)
        margins[x] = (weights.xi_of(x) - 1) - acc
    failing = tuple(x for x in su.sites if margins[x] < 0)
    if failing:
        return InductiveBoundReport(margins, False, failing, (), ())

    minus = {pid: -r for pid, r in rho_map.items()}
    xi_region = region_partition_function(su, lam, minus)
    if xi_region <= 0:
        raise DivergenceIndicator("Xi(-rho) <= 0 although every margin cleared")

    site_checks = []
    for x in sorted(lam, key=su.site_index):
        ratio = div(region_partition_function(su, lam - {x}, minus), xi_region)
        bound = weights.xi_of(x)
        site_checks.append(RatioCheck((x,), ratio, bound, ratio <= bound))

    lam_sorted = tuple(sorted(lam, key=su.site_index))
    if len(lam_sorted) <= exhaustive_limit:
        subsets = []
        for r in range(1, len(lam_sorted) + 1):
            subsets.extend(combinations(lam_sorted, r))
    else:
        rng = random.Random(seed)
        subsets = []
        for _ in range(sample_size):
            picked = tuple(x for x in lam_sorted if rng.random() < 0.5)
            if picked:
                subsets.append(picked)
    region_checks = []
    for S in subsets:
        ratio = div(region_partition_function(su, lam - set(S), minus), xi_region)
        bound = weights.xi_prod(S)
        region_checks.append(RatioCheck(tuple(S), ratio, bound, ratio <= bound))

    return InductiveBoundReport(
        margins, True, (), tuple(site_checks), tuple(region_checks)
    )


def _rho_by_polymer(su: SubsetUniverse, rho) -> dict:
    if isinstance(rho, ActivityMap):
        return {pid: rho.radius_of(pid) for pid in su.polymer_ids}
    if isinstance(rho, Mapping):
        for pid in rho:
            su.universe.index(pid)
        out = {pid: rho.get(pid, 0) for pid in su.polymer_ids}
    else:
        out = {pid: rho for pid in su.polymer_ids}
    for pid, r in out.items():
        if r < 0:
            raise UniverseError(f"rho[{pid!r}] must be nonnegative")
    return out

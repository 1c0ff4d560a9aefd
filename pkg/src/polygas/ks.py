"""Correlation-equation operators and the positive iteration they generate.

The reduced correlations phi_bar(X) = Xi_{L\\X} / Xi_L satisfy exact linear
equations obtained by expanding the partition function at a pivot element
of X (the smallest site of X for subset gases, the first polymer in the
universe order for abstract gases):

    subset:    phi_bar(X) = phi_bar(X\\{x1})
                            - sum_{g in L, g cap X = {x1}} z_g phi_bar(X + g)
    abstract:  phi_bar(X) = phi_bar(X\\{g0})
                            - z_g0 phi_bar(X + Gamma*_L(g0))

with phi_bar(empty) = 1 folded into the inhomogeneity alpha(X) = 1{|X|=1}.
Writing K_z for the homogeneous part, the evaluation at z = -rho makes all
coefficients nonnegative, and the affine map

    T_rho f = alpha + K_{-rho} f

is monotone.  Starting it from a factorized function xi^X whose family
satisfies the per-element condition (subset: sum_{g ni x} rho_g xi^g
<= xi_x - 1; abstract: rho_g prod_{g' in Gamma(g)} xi_g' <= xi_g - 1)
yields T xi <= xi, hence a pointwise nonincreasing chain

    exact ratio at -rho  <=  T^k xi  <=  T^(k-1) xi  <=  ...  <=  xi,

so every iterate is a certified upper bound on the reduced correlations,
tightening with k.  The Neumann partial sums sum_{n<=k} (K_{-rho})^n alpha
increase towards the same limit from below T^(k+1) xi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from . import gas
from .errors import (
    NormalizationFailure,
    PolygasError,
    PrecheckFailure,
    ResourceLimit,
    UniverseError,
)
from .gas import ActivityMap, PolymerUniverse
from .subset import SubsetUniverse
from .values import Num, div, is_exact
from .weights import PolymerWeights, SiteWeights

DOMAIN_CAP = 1 << 16


# ---------------------------------------------------------------------------
# region functions
# ---------------------------------------------------------------------------


@dataclass
class RegionFunction:
    """A nonnegative function on nonempty finite argument sets.

    Arguments are frozensets of sites (kind "sites") or of polymer ids
    (kind "polymers").  Values come from explicit entries, from a lazy rule
    (memoized, capped at DOMAIN_CAP distinct arguments), or from the
    factorized default prod xi over the argument's elements.
    """

    kind: str
    entries: dict = field(default_factory=dict)
    factor: Optional[Union[SiteWeights, PolymerWeights]] = None
    rule: Optional[Callable] = None
    cap: int = DOMAIN_CAP

    @classmethod
    def factorized(cls, kind: str, weights) -> "RegionFunction":
        return cls(kind, factor=weights)

    @classmethod
    def from_entries(cls, kind: str, entries: Mapping, factor=None) -> "RegionFunction":
        return cls(kind, entries={frozenset(k): v for k, v in entries.items()}, factor=factor)

    @classmethod
    def from_rule(cls, kind: str, rule: Callable) -> "RegionFunction":
        return cls(kind, rule=rule)

    def value(self, X: Iterable) -> Num:
        X = frozenset(X)
        hit = self.entries.get(X)
        if hit is not None:
            return hit
        if self.rule is not None:
            if len(self.entries) >= self.cap:
                raise ResourceLimit(f"region function grew past {self.cap} arguments")
            value = self.rule(X)
            self.entries[X] = value
            return value
        if self.factor is not None:
            return self.factor.xi_prod(X)
        raise PolygasError(f"region function undefined at {set(X)!r}")


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------


class _EngineBase:
    kind: str

    # subclasses provide: pivot, alpha-domain iteration helpers, _k_terms,
    # exact_ratio, precheck_margins, norm parameters

    def alpha(self, X: Iterable) -> int:
        return 1 if len(frozenset(X)) == 1 else 0

    def apply_k(self, f: RegionFunction, z) -> RegionFunction:
        """One application of the homogeneous operator at signed activities."""
        zmap = self._activity_map(z)

        def rule(X: frozenset) -> Num:
            self._check_argument(X)
            if not self._inside(X):
                return 0
            total: Num = f.value(self._drop_pivot(X)) if len(X) >= 2 else 0
            for coeff, arg in self._k_terms(X, zmap):
                total = total - coeff * f.value(arg)
            return total

        return RegionFunction.from_rule(self.kind, rule)

    def apply_t(self, f: RegionFunction, rho) -> RegionFunction:
        """T_rho f = alpha + K_{-rho} f; all coefficients nonnegative."""
        rho_map = self._rho_map(rho)

        def rule(X: frozenset) -> Num:
            self._check_argument(X)
            if not self._inside(X):
                return 0
            total: Num = 1 if len(X) == 1 else f.value(self._drop_pivot(X))
            for coeff, arg in self._k_terms(X, rho_map):
                total = total + coeff * f.value(arg)
            return total

        return RegionFunction.from_rule(self.kind, rule)

    def residual(self, X: Iterable, z) -> Num:
        """Exact-correlation residual in the pivot equation; zero identically."""
        X = frozenset(X)
        self._check_argument(X)
        zmap = self._activity_map(z)
        phi = lambda arg: self.exact_ratio(arg, z)
        lead = phi(self._drop_pivot(X)) if len(X) >= 2 else 1
        total = phi(X) - lead
        for coeff, arg in self._k_terms(X, zmap):
            total = total + coeff * phi(arg)
        return total

    def t_fixed_point_residual(self, X: Iterable, rho) -> Num:
        """T applied to the exact ratios at -rho minus the ratios themselves."""
        X = frozenset(X)
        rho_map = self._rho_map(rho)
        minus = {g: -r for g, r in rho_map.items()}
        phi = lambda arg: self.exact_ratio(arg, minus)
        total: Num = 1 if len(X) == 1 else phi(self._drop_pivot(X))
        for coeff, arg in self._k_terms(X, rho_map):
            total = total + coeff * phi(arg)
        return total - phi(X)

    def _check_argument(self, X: frozenset):
        if not X:
            raise UniverseError("region-function arguments must be nonempty")

    def iterate(
        self,
        weights,
        rho,
        steps: int,
        tracked: Optional[Sequence] = None,
    ) -> "KSIterationTrace":
        """Run T^k from the factorized start and audit the bound chain.

        Raises PrecheckFailure unless the weight family clears the
        per-element start condition.  The trace records, for each tracked
        argument and each k, the iterate value, the exact ratio at -rho,
        and their slack; verdicts summarize that the chain starts below
        the factorized function, never increases, and dominates the exact
        ratios throughout.
        """
        margins = self.precheck_margins(weights, rho)
        bad = [e for e, m in margins.items() if m < 0]
        if bad:
            raise PrecheckFailure(
                f"start condition fails at {bad[0]!r}", element=bad[0], margin=margins[bad[0]]
            )
        rho_map = self._rho_map(rho)
        minus = {g: -r for g, r in rho_map.items()}
        tracked = [frozenset(X) for X in (tracked or self.default_tracked())]
        for X in tracked:
            self._check_argument(X)

        levels = [RegionFunction.factorized(self.kind, weights)]
        for _ in range(steps):
            levels.append(self.apply_t(levels[-1], rho_map))

        rows = []
        monotone_ok = True
        dominates_ok = True
        start_ok = True
        for X in tracked:
            exact = self.exact_ratio(X, minus)
            prev = None
            for k, level in enumerate(levels):
                value = level.value(X)
                tol = 0 if (is_exact(value) and is_exact(exact)) else 1e-9
                rows.append(TraceRow(k, X, value, exact, value - exact))
                if value + tol < exact:
                    dominates_ok = False
                if prev is not None and value > prev + tol:
                    monotone_ok = False
                    if k == 1:
                        start_ok = False
                prev = value
        return KSIterationTrace(
            tracked=tuple(tracked),
            steps=steps,
            margins=margins,
            rows=tuple(rows),
            start_ok=start_ok,
            monotone_ok=monotone_ok,
            dominates_ok=dominates_ok,
        )

    def neumann_partials(self, rho, steps: int, X: Iterable) -> list:
        """Partial sums of sum_n (K_{-rho})^n alpha at X, orders 0..steps.

        Iterates over the full finite argument domain of the window, so it
        is exact for rational rho and nondecreasing term by term.
        """
        X = frozenset(X)
        self._check_argument(X)
        if not self._inside(X):
            raise UniverseError("argument lies outside the window")
        domain = self._full_domain()
        rho_map = self._rho_map(rho)
        g = {S: (1 if len(S) == 1 else 0) for S in domain}
        partials = [g[X]]
        for _ in range(steps):
            nxt = {}
            for S in domain:
                total: Num = g[self._drop_pivot(S)] if len(S) >= 2 else 0
                for coeff, arg in self._k_terms(S, rho_map):
                    total = total + coeff * g[arg]
                nxt[S] = total
            g = nxt
            partials.append(partials[-1] + g[X])
        return partials

    def _full_domain(self) -> list:
        elements = self._window_elements()
        if len(elements) > 16 or (1 << len(elements)) > DOMAIN_CAP:
            raise ResourceLimit("window too large to materialize the argument domain")
        out = []
        n = len(elements)
        for mask in range(1, 1 << n):
            out.append(frozenset(e for i, e in enumerate(elements) if mask >> i & 1))
        return out


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    X: frozenset
    value: Num
    exact: Num
    slack: Num


@dataclass(frozen=True)
class KSIterationTrace:
    tracked: tuple
    steps: int
    margins: Mapping
    rows: tuple
    start_ok: bool
    monotone_ok: bool
    dominates_ok: bool

    @property
    def ok(self) -> bool:
        return self.start_ok and self.monotone_ok and self.dominates_ok

    def chain(self, X) -> list:
        X = frozenset(X)
        return [r.value for r in self.rows if r.X == X]


class SubsetKSEngine(_EngineBase):
    """Pivot equations for a subset gas restricted to a site window."""

    kind = "sites"

    def __init__(self, su: SubsetUniverse, window: Optional[Iterable] = None):
        self.su = su
        self.window = su.region(window)
        self._window_polymers = [
            (pid, sup)
            for pid, sup in zip(su.polymer_ids, su.supports)
            if sup <= self.window
        ]

    def _window_elements(self) -> list:
        return sorted(self.window, key=self.su.site_index)

    def _inside(self, X: frozenset) -> bool:
        return X <= self.window

    def pivot(self, X: frozenset):
        return min(X, key=self.su.site_index)

    def _drop_pivot(self, X: frozenset) -> frozenset:
        return X - {self.pivot(X)}

    def _k_terms(self, X: frozenset, coeff_map: Mapping):
        x1 = self.pivot(X)
        for pid, sup in self._window_polymers:
            if x1 in sup and not (sup & X) - {x1}:
                coeff = coeff_map.get(pid, 0)
                if coeff != 0:
                    yield coeff, X | sup

    def _activity_map(self, z) -> dict:
        zvals = gas._zvec(self.su.universe, z)
        return {pid: zvals[self.su.universe.index(pid)] for pid, _ in self._window_polymers}

    def _rho_map(self, rho) -> dict:
        if isinstance(rho, ActivityMap):
            out = {pid: rho.radius_of(pid) for pid, _ in self._window_polymers}
        elif isinstance(rho, Mapping):
            out = {pid: rho.get(pid, 0) for pid, _ in self._window_polymers}
        else:
            out = {pid: rho for pid, _ in self._window_polymers}
        for pid, r in out.items():
            if r < 0:
                raise UniverseError(f"rho[{pid!r}] must be nonnegative")
        return out

    def exact_ratio(self, X: Iterable, z) -> Num:
        X = frozenset(X)
        if not X:
            return 1 if _exact_inputs(z) else 1.0
        if not self._inside(X):
            return 0
        from .subset import region_partition_function

        denom = region_partition_function(self.su, self.window, z)
        if denom == 0:
            raise NormalizationFailure("Xi over the window vanishes")
        return div(region_partition_function(self.su, self.window - X, z), denom)

    def precheck_margins(self, weights: SiteWeights, rho) -> dict:
        """Start-condition margins over the window sub-universe:
        (xi_x - 1) - sum over window polymers containing x of rho_g xi^g."""
        if not isinstance(weights, SiteWeights):
            raise UniverseError("subset engine needs site weights")
        rho_map = self._rho_map(rho)
        margins = {}
        for x in self._window_elements():
            acc: Num = 0
            for pid, sup in self._window_polymers:
                if x in sup:
                    acc = acc + rho_map.get(pid, 0) * weights.xi_prod(sup)
            margins[x] = (weights.xi_of(x) - 1) - acc
        return margins

    def default_tracked(self) -> list:
        if len(self.window) <= 12:
            return self._full_domain()
        return [frozenset([x]) for x in self._window_elements()]


class AbstractKSEngine(_EngineBase):
    """Pivot equations for an abstract gas restricted to a polymer window."""

    kind = "polymers"

    def __init__(self, universe: PolymerUniverse, window: Optional[Iterable] = None):
        self.universe = universe
        self.window_mask = universe.mask_of(window)
        self.window = frozenset(universe.ids_of(self.window_mask))

    def _window_elements(self) -> list:
        return list(self.universe.ids_of(self.window_mask))

    def _inside(self, X: frozenset) -> bool:
        return X <= self.window

    def pivot(self, X: frozenset):
        return min(X, key=self.universe.index)

    def _drop_pivot(self, X: frozenset) -> frozenset:
        return X - {self.pivot(X)}

    def _star_in_window(self, g0) -> frozenset:
        i = self.universe.index(g0)
        mask = (self.universe.inc_masks[i] & ~(1 << i)) & self.window_mask
        return frozenset(self.universe.ids_of(mask))

    def _k_terms(self, X: frozenset, coeff_map: Mapping):
        g0 = self.pivot(X)
        coeff = coeff_map.get(g0, 0)
        if coeff != 0:
            yield coeff, X | self._star_in_window(g0)

    def _activity_map(self, z) -> dict:
        zvals = gas._zvec(self.universe, z)
        return {g: zvals[self.universe.index(g)] for g in self.window}

    def _rho_map(self, rho) -> dict:
        if isinstance(rho, ActivityMap):
            out = {g: rho.radius_of(g) for g in self.window}
        elif isinstance(rho, Mapping):
            out = {g: rho.get(g, 0) for g in self.window}
        else:
            out = {g: rho for g in self.window}
        for g, r in out.items():
            if r < 0:
                raise UniverseError(f"rho[{g!r}] must be nonnegative")
        return out

    def exact_ratio(self, X: Iterable, z) -> Num:
        X = frozenset(X)
        if not X:
            return 1 if _exact_inputs(z) else 1.0
        if not self._inside(X):
            return 0
        denom = gas.partition_function(self.universe, self.window, z)
        if denom == 0:
            raise NormalizationFailure("Xi over the window vanishes")
        return div(gas.partition_function(self.universe, self.window - X, z), denom)

    def precheck_margins(self, weights: PolymerWeights, rho) -> dict:
        """Start-condition margins over the window sub-universe:
        (xi_g - 1) - rho_g * prod over Gamma(g) within the window of xi."""
        if not isinstance(weights, PolymerWeights):
            raise UniverseError("abstract engine needs polymer weights")
        rho_map = self._rho_map(rho)
        margins = {}
        for g in self._window_elements():
            i = self.universe.index(g)
            nbhd = self.universe.ids_of(self.universe.inc_masks[i] & self.window_mask)
            margins[g] = (weights.xi_of(g) - 1) - rho_map.get(g, 0) * weights.xi_prod(nbhd)
        return margins

    def default_tracked(self) -> list:
        if len(self.window) <= 12:
            return self._full_domain()
        return [frozenset([g]) for g in self._window_elements()]


def _exact_inputs(z) -> bool:
    if isinstance(z, ActivityMap):
        return all(is_exact(v) for v in z.values)
    if isinstance(z, Mapping):
        return all(is_exact(v) for v in z.values())
    return is_exact(z)


# ---------------------------------------------------------------------------
# operator norm bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KSNormBound:
    bound: Num
    contraction: bool
    solution_bound: Optional[float]


def ks_norm_bound(
    universe: Union[PolymerUniverse, SubsetUniverse],
    rho,
    weights,
) -> KSNormBound:
    """Bound on the weighted sup-norm of the pivot operator.

    subset:    sup_x (1/xi_x) * [1 + sup_y sum_{g ni y} |z_g| xi^g]
    abstract:  sup_g0 (1/xi_g0) * [1 + |z_g0| prod_{g in Gamma(g0)} xi_g]

    A value below one certifies a contraction, with the solution's weighted
    norm bounded by 1/(1 - bound).
    """
    if isinstance(universe, SubsetUniverse):
        if not isinstance(weights, SiteWeights):
            raise UniverseError("subset norm bound needs site weights")
        rho_map = {}
        if isinstance(rho, ActivityMap):
            rho_map = {pid: abs(rho.radius_of(pid)) for pid in universe.polymer_ids}
        elif isinstance(rho, Mapping):
            rho_map = {pid: abs(rho.get(pid, 0)) for pid in universe.polymer_ids}
        else:
            rho_map = {pid: abs(rho) for pid in universe.polymer_ids}
        bracket: Num = 0
        for y in universe.sites:
            acc: Num = 0
            for pid, sup in zip(universe.polymer_ids, universe.supports):
                if y in sup:
                    acc = acc + rho_map[pid] * weights.xi_prod(sup)
            bracket = max(bracket, acc)
        inv = max(div(1, weights.xi_of(x)) for x in universe.sites)
        bound = inv * (1 + bracket)
    else:
        if not isinstance(weights, PolymerWeights):
            raise UniverseError("abstract norm bound needs polymer weights")
        if isinstance(rho, ActivityMap):
            rho_map = {g: abs(rho.radius_of(g)) for g in universe.polymers}
        elif isinstance(rho, Mapping):
            rho_map = {g: abs(rho.get(g, 0)) for g in universe.polymers}
        else:
            rho_map = {g: abs(rho) for g in universe.polymers}
        bound = 0
        for g0 in universe.polymers:
            nbhd = universe.ids_of(universe.inc_masks[universe.index(g0)])
            val = div(1 + rho_map[g0] * weights.xi_prod(nbhd), weights.xi_of(g0))
            bound = max(bound, val)
    contraction = bound < 1
    solution = 1.0 / (1.0 - float(bound)) if contraction else None
    return KSNormBound(bound, contraction, solution)


def necessity_margins(
    universe: PolymerUniverse,
    rho,
    xi_fn: RegionFunction,
) -> dict:
    """Margins of the necessary start condition for a candidate function:
    xi({g0}) - 1 - rho_g0 * xi(Gamma(g0)) for every polymer g0."""
    margins = {}
    if isinstance(rho, ActivityMap):
        rho_map = {g: rho.radius_of(g) for g in universe.polymers}
    elif isinstance(rho, Mapping):
        rho_map = {g: rho.get(g, 0) for g in universe.polymers}
    else:
        rho_map = {g: rho for g in universe.polymers}
    for g0 in universe.polymers:
        nbhd = frozenset(universe.ids_of(universe.inc_masks[universe.index(g0)]))
        margins[g0] = xi_fn.value(frozenset([g0])) - 1 - rho_map[g0] * xi_fn.value(nbhd)
    return margins


def t_dominates(engine: _EngineBase, f: RegionFunction, rho, sample: Iterable) -> bool:
    """Probe T f <= f on the sampled arguments (non-factorized starts)."""
    tf = engine.apply_t(f, rho)
    for X in sample:
        X = frozenset(X)
        if tf.value(X) > f.value(X):
            return False
    return True


# ---------------------------------------------------------------------------
# spec-shaped conveniences
# ---------------------------------------------------------------------------


def ks_apply_subset(su: SubsetUniverse, window, f: RegionFunction, z) -> RegionFunction:
    return SubsetKSEngine(su, window).apply_k(f, z)


def ks_apply_abstract(universe: PolymerUniverse, window, f: RegionFunction, z) -> RegionFunction:
    return AbstractKSEngine(universe, window).apply_k(f, z)


def t_apply(engine: _EngineBase, f: RegionFunction, rho) -> RegionFunction:
    return engine.apply_t(f, rho)


def t_iterate(engine: _EngineBase, weights, rho, steps: int, tracked=None) -> KSIterationTrace:
    return engine.iterate(weights, rho, steps, tracked)


def neumann_partial(engine: _EngineBase, rho, steps: int, X) -> Num:
    return engine.neumann_partials(rho, steps, X)[-1]


def ks_residual(engine: _EngineBase, X, z) -> Num:
    return engine.residual(X, z)

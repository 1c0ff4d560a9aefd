"""Convergence criteria for polymer gases and the bounds they certify.

Every criterion asks that a radius family rho fit under a margin built from
free weights.  With mu_g >= 0 per polymer (xi = 1 + mu, a = log xi) and,
for subset gases, factorized site weights xi_x >= 1:

    kind            margin per element                              holds when
    ----            ------------------                              ----------
    kp              log(mu_g / rho_g) - sum_{g' in Gamma(g)} mu_g'  all >= 0
    dobrushin       mu_g - rho_g * prod_{g' in Gamma(g)} (1+mu_g')  all >= 0
    fp              mu_g - rho_g * Xi_{Gamma(g)}(mu)                all >= 0
    gk-strict       (xi - 1) - max_x sum_{g ni x} rho_g xi^|g|      all > 0
    ext-gk          (xi_x - 1) - sum_{g ni x} rho_g xi^g            all >= 0
    gk-contraction  1 - operator norm bound                         all > 0

The kp margin uses the mu = rho * e^a substitution, so rho_g e^{a_g} is
mu_g exactly.  The fp phi replaces the Dobrushin product over the
neighborhood with the neighborhood's own hard-core partition function,
which never exceeds it; in its subset form this is the non-strict
extension of the classical Gruber-Kunz condition.  Pointwise,
phi_fp <= phi_dobrushin <= phi_kp, so certified radii only improve
down the list.

Certified bounds on the pinned quantities, all computed unconditionally
(callers decide whether the matching criterion holds):

    theta-dobrushin   log(1 + mu_g)                   >= |Theta_g|(rho)
    theta-fp          -(phi_fp - mu_g) log(1 - rho_g) >= |Theta_g|(rho)
    theta-gk-strict   e^-a [1 + max_x sum rho_g e^|g|]   (operator-norm form)
    theta-ext-gk      a_x                             >= |Theta_x|(rho)
    pi-dobrushin      phi_dobrushin                   >= |Pi_g|(rho)
    pi-fp             phi_fp                          >= |Pi_g|(rho)

theta-gk-strict is implemented exactly as displayed in its source, with
e^|g| rather than e^(a|g|) inside the bracket; pass exponent_weighted=True
for the variant consistent with the operator-norm computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from . import gas, ks
from .errors import DivergenceIndicator, NonHomogeneousModel, UniverseError
from .gas import ActivityMap, PolymerUniverse, neighborhood
from .subset import SubsetUniverse
from .values import Num
from .weights import PolymerWeights, SiteWeights

PHI_KINDS = ("kp", "dobrushin", "fp")
CRITERION_KINDS = ("kp", "dobrushin", "fp", "gk-strict", "ext-gk", "gk-contraction")
BOUND_KINDS = (
    "theta-dobrushin",
    "theta-fp",
    "theta-gk-strict",
    "theta-ext-gk",
    "pi-dobrushin",
    "pi-fp",
)


def phi_value(universe: PolymerUniverse, gamma, weights: PolymerWeights, kind: str) -> Num:
    """The phi factor multiplying rho_g in the kp / dobrushin / fp criteria."""
    nbhd = neighborhood(universe, [gamma])
    if kind == "kp":
        return math.exp(sum(float(weights.mu_of(g)) for g in nbhd))
    if kind == "dobrushin":
        out: Num = 1
        for g in nbhd:
            out = out * (1 + weights.mu_of(g))
        return out
    if kind == "fp":
        mu = {g: weights.mu_of(g) for g in nbhd}
        return gas.partition_function(universe, nbhd, mu)
    raise ValueError(f"phi kind must be one of {PHI_KINDS}, got {kind!r}")


@dataclass(frozen=True)
class CriterionReport:
    kind: str
    scope: str  # "polymer" or "site"
    holds: bool
    strict: bool
    margins: Mapping

    @property
    def worst(self):
        element = min(self.margins, key=lambda e: self.margins[e])
        return element, self.margins[element]


def _rho_map(universe: PolymerUniverse, rho) -> dict:
    if isinstance(rho, ActivityMap):
        out = {g: rho.radius_of(g) for g in universe.polymers}
    elif isinstance(rho, Mapping):
        for g in rho:
            universe.index(g)
        out = {g: rho.get(g, 0) for g in universe.polymers}
    else:
        out = {g: rho for g in universe.polymers}
    for g, r in out.items():
        if r < 0:
            raise UniverseError(f"rho[{g!r}] must be nonnegative")
    return out


def _holds(margins, strict: bool) -> bool:
    if strict:
        return all(m > 0 for m in margins.values())
    return all(m >= 0 for m in margins.values())


def _uniform_xi(weights: SiteWeights, su: SubsetUniverse) -> Num:
    values = {weights.xi_of(x) for x in su.sites}
    if len(values) != 1:
        raise NonHomogeneousModel("this criterion needs a uniform site weight")
    return values.pop()


def check_criterion(
    universe: Union[PolymerUniverse, SubsetUniverse],
    rho,
    weights: Union[PolymerWeights, SiteWeights],
    kind: str,
) -> CriterionReport:
    """Evaluate one criterion and report per-element margins.

    Abstract kinds (kp, dobrushin, fp) accept either universe flavor; on a
    subset universe with site weights the polymer weights are the factorized
    mu_g = xi^g.  The gk kinds need a subset universe, except for
    gk-contraction which also has an abstract variant.
    """
    if kind not in CRITERION_KINDS:
        raise ValueError(f"unknown criterion kind {kind!r}")

    su = universe if isinstance(universe, SubsetUniverse) else None
    base = su.universe if su is not None else universe
    rho_map = _rho_map(base, rho)

    if kind in PHI_KINDS:
        pw = _as_polymer_weights(weights, su)
        margins = {}
        for g in base.polymers:
            if kind == "kp":
                mu_g = pw.mu_of(g)
                r = rho_map[g]
                neigh_sum = sum(float(pw.mu_of(t)) for t in neighborhood(base, [g]))
                if r == 0:
                    margins[g] = math.inf
                elif mu_g == 0:
                    margins[g] = -math.inf
                else:
                    margins[g] = math.log(float(mu_g) / float(r)) - neigh_sum
            else:
                margins[g] = pw.mu_of(g) - rho_map[g] * phi_value(base, g, pw, kind)
        return CriterionReport(kind, "polymer", _holds(margins, False), False, margins)

    if kind == "ext-gk":
        if su is None or not isinstance(weights, SiteWeights):
            raise UniverseError("ext-gk needs a subset universe and site weights")
        margins = {}
        for x in su.sites:
            acc: Num = 0
            for pid, sup in zip(su.polymer_ids, su.supports):
                if x in sup:
                    acc = acc + rho_map[pid] * weights.xi_prod(sup)
            margins[x] = (weights.xi_of(x) - 1) - acc
        return CriterionReport(kind, "site", _holds(margins, False), False, margins)

    if kind == "gk-strict":
        if su is None or not isinstance(weights, SiteWeights):
            raise UniverseError("gk-strict needs a subset universe and site weights")
        xi = _uniform_xi(weights, su)
        margins = {}
        for x in su.sites:
            acc: Num = 0
            for pid, sup in zip(su.polymer_ids, su.supports):
                if x in sup:
                    acc = acc + rho_map[pid] * xi ** len(sup)
            margins[x] = (xi - 1) - acc
        return CriterionReport(kind, "site", _holds(margins, True), True, margins)

    # gk-contraction: strict contraction of the correlation-equation operator
    if su is not None:
        if not isinstance(weights, SiteWeights):
            raise UniverseError("subset gk-contraction needs site weights")
        bound = ks.ks_norm_bound(su, rho_map, weights)
        margins = {"norm": 1 - bound.bound}
    else:
        pw = _as_polymer_weights(weights, None)
        bound = ks.ks_norm_bound(universe, rho_map, pw)
        margins = {"norm": 1 - bound.bound}
    return CriterionReport(kind, "operator", _holds(margins, True), True, margins)


def _as_polymer_weights(weights, su: Optional[SubsetUniverse]) -> PolymerWeights:
    if isinstance(weights, PolymerWeights):
        return weights
    if isinstance(weights, SiteWeights):
        if su is None:
            raise UniverseError("site weights need a subset universe")
        return PolymerWeights.from_mu(
            {pid: weights.xi_prod(sup) for pid, sup in zip(su.polymer_ids, su.supports)}
        )
    raise UniverseError(f"unsupported weight family {type(weights).__name__}")


def bound_value(
    universe: Union[PolymerUniverse, SubsetUniverse],
    target,
    rho,
    weights,
    kind: str,
    exponent_weighted: bool = False,
) -> float:
    """Value of a certified bound; see the module table for the formulas."""
    su = universe if isinstance(universe, SubsetUniverse) else None
    base = su.universe if su is not None else universe
    rho_map = _rho_map(base, rho)

    if kind in ("theta-dobrushin", "pi-dobrushin", "theta-fp", "pi-fp"):
        pw = _as_polymer_weights(weights, su)
        if kind == "theta-dobrushin":
            return math.log(1.0 + float(pw.mu_of(target)))
        if kind == "pi-dobrushin":
            return float(phi_value(base, target, pw, "dobrushin"))
        phi_fp = phi_value(base, target, pw, "fp")
        if kind == "pi-fp":
            return float(phi_fp)
        r = rho_map[target]
        if r >= 1:
            raise DivergenceIndicator("theta-fp bound needs rho_g < 1")
        return -(float(phi_fp) - float(pw.mu_of(target))) * math.log1p(-float(r))

    if kind == "theta-ext-gk":
        if su is None or not isinstance(weights, SiteWeights):
            raise UniverseError("theta-ext-gk needs a subset universe and site weights")
        return weights.a_of(target)

    if kind == "theta-gk-strict":
        if su is None or not isinstance(weights, SiteWeights):
            raise UniverseError("theta-gk-strict needs a subset universe and site weights")
        xi = _uniform_xi(weights, su)
        worst = 0.0
        for x in su.sites:
            acc = 0.0
            for pid, sup in zip(su.polymer_ids, su.supports):
                if x in sup:
                    base_factor = float(xi) if exponent_weighted else math.e
                    acc += float(rho_map[pid]) * base_factor ** len(sup)
            worst = max(worst, acc)
        return (1.0 + worst) / float(xi)

    raise ValueError(f"unknown bound kind {kind!r}")


# ---------------------------------------------------------------------------
# scalar weight optimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizeResult:
    kind: str
    weight: float
    radius: float
    boundary: bool


def _golden_max(f, lo: float, hi: float, tol: float):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    # fixed iteration budget: the bracket cannot shrink below the float
    # spacing near the endpoints, so a pure width test can spin forever
    steps = max(1, math.ceil(math.log(max((b - a) / tol, 2.0)) / math.log(1.0 / invphi)))
    for _ in range(steps):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def optimize_uniform_weight(
    universe: Union[PolymerUniverse, SubsetUniverse],
    kind: str,
    lo: float = 0.0,
    hi: float = 1e6,
    tol: float = 1e-10,
) -> OptimizeResult:
    """Golden-section search of the certified radius over a scalar weight.

    For kp / dobrushin / fp the scalar is a uniform mu and the radius is
    min_g mu / phi_g(mu); for ext-gk the scalar is a uniform exponent a and
    the radius is min_x (e^a - 1) / sum_{g ni x} e^(a |g|).  Maxima that sit
    on the search boundary are flagged rather than extrapolated.
    """
    su = universe if isinstance(universe, SubsetUniverse) else None
    base = su.universe if su is not None else universe
    if len(base) == 0:
        raise UniverseError("cannot optimize on an empty universe")

    if kind == "kp":
        # kept in log space: exp() of the neighborhood sum overflows early
        def radius(mu: float) -> float:
            if mu <= 0:
                return 0.0
            best = math.inf
            for g in base.polymers:
                s = sum(mu for _ in neighborhood(base, [g]))
                t = math.log(mu) - s
                best = min(best, math.exp(t) if t > -745 else 0.0)
            return best

    elif kind in PHI_KINDS:

        def radius(mu: float) -> float:
            pw = PolymerWeights.uniform(base.polymers, mu)
            try:
                return min(
                    mu / float(phi_value(base, g, pw, kind)) for g in base.polymers
                )
            except OverflowError:
                return 0.0

    elif kind == "ext-gk":
        if su is None:
            raise UniverseError("ext-gk optimization needs a subset universe")
        occupied = [x for x in su.sites if su.polymers_at_site(x)]
        if not occupied:
            raise UniverseError("no site is covered by a polymer")

        def radius(a: float) -> float:
            best = math.inf
            for x in occupied:
                denom = sum(
                    math.exp(a * len(su.support_of(pid)))
                    for pid in su.polymers_at_site(x)
                )
                best = min(best, math.expm1(a) / denom)
            return best

    else:
        raise ValueError(f"cannot optimize criterion kind {kind!r}")

    x, fx = _golden_max(radius, lo, hi, tol)
    window = max(tol * 8, (hi - lo) * 1e-9)
    boundary = (hi - x) <= window or (x - lo) <= window
    return OptimizeResult(kind, x, float(fx), boundary)


# ---------------------------------------------------------------------------
# side-by-side comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriteriaComparison:
    reports: Mapping
    chain_ok: bool

    def report(self, kind: str) -> CriterionReport:
        return self.reports[kind]


def compare_criteria(
    universe: Union[PolymerUniverse, SubsetUniverse],
    rho,
    weights,
) -> CriteriaComparison:
    """Evaluate every applicable criterion on one instance.

    kp implies dobrushin implies fp (with the same weights, kp read through
    mu = rho e^a); chain_ok records that the evaluated verdicts respect it.
    """
    su = universe if isinstance(universe, SubsetUniverse) else None
    reports = {}
    for kind in PHI_KINDS:
        reports[kind] = check_criterion(universe, rho, weights, kind)
    # subset models with polymer-scoped weights fall back to the abstract
    # contraction variant on the derived universe
    contraction_universe = (
        su.universe if su is not None and not isinstance(weights, SiteWeights) else universe
    )
    reports["gk-contraction"] = check_criterion(
        contraction_universe, rho, weights, "gk-contraction"
    )
    if su is not None and isinstance(weights, SiteWeights):
        reports["ext-gk"] = check_criterion(universe, rho, weights, "ext-gk")
        try:
            reports["gk-strict"] = check_criterion(universe, rho, weights, "gk-strict")
        except NonHomogeneousModel:
            pass
    chain_ok = True
    if reports["kp"].holds and not reports["dobrushin"].holds:
        chain_ok = False
    if reports["dobrushin"].holds and not reports["fp"].holds:
        chain_ok = False
    return CriteriaComparison(reports, chain_ok)

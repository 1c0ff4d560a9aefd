"""Acceptance suite: the eight exit criteria, one test each.

Every test prints one pass/fail line (visible with pytest -s or -rP, or by
running this file directly with python).  Tolerances are fixed here, not
configurable: exact-mode residual checks use zero tolerance, float
comparisons use the stated epsilon.
"""

import math
import random
import time
from fractions import Fraction
from itertools import product

import pytest

import polygas as pg
from polygas.errors import NormalizationFailure

SEED = 20250808


def _report(number, failures, detail=""):
    status = "PASS" if not failures else f"FAIL ({len(failures)}: {failures[0]})"
    print(f"[acceptance] criterion {number}: {status} {detail}")
    assert not failures, f"criterion {number}: {failures[:5]}"


def _frac(rng, lo=-4, hi=4, max_den=5):
    return Fraction(rng.randint(lo, hi), rng.randint(1, max_den))


def _random_abstract(rng, max_polymers):
    n = rng.randint(2, max_polymers)
    ids = [f"g{i}" for i in range(n)]
    pairs = [
        (ids[i], ids[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < 0.45
    ]
    return pg.build_universe(ids, pairs)


def _random_subset(rng, max_sites, max_polymers=10, max_support=3):
    n = rng.randint(2, max_sites)
    sites = [f"s{i}" for i in range(n)]
    seen = set()
    decls = []
    for _ in range(rng.randint(1, max_polymers)):
        size = rng.randint(1, min(max_support, n))
        sup = tuple(sorted(rng.sample(sites, size)))
        if sup not in seen:
            seen.add(sup)
            decls.append(sup)
    if not decls:
        decls = [(sites[0],)]
    return pg.build_subset_universe(sites, supports=decls)


# ---------------------------------------------------------------------------
# 1. identity suite
# ---------------------------------------------------------------------------


def test_criterion_1_identity_suite():
    rng = random.Random(SEED)
    failures = []
    started = time.time()

    for i in range(100):  # abstract instances
        u = _random_abstract(rng, 10)
        for attempt in range(40):
            z = {g: _frac(rng) for g in u.polymers}
            if pg.partition_function(u, None, z) != 0:
                break
        engine = pg.AbstractKSEngine(u)
        for _ in range(3):
            g0 = rng.choice(u.polymers)
            Z = [g for g in u.polymers if g != g0 and rng.random() < 0.5]
            if pg.fundamental_identity_residual(u, Z, g0, z) != 0:
                failures.append(f"abstract[{i}] polymer-addition")
        for _ in range(3):
            X = [g for g in u.polymers if rng.random() < 0.5] or [u.polymers[0]]
            if engine.residual(X, z) != 0:
                failures.append(f"abstract[{i}] pivot-equation")
        order = list(u.polymers)
        rng.shuffle(order)
        try:
            am = pg.ActivityMap.build(u, values=z)
            if pg.telescope_residual(u, None, am, order=order) != 0:
                failures.append(f"abstract[{i}] telescope")
        except NormalizationFailure:
            pass  # a vanishing intermediate ratio; identity not evaluable

    for i in range(100):  # subset instances
        su = _random_subset(rng, 8)
        for attempt in range(40):
            z = {pid: _frac(rng) for pid in su.polymer_ids}
            if pg.region_partition_function(su, None, z) != 0:
                break
        engine = pg.SubsetKSEngine(su)
        sites = list(su.sites)
        for _ in range(2):
            x = rng.choice(sites)
            Y = [s for s in sites if s != x and rng.random() < 0.5]
            if pg.site_addition_residual(su, Y, x, z) != 0:
                failures.append(f"subset[{i}] site-addition")
        for _ in range(2):
            X = [s for s in sites if rng.random() < 0.4] or [rng.choice(sites)]
            if pg.site_deletion_residual(su, None, X, z) != 0:
                failures.append(f"subset[{i}] site-deletion")
            if engine.residual(X, z) != 0:
                failures.append(f"subset[{i}] pivot-equation")
        order = list(sites)
        rng.shuffle(order)
        try:
            if pg.site_telescope_residual(su, None, z, order=order) != 0:
                failures.append(f"subset[{i}] telescope")
        except NormalizationFailure:
            pass

    elapsed = time.time() - started
    if elapsed >= 60:
        failures.append(f"runtime {elapsed:.1f}s >= 60s")
    _report(1, failures, f"(200 instances, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 2. alternating sign, exhaustive
# ---------------------------------------------------------------------------


def test_criterion_2_alternating_sign_exhaustive():
    failures = []
    started = time.time()
    checked = 0
    for m in range(1, 5):
        ids = [f"g{i}" for i in range(m)]
        all_edges = [(ids[i], ids[j]) for i in range(m) for j in range(i + 1, m)]
        for picks in product((False, True), repeat=len(all_edges)):
            pairs = [e for e, take in zip(all_edges, picks) if take]
            u = pg.build_universe(ids, pairs)
            for n in range(1, 6):
                for tup in product(ids, repeat=n):
                    value = pg.ursell_coefficient(u, tup, n_max=5)
                    checked += 1
                    if value != 0 and (value > 0) != ((n - 1) % 2 == 0):
                        failures.append(f"graph {pairs} tuple {tup} -> {value}")
    elapsed = time.time() - started
    if elapsed >= 120:
        failures.append(f"runtime {elapsed:.1f}s >= 120s")
    _report(2, failures, f"({checked} tuples, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 3. certified bounds dominate exact values
# ---------------------------------------------------------------------------


def test_criterion_3_bound_soundness():
    rng = random.Random(SEED + 3)
    failures = []
    tol = 1e-9
    for i in range(500):
        u = _random_abstract(rng, 8)
        mu = {g: Fraction(rng.randint(1, 16), 8) for g in u.polymers}
        w = pg.PolymerWeights.from_mu(mu)
        frac = Fraction(rng.randint(1, 8), 8)

        for kind, theta_kind, pi_kind in (
            ("dobrushin", "theta-dobrushin", "pi-dobrushin"),
            ("fp", "theta-fp", "pi-fp"),
        ):
            rho = {g: frac * mu[g] / pg.phi_value(u, g, w, kind) for g in u.polymers}
            if not pg.check_criterion(u, rho, w, kind).holds:
                failures.append(f"[{i}] {kind} construction did not hold")
                continue
            am = pg.ActivityMap.build(u, radii=rho)
            for g in u.polymers:
                try:
                    exact_theta = pg.theta(u, None, g, am, "abs")
                    exact_pi = float(pg.pi(u, None, g, am, "abs"))
                except pg.DivergenceIndicator:
                    failures.append(f"[{i}] {kind} diverged at {g}")
                    continue
                tb = pg.bound_value(u, g, rho, w, theta_kind)
                pb = pg.bound_value(u, g, rho, w, pi_kind)
                if exact_theta > tb + tol:
                    failures.append(f"[{i}] {kind} theta {g}: {exact_theta} > {tb}")
                if exact_pi > pb + tol:
                    failures.append(f"[{i}] {kind} pi {g}: {exact_pi} > {pb}")

        # wherever the product criterion holds, the sharper log bound wins
        rho_d = {
            g: frac * mu[g] / pg.phi_value(u, g, w, "dobrushin") for g in u.polymers
        }
        for g in u.polymers:
            sharp = pg.bound_value(u, g, rho_d, w, "theta-fp")
            coarse = pg.bound_value(u, g, rho_d, w, "theta-dobrushin")
            if sharp > coarse + tol:
                failures.append(f"[{i}] theta-fp {sharp} > theta-dobrushin {coarse}")
    _report(3, failures, "(500 instances)")


# ---------------------------------------------------------------------------
# 4. sharpness at the non-strict edge
# ---------------------------------------------------------------------------


def test_criterion_4_edge_sharpness():
    failures = []
    su = pg.build_subset_universe(["x"], max_size=1)
    w = pg.SiteWeights.from_a({"x": 1.0})
    rho = 1.0 - math.exp(-1.0)

    ext = pg.check_criterion(su, rho, w, "ext-gk")
    if ext.margins["x"] != 0.0:
        failures.append(f"ext-gk margin {ext.margins['x']!r} != 0")
    if not ext.holds:
        failures.append("ext-gk does not hold at the edge")
    strict = pg.check_criterion(su, rho, w, "gk-strict")
    if strict.holds:
        failures.append("gk-strict holds at the edge but must fail")

    engine = pg.SubsetKSEngine(su)
    pid = su.polymer_ids[0]
    ratio = engine.exact_ratio(["x"], {pid: -rho})
    if abs(ratio - math.e) > 1e-12:
        failures.append(f"exact ratio {ratio!r} differs from e")

    trace = engine.iterate(w, rho, 6)
    chain = trace.chain([("x")])
    if any(v != chain[0] for v in chain):
        failures.append(f"iteration chain is not constant: {chain}")
    if abs(chain[0] - math.e) > 1e-12:
        failures.append(f"fixed point {chain[0]!r} differs from e")
    _report(4, failures, "(single site, a=1, rho=1-1/e)")


# ---------------------------------------------------------------------------
# 5. iteration chains and partial sums
# ---------------------------------------------------------------------------


def _subset_chain_instance(rng):
    su = _random_subset(rng, 5, max_polymers=8)
    xi = 1 + Fraction(rng.randint(4, 8), 8)
    w = pg.SiteWeights.from_xi({x: xi for x in su.sites})
    counts = {x: len(su.polymers_at_site(x)) for x in su.sites}
    rho = {}
    for pid in su.polymer_ids:
        sup = su.support_of(pid)
        cap = min((w.xi_of(x) - 1) / (counts[x] * w.xi_prod(sup)) for x in sup)
        rho[pid] = cap * Fraction(rng.randint(1, 2), 4)
    engine = pg.SubsetKSEngine(su)
    return engine, w, rho


def _abstract_chain_instance(rng):
    u = _random_abstract(rng, 6)
    xi = 1 + Fraction(rng.randint(4, 8), 8)
    w = pg.PolymerWeights.from_xi({g: xi for g in u.polymers})
    rho = {}
    for g in u.polymers:
        nbhd = pg.neighborhood(u, [g])
        cap = (w.xi_of(g) - 1) / w.xi_prod(nbhd)
        rho[g] = cap * Fraction(rng.randint(1, 2), 4)
    engine = pg.AbstractKSEngine(u)
    return engine, w, rho


def test_criterion_5_iteration_chain():
    rng = random.Random(SEED + 5)
    failures = []
    steps = 6
    for i in range(100):
        engine, w, rho = (
            _subset_chain_instance(rng) if i % 2 == 0 else _abstract_chain_instance(rng)
        )
        tracked = engine.default_tracked()
        trace = engine.iterate(w, rho, steps, tracked)
        if not (trace.start_ok and trace.monotone_ok and trace.dominates_ok):
            failures.append(f"[{i}] chain verdicts {trace.start_ok} {trace.monotone_ok} {trace.dominates_ok}")
            continue

        # exact-arithmetic bracket: partials are nondecreasing and stay
        # below the next iterate of the factorized start
        X = rng.choice(tracked)
        partials = engine.neumann_partials(rho, steps, X)
        if any(a > b for a, b in zip(partials, partials[1:])):
            failures.append(f"[{i}] partials decreased")
        levels = [pg.RegionFunction.factorized(engine.kind, w)]
        for _ in range(steps + 1):
            levels.append(engine.apply_t(levels[-1], rho))
        for k in range(steps + 1):
            if partials[k] > levels[k + 1].value(X):
                failures.append(f"[{i}] bracket violated at k={k}")
                break

        # float convergence with a rate no worse than the certified norm
        nb = pg.ks_norm_bound(engine.su if hasattr(engine, "su") else engine.universe, rho, w)
        if not nb.contraction:
            continue
        rho_f = {pid: float(r) for pid, r in rho.items()}
        exact_f = float(engine.exact_ratio(X, {pid: -r for pid, r in rho.items()}))
        floats = engine.neumann_partials(rho_f, 200, X)
        errors = [abs(exact_f - p) for p in floats]
        if min(errors) >= 1e-9:
            failures.append(f"[{i}] no convergence below 1e-9 in 200 steps")
            continue
        live = [k for k, e in enumerate(errors) if e > 1e-12]
        if len(live) >= 6:
            k_mid = live[len(live) // 2]
            k_end = live[-1]
            if k_end > k_mid:
                rate = (errors[k_end] / errors[k_mid]) ** (1.0 / (k_end - k_mid))
                if rate > float(nb.bound) + 0.01:
                    failures.append(f"[{i}] observed rate {rate:.4f} > norm {float(nb.bound):.4f} + 0.01")
    _report(5, failures, "(100 instances, 6 iterations each)")


# ---------------------------------------------------------------------------
# 6. scalar radius optimization oracle
# ---------------------------------------------------------------------------


def test_criterion_6_radius_optimization():
    failures = []
    started = time.time()
    built = pg.build(pg.generate_model("cycle", n=9))
    u = built.universe

    d = pg.optimize_uniform_weight(u, "dobrushin")
    if abs(d.radius - 4.0 / 27.0) > 1e-6:
        failures.append(f"dobrushin radius {d.radius}")
    if abs(d.weight - 0.5) > 1e-4:
        failures.append(f"dobrushin argmax {d.weight}")

    f = pg.optimize_uniform_weight(u, "fp")
    if abs(f.radius - 0.2) > 1e-6:
        failures.append(f"fp radius {f.radius}")
    if abs(f.weight - 1.0) > 1e-4:
        failures.append(f"fp argmax {f.weight}")

    # the sharper criterion certifies rho = 1/5, which the product criterion
    # does not reach, and the partition function is indeed positive there
    xi_at_edge = pg.partition_function(u, None, Fraction(-1, 5))
    if xi_at_edge != Fraction(34, 625):
        failures.append(f"Xi at -1/5 is {xi_at_edge}")
    if not (xi_at_edge > 0 and 4.0 / 27.0 < 0.2):
        failures.append("certification gap not confirmed")

    elapsed = time.time() - started
    if elapsed >= 10:
        failures.append(f"runtime {elapsed:.1f}s >= 10s")
    _report(6, failures, f"({elapsed:.2f}s)")


# ---------------------------------------------------------------------------
# 7. criterion ordering
# ---------------------------------------------------------------------------


def test_criterion_7_phi_ordering_and_chain():
    rng = random.Random(SEED + 7)
    failures = []
    draws = 0
    while draws < 1000:
        u = _random_abstract(rng, 8)
        mu = {g: Fraction(rng.randint(0, 16), 8) for g in u.polymers}
        w = pg.PolymerWeights.from_mu(mu)
        for g in u.polymers:
            fp = float(pg.phi_value(u, g, w, "fp"))
            d = float(pg.phi_value(u, g, w, "dobrushin"))
            kp = float(pg.phi_value(u, g, w, "kp"))
            if not (fp <= d * (1 + 1e-12) and d <= kp * (1 + 1e-12)):
                failures.append(f"ordering {g}: {fp} {d} {kp}")
            draws += 1
        # report-level implications with radii straddling the thresholds
        rho = {}
        for g in u.polymers:
            base = mu[g] / Fraction(pg.phi_value(u, g, w, "dobrushin"))
            rho[g] = base * Fraction(rng.randint(0, 12), 8)
        cmp = pg.compare_criteria(u, rho, w)
        if not cmp.chain_ok:
            failures.append("implication chain violated")
    _report(7, failures, f"({draws} draws)")


# ---------------------------------------------------------------------------
# 8. window uniformity of the certified per-site bound
# ---------------------------------------------------------------------------


def test_criterion_8_window_uniformity_probe():
    # Finite surrogate only: one weight family, margins cleared on the full
    # ground set, must certify the same per-site bound on every nested
    # window.  This probes uniformity in the window, not any limit.
    failures = []
    spec = pg.generate_model("subsets-on-interval", n=8, k=2)
    built = pg.build(spec)
    su = built.universe
    w = pg.SiteWeights.from_a({x: 0.5 for x in su.sites})
    rho = 0.08

    ext = pg.check_criterion(su, rho, w, "ext-gk")
    if not ext.holds or any(m < 0 for m in ext.margins.values()):
        failures.append("ext-gk margins not cleared on the ground set")

    windows = [["1", "2", "3"], ["1", "2", "3", "4", "5"], list(su.sites)]
    for lam in windows:
        report = pg.inductive_bound_report(su, lam, rho, w)
        if not report.holds:
            failures.append(f"margins failed on window {lam}")
            continue
        for check in report.site_checks:
            if not check.ok:
                failures.append(f"site bound failed at {check.sites} on {lam}")
            if abs(float(check.bound) - math.exp(0.5)) > 1e-12:
                failures.append("per-site bound drifted across windows")
        for check in report.region_checks:
            if not check.ok:
                failures.append(f"region bound failed at {check.sites} on {lam}")
    _report(8, failures, "(3 nested windows)")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            fn()

"""Command-line driver tying the modules into reproducible runs.

    polygas <command> --model spec.toml [--out DIR] [--mode exact|float]
            [--seed N] [--max-order N] [--ks-steps K] [--kind KIND]

Commands: xi, theta, criteria, bounds, ks-iterate, neumann,
verify-identities, radius-opt, compare.  Every run writes report.csv and
report.json into the output directory; ks-iterate and neumann add
trace.csv; xi adds mayer.csv when a partial-sum order is set.

Exit codes: 0 on success, 2 when a command that needs a certified weight
family finds its precondition violated (the report is still written), and
1 on errors.  Reports are deterministic for a fixed spec and seed.
"""

from __future__ import annotations

import argparse
import math
import os
import random
import sys
from typing import Optional

from . import criteria as crit
from . import gas, ks, models, subset
from .errors import (
    DivergenceIndicator,
    ModelError,
    NonHomogeneousModel,
    PolygasError,
    PrecheckFailure,
)
from .gas import ActivityMap
from .reporting import write_csv, write_json, write_report
from .subset import SubsetUniverse
from .values import is_exact
from .weights import PolymerWeights, SiteWeights

REPORT_FIELDS = (
    "kind",
    "element",
    "margin",
    "holds",
    "bound_kind",
    "bound_value",
    "exact_value",
    "slack",
)
TRACE_FIELDS = ("iteration", "X", "value", "exact", "slack")
IDENTITY_FIELDS = ("identity", "instance", "residual", "ok")


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except PrecheckFailure as exc:
        print(f"precheck failed: {exc}", file=sys.stderr)
        return 2
    except PolygasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polygas",
        description="hard-core polymer gas computations and criterion checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in models.COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model", required=True, help="model file (TOML or JSON)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--mode", choices=("exact", "float"))
        p.add_argument("--seed", type=int)
        p.add_argument("--max-order", type=int, dest="max_order")
        p.add_argument("--ks-steps", type=int, dest="ks_steps")
        if name in ("radius-opt", "bounds"):
            p.add_argument("--kind", help="criterion kind")
    return parser


def _load(args) -> models.BuiltModel:
    doc = models.read_model_doc(args.model)
    run = dict(doc.get("run", {}))
    if args.mode:
        run["mode"] = args.mode
    if args.seed is not None:
        run["seed"] = args.seed
    if args.ks_steps is not None:
        run["ks_steps"] = args.ks_steps
    if args.max_order is not None:
        run["max_order"] = args.max_order
    doc = dict(doc)
    doc["run"] = run
    return models.build(models.model_from_dict(doc))


def _meta(built: models.BuiltModel, command: str) -> dict:
    return {
        "command": command,
        "mode": built.spec.run.mode,
        "seed": built.spec.run.seed,
    }


def _dispatch(args) -> int:
    built = _load(args)
    handler = {
        "xi": _cmd_xi,
        "theta": _cmd_theta,
        "criteria": _cmd_criteria,
        "bounds": _cmd_bounds,
        "ks-iterate": _cmd_ks_iterate,
        "neumann": _cmd_neumann,
        "verify-identities": _cmd_verify,
        "radius-opt": _cmd_radius_opt,
        "compare": _cmd_compare,
    }[args.command]
    return handler(built, args)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _eval_points(built: models.BuiltModel):
    spec = built.spec
    points = []
    if spec.z is not None:
        points.append(("z", spec.z))
    points.append(("+rho", dict(spec.rho)))
    points.append(("-rho", {pid: -r for pid, r in spec.rho.items()}))
    return points


def _region_xi(built: models.BuiltModel, zmap):
    if isinstance(built.universe, SubsetUniverse):
        return subset.region_partition_function(built.universe, None, zmap)
    return gas.partition_function(built.universe, None, zmap)


def _cmd_xi(built: models.BuiltModel, args) -> int:
    rows = []
    for label, zmap in _eval_points(built):
        value = _region_xi(built, zmap)
        size = len(built.spec.sites or built.spec.polymer_ids)
        pressure = math.log(float(value)) / size if value > 0 else None
        rows.append({"point": label, "xi": value, "pressure": pressure})
    write_report(args.out, ("point", "xi", "pressure"), rows, _meta(built, "xi"))

    order = built.spec.run.max_order
    if order:
        base = built.base_universe
        region = (
            built.universe.polymers_in_region(None)
            if isinstance(built.universe, SubsetUniverse)
            else None
        )
        mrows = []
        for label, zmap in _eval_points(built):
            xi_val = _region_xi(built, zmap)
            log_xi = math.log(float(xi_val)) if xi_val > 0 else None
            for n in range(1, order + 1):
                partial = gas.mayer_partial_sum(base, region, zmap, n, n_max=order)
                err = abs(float(partial) - log_xi) if log_xi is not None else None
                mrows.append(
                    {"point": label, "order": n, "partial": partial, "log_xi": log_xi, "abs_error": err}
                )
        write_csv(
            os.path.join(args.out, "mayer.csv"),
            ("point", "order", "partial", "log_xi", "abs_error"),
            mrows,
            _meta(built, "xi"),
        )
    return 0


def _cmd_theta(built: models.BuiltModel, args) -> int:
    spec = built.spec
    rows = []
    am = built.activities
    if isinstance(built.universe, SubsetUniverse):
        su = built.universe
        for x in su.sites:
            row = {"kind": "site", "element": x, "ok": True}
            try:
                row["theta_abs"] = subset.site_theta(su, None, x, am, "abs")
                row["pi_abs"] = subset.site_reduced_correlation(
                    su, None, [x], {pid: -r for pid, r in spec.rho.items()}
                )
            except PolygasError:
                row["ok"] = False
            rows.append(row)
    else:
        u = built.universe
        for g in u.polymers:
            row = {"kind": "polymer", "element": g, "ok": True}
            try:
                row["theta_abs"] = gas.theta(u, None, g, am, "abs")
                row["pi_abs"] = gas.pi(u, None, g, am, "abs")
            except DivergenceIndicator:
                row["ok"] = False
            rows.append(row)
    fields = ("kind", "element", "theta_abs", "pi_abs", "ok")
    write_report(args.out, fields, rows, _meta(built, "theta"))
    return 0


def _require_weights(built: models.BuiltModel):
    if built.weights is None:
        raise ModelError("this command needs a [weights] table in the model")
    return built.weights


def _cmd_criteria(built: models.BuiltModel, args) -> int:
    weights = _require_weights(built)
    comparison = crit.compare_criteria(built.universe, built.spec.rho, weights)
    wanted = built.spec.run.criteria or tuple(comparison.reports)
    rows = []
    for kind in wanted:
        if kind not in comparison.reports:
            raise ModelError(f"criterion {kind!r} is not applicable to this model")
        report = comparison.reports[kind]
        for element, margin in report.margins.items():
            rows.append(
                {"kind": kind, "element": element, "margin": margin, "holds": report.holds}
            )
    meta = _meta(built, "criteria")
    meta["chain_ok"] = comparison.chain_ok
    write_report(args.out, REPORT_FIELDS, rows, meta)
    return 0


def _cmd_compare(built: models.BuiltModel, args) -> int:
    weights = _require_weights(built)
    comparison = crit.compare_criteria(built.universe, built.spec.rho, weights)
    rows = []
    for kind, report in comparison.reports.items():
        worst_element, worst_margin = report.worst
        rows.append(
            {
                "kind": kind,
                "element": worst_element,
                "margin": worst_margin,
                "holds": report.holds,
            }
        )
    meta = _meta(built, "compare")
    meta["chain_ok"] = comparison.chain_ok
    write_report(args.out, REPORT_FIELDS, rows, meta)
    return 0


_BOUND_CRITERION = {
    "theta-dobrushin": "dobrushin",
    "pi-dobrushin": "dobrushin",
    "theta-fp": "fp",
    "pi-fp": "fp",
    "theta-ext-gk": "ext-gk",
    "theta-gk-strict": "gk-strict",
}


def _cmd_bounds(built: models.BuiltModel, args) -> int:
    weights = _require_weights(built)
    universe = built.universe
    spec = built.spec
    am = built.activities
    su = universe if isinstance(universe, SubsetUniverse) else None
    base = built.base_universe
    rows = []

    wanted = [k for k in crit.BOUND_KINDS]
    if getattr(args, "kind", None):
        wanted = [k for k in wanted if _BOUND_CRITERION[k] == args.kind]

    reports = {}
    for bound_kind in wanted:
        ckind = _BOUND_CRITERION[bound_kind]
        try:
            if ckind not in reports:
                reports[ckind] = crit.check_criterion(universe, spec.rho, weights, ckind)
        except (PolygasError, ValueError):
            continue
        report = reports[ckind]
        if bound_kind in ("theta-ext-gk",):
            targets = su.sites if su is not None else ()
        elif bound_kind == "theta-gk-strict":
            targets = ("(all)",) if su is not None else ()
        else:
            targets = base.polymers
        for target in targets:
            row = {
                "kind": ckind,
                "element": target,
                "holds": report.holds,
                "bound_kind": bound_kind,
            }
            margin = report.margins.get(target)
            if margin is not None:
                row["margin"] = margin
            try:
                row["bound_value"] = crit.bound_value(
                    universe, None if target == "(all)" else target, spec.rho, weights, bound_kind
                )
            except (PolygasError, ValueError):
                continue
            exact = _exact_pinned(built, bound_kind, target, am)
            if exact is not None:
                row["exact_value"] = exact
                row["slack"] = float(row["bound_value"]) - float(exact)
            rows.append(row)
    write_report(args.out, REPORT_FIELDS, rows, _meta(built, "bounds"))
    return 0


def _exact_pinned(built: models.BuiltModel, bound_kind: str, target, am: ActivityMap):
    su = built.universe if isinstance(built.universe, SubsetUniverse) else None
    base = built.base_universe
    try:
        if bound_kind.startswith("theta-ext") and su is not None:
            return subset.site_theta(su, None, target, am, "abs")
        if bound_kind == "theta-gk-strict":
            return None
        if bound_kind.startswith("theta"):
            return gas.theta(base, None, target, am, "abs")
        return gas.pi(base, None, target, am, "abs")
    except DivergenceIndicator:
        return None


def _engine_and_weights(built: models.BuiltModel):
    weights = _require_weights(built)
    if isinstance(built.universe, SubsetUniverse):
        if not isinstance(weights, SiteWeights):
            raise ModelError("subset iteration needs site-scoped weights")
        return ks.SubsetKSEngine(built.universe), weights
    if not isinstance(weights, PolymerWeights):
        raise ModelError("abstract iteration needs polymer-scoped weights")
    return ks.AbstractKSEngine(built.universe), weights


def _tracked(built: models.BuiltModel, engine):
    groups = built.spec.run.tracked
    if groups:
        return [frozenset(g) for g in groups]
    return engine.default_tracked()


def _cmd_ks_iterate(built: models.BuiltModel, args) -> int:
    engine, weights = _engine_and_weights(built)
    tracked = _tracked(built, engine)
    steps = built.spec.run.ks_steps
    try:
        trace = engine.iterate(weights, built.spec.rho, steps, tracked)
    except PrecheckFailure as exc:
        margins = engine.precheck_margins(weights, built.spec.rho)
        rows = [
            {"kind": "precheck", "element": e, "margin": m, "holds": m >= 0}
            for e, m in margins.items()
        ]
        write_report(args.out, REPORT_FIELDS, rows, _meta(built, "ks-iterate"))
        print(f"precheck failed: {exc}", file=sys.stderr)
        return 2
    rows = [
        {"iteration": r.iteration, "X": r.X, "value": r.value, "exact": r.exact, "slack": r.slack}
        for r in trace.rows
    ]
    os.makedirs(args.out, exist_ok=True)
    write_csv(os.path.join(args.out, "trace.csv"), TRACE_FIELDS, rows, _meta(built, "ks-iterate"))
    write_json(os.path.join(args.out, "trace.json"), rows, _meta(built, "ks-iterate"))
    summary = [
        {"kind": "precheck", "element": e, "margin": m, "holds": m >= 0}
        for e, m in trace.margins.items()
    ]
    summary.append({"kind": "verdict", "element": "start", "holds": trace.start_ok})
    summary.append({"kind": "verdict", "element": "monotone", "holds": trace.monotone_ok})
    summary.append({"kind": "verdict", "element": "dominates", "holds": trace.dominates_ok})
    write_report(args.out, REPORT_FIELDS, summary, _meta(built, "ks-iterate"))
    return 0


def _cmd_neumann(built: models.BuiltModel, args) -> int:
    engine = (
        ks.SubsetKSEngine(built.universe)
        if isinstance(built.universe, SubsetUniverse)
        else ks.AbstractKSEngine(built.universe)
    )
    steps = built.spec.run.ks_steps
    rho = built.spec.rho
    minus = {pid: -r for pid, r in rho.items()}
    tracked = _tracked(built, engine)
    rows = []
    for X in tracked:
        partials = engine.neumann_partials(rho, steps, X)
        exact = engine.exact_ratio(X, minus)
        for k, value in enumerate(partials):
            rows.append(
                {"iteration": k, "X": X, "value": value, "exact": exact, "slack": exact - value}
            )
    os.makedirs(args.out, exist_ok=True)
    write_csv(os.path.join(args.out, "trace.csv"), TRACE_FIELDS, rows, _meta(built, "neumann"))
    write_json(os.path.join(args.out, "trace.json"), rows, _meta(built, "neumann"))
    write_report(args.out, TRACE_FIELDS, rows, _meta(built, "neumann"))
    return 0


def _cmd_verify(built: models.BuiltModel, args) -> int:
    spec = built.spec
    rng = random.Random(spec.run.seed)
    zmap = dict(spec.z) if spec.z is not None else dict(spec.rho)
    rows = []
    exact_mode = all(is_exact(v) for v in zmap.values())
    tol = 0 if exact_mode else 1e-12

    def record(identity, instance, residual):
        ok = residual == 0 if exact_mode else abs(float(residual)) <= tol
        rows.append(
            {"identity": identity, "instance": instance, "residual": residual, "ok": ok}
        )

    base = built.base_universe
    polymers = list(base.polymers)
    trials = 12
    for _ in range(trials):
        g0 = rng.choice(polymers)
        others = [g for g in polymers if g != g0]
        Z = [g for g in others if rng.random() < 0.5]
        res = gas.fundamental_identity_residual(base, Z, g0, zmap)
        record("polymer-addition", f"Z={len(Z)} g0={g0}", res)

    order = list(polymers)
    rng.shuffle(order)
    try:
        res = gas.telescope_residual(base, None, ActivityMap.build(base, zmap), order=order)
        record("theta-telescope", "full region", res)
    except PolygasError:
        pass

    if isinstance(built.universe, SubsetUniverse):
        su = built.universe
        sites = list(su.sites)
        for _ in range(trials):
            x = rng.choice(sites)
            Y = [s for s in sites if s != x and rng.random() < 0.5]
            record("site-addition", f"|Y|={len(Y)} x={x}", subset.site_addition_residual(su, Y, x, zmap))
        for _ in range(trials):
            X = [s for s in sites if rng.random() < 0.4] or [rng.choice(sites)]
            record(
                "site-deletion",
                f"X={'+'.join(X)}",
                subset.site_deletion_residual(su, None, X, zmap),
            )
        engine = ks.SubsetKSEngine(su)
        for _ in range(trials):
            X = [s for s in sites if rng.random() < 0.4] or [rng.choice(sites)]
            record("pivot-equation", f"X={'+'.join(X)}", engine.residual(X, zmap))
        try:
            record("site-telescope", "full region", subset.site_telescope_residual(su, None, zmap))
        except PolygasError:
            pass
    else:
        engine = ks.AbstractKSEngine(base)
        for _ in range(trials):
            X = [g for g in polymers if rng.random() < 0.4] or [rng.choice(polymers)]
            record("pivot-equation", f"X={'+'.join(str(g) for g in X)}", engine.residual(X, zmap))

    write_report(args.out, IDENTITY_FIELDS, rows, _meta(built, "verify-identities"))
    return 0 if all(r["ok"] for r in rows) else 1


def _cmd_radius_opt(built: models.BuiltModel, args) -> int:
    kind = getattr(args, "kind", None)
    if not kind:
        raise ModelError("radius-opt needs --kind (kp, dobrushin, fp, ext-gk)")
    w = built.spec.weights
    if w is not None and len(set(w.values.values())) > 1:
        raise NonHomogeneousModel("radius-opt optimizes a single scalar weight")
    result = crit.optimize_uniform_weight(built.universe, kind)
    rows = [
        {
            "kind": kind,
            "weight": result.weight,
            "radius": result.radius,
            "boundary": result.boundary,
        }
    ]
    write_report(args.out, ("kind", "weight", "radius", "boundary"), rows, _meta(built, "radius-opt"))
    return 0


if __name__ == "__main__":
    sys.exit(main())

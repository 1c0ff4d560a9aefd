"""Model files, built-in generators, and model construction.

Models are TOML documents (JSON is accepted as an alternate input syntax)
with a mandatory ``schema = 1`` key.  Structure:

    [universe]        kind = "abstract" | "subset"; sites = [...] for subset
    [[polymer]]       id = "...", support = ["..."] for subset gases
    [incompatibility] pairs = [["a","b"], ...]  or  rule = "intersection"
    [activity]        rho = {id = value, ...} or uniform = value;
                      optional signed z = {...} or z_uniform = value
    [weights]         one of mu / xi / a; scalar means uniform
                      (site scope on subset models, polymer scope otherwise)
    [run]             commands, criteria, ks_steps, tracked, mode, seed,
                      max_order
    [generator]       family + parameters, instead of universe/polymer

Numbers may be written as TOML numbers or as "p/q" strings; in exact mode
decimals load as the rational they print as.  Specs normalize uniform
entries to per-element maps, so save -> load round-trips to an equal spec.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python 3.10
    import tomli as _toml

from .errors import ModelError, ResourceLimit
from .gas import ActivityMap, PolymerUniverse, build_universe
from .subset import SubsetUniverse, build_subset_universe
from .values import Num, format_num, is_exact, parse_num
from .weights import PolymerWeights, SiteWeights

SCHEMA_VERSION = 1
EXACT_DEFAULT_LIMIT = 12
SINGLE_SITE_CAP = 24
GROUND_SET_CAP = 16

GENERATOR_FAMILIES = (
    "path",
    "cycle",
    "grid",
    "subsets-on-interval",
    "isolated",
    "triangle",
)

COMMANDS = (
    "xi",
    "theta",
    "criteria",
    "bounds",
    "ks-iterate",
    "neumann",
    "verify-identities",
    "radius-opt",
    "compare",
)


@dataclass(frozen=True)
class WeightsSpec:
    kind: str  # "mu" | "xi" | "a"
    scope: str  # "polymer" | "site"
    values: Mapping  # element id -> Num


@dataclass(frozen=True)
class RunSpec:
    commands: tuple = ()
    criteria: tuple = ()
    ks_steps: int = 6
    tracked: tuple = ()
    mode: str = "exact"
    seed: int = 0
    max_order: Optional[int] = None


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # "abstract" | "subset"
    polymer_ids: tuple
    sites: tuple = ()
    supports: Mapping = field(default_factory=dict)  # id -> tuple of sites
    pairs: tuple = ()
    rule: str = "pairs"  # "pairs" | "intersection"
    rho: Mapping = field(default_factory=dict)
    z: Optional[Mapping] = None
    weights: Optional[WeightsSpec] = None
    run: RunSpec = field(default_factory=RunSpec)


@dataclass(frozen=True)
class BuiltModel:
    spec: ModelSpec
    universe: Union[PolymerUniverse, SubsetUniverse]
    activities: ActivityMap
    weights: Optional[Union[PolymerWeights, SiteWeights]]

    @property
    def base_universe(self) -> PolymerUniverse:
        u = self.universe
        return u.universe if isinstance(u, SubsetUniverse) else u


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def generate_model(family: str, **params) -> ModelSpec:
    """Built-in fixture families.

    path n / cycle n / grid w h: one single-site polymer per vertex with
    graph adjacency as incompatibility.  subsets-on-interval n k: ground set
    1..n with every integer interval of length <= k as a polymer.  isolated:
    one polymer.  triangle: three pairwise-incompatible polymers.
    """
    if family == "path" or family == "cycle":
        n = int(params.pop("n"))
        if not 1 <= n <= SINGLE_SITE_CAP:
            raise ResourceLimit(f"{family} size {n} exceeds the cap {SINGLE_SITE_CAP}")
        ids = tuple(f"v{i}" for i in range(n))
        pairs = [(f"v{i}", f"v{i+1}") for i in range(n - 1)]
        if family == "cycle" and n > 2:
            pairs.append((f"v{n-1}", "v0"))
        spec = _abstract_spec(ids, pairs)
    elif family == "grid":
        w, h = int(params.pop("w")), int(params.pop("h"))
        if w < 1 or h < 1 or w * h > SINGLE_SITE_CAP:
            raise ResourceLimit(f"grid {w}x{h} exceeds the cap {SINGLE_SITE_CAP}")
        ids = tuple(f"v{r},{c}" for r in range(h) for c in range(w))
        pairs = []
        for r in range(h):
            for c in range(w):
                if c + 1 < w:
                    pairs.append((f"v{r},{c}", f"v{r},{c+1}"))
                if r + 1 < h:
                    pairs.append((f"v{r},{c}", f"v{r+1},{c}"))
        spec = _abstract_spec(ids, pairs)
    elif family == "subsets-on-interval":
        n, k = int(params.pop("n")), int(params.pop("k"))
        if not 1 <= n <= GROUND_SET_CAP:
            raise ResourceLimit(f"ground set size {n} exceeds the cap {GROUND_SET_CAP}")
        if k < 1:
            raise ModelError("interval generator needs k >= 1")
        sites = tuple(str(i) for i in range(1, n + 1))
        supports = {}
        for a in range(1, n + 1):
            for b in range(a, min(a + k - 1, n) + 1):
                pid = str(a) if a == b else f"{a}-{b}"
                supports[pid] = tuple(str(i) for i in range(a, b + 1))
        ids = tuple(sorted(supports, key=lambda p: (len(supports[p]), supports[p])))
        spec = ModelSpec(
            kind="subset",
            polymer_ids=ids,
            sites=sites,
            supports=supports,
            rule="intersection",
            rho={pid: 0 for pid in ids},
        )
    elif family == "isolated":
        spec = _abstract_spec(("g0",), [])
    elif family == "triangle":
        spec = _abstract_spec(
            ("g0", "g1", "g2"), [("g0", "g1"), ("g0", "g2"), ("g1", "g2")]
        )
    else:
        raise ModelError(f"unknown generator family {family!r}")
    if params:
        raise ModelError(f"unused generator parameters: {sorted(params)}")
    return spec


def _abstract_spec(ids: tuple, pairs: list) -> ModelSpec:
    return ModelSpec(
        kind="abstract",
        polymer_ids=ids,
        pairs=tuple(tuple(p) for p in pairs),
        rule="pairs",
        rho={pid: 0 for pid in ids},
    )


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def read_model_doc(path: str) -> dict:
    """Read the raw model document (TOML, or JSON by extension)."""
    with open(path, "rb") as handle:
        text = handle.read()
    if str(path).endswith(".json"):
        try:
            return json.loads(text.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ModelError(f"JSON parse error in {path}: {exc}") from exc
    try:
        return _toml.loads(text.decode("utf-8"))
    except _toml.TOMLDecodeError as exc:
        raise ModelError(f"TOML parse error in {path}: {exc}") from exc


def load_model(path: str) -> ModelSpec:
    """Parse and validate a model file (TOML, or JSON by extension)."""
    return model_from_dict(read_model_doc(path))


def model_from_dict(doc: Mapping) -> ModelSpec:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ModelError("model file must declare schema = 1")

    if "generator" in doc:
        gen = dict(doc["generator"])
        family = gen.pop("family", None)
        if family not in GENERATOR_FAMILIES:
            raise ModelError(f"unknown generator family {family!r}")
        spec = generate_model(family, **gen)
    else:
        spec = _structure_from_dict(doc)

    run = _run_from_dict(doc.get("run", {}), len(spec.polymer_ids))
    exact = run.mode == "exact"
    spec = replace(spec, run=run)
    spec = _apply_activity(spec, doc.get("activity", {}), exact)
    spec = _apply_weights(spec, doc.get("weights", {}), exact)
    _validate_tracked(spec)
    return spec


def _structure_from_dict(doc: Mapping) -> ModelSpec:
    uni = doc.get("universe")
    if not isinstance(uni, Mapping):
        raise ModelError("missing [universe] table")
    kind = uni.get("kind")
    if kind not in ("abstract", "subset"):
        raise ModelError(f"universe.kind must be 'abstract' or 'subset', got {kind!r}")
    decls = doc.get("polymer", [])
    if not isinstance(decls, list) or not decls:
        raise ModelError("at least one [[polymer]] entry is required")
    inc = doc.get("incompatibility", {})

    if kind == "subset":
        sites = tuple(str(x) for x in uni.get("sites", ()))
        if not sites:
            raise ModelError("subset universes need universe.sites")
        if len(sites) > GROUND_SET_CAP:
            raise ResourceLimit(f"ground set exceeds the cap {GROUND_SET_CAP}")
        site_set = set(sites)
        supports = {}
        ids = []
        for decl in decls:
            pid = decl.get("id")
            if pid is None:
                raise ModelError("every polymer needs an id")
            pid = str(pid)
            if pid in supports:
                raise ModelError(f"duplicate polymer id {pid!r}")
            sup = decl.get("support")
            if not sup:
                raise ModelError(f"polymer {pid!r} needs a nonempty support")
            sup = tuple(str(x) for x in sup)
            for x in sup:
                if x not in site_set:
                    raise ModelError(f"polymer {pid!r} uses unknown site {x!r}")
            supports[pid] = sup
            ids.append(pid)
        if inc.get("rule", "intersection") != "intersection":
            raise ModelError("subset universes use rule = 'intersection'")
        order = sorted(
            ids,
            key=lambda p: (len(supports[p]), tuple(sorted(sites.index(x) for x in supports[p]))),
        )
        return ModelSpec(
            kind="subset",
            polymer_ids=tuple(order),
            sites=sites,
            supports=supports,
            rule="intersection",
            rho={pid: 0 for pid in order},
        )

    ids = []
    seen = set()
    for decl in decls:
        pid = decl.get("id")
        if pid is None:
            raise ModelError("every polymer needs an id")
        pid = str(pid)
        if pid in seen:
            raise ModelError(f"duplicate polymer id {pid!r}")
        seen.add(pid)
        ids.append(pid)
    pairs = []
    for pair in inc.get("pairs", ()):
        if len(pair) != 2:
            raise ModelError(f"incompatibility pair {pair!r} must have two ids")
        a, b = str(pair[0]), str(pair[1])
        for e in (a, b):
            if e not in seen:
                raise ModelError(f"incompatibility pair uses unknown id {e!r}")
        pairs.append((a, b))
    return ModelSpec(
        kind="abstract",
        polymer_ids=tuple(ids),
        pairs=tuple(pairs),
        rule="pairs",
        rho={pid: 0 for pid in ids},
    )


def _run_from_dict(raw: Mapping, n_polymers: int) -> RunSpec:
    mode = raw.get("mode", "exact" if n_polymers <= EXACT_DEFAULT_LIMIT else "float")
    if mode not in ("exact", "float"):
        raise ModelError(f"run.mode must be 'exact' or 'float', got {mode!r}")
    commands = tuple(raw.get("commands", ()))
    for c in commands:
        if c not in COMMANDS:
            raise ModelError(f"unknown command {c!r}")
    tracked = tuple(tuple(str(e) for e in group) for group in raw.get("tracked", ()))
    max_order = raw.get("max_order")
    return RunSpec(
        commands=commands,
        criteria=tuple(raw.get("criteria", ())),
        ks_steps=int(raw.get("ks_steps", 6)),
        tracked=tracked,
        mode=mode,
        seed=int(raw.get("seed", 0)),
        max_order=None if max_order is None else int(max_order),
    )


def _apply_activity(spec: ModelSpec, raw: Mapping, exact: bool) -> ModelSpec:
    rho = dict(spec.rho)
    if "uniform" in raw and "rho" in raw:
        raise ModelError("give activity.rho or activity.uniform, not both")
    if "uniform" in raw:
        value = parse_num(raw["uniform"], exact)
        rho = {pid: value for pid in spec.polymer_ids}
    elif "rho" in raw:
        table = raw["rho"]
        rho = {pid: 0 for pid in spec.polymer_ids}
        for pid, v in table.items():
            if pid not in rho:
                raise ModelError(f"activity.rho references unknown polymer {pid!r}")
            rho[pid] = parse_num(v, exact)
    for pid, v in rho.items():
        if v < 0:
            raise ModelError(f"rho[{pid!r}] must be nonnegative")
    z = None
    if "z_uniform" in raw:
        value = parse_num(raw["z_uniform"], exact)
        z = {pid: value for pid in spec.polymer_ids}
    elif "z" in raw:
        z = {pid: 0 for pid in spec.polymer_ids}
        for pid, v in raw["z"].items():
            if pid not in z:
                raise ModelError(f"activity.z references unknown polymer {pid!r}")
            z[pid] = parse_num(v, exact)
    return replace(spec, rho=rho, z=z)


def _apply_weights(spec: ModelSpec, raw: Mapping, exact: bool) -> ModelSpec:
    kinds = [k for k in ("mu", "xi", "a") if k in raw]
    if not kinds:
        return spec
    if len(kinds) > 1:
        raise ModelError("give exactly one of weights.mu / weights.xi / weights.a")
    kind = kinds[0]
    scope = raw.get("scope", "site" if spec.kind == "subset" else "polymer")
    if scope not in ("site", "polymer"):
        raise ModelError(f"weights.scope must be 'site' or 'polymer', got {scope!r}")
    if scope == "site" and spec.kind != "subset":
        raise ModelError("site-scoped weights need a subset universe")
    elements = spec.sites if scope == "site" else spec.polymer_ids
    raw_values = raw[kind]
    # exponents stay floats: they feed exp() anyway
    want_exact = exact and kind != "a"
    if isinstance(raw_values, Mapping):
        values = {}
        for e, v in raw_values.items():
            if str(e) not in elements:
                raise ModelError(f"weights reference unknown element {e!r}")
            values[str(e)] = parse_num(v, want_exact)
        missing = [e for e in elements if e not in values]
        if missing:
            raise ModelError(f"weights missing for {missing[:3]!r}")
    else:
        value = parse_num(raw_values, want_exact)
        values = {e: value for e in elements}
    return replace(spec, weights=WeightsSpec(kind, scope, values))


def _validate_tracked(spec: ModelSpec):
    elements = set(spec.sites) if spec.kind == "subset" else set(spec.polymer_ids)
    for group in spec.run.tracked:
        if not group:
            raise ModelError("tracked sets must be nonempty")
        for e in group:
            if e not in elements:
                raise ModelError(f"tracked set references unknown element {e!r}")


# ---------------------------------------------------------------------------
# saving
# ---------------------------------------------------------------------------


def save_model(spec: ModelSpec, path: str):
    """Write the spec as deterministic TOML that loads back equal."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(model_to_toml(spec))


def model_to_toml(spec: ModelSpec) -> str:
    out = [f"schema = {SCHEMA_VERSION}", ""]
    out.append("[universe]")
    out.append(f'kind = "{spec.kind}"')
    if spec.kind == "subset":
        out.append("sites = [" + ", ".join(_toml_str(x) for x in spec.sites) + "]")
    out.append("")
    for pid in spec.polymer_ids:
        out.append("[[polymer]]")
        out.append(f"id = {_toml_str(pid)}")
        if spec.kind == "subset":
            sup = spec.supports[pid]
            out.append("support = [" + ", ".join(_toml_str(x) for x in sup) + "]")
        out.append("")
    out.append("[incompatibility]")
    if spec.rule == "intersection":
        out.append('rule = "intersection"')
    else:
        pairs = ", ".join(f"[{_toml_str(a)}, {_toml_str(b)}]" for a, b in spec.pairs)
        out.append(f"pairs = [{pairs}]")
    out.append("")
    out.append("[activity]")
    out.append("rho = {" + ", ".join(
        f"{_toml_key(pid)} = {_toml_num(spec.rho[pid])}" for pid in spec.polymer_ids
    ) + "}")
    if spec.z is not None:
        out.append("z = {" + ", ".join(
            f"{_toml_key(pid)} = {_toml_num(spec.z[pid])}" for pid in spec.polymer_ids
        ) + "}")
    out.append("")
    if spec.weights is not None:
        w = spec.weights
        elements = spec.sites if w.scope == "site" else spec.polymer_ids
        out.append("[weights]")
        out.append(f'scope = "{w.scope}"')
        out.append(f"{w.kind} = {{" + ", ".join(
            f"{_toml_key(e)} = {_toml_num(w.values[e])}" for e in elements
        ) + "}")
        out.append("")
    run = spec.run
    out.append("[run]")
    out.append("commands = [" + ", ".join(_toml_str(c) for c in run.commands) + "]")
    if run.criteria:
        out.append("criteria = [" + ", ".join(_toml_str(c) for c in run.criteria) + "]")
    out.append(f"ks_steps = {run.ks_steps}")
    if run.tracked:
        groups = ", ".join(
            "[" + ", ".join(_toml_str(e) for e in group) + "]" for group in run.tracked
        )
        out.append(f"tracked = [{groups}]")
    out.append(f'mode = "{run.mode}"')
    out.append(f"seed = {run.seed}")
    if run.max_order is not None:
        out.append(f"max_order = {run.max_order}")
    out.append("")
    return "\n".join(out)


def _toml_str(s) -> str:
    escaped = str(s).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def _toml_key(s) -> str:
    return _toml_str(s)


def _toml_num(v: Num) -> str:
    if is_exact(v):
        return _toml_str(format_num(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def build(spec: ModelSpec) -> BuiltModel:
    """Instantiate the universe, activities, and weights of a spec."""
    if spec.kind == "subset":
        universe = build_subset_universe(
            spec.sites,
            supports=[(pid, spec.supports[pid]) for pid in spec.polymer_ids],
        )
        base = universe.universe
    else:
        universe = build_universe(spec.polymer_ids, spec.pairs)
        base = universe
    activities = ActivityMap.build(base, values=spec.z or 0, radii=spec.rho)
    weights = None
    if spec.weights is not None:
        w = spec.weights
        if w.scope == "site":
            if w.kind == "xi":
                weights = SiteWeights.from_xi(w.values)
            elif w.kind == "a":
                weights = SiteWeights.from_a(w.values)
            else:
                raise ModelError("site-scoped weights must be xi or a")
        else:
            ctor = {
                "mu": PolymerWeights.from_mu,
                "xi": PolymerWeights.from_xi,
                "a": PolymerWeights.from_a,
            }[w.kind]
            weights = ctor(w.values)
    return BuiltModel(spec, universe, activities, weights)

"""Declarative ODD specification: parsing, validation, serialization.

The on-disk format is a UTF-8 JSON document with top-level keys
``parameters``, ``criticality_profiles``, ``groupings``, ``constraints``
and ``dataset_mapping``. Parsing is strict: unknown fields and missing
required fields are hard errors, so a typo cannot silently change what
gets verified.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import SpecError

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# bin schemes (tagged union)


@dataclass(frozen=True)
class CountScheme:
    count: int


@dataclass(frozen=True)
class WidthScheme:
    width: float


@dataclass(frozen=True)
class ExplicitEdgesScheme:
    edges: tuple[float, ...]


@dataclass(frozen=True)
class CriticalityScheme:
    profile: str
    count: int


BinScheme = CountScheme | WidthScheme | ExplicitEdgesScheme | CriticalityScheme


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    kind: str = "continuous"  # "continuous" | "categorical"
    unit: str = ""
    range: tuple[float, float] | None = None  # continuous only
    levels: tuple[str, ...] | None = None  # categorical only
    bin_scheme: BinScheme | None = None  # continuous only; categorical = one bin per level


@dataclass(frozen=True)
class CriticalityProfile:
    name: str
    form: str = "uniform"  # "uniform" | "piecewise_linear"
    points: tuple[tuple[float, float], ...] = ()  # (x, c) knots, piecewise_linear only


@dataclass(frozen=True)
class GroupingSpec:
    target_name: str
    sources: tuple[str, ...]
    mode: str = "collapse"  # "collapse" | "map"
    map_table: tuple[tuple[tuple[int, ...], int], ...] = ()  # (source bin tuple, group bin)
    group_bin_count: int = 1


@dataclass(frozen=True)
class ConstraintSpec:
    name: str
    expression: str
    enabled: bool = True


@dataclass(frozen=True)
class OddSpec:
    parameters: tuple[ParameterSpec, ...]
    criticality_profiles: tuple[CriticalityProfile, ...] = ()
    groupings: tuple[GroupingSpec, ...] = ()
    constraints: tuple[ConstraintSpec, ...] = ()
    dataset_mapping: dict[str, str] = field(default_factory=dict)

    def column_for(self, parameter: str) -> str:
        """Dataset column holding `parameter`; defaults to the parameter name."""
        return self.dataset_mapping.get(parameter, parameter)

    def profile_by_name(self, name: str) -> CriticalityProfile | None:
        for p in self.criticality_profiles:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    path: str  # e.g. "parameters[2].range"


# ---------------------------------------------------------------------------
# parsing


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SpecError(f"{path}: missing required field '{key}'")
    return obj[key]


def _check_fields(obj: dict, allowed: set[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise SpecError(f"{path}: unknown field '{key}'")


def _as_real(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _parse_bin_scheme(obj, path: str) -> BinScheme:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise SpecError(
            f"{path}: bin_scheme must be an object with exactly one of "
            "'count', 'width', 'explicit_edges', 'criticality'"
        )
    (key, value), = obj.items()
    if key == "count":
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise SpecError(f"{path}.count: expected a positive integer")
        return CountScheme(value)
    if key == "width":
        width = _as_real(value, f"{path}.width")
        if width <= 0:
            raise SpecError(f"{path}.width: expected a positive number")
        return WidthScheme(width)
    if key == "explicit_edges":
        if not isinstance(value, list) or len(value) < 2:
            raise SpecError(f"{path}.explicit_edges: expected a list of at least 2 numbers")
        return ExplicitEdgesScheme(tuple(_as_real(v, f"{path}.explicit_edges[{i}]") for i, v in enumerate(value)))
    if key == "criticality":
        if not isinstance(value, dict):
            raise SpecError(f"{path}.criticality: expected an object with 'profile' and 'count'")
        _check_fields(value, {"profile", "count"}, f"{path}.criticality")
        profile = _require(value, "profile", f"{path}.criticality")
        count = _require(value, "count", f"{path}.criticality")
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise SpecError(f"{path}.criticality.count: expected a positive integer")
        return CriticalityScheme(str(profile), count)
    raise SpecError(f"{path}: unknown bin_scheme kind '{key}'")


def _parse_parameter(obj, path: str) -> ParameterSpec:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    _check_fields(obj, {"name", "kind", "unit", "range", "levels", "bin_scheme"}, path)
    name = str(_require(obj, "name", path))
    kind = str(obj.get("kind", "continuous"))
    if kind not in ("continuous", "categorical"):
        raise SpecError(f"{path}.kind: expected 'continuous' or 'categorical', got '{kind}'")
    unit = str(obj.get("unit", ""))
    rng = None
    if "range" in obj:
        raw = obj["range"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise SpecError(f"{path}.range: expected [min, max]")
        rng = (_as_real(raw[0], f"{path}.range[0]"), _as_real(raw[1], f"{path}.range[1]"))
    levels = None
    if "levels" in obj:
        raw = obj["levels"]
        if not isinstance(raw, list):
            raise SpecError(f"{path}.levels: expected a list of labels")
        levels = tuple(str(v) for v in raw)
    scheme = _parse_bin_scheme(obj["bin_scheme"], f"{path}.bin_scheme") if "bin_scheme" in obj else None
    return ParameterSpec(name=name, kind=kind, unit=unit, range=rng, levels=levels, bin_scheme=scheme)


def _parse_profile(obj, path: str) -> CriticalityProfile:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    _check_fields(obj, {"name", "form", "points"}, path)
    name = str(_require(obj, "name", path))
    form = str(obj.get("form", "uniform"))
    if form not in ("uniform", "piecewise_linear"):
        raise SpecError(f"{path}.form: expected 'uniform' or 'piecewise_linear', got '{form}'")
    points: tuple[tuple[float, float], ...] = ()
    if "points" in obj:
        raw = obj["points"]
        if not isinstance(raw, list):
            raise SpecError(f"{path}.points: expected a list of [x, c] pairs")
        parsed = []
        for i, pair in enumerate(raw):
            if not isinstance(pair, list) or len(pair) != 2:
                raise SpecError(f"{path}.points[{i}]: expected an [x, c] pair")
            parsed.append((_as_real(pair[0], f"{path}.points[{i}][0]"),
                           _as_real(pair[1], f"{path}.points[{i}][1]")))
        points = tuple(parsed)
    return CriticalityProfile(name=name, form=form, points=points)


def _parse_grouping(obj, path: str) -> GroupingSpec:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    _check_fields(obj, {"target_name", "sources", "mode", "map_table", "group_bin_count"}, path)
    target = str(_require(obj, "target_name", path))
    raw_sources = _require(obj, "sources", path)
    if not isinstance(raw_sources, list) or not raw_sources:
        raise SpecError(f"{path}.sources: expected a non-empty list of parameter names")
    sources = tuple(str(s) for s in raw_sources)
    mode = str(obj.get("mode", "collapse"))
    if mode not in ("collapse", "map"):
        raise SpecError(f"{path}.mode: expected 'collapse' or 'map', got '{mode}'")
    table: tuple[tuple[tuple[int, ...], int], ...] = ()
    if "map_table" in obj:
        raw = obj["map_table"]
        if not isinstance(raw, list):
            raise SpecError(f"{path}.map_table: expected a list of [[source bins...], group bin] entries")
        entries = []
        for i, entry in enumerate(raw):
            if (not isinstance(entry, list) or len(entry) != 2
                    or not isinstance(entry[0], list)):
                raise SpecError(f"{path}.map_table[{i}]: expected [[source bins...], group bin]")
            key = tuple(int(b) for b in entry[0])
            entries.append((key, int(entry[1])))
        table = tuple(entries)
    count = obj.get("group_bin_count", 1)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise SpecError(f"{path}.group_bin_count: expected a positive integer")
    return GroupingSpec(target_name=target, sources=sources, mode=mode,
                        map_table=table, group_bin_count=count)


def _parse_constraint(obj, path: str) -> ConstraintSpec:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    _check_fields(obj, {"name", "expression", "enabled"}, path)
    name = str(_require(obj, "name", path))
    expression = str(_require(obj, "expression", path))
    enabled = obj.get("enabled", True)
    if not isinstance(enabled, bool):
        raise SpecError(f"{path}.enabled: expected a boolean")
    return ConstraintSpec(name=name, expression=expression, enabled=enabled)


def parse_spec(document: str) -> OddSpec:
    """Parse a JSON spec document into an OddSpec.

    Raises SpecError for syntax errors (with location), unknown fields,
    missing required fields, an empty parameter list and duplicate names.
    Structural only: invariant checking is validate_spec's job.
    """
    try:
        root = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SpecError(f"syntax error: {exc.msg} (line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(root, dict):
        raise SpecError("top level: expected an object")
    _check_fields(root, {"parameters", "criticality_profiles", "groupings",
                         "constraints", "dataset_mapping"}, "top level")

    raw_params = _require(root, "parameters", "top level")
    if not isinstance(raw_params, list):
        raise SpecError("parameters: expected a list")
    if not raw_params:
        raise SpecError("parameters: empty parameter list")
    parameters = tuple(_parse_parameter(p, f"parameters[{i}]") for i, p in enumerate(raw_params))

    seen: set[str] = set()
    for i, p in enumerate(parameters):
        if p.name in seen:
            raise SpecError(f"parameters[{i}].name: duplicate name '{p.name}'")
        seen.add(p.name)

    profiles = tuple(_parse_profile(p, f"criticality_profiles[{i}]")
                     for i, p in enumerate(root.get("criticality_profiles", [])))
    groupings = tuple(_parse_grouping(g, f"groupings[{i}]")
                      for i, g in enumerate(root.get("groupings", [])))
    constraints = tuple(_parse_constraint(c, f"constraints[{i}]")
                        for i, c in enumerate(root.get("constraints", [])))

    mapping_raw = root.get("dataset_mapping", {})
    if not isinstance(mapping_raw, dict):
        raise SpecError("dataset_mapping: expected an object of parameter -> column")
    mapping = {str(k): str(v) for k, v in mapping_raw.items()}

    return OddSpec(parameters=parameters, criticality_profiles=profiles,
                   groupings=groupings, constraints=constraints, dataset_mapping=mapping)


def load_spec(path) -> OddSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from exc
    return parse_spec(text)


# ---------------------------------------------------------------------------
# serialization


def spec_to_document(spec: OddSpec) -> dict:
    """Plain-JSON tree for an OddSpec; inverse of parse_spec."""
    doc: dict = {"parameters": []}
    for p in spec.parameters:
        entry: dict = {"name": p.name, "kind": p.kind}
        if p.unit:
            entry["unit"] = p.unit
        if p.range is not None:
            entry["range"] = [p.range[0], p.range[1]]
        if p.levels is not None:
            entry["levels"] = list(p.levels)
        if p.bin_scheme is not None:
            scheme = p.bin_scheme
            if isinstance(scheme, CountScheme):
                entry["bin_scheme"] = {"count": scheme.count}
            elif isinstance(scheme, WidthScheme):
                entry["bin_scheme"] = {"width": scheme.width}
            elif isinstance(scheme, ExplicitEdgesScheme):
                entry["bin_scheme"] = {"explicit_edges": list(scheme.edges)}
            else:
                entry["bin_scheme"] = {"criticality": {"profile": scheme.profile, "count": scheme.count}}
        doc["parameters"].append(entry)
    if spec.criticality_profiles:
        doc["criticality_profiles"] = [
            {"name": p.name, "form": p.form, **({"points": [list(pt) for pt in p.points]} if p.points else {})}
            for p in spec.criticality_profiles
        ]
    if spec.groupings:
        doc["groupings"] = [
            {"target_name": g.target_name, "sources": list(g.sources), "mode": g.mode,
             **({"map_table": [[list(k), v] for k, v in g.map_table]} if g.map_table else {}),
             "group_bin_count": g.group_bin_count}
            for g in spec.groupings
        ]
    if spec.constraints:
        doc["constraints"] = [
            {"name": c.name, "expression": c.expression, "enabled": c.enabled}
            for c in spec.constraints
        ]
    if spec.dataset_mapping:
        doc["dataset_mapping"] = dict(spec.dataset_mapping)
    return doc


def serialize_spec(spec: OddSpec) -> str:
    return json.dumps(spec_to_document(spec), indent=2) + "\n"


def spec_hash(spec: OddSpec) -> str:
    """Stable fingerprint of a spec; keys every derived artifact.

    Canonical JSON (sorted keys, no whitespace) hashed with SHA-256, so
    cosmetic re-serialization does not invalidate covered sets.
    """
    canonical = json.dumps(spec_to_document(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# validation


def validate_spec(spec: OddSpec) -> list[Diagnostic]:
    """Check every structural invariant; returns diagnostics sorted by path.

    Empty result means the spec is internally consistent and every
    constraint expression resolves and type-checks against the
    post-grouping dimensions.
    """
    # imported here: binning/expr pull numpy, keep spec importable alone
    from . import expr as expr_mod

    out: list[Diagnostic] = []

    def err(path: str, message: str) -> None:
        out.append(Diagnostic("error", message, path))

    names = [p.name for p in spec.parameters]
    name_set = set()
    for i, p in enumerate(spec.parameters):
        path = f"parameters[{i}]"
        if p.name in name_set:
            err(f"{path}.name", f"duplicate name '{p.name}'")
        name_set.add(p.name)
        if p.kind == "continuous":
            if p.range is None:
                err(f"{path}.range", "continuous parameter needs a range")
            elif not (p.range[0] < p.range[1]):
                err(f"{path}.range", f"min must be < max, got [{p.range[0]}, {p.range[1]}]")
            if p.levels is not None:
                err(f"{path}.levels", "levels are only valid for categorical parameters")
            if p.bin_scheme is None:
                err(f"{path}.bin_scheme", "continuous parameter needs a bin_scheme")
            elif p.range is not None and p.range[0] < p.range[1]:
                out.extend(_validate_scheme(spec, p, f"{path}.bin_scheme"))
        else:  # categorical
            if p.levels is None or len(p.levels) < 1:
                err(f"{path}.levels", "categorical parameter needs at least one level")
            elif len(set(p.levels)) != len(p.levels):
                err(f"{path}.levels", "levels must be distinct")
            if p.range is not None:
                err(f"{path}.range", "range is only valid for continuous parameters")
            if p.bin_scheme is not None:
                err(f"{path}.bin_scheme", "categorical parameters bin one level per bin; no scheme allowed")

    profile_names = set()
    for i, prof in enumerate(spec.criticality_profiles):
        path = f"criticality_profiles[{i}]"
        if prof.name in profile_names:
            err(f"{path}.name", f"duplicate profile name '{prof.name}'")
        profile_names.add(prof.name)
        if prof.form == "uniform":
            if prof.points:
                err(f"{path}.points", "uniform profiles take no points")
        else:
            if len(prof.points) < 2:
                err(f"{path}.points", "piecewise_linear profile needs at least 2 points")
            else:
                xs = [x for x, _ in prof.points]
                if any(b <= a for a, b in zip(xs, xs[1:])):
                    err(f"{path}.points", "points must be strictly ascending in x")
                if any(c < 0 for _, c in prof.points):
                    err(f"{path}.points", "criticality values must be nonnegative")
                if all(c == 0 for _, c in prof.points):
                    err(f"{path}.points", "criticality mass is zero over the profile domain")

    grouped_params: dict[str, int] = {}
    target_names: set[str] = set()
    for i, g in enumerate(spec.groupings):
        path = f"groupings[{i}]"
        for s in g.sources:
            if s not in name_set:
                err(f"{path}.sources", f"unknown parameter '{s}'")
            elif s in grouped_params:
                err(f"{path}.sources", f"parameter '{s}' already grouped by groupings[{grouped_params[s]}]")
            else:
                grouped_params[s] = i
        if g.target_name in target_names:
            err(f"{path}.target_name", f"duplicate grouping target '{g.target_name}'")
        target_names.add(g.target_name)
        if g.target_name in name_set and g.target_name not in g.sources:
            err(f"{path}.target_name", f"target '{g.target_name}' collides with an ungrouped parameter")
        if g.mode == "collapse":
            if g.group_bin_count != 1:
                err(f"{path}.group_bin_count", "collapse groupings produce exactly 1 bin")
            if g.map_table:
                err(f"{path}.map_table", "collapse groupings take no map_table")
        else:
            out.extend(_validate_map_table(spec, g, path))

    # effective dimension names, in canonical (declaration) order
    dim_names = _effective_names(spec)

    for i, c in enumerate(spec.constraints):
        path = f"constraints[{i}].expression"
        try:
            tree = expr_mod.parse_expr(c.expression)
        except SpecError as exc:
            err(path, str(exc))
            continue
        for d in expr_mod.check_expr(tree, dim_names):
            err(path, d.message)

    for key in spec.dataset_mapping:
        if key not in name_set:
            err(f"dataset_mapping.{key}", f"unknown parameter '{key}'")

    out.sort(key=lambda d: d.path)
    return out


def _effective_names(spec: OddSpec) -> list[str]:
    grouped: dict[str, str] = {}
    for g in spec.groupings:
        for s in g.sources:
            grouped[s] = g.target_name
    names: list[str] = []
    emitted: set[str] = set()
    for p in spec.parameters:
        target = grouped.get(p.name)
        if target is None:
            names.append(p.name)
        elif target not in emitted:
            names.append(target)
            emitted.add(target)
    return names


def _parameter_bin_count(spec: OddSpec, param: ParameterSpec) -> int | None:
    """Pre-grouping bin count, or None when it cannot be determined yet."""
    import math

    if param.kind == "categorical":
        return len(param.levels) if param.levels else None
    scheme = param.bin_scheme
    if isinstance(scheme, CountScheme):
        return scheme.count
    if isinstance(scheme, CriticalityScheme):
        return scheme.count
    if isinstance(scheme, ExplicitEdgesScheme):
        return len(scheme.edges) - 1
    if isinstance(scheme, WidthScheme) and param.range is not None:
        span = param.range[1] - param.range[0]
        if span <= 0 or scheme.width > span:
            return None
        return max(1, math.ceil(span / scheme.width - 1e-9))
    return None


def _validate_scheme(spec: OddSpec, p: ParameterSpec, path: str) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    lo, hi = p.range  # type: ignore[misc]
    scheme = p.bin_scheme
    if isinstance(scheme, WidthScheme):
        if scheme.width > hi - lo:
            out.append(Diagnostic("error", f"width {scheme.width} exceeds range span {hi - lo}", path))
    elif isinstance(scheme, ExplicitEdgesScheme):
        edges = scheme.edges
        if any(b <= a for a, b in zip(edges, edges[1:])):
            out.append(Diagnostic("error", "explicit_edges must be strictly ascending", path))
        else:
            if edges[0] != lo:
                out.append(Diagnostic("error", f"first edge {edges[0]} must equal range min {lo}", path))
            if edges[-1] != hi:
                out.append(Diagnostic("error", f"last edge {edges[-1]} must equal range max {hi}", path))
    elif isinstance(scheme, CriticalityScheme):
        prof = spec.profile_by_name(scheme.profile)
        if prof is None:
            out.append(Diagnostic("error", f"unknown criticality profile '{scheme.profile}'", path))
        elif prof.form == "piecewise_linear" and len(prof.points) >= 2:
            xs = [x for x, _ in prof.points]
            if not (xs[0] <= lo and xs[-1] >= hi):
                out.append(Diagnostic(
                    "error",
                    f"profile '{prof.name}' spans [{xs[0]}, {xs[-1]}] but must cover [{lo}, {hi}]",
                    path))
            else:
                from .binning import profile_mass
                if profile_mass(prof, lo, hi) <= 0.0:
                    out.append(Diagnostic(
                        "error", f"profile '{prof.name}' has zero criticality mass over [{lo}, {hi}]", path))
    return out


def _validate_map_table(spec: OddSpec, g: GroupingSpec, path: str) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    counts = []
    for s in g.sources:
        param = next((p for p in spec.parameters if p.name == s), None)
        n = _parameter_bin_count(spec, param) if param else None
        if n is None:
            return out  # source errors already reported
        counts.append(n)
    expected = 1
    for n in counts:
        expected *= n
    seen: set[tuple[int, ...]] = set()
    images: set[int] = set()
    for key, image in g.map_table:
        if len(key) != len(g.sources):
            out.append(Diagnostic("error", f"map_table key {list(key)} has wrong arity", f"{path}.map_table"))
            return out
        if any(b < 0 or b >= n for b, n in zip(key, counts)):
            out.append(Diagnostic("error", f"map_table key {list(key)} out of source bin range", f"{path}.map_table"))
            return out
        if key in seen:
            out.append(Diagnostic("error", f"map_table key {list(key)} mapped twice", f"{path}.map_table"))
            return out
        seen.add(key)
        if image < 0 or image >= g.group_bin_count:
            out.append(Diagnostic("error", f"map_table image {image} outside 0..{g.group_bin_count - 1}",
                                  f"{path}.map_table"))
            return out
        images.add(image)
    if len(seen) != expected:
        out.append(Diagnostic("error",
                              f"map_table is not total: {len(seen)} of {expected} source bin tuples mapped",
                              f"{path}.map_table"))
    elif images != set(range(g.group_bin_count)):
        missing = sorted(set(range(g.group_bin_count)) - images)
        out.append(Diagnostic("error", f"map_table images do not cover group bins {missing}",
                              f"{path}.map_table"))
    return out

"""Command-line surface for batch runs and CI gating.

Exit codes: 0 success, 1 usage or spec error (including spec-hash
mismatches and constraint evaluation errors), 2 data error, 3 coverage
below the analyze threshold. All file outputs land in --out under fixed
names so runs can be diffed; identical inputs and flags produce
byte-identical outputs regardless of --jobs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import reporting, scenarios, spec as spec_mod
from .coverage import CoveredSet, compute_report, gap_chunks
from .errors import DataError, EvalError, OddCovError, SpecError, SpecHashMismatch
from .ingest import ingest_csv
from .model import OddModel, build_model
from .space import count_relevant, count_spaces

COVERED_FILE = "covered.bin"
REPORT_TEXT = "report.txt"
REPORT_JSON = "report.json"
SPACE_JSON = "space.json"
BINS_FILE = "bins.csv"
GAPS_FILE = "gaps.csv"
SCENARIOS_FILE = "scenarios.csv"
GRID_FILE = "projection.csv"
CURVE_FILE = "envelope.csv"
PROJECT_JSON = "projection.json"


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; exit 2 is reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oddcov", description="ODD bin-combination coverage verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, data=False, out_required=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("spec", help="ODD spec JSON document")
        if data:
            p.add_argument("data", nargs="+", help="scenario dataset CSV file(s)")
        if out_required:
            p.add_argument("--out", required=True, help="output directory (fixed file names)")
        else:
            p.add_argument("--out", default=None, help="output directory (fixed file names)")
        return p

    add("validate", "check a spec document and print diagnostics")
    add("bins", "print bin edges and centers per parameter as CSV")

    p = add("space", "print combination-space totals and the constrained count")
    p.add_argument("--constraint-eval", choices=("center", "corners"), default="center")
    p.add_argument("--disable-grouping", action="append", default=[], metavar="TARGET",
                   help="drop a grouping by target name (sensitivity comparison)")

    p = add("analyze", "ingest datasets and report coverage", data=True, out_required=True)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--threshold", type=float, default=1.0,
                   help="exit 3 when r_cov falls below this (default 1.0)")
    p.add_argument("--on-out-of-range", choices=("skip", "error", "clamp"), default="skip")
    p.add_argument("--constraint-eval", choices=("center", "corners"), default="center")
    p.add_argument("--covered-repr", choices=("auto", "dense", "sparse"), default="auto")
    p.add_argument("--fresh", action="store_true",
                   help="ignore an existing covered-set sidecar instead of unioning with it")
    p.add_argument("--disable-grouping", action="append", default=[], metavar="TARGET",
                   help="drop a grouping by target name (sensitivity comparison)")

    p = add("gaps", "list relevant-but-uncovered combinations as CSV", out_required=True)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--constraint-eval", choices=("center", "corners"), default="center")

    p = add("generate", "emit new scenario parameters for every gap", out_required=True)
    p.add_argument("--strategy", choices=("center", "random"), default="center")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--constraint-eval", choices=("center", "corners"), default="center")

    p = add("project", "2-D data-density grid plus constraint envelope samples",
            data=True, out_required=True)
    p.add_argument("--x", required=True, help="dimension for the horizontal axis")
    p.add_argument("--y", required=True, help="dimension for the vertical axis")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--on-out-of-range", choices=("skip", "error", "clamp"), default="skip")
    p.add_argument("--samples", type=int, default=200, help="envelope curve sample count")
    return parser


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _without_groupings(parsed, disabled):
    """Drop the named groupings; a different spec, so a different spec hash."""
    if not disabled:
        return parsed
    known = {g.target_name for g in parsed.groupings}
    for name in disabled:
        if name not in known:
            raise SpecError(f"cannot disable grouping '{name}': no such grouping target")
    import dataclasses
    return dataclasses.replace(
        parsed, groupings=tuple(g for g in parsed.groupings if g.target_name not in disabled))


def _load_sidecar(out_dir: str | None, model: OddModel) -> CoveredSet | None:
    if out_dir is None:
        return None
    path = os.path.join(out_dir, COVERED_FILE)
    if not os.path.exists(path):
        return None
    return CoveredSet.load(path, expected_hash=model.spec_hash)


def _cmd_validate(args) -> int:
    parsed = spec_mod.load_spec(args.spec)
    diagnostics = spec_mod.validate_spec(parsed)
    for d in diagnostics:
        print(f"{d.severity}: {d.path}: {d.message}")
    if any(d.severity == "error" for d in diagnostics):
        return 1
    print(f"ok: {len(parsed.parameters)} parameters, spec hash {spec_mod.spec_hash(parsed)[:12]}")
    return 0


def _cmd_bins(args) -> int:
    model = build_model(spec_mod.load_spec(args.spec))
    lines = ["parameter,index,low,high,center"]
    for p in model.spec.parameters:
        edges = model.edges[p.name]
        for i in range(edges.n):
            lo, hi = float(edges.edges[i]), float(edges.edges[i + 1])
            lines.append(f"{p.name},{i},{lo!r},{hi!r},{(lo + hi) / 2!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, BINS_FILE, text)
    sys.stdout.write(text)
    return 0


def _cmd_space(args) -> int:
    parsed = _without_groupings(spec_mod.load_spec(args.spec), args.disable_grouping)
    model = build_model(parsed)
    full_total, adjusted_total = count_spaces(parsed)
    relevant = count_relevant(model.space, model.constraints, args.constraint_eval)
    reduction = (adjusted_total - relevant) / adjusted_total if adjusted_total else 0.0
    print(f"full combinations:     {full_total}")
    print(f"adjusted combinations: {adjusted_total}")
    print(f"relevant combinations: {relevant}")
    print(f"constraint reduction:  {reduction * 100:.1f}%")
    if args.out:
        doc = {"format_version": reporting.FORMAT_VERSION, "spec_hash": model.spec_hash,
               "constraint_eval": args.constraint_eval,
               "full_total": full_total, "adjusted_total": adjusted_total,
               "relevant": relevant, "reduction": reduction}
        _write(args.out, SPACE_JSON, json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_analyze(args) -> int:
    model = build_model(_without_groupings(spec_mod.load_spec(args.spec),
                                           args.disable_grouping))
    covered = None if args.fresh else _load_sidecar(args.out, model)
    covered, stats = ingest_csv(args.data, model, policy=args.on_out_of_range,
                                jobs=args.jobs, representation=args.covered_repr,
                                into=covered)
    report = compute_report(covered, model.space, model.constraints,
                            mode=args.constraint_eval, ingest=stats,
                            spec_hash=model.spec_hash)
    text = reporting.report_text(report)
    _write(args.out, REPORT_TEXT, text)
    _write(args.out, REPORT_JSON, reporting.report_json(report))
    covered.save(os.path.join(args.out, COVERED_FILE))
    sys.stdout.write(text)
    if report.r_cov < args.threshold:
        print(f"coverage {report.r_cov!r} below threshold {args.threshold!r}", file=sys.stderr)
        return 3
    return 0


def _covered_or_empty(args, model: OddModel) -> CoveredSet:
    covered = _load_sidecar(args.out, model)
    if covered is None:
        covered = CoveredSet.create(model.space.total, model.spec_hash)
    return covered


def _manifest(out_dir: str, csv_name: str, model: OddModel, **extra) -> None:
    # stale index lists must be checkable against the spec they came from
    doc = {"format_version": reporting.FORMAT_VERSION, "spec_hash": model.spec_hash,
           "file": csv_name, **extra}
    name = csv_name.rsplit(".", 1)[0] + ".json"
    _write(out_dir, name, json.dumps(doc, indent=2) + "\n")


def _cmd_gaps(args) -> int:
    model = build_model(spec_mod.load_spec(args.spec))
    covered = _covered_or_empty(args, model)
    chunks = gap_chunks(covered, model.space, model.constraints,
                        mode=args.constraint_eval, limit=args.limit)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, GAPS_FILE)
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in reporting.gaps_csv_lines(chunks, model):
            fh.write(line)
            count += 1
    _manifest(args.out, GAPS_FILE, model, gap_count=count - 1,
              constraint_eval=args.constraint_eval)
    print(f"{count - 1} gaps -> {path}")
    return 0


def _cmd_generate(args) -> int:
    model = build_model(spec_mod.load_spec(args.spec))
    covered = _covered_or_empty(args, model)
    gaps = (int(g) for chunk in gap_chunks(covered, model.space, model.constraints,
                                           mode=args.constraint_eval, limit=args.limit)
            for g in chunk)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, SCENARIOS_FILE)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        count = scenarios.write_scenarios_csv(fh, gaps, model,
                                              strategy=args.strategy, seed=args.seed)
    _manifest(args.out, SCENARIOS_FILE, model, scenario_count=count,
              strategy=args.strategy, seed=args.seed)
    print(f"{count} scenarios -> {path}")
    return 0


def _cmd_project(args) -> int:
    model = build_model(spec_mod.load_spec(args.spec))
    grid = reporting.project_counts(args.data, model, args.x, args.y,
                                    policy=args.on_out_of_range, jobs=args.jobs)
    files = {"grid": GRID_FILE}
    _write(args.out, GRID_FILE, reporting.grid_csv(grid))
    curve = None
    for constraint in model.constraints:
        curve = reporting.sample_constraint_curve(constraint.expr, model, args.x, args.samples)
        if curve is not None:
            break
    if curve is not None:
        _write(args.out, CURVE_FILE, reporting.curve_csv(curve))
        files["curve"] = CURVE_FILE
    else:
        print("note: no constraint of the form abs(Y) <= f(X); grid only")
    manifest = {"format_version": reporting.FORMAT_VERSION, "spec_hash": model.spec_hash,
                "dim_x": args.x, "dim_y": args.y, "rows_mapped": grid.rows_mapped,
                "files": files}
    _write(args.out, PROJECT_JSON, json.dumps(manifest, indent=2) + "\n")
    print(f"projection grid ({grid.rows_mapped} mapped rows) -> {os.path.join(args.out, GRID_FILE)}")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "bins": _cmd_bins,
    "space": _cmd_space,
    "analyze": _cmd_analyze,
    "gaps": _cmd_gaps,
    "generate": _cmd_generate,
    "project": _cmd_project,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse signals usage problems by exiting
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (SpecError, SpecHashMismatch, EvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OddCovError as exc:  # safety net for new error kinds
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

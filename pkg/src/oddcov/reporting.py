"""Coverage reports and 2-D density projections.

Rendered outputs are plain text, JSON and CSV grids; no plotting backend.
The text table mirrors the unconstrained/constrained side-by-side layout
used for coverage summaries, and every JSON document carries a
format_version so downstream tooling can detect schema changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .coverage import CoverageReport
from .errors import DataError
from .expr import Call, Compare, Ident, Node, eval_value, identifiers
from .ingest import scan_csv
from .model import OddModel

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ProjectionGrid:
    dim_x: str
    dim_y: str
    counts: np.ndarray  # (nx, ny) int64
    x_bounds: tuple[np.ndarray, np.ndarray]  # per-bin (low, high)
    y_bounds: tuple[np.ndarray, np.ndarray]
    rows_mapped: int


def project_counts(paths, model: OddModel, dim_x: str, dim_y: str,
                   policy: str = "skip", jobs: int = 1) -> ProjectionGrid:
    """Data-point counts per (dim_x, dim_y) bin cell, marginalized over all
    other dimensions. Rows excluded by the ingest policy do not count."""
    names = model.dims.names()
    if dim_x == dim_y:
        raise DataError("projection needs two distinct dimensions")
    for name in (dim_x, dim_y):
        if name not in names:
            raise DataError(f"unknown dimension '{name}'")
    ix, iy = names.index(dim_x), names.index(dim_y)
    dx, dy = model.dims[ix], model.dims[iy]
    counts = np.zeros((dx.bin_count, dy.bin_count), dtype=np.int64)
    mapped = 0
    for dim_bins, valid, stats in scan_csv(paths, model, policy, jobs):
        mapped += stats.rows_mapped
        if valid.any():
            flat = dim_bins[ix][valid] * dy.bin_count + dim_bins[iy][valid]
            counts += np.bincount(flat, minlength=counts.size).reshape(counts.shape)
    return ProjectionGrid(dim_x=dim_x, dim_y=dim_y, counts=counts,
                          x_bounds=dx.cell_bounds(), y_bounds=dy.cell_bounds(),
                          rows_mapped=mapped)


def grid_csv(grid: ProjectionGrid) -> str:
    lines = ["x_low,x_high,y_low,y_high,count"]
    x_low, x_high = grid.x_bounds
    y_low, y_high = grid.y_bounds
    for i in range(len(x_low)):
        for j in range(len(y_low)):
            lines.append(f"{float(x_low[i])!r},{float(x_high[i])!r},"
                         f"{float(y_low[j])!r},{float(y_high[j])!r},"
                         f"{int(grid.counts[i, j])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# constraint boundary curves


def recognize_band(expr: Node, dim_x: str, dims) -> tuple[str, Node] | None:
    """Match the shape abs(Y) <= f(dim_x); returns (Y, f) or None.

    Only this syntactic family is traced; anything else is reported as
    unsupported and the projection ships without a boundary curve.
    """
    if not isinstance(expr, Compare) or expr.op != "<=":
        return None
    left = expr.left
    if not (isinstance(left, Call) and left.func == "abs" and len(left.args) == 1
            and isinstance(left.args[0], Ident)):
        return None
    y_name = left.args[0].name
    if y_name == dim_x or y_name not in dims.names():
        return None
    if identifiers(expr.right) - {dim_x}:
        return None
    return y_name, expr.right


def sample_constraint_curve(expr: Node, model: OddModel, dim_x: str,
                            n_samples: int) -> list[tuple[float, float, float]] | None:
    """(x, upper bound, lower bound) samples of a recognized band constraint,
    evenly spaced over dim_x's extent; None when the shape is not recognized."""
    band = recognize_band(expr, dim_x, model.dims)
    if band is None:
        return None
    _, bound = band
    dim = model.dims.by_name(dim_x)
    low_bounds, high_bounds = dim.cell_bounds()
    lo, hi = float(low_bounds[0]), float(high_bounds[-1])
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if n_samples == 1:
        xs = [lo]
    else:
        xs = [lo + (hi - lo) * i / (n_samples - 1) for i in range(n_samples)]
    out = []
    for x in xs:
        f = float(eval_value(bound, {dim_x: x}))
        out.append((x, f, -f))
    return out


def curve_csv(samples: list[tuple[float, float, float]]) -> str:
    lines = ["x,y_upper,y_lower"]
    for x, up, down in samples:
        lines.append(f"{x!r},{up!r},{down!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# coverage report rendering


def _pct(value: float) -> str:
    return f"{value * 100:.2f}"


def report_text(report: CoverageReport) -> str:
    """Three metric rows, unconstrained vs. constrained columns."""
    rows = [
        ("Combinations", f"{report.total:,}", f"{report.relevant:,}"),
        ("Combinations Covered", f"{report.covered_total:,}", f"{report.covered_relevant:,}"),
        ("Coverage (%)", _pct(report.r_cov_unconstrained), _pct(report.r_cov)),
    ]
    headers = ("Metric", "Unconstrained", "Constrained")
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(3)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(3)),
    ]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(3)).rstrip())
    lines.append("")
    lines.append(f"r_cov = {report.covered_relevant}/{report.relevant} = {report.r_cov!r}")
    lines.append(f"gaps  = {report.gap_count}")
    return "\n".join(lines) + "\n"


def report_json_dict(report: CoverageReport) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "spec_hash": report.spec_hash,
        "constraint_eval": report.constraint_eval,
        "total": report.total,
        "relevant": report.relevant,
        "covered_total": report.covered_total,
        "covered_relevant": report.covered_relevant,
        "r_cov": report.r_cov,
        "r_cov_unconstrained": report.r_cov_unconstrained,
        "gap_count": report.gap_count,
    }
    if report.ingest is not None:
        doc["ingest"] = report.ingest.to_dict()
    return doc


def report_json(report: CoverageReport) -> str:
    return json.dumps(report_json_dict(report), indent=2) + "\n"


def gaps_csv_lines(gap_arrays, model: OddModel):
    """Stream CSV lines for gap combinations: decoded bins plus centers."""
    from .space import decode_array

    names = model.dims.names()
    header = ["gap_index"]
    for name in names:
        header.append(f"{name}_bin")
        header.append(f"{name}_center")
    yield ",".join(header) + "\n"
    centers = [dim.centers() for dim in model.space.dims]
    for gaps in gap_arrays:
        bins = decode_array(gaps, model.space)
        for r in range(len(gaps)):
            fields = [str(int(gaps[r]))]
            for d in range(len(names)):
                b = int(bins[d][r])
                fields.append(str(b))
                fields.append(repr(float(centers[d][b])))
            yield ",".join(fields) + "\n"

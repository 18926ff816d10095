"""Turn gap combinations into concrete scenario parameter values.

Output rows carry one column per pre-grouping parameter (named after the
dataset mapping, so the file feeds straight back into ingestion) plus a
`gap_index` provenance column tracing each row to the combination it is
meant to close. Values land strictly inside their bin, so re-ingesting a
generated row always discretizes back to its originating gap.
"""

from __future__ import annotations

import csv
from typing import Iterable, Iterator

import numpy as np

from .grouping import Dimension
from .model import OddModel
from .space import decode

STRATEGIES = ("center", "random")


def _interior(value: float, low: float, high: float) -> float:
    """Clamp a sample into the open interval (low, high)."""
    if value <= low:
        return float(np.nextafter(low, high))
    if value >= high:
        return float(np.nextafter(high, low))
    return value


def _source_bins(dim: Dimension, group_bin: int) -> tuple[int, ...]:
    """First (lexicographically smallest) source bin tuple mapping to the
    group bin; gives map-grouped gaps a concrete, reproducible preimage."""
    counts = [e.n for e in dim.source_edges]
    lookup = dim.group_lookup()
    assert lookup is not None
    flat = int(np.argmax(lookup == group_bin))
    bins = []
    for count in reversed(counts):
        bins.append(flat % count)
        flat //= count
    return tuple(reversed(bins))


def gaps_to_scenarios(gaps: Iterable[int], model: OddModel,
                      strategy: str = "center",
                      seed: int | None = None) -> Iterator[dict[str, object]]:
    """One scenario per gap: parameter values keyed by dataset column,
    plus `gap_index`.

    `center` emits bin centers; `random` draws uniformly from the strict
    interior of each bin using a deterministic seeded generator. Collapsed
    dimensions always emit their fixed representative (range midpoint for
    a continuous source, first level otherwise).
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown scenario strategy '{strategy}'")
    rng = np.random.default_rng(0 if seed is None else seed)
    spec = model.spec

    dim_of: dict[str, tuple[int, Dimension]] = {}
    for d, dim in enumerate(model.space.dims):
        if dim.grouping is None:
            dim_of[dim.name] = (d, dim)
        else:
            for src in dim.sources:
                dim_of[src.name] = (d, dim)

    for gap in gaps:
        bins = decode(gap, model.space)
        row: dict[str, object] = {}
        for param in spec.parameters:
            d, dim = dim_of[param.name]
            edges = model.edges[param.name]
            column = spec.column_for(param.name)

            if dim.grouping is not None and dim.grouping.mode == "collapse":
                if param.kind == "categorical":
                    row[column] = (param.levels or ("",))[0]
                else:
                    lo, hi = param.range  # type: ignore[misc]
                    row[column] = (lo + hi) / 2.0
                continue

            if dim.grouping is not None:  # map mode: realize a preimage bin
                source_bins = _source_bins(dim, bins[d])
                b = source_bins[dim.sources.index(param)]
            else:
                b = bins[d]

            if param.kind == "categorical":
                row[column] = (param.levels or ())[b]
                continue

            low, high = float(edges.edges[b]), float(edges.edges[b + 1])
            if strategy == "center":
                row[column] = (low + high) / 2.0
            else:
                row[column] = _interior(low + rng.random() * (high - low), low, high)
        row["gap_index"] = gap
        yield row


def write_scenarios_csv(fh, gaps: Iterable[int], model: OddModel,
                        strategy: str = "center", seed: int | None = None) -> int:
    """Write the scenario CSV; returns the number of rows written."""
    columns = model.column_order() + ["gap_index"]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    count = 0
    for row in gaps_to_scenarios(gaps, model, strategy, seed):
        writer.writerow([_format(row[c]) for c in columns])
        count += 1
    return count


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)

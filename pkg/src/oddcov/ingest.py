"""Scenario dataset ingestion: CSV rows to combination indices.

Two paths share the same discretization rules: a row-at-a-time streaming
path (`open_dataset` / `record_to_combo`) used for spot checks and oracle
tests, and a blocked path (`ingest_csv`) that splits files into
newline-aligned byte blocks and crunches each block with pandas/numpy.
Blocks are fixed by file content, not by worker count, and coverage
marking is a set union, so results are identical for any `jobs` value.

CSV dialect: RFC 4180, UTF-8, header row required, '.' decimal separator.
The blocked path additionally assumes records do not contain embedded
line breaks inside quoted fields.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
import pandas as pd

from .binning import values_to_bins
from .errors import DataError
from .model import OddModel

BLOCK_BYTES = 8 << 20

POLICIES = ("skip", "error", "clamp")


@dataclass
class IngestStats:
    rows_read: int = 0
    rows_mapped: int = 0
    rows_out_of_range: int = 0
    rows_malformed: int = 0
    out_of_range_by_parameter: dict[str, int] = field(default_factory=dict)

    def add(self, other: "IngestStats") -> None:
        self.rows_read += other.rows_read
        self.rows_mapped += other.rows_mapped
        self.rows_out_of_range += other.rows_out_of_range
        self.rows_malformed += other.rows_malformed
        for name, count in other.out_of_range_by_parameter.items():
            self.out_of_range_by_parameter[name] = self.out_of_range_by_parameter.get(name, 0) + count

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_mapped": self.rows_mapped,
            "rows_out_of_range": self.rows_out_of_range,
            "rows_malformed": self.rows_malformed,
            "out_of_range_by_parameter": dict(self.out_of_range_by_parameter),
        }


@dataclass(frozen=True)
class OutOfRange:
    parameters: tuple[str, ...]


@dataclass(frozen=True)
class Malformed:
    parameters: tuple[str, ...]


# ---------------------------------------------------------------------------
# streaming path


def _header_positions(header: list[str], model: OddModel, path) -> list[int]:
    positions = []
    for p in model.spec.parameters:
        column = model.spec.column_for(p.name)
        try:
            positions.append(header.index(column))
        except ValueError:
            raise DataError(f"{path}: missing column '{column}' (parameter '{p.name}')") from None
    return positions


def open_dataset(path, model: OddModel) -> Iterator[tuple[str, ...]]:
    """Lazily yield raw field tuples in spec parameter order."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file, header row required")
        positions = _header_positions(header, model, path)
        for row in reader:
            if not row:
                continue
            try:
                yield tuple(row[i] for i in positions)
            except IndexError:
                yield tuple(row[i] if i < len(row) else "" for i in positions)


def _parse_field(raw: str, param) -> float | None:
    """Raw field to coordinate (float / level index); None when malformed."""
    if param.kind == "categorical":
        levels = param.levels or ()
        if raw in levels:
            return float(levels.index(raw))
        try:
            idx = int(raw)
        except ValueError:
            return None
        return float(idx) if 0 <= idx < len(levels) else None
    try:
        value = float(raw)
    except ValueError:
        return None
    return value if np.isfinite(value) else None


def record_to_combo(record: Sequence[str], model: OddModel,
                    policy: str = "skip") -> int | OutOfRange | Malformed:
    """Discretize one record: parse, bin, group, encode.

    Returns the combination index, or a variant naming the offending
    parameters. Under `clamp`, out-of-range values are pulled to the range
    boundary instead; under `error`, they raise DataError.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown out-of-range policy '{policy}'")
    params = model.spec.parameters
    values: list[float] = []
    malformed: list[str] = []
    for raw, param in zip(record, params):
        value = _parse_field(raw, param)
        if value is None:
            malformed.append(param.name)
            value = 0.0
        values.append(value)
    if malformed:
        return Malformed(tuple(malformed))

    bins: dict[str, int] = {}
    out_of_range: list[str] = []
    for value, param in zip(values, params):
        edges = model.edges[param.name]
        if param.kind == "categorical":
            bins[param.name] = int(value)
            continue
        if not edges.low <= value <= edges.high:
            if policy == "error":
                raise DataError(f"value {value} of parameter '{param.name}' outside "
                                f"[{edges.low}, {edges.high}]")
            if policy == "skip":
                out_of_range.append(param.name)
                continue
            value = min(max(value, edges.low), edges.high)
        idx = int(np.searchsorted(edges.edges, value, side="right")) - 1
        bins[param.name] = min(idx, edges.n - 1)
    if out_of_range:
        return OutOfRange(tuple(out_of_range))

    combo = 0
    for dim, stride in zip(model.space.dims, model.space.strides):
        if dim.grouping is None:
            b = bins[dim.name]
        else:
            counts = [e.n for e in dim.source_edges]
            flat = 0
            for src, n in zip(dim.sources, counts):
                flat = flat * n + bins[src.name]
            b = int(dim.group_lookup()[flat])
        combo += b * stride
    return combo


# ---------------------------------------------------------------------------
# blocked path


def _split_blocks(path, block_bytes: int = BLOCK_BYTES) -> tuple[list[str], list[tuple[int, int]]]:
    """Header columns plus newline-aligned (start, end) byte ranges."""
    try:
        with open(path, "rb") as fh:
            header_line = fh.readline()
            if not header_line:
                raise DataError(f"{path}: empty file, header row required")
            data_start = fh.tell()
            fh.seek(0, io.SEEK_END)
            size = fh.tell()
            blocks = []
            start = data_start
            while start < size:
                end = min(start + block_bytes, size)
                if end < size:
                    fh.seek(end)
                    fh.readline()
                    end = fh.tell()
                blocks.append((start, end))
                start = end
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    header = next(csv.reader([header_line.decode("utf-8-sig").rstrip("\r\n")]))
    return header, blocks


def _parse_block(data: bytes, positions: list[int], model: OddModel) -> dict[str, np.ndarray]:
    """Column arrays (float64 coordinates, NaN = malformed) for one block."""
    params = model.spec.parameters
    by_pos = dict(zip(positions, params))
    use = sorted(set(positions))
    fast_dtypes = {pos: (np.float64 if by_pos[pos].kind == "continuous" else str)
                   for pos in use}
    try:
        df = pd.read_csv(io.BytesIO(data), header=None, usecols=use, dtype=fast_dtypes,
                         keep_default_na=False, na_values=[""], engine="c")
    except (ValueError, pd.errors.ParserError):
        try:
            df = pd.read_csv(io.BytesIO(data), header=None, usecols=use, dtype=str,
                             keep_default_na=False, engine="c")
        except (ValueError, pd.errors.ParserError) as exc:
            raise DataError(f"malformed CSV block: {exc}") from exc

    out: dict[str, np.ndarray] = {}
    for pos, param in zip(positions, params):
        series = df[pos]
        if param.kind == "continuous":
            if series.dtype != np.float64:
                series = pd.to_numeric(series, errors="coerce")
            values = series.to_numpy(dtype=np.float64, copy=True)
            values[~np.isfinite(values)] = np.nan
        else:
            labels = series.fillna("").astype(str)
            codes = labels.map({lvl: float(i) for i, lvl in enumerate(param.levels or ())})
            missing = codes.isna()
            if missing.any():
                # a bare integer index is accepted alongside the level label
                as_int = pd.to_numeric(labels[missing], errors="coerce")
                ok = as_int.notna() & (as_int >= 0) & (as_int < len(param.levels or ())) & (as_int % 1 == 0)
                codes.loc[missing] = as_int.where(ok)
            values = codes.to_numpy(dtype=np.float64, copy=True)
        out[param.name] = values
    return out


def _discretize_block(columns: dict[str, np.ndarray], model: OddModel,
                      policy: str) -> tuple[list[np.ndarray], np.ndarray, IngestStats]:
    """Column values to per-dimension bins plus validity mask and stats."""
    params = model.spec.parameters
    n = len(next(iter(columns.values()))) if columns else 0
    malformed = np.zeros(n, dtype=bool)
    for p in params:
        malformed |= np.isnan(columns[p.name])

    oor = np.zeros(n, dtype=bool)
    oor_by_param: dict[str, int] = {}
    param_bins: dict[str, np.ndarray] = {}
    for p in params:
        values = columns[p.name]
        edges = model.edges[p.name]
        if p.kind == "categorical":
            with np.errstate(invalid="ignore"):
                param_bins[p.name] = np.nan_to_num(values).astype(np.int64)
            continue
        with np.errstate(invalid="ignore"):
            below = values < edges.low
            above = values > edges.high
        bad = (below | above) & ~malformed
        if bad.any():
            if policy == "error":
                row = int(np.argmax(bad))
                raise DataError(f"value {values[row]} of parameter '{p.name}' outside "
                                f"[{edges.low}, {edges.high}]")
            if policy == "clamp":
                values = np.clip(values, edges.low, edges.high)
            oor_by_param[p.name] = int(bad.sum())
            oor |= bad
        param_bins[p.name] = values_to_bins(np.nan_to_num(values), edges)

    valid = ~malformed if policy == "clamp" else ~(malformed | oor)
    stats = IngestStats(rows_read=n,
                        rows_mapped=int(valid.sum()),
                        rows_out_of_range=int((oor & ~malformed).sum()),
                        rows_malformed=int(malformed.sum()),
                        out_of_range_by_parameter=oor_by_param)

    dim_bins: list[np.ndarray] = []
    for dim in model.space.dims:
        if dim.grouping is None:
            dim_bins.append(param_bins[dim.name])
        else:
            counts = [e.n for e in dim.source_edges]
            flat = np.zeros(n, dtype=np.int64)
            for src, count in zip(dim.sources, counts):
                flat = flat * count + param_bins[src.name]
            dim_bins.append(dim.group_lookup()[flat])
    return dim_bins, valid, stats


def scan_csv(paths, model: OddModel, policy: str = "skip", jobs: int = 1,
             block_bytes: int = BLOCK_BYTES) -> Iterator[tuple[list[np.ndarray], np.ndarray, IngestStats]]:
    """Yield (per-dimension bins, valid-row mask, stats) per block, in file order.

    The shared engine behind coverage marking and 2-D projections.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown out-of-range policy '{policy}'")
    jobs = max(1, int(jobs))
    for path in paths:
        header, blocks = _split_blocks(path, block_bytes)
        positions = _header_positions(header, model, path)
        if not blocks:
            continue

        def work(block: tuple[int, int], path=path, positions=positions):
            start, end = block
            with open(path, "rb") as fh:
                fh.seek(start)
                data = fh.read(end - start)
            columns = _parse_block(data, positions, model)
            return _discretize_block(columns, model, policy)

        if jobs == 1:
            for block in blocks:
                yield work(block)
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                yield from pool.map(work, blocks)


def ingest_csv(paths, model: OddModel, policy: str = "skip", jobs: int = 1,
               representation: str = "auto", into=None,
               block_bytes: int = BLOCK_BYTES):
    """Ingest datasets into a covered set; returns (CoveredSet, IngestStats)."""
    from .coverage import CoveredSet
    from .space import encode_array

    covered = into if into is not None else CoveredSet.create(
        model.space.total, model.spec_hash, representation)
    stats = IngestStats()
    for dim_bins, valid, block_stats in scan_csv(paths, model, policy, jobs, block_bytes):
        stats.add(block_stats)
        if valid.any():
            combos = encode_array([b[valid] for b in dim_bins], model.space)
            covered.mark_many(combos)
    return covered, stats

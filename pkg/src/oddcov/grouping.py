"""Dimension reduction: grouping specs applied to per-parameter bins.

The output is the list of effective dimensions the combination space is
built from. A collapse grouping keeps its dimension visible with a single
bin (so reports still show it) instead of deleting the parameter; a map
grouping replaces its source parameters by one integer-indexed dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import BinEdges
from .errors import SpecError
from .spec import GroupingSpec, OddSpec, ParameterSpec


@dataclass(frozen=True)
class Dimension:
    """One axis of the coverage space, after grouping.

    Exactly one of these shapes applies:
      * continuous passthrough: `edges` set
      * categorical passthrough: `levels` set
      * grouped target: `grouping` set, with the source parameters and
        their pre-grouping edges retained for ingestion and scenario
        generation
    """

    name: str
    bin_count: int
    edges: BinEdges | None = None
    levels: tuple[str, ...] | None = None
    grouping: GroupingSpec | None = None
    sources: tuple[ParameterSpec, ...] = ()
    source_edges: tuple[BinEdges, ...] = ()

    def centers(self) -> np.ndarray:
        """Representative value per bin, as used in constraint environments.

        Continuous bins use their midpoint; categorical and map-grouped
        bins use the bin index itself; a collapsed dimension uses the
        midpoint of its (single continuous) source range, or index 0.
        """
        if self.edges is not None:
            return self.edges.centers()
        if self.levels is not None:
            return np.arange(self.bin_count, dtype=np.float64)
        assert self.grouping is not None
        if self.grouping.mode == "map":
            return np.arange(self.bin_count, dtype=np.float64)
        src = self.sources[0]
        if len(self.sources) == 1 and src.kind == "continuous":
            lo, hi = src.range  # type: ignore[misc]
            return np.array([(lo + hi) / 2.0])
        return np.zeros(1)

    def corner_values(self) -> tuple[np.ndarray, ...]:
        """Candidate representative extremes per bin, for corner-mode
        relevance. Continuous bins contribute their two edges; integer-
        indexed bins only their index."""
        if self.edges is not None:
            return (self.edges.edges[:-1].copy(), self.edges.edges[1:].copy())
        if self.grouping is not None and self.grouping.mode == "collapse":
            src = self.sources[0]
            if len(self.sources) == 1 and src.kind == "continuous":
                lo, hi = src.range  # type: ignore[misc]
                return (np.array([lo]), np.array([hi]))
        return (self.centers(),)

    def cell_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(low, high) display bounds per bin, for projections and gap CSVs."""
        if self.edges is not None:
            return self.edges.edges[:-1].copy(), self.edges.edges[1:].copy()
        if self.levels is not None:
            idx = np.arange(self.bin_count, dtype=np.float64)
            return idx, idx + 1.0
        assert self.grouping is not None
        if self.grouping.mode == "map":
            idx = np.arange(self.bin_count, dtype=np.float64)
            return idx, idx + 1.0
        src = self.sources[0]
        if len(self.sources) == 1 and src.kind == "continuous":
            lo, hi = src.range  # type: ignore[misc]
            return np.array([lo]), np.array([hi])
        return np.zeros(1), np.ones(1)

    def group_lookup(self) -> np.ndarray | None:
        """For grouped dims: flat source-bin-tuple index -> group bin.

        Source tuples are flattened in row-major order over the source bin
        counts. None for passthrough dimensions.
        """
        if self.grouping is None:
            return None
        counts = [e.n for e in self.source_edges]
        size = int(np.prod(counts, dtype=np.int64)) if counts else 1
        if self.grouping.mode == "collapse":
            return np.zeros(size, dtype=np.int64)
        table = np.full(size, -1, dtype=np.int64)
        strides = _row_major_strides(counts)
        for key, image in self.grouping.map_table:
            flat = sum(b * s for b, s in zip(key, strides))
            table[flat] = image
        if (table < 0).any():
            raise SpecError(f"grouping '{self.name}': map_table is not total")
        return table


def _row_major_strides(counts: list[int]) -> list[int]:
    strides = [1] * len(counts)
    for i in range(len(counts) - 2, -1, -1):
        strides[i] = strides[i + 1] * counts[i + 1]
    return strides


@dataclass(frozen=True)
class EffectiveDimensions:
    dims: tuple[Dimension, ...]

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)

    def __getitem__(self, i) -> Dimension:
        return self.dims[i]

    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    def by_name(self, name: str) -> Dimension:
        for d in self.dims:
            if d.name == name:
                return d
        raise KeyError(name)

    def bin_counts(self) -> tuple[int, ...]:
        return tuple(d.bin_count for d in self.dims)


def apply_groupings(spec: OddSpec, edges: dict[str, BinEdges]) -> EffectiveDimensions:
    """Replace each grouping's sources by its target dimension.

    The target occupies the position of its first source; untouched
    parameters pass through with their original edges in declaration order.
    """
    owner: dict[str, GroupingSpec] = {}
    for g in spec.groupings:
        for s in g.sources:
            if s in owner:
                raise SpecError(f"parameter '{s}' appears in two groupings")
            owner[s] = g

    params = {p.name: p for p in spec.parameters}
    for g in spec.groupings:
        for s in g.sources:
            if s not in params:
                raise SpecError(f"grouping '{g.target_name}': unknown source parameter '{s}'")

    dims: list[Dimension] = []
    emitted: set[str] = set()
    for p in spec.parameters:
        g = owner.get(p.name)
        if g is None:
            if p.kind == "categorical":
                dims.append(Dimension(p.name, len(p.levels or ()), levels=p.levels))
            else:
                dims.append(Dimension(p.name, edges[p.name].n, edges=edges[p.name]))
            continue
        if g.target_name in emitted:
            continue
        emitted.add(g.target_name)
        sources = tuple(params[s] for s in g.sources)
        source_edges = tuple(edges[s] for s in g.sources)
        bin_count = 1 if g.mode == "collapse" else g.group_bin_count
        dim = Dimension(g.target_name, bin_count, grouping=g,
                        sources=sources, source_edges=source_edges)
        dim.group_lookup()  # raises if the map table is not total
        dims.append(dim)
    return EffectiveDimensions(tuple(dims))

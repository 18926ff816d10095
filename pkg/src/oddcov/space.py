"""The discretized combination space and its constraint-relevant subset.

Combinations are linearized mixed-radix: the last declared dimension has
stride 1. Enumeration never materializes the space — relevance is decided
chunk-by-chunk over contiguous index ranges, which also makes the work
partitionable with bit-identical results for any partitioning.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import EvalError, SpecError
from .expr import Node, eval_expr_batch
from .grouping import EffectiveDimensions

MAX_TOTAL = 2 ** 64 - 1
DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class Constraint:
    name: str
    expr: Node


@dataclass(frozen=True)
class CombinationSpace:
    dims: EffectiveDimensions
    radices: tuple[int, ...]
    strides: tuple[int, ...]
    total: int


def build_space(dims: EffectiveDimensions) -> CombinationSpace:
    radices = dims.bin_counts()
    total = 1
    for r in radices:
        total *= r
    if total > MAX_TOTAL:
        raise SpecError(
            f"combination space has {total} states, beyond the 64-bit ceiling; "
            "group or collapse dimensions to shrink it")
    strides = [1] * len(radices)
    for i in range(len(radices) - 2, -1, -1):
        strides[i] = strides[i + 1] * radices[i + 1]
    return CombinationSpace(dims=dims, radices=radices, strides=tuple(strides), total=total)


def encode(bins: Sequence[int], space: CombinationSpace) -> int:
    if len(bins) != len(space.radices):
        raise ValueError(f"expected {len(space.radices)} bin indices, got {len(bins)}")
    index = 0
    for b, radix, stride in zip(bins, space.radices, space.strides):
        if not 0 <= b < radix:
            raise ValueError(f"bin index {b} outside radix {radix}")
        index += b * stride
    return index


def decode(index: int, space: CombinationSpace) -> tuple[int, ...]:
    if not 0 <= index < space.total:
        raise ValueError(f"combination index {index} outside [0, {space.total})")
    out = []
    for radix, stride in zip(space.radices, space.strides):
        out.append((index // stride) % radix)
    return tuple(out)


def decode_array(indices: np.ndarray, space: CombinationSpace) -> list[np.ndarray]:
    """Per-dimension bin arrays for a vector of combination indices."""
    idx = indices.astype(np.uint64, copy=False)
    return [((idx // np.uint64(stride)) % np.uint64(radix)).astype(np.int64)
            for radix, stride in zip(space.radices, space.strides)]


def encode_array(bins: Sequence[np.ndarray], space: CombinationSpace) -> np.ndarray:
    out = np.zeros(len(bins[0]), dtype=np.uint64)
    for b, stride in zip(bins, space.strides):
        out += b.astype(np.uint64) * np.uint64(stride)
    return out


def count_spaces(spec) -> tuple[int, int]:
    """(pre-grouping total, post-grouping total) of the combination space."""
    from .model import build_model

    model = build_model(spec)
    full_total = 1
    for p in spec.parameters:
        full_total *= model.edges[p.name].n
    if full_total > MAX_TOTAL:
        raise SpecError(f"pre-grouping space has {full_total} states, beyond the 64-bit ceiling")
    return full_total, model.space.total


# ---------------------------------------------------------------------------
# relevance


def _center_env(space: CombinationSpace, idx: np.ndarray) -> dict[str, np.ndarray]:
    env = {}
    for dim, bins in zip(space.dims, decode_array(idx, space)):
        env[dim.name] = dim.centers()[bins]
    return env


def _eval_all(constraints: Sequence[Constraint], env, space, start) -> np.ndarray:
    size = len(next(iter(env.values()))) if env else 0
    mask = np.ones(size, dtype=bool)
    for c in constraints:
        try:
            mask &= eval_expr_batch(c.expr, env)
        except EvalError as exc:
            combo = start + (exc.position if exc.position is not None else 0)
            bins = decode(combo, space)
            raise EvalError(
                f"constraint '{c.name}': {exc} at combination {combo} = {list(bins)}") from exc
    return mask


def relevant_chunks(space: CombinationSpace, constraints: Sequence[Constraint],
                    mode: str = "center",
                    chunk_size: int = DEFAULT_CHUNK) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (chunk start, relevance mask) over the whole index range.

    With no enabled constraints every combination is relevant. `mode`
    selects where a combination is sampled: its center, or (corners mode)
    any corner of its hyper-rectangle satisfying all constraints at once.
    """
    if mode not in ("center", "corners"):
        raise ValueError(f"unknown constraint evaluation mode '{mode}'")
    for start in range(0, space.total, chunk_size):
        end = min(start + chunk_size, space.total)
        idx = np.arange(start, end, dtype=np.uint64)
        if not constraints:
            yield start, np.ones(end - start, dtype=bool)
            continue
        if mode == "center":
            yield start, _eval_all(constraints, _center_env(space, idx), space, start)
            continue
        bins = decode_array(idx, space)
        corner_sets = [dim.corner_values() for dim in space.dims]
        mask = np.zeros(end - start, dtype=bool)
        for choice in itertools.product(*corner_sets):
            env = {dim.name: values[b]
                   for dim, values, b in zip(space.dims, choice, bins)}
            mask |= _eval_all(constraints, env, space, start)
        yield start, mask


def iter_relevant(space: CombinationSpace, constraints: Sequence[Constraint],
                  mode: str = "center") -> Iterator[int]:
    """Stream the relevant combination indices in ascending order."""
    for start, mask in relevant_chunks(space, constraints, mode):
        for offset in np.flatnonzero(mask):
            yield start + int(offset)


def count_relevant(space: CombinationSpace, constraints: Sequence[Constraint],
                   mode: str = "center") -> int:
    if not constraints:
        return space.total
    return sum(int(mask.sum()) for _, mask in relevant_chunks(space, constraints, mode))

"""Covered-combination sets, the completeness ratio and gap enumeration.

A CoveredSet is keyed by the spec fingerprint: marking, union and
persistence refuse to mix artifacts from different specs. Relevance is
never stored alongside coverage — it is recomputed during reporting, so
editing constraints can never invalidate accumulated coverage data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, SpecHashMismatch
from .ingest import IngestStats
from .space import CombinationSpace, Constraint, relevant_chunks

DENSE_LIMIT = 2 ** 31  # dense bit-array up to 256 MiB
_MAGIC = b"ODDCOV01"


def _check_same(a: "CoveredSet", b: "CoveredSet") -> None:
    if a.spec_hash != b.spec_hash:
        raise SpecHashMismatch(
            f"covered sets come from different specs ({a.spec_hash[:12]}… vs {b.spec_hash[:12]}…)")
    if a.total != b.total:
        raise SpecHashMismatch(f"covered sets disagree on space size ({a.total} vs {b.total})")


class CoveredSet:
    """Set of combination indices exercised by at least one data point."""

    kind: str
    total: int
    spec_hash: str

    @staticmethod
    def create(total: int, spec_hash: str, representation: str = "auto") -> "CoveredSet":
        if representation == "auto":
            representation = "dense" if total <= DENSE_LIMIT else "sparse"
        if representation == "dense":
            if total > DENSE_LIMIT:
                raise DataError(f"dense representation refused for {total} combinations "
                                f"(limit {DENSE_LIMIT}); use sparse")
            return DenseCovered(total, spec_hash)
        if representation == "sparse":
            return SparseCovered(total, spec_hash)
        raise ValueError(f"unknown covered-set representation '{representation}'")

    # --- interface -------------------------------------------------------

    def mark(self, combo: int) -> None:
        if not 0 <= combo < self.total:
            raise ValueError(f"combination index {combo} outside [0, {self.total})")
        self.mark_many(np.array([combo], dtype=np.uint64))

    def mark_many(self, combos: np.ndarray) -> None:
        raise NotImplementedError

    def contains(self, combo: int) -> bool:
        return bool(self.contains_many(np.array([combo], dtype=np.uint64))[0])

    def contains_many(self, combos: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def count(self) -> int:
        raise NotImplementedError

    def union(self, other: "CoveredSet") -> "CoveredSet":
        raise NotImplementedError

    # --- persistence -----------------------------------------------------

    def save(self, path) -> None:
        payload = self._payload().astype("<u8")
        header = struct.pack("<8s64sBQQ", _MAGIC, self.spec_hash.encode("ascii"),
                             0 if self.kind == "dense" else 1,
                             self.total, len(payload))
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())

    @staticmethod
    def load(path, expected_hash: str | None = None) -> "CoveredSet":
        try:
            with open(path, "rb") as fh:
                header = fh.read(struct.calcsize("<8s64sBQQ"))
                magic, hash_bytes, kind, total, count = struct.unpack("<8s64sBQQ", header)
                if magic != _MAGIC:
                    raise DataError(f"{path}: not a covered-set file")
                payload = np.frombuffer(fh.read(count * 8), dtype="<u8").astype(np.uint64)
        except OSError as exc:
            raise DataError(f"cannot read covered set {path}: {exc}") from exc
        if len(payload) != count:
            raise DataError(f"{path}: truncated covered-set file")
        spec_hash = hash_bytes.decode("ascii")
        if expected_hash is not None and spec_hash != expected_hash:
            raise SpecHashMismatch(
                f"{path} was produced under spec hash {spec_hash[:12]}…, "
                f"current spec hash is {expected_hash[:12]}…")
        if kind == 0:
            out: CoveredSet = DenseCovered(total, spec_hash)
            if len(payload) != len(out._words):
                raise DataError(f"{path}: word count {len(payload)} does not match "
                                f"space size {total}")
            out._words[:] = payload
            return out
        out = SparseCovered(total, spec_hash)
        out._sorted = payload
        return out

    def _payload(self) -> np.ndarray:
        raise NotImplementedError


class DenseCovered(CoveredSet):
    kind = "dense"

    def __init__(self, total: int, spec_hash: str):
        self.total = total
        self.spec_hash = spec_hash
        self._words = np.zeros((total + 63) // 64, dtype=np.uint64)

    def mark_many(self, combos: np.ndarray) -> None:
        if len(combos) == 0:
            return
        uniq = np.unique(combos.astype(np.uint64, copy=False))
        if len(uniq) and int(uniq[-1]) >= self.total:
            raise ValueError(f"combination index {int(uniq[-1])} outside [0, {self.total})")
        masks = np.left_shift(np.uint64(1), uniq & np.uint64(63))
        np.bitwise_or.at(self._words, (uniq >> np.uint64(6)).astype(np.int64), masks)

    def contains_many(self, combos: np.ndarray) -> np.ndarray:
        idx = combos.astype(np.uint64, copy=False)
        words = self._words[(idx >> np.uint64(6)).astype(np.int64)]
        return ((words >> (idx & np.uint64(63))) & np.uint64(1)).astype(bool)

    def count(self) -> int:
        return int(np.bitwise_count(self._words).sum())

    def union(self, other: CoveredSet) -> "DenseCovered":
        _check_same(self, other)
        out = DenseCovered(self.total, self.spec_hash)
        if isinstance(other, DenseCovered):
            np.bitwise_or(self._words, other._words, out=out._words)
        else:
            out._words[:] = self._words
            out.mark_many(other._payload())
        return out

    def _payload(self) -> np.ndarray:
        return self._words


class SparseCovered(CoveredSet):
    kind = "sparse"

    def __init__(self, total: int, spec_hash: str):
        self.total = total
        self.spec_hash = spec_hash
        self._sorted = np.empty(0, dtype=np.uint64)
        self._pending: list[np.ndarray] = []

    def _consolidate(self) -> None:
        if self._pending:
            self._sorted = np.unique(np.concatenate([self._sorted] + self._pending))
            self._pending.clear()

    def mark_many(self, combos: np.ndarray) -> None:
        if len(combos) == 0:
            return
        chunk = np.unique(combos.astype(np.uint64, copy=False))
        if len(chunk) and int(chunk[-1]) >= self.total:
            raise ValueError(f"combination index {int(chunk[-1])} outside [0, {self.total})")
        self._pending.append(chunk)

    def contains_many(self, combos: np.ndarray) -> np.ndarray:
        self._consolidate()
        idx = combos.astype(np.uint64, copy=False)
        pos = np.searchsorted(self._sorted, idx)
        ok = pos < len(self._sorted)
        out = np.zeros(len(idx), dtype=bool)
        out[ok] = self._sorted[pos[ok]] == idx[ok]
        return out

    def count(self) -> int:
        self._consolidate()
        return len(self._sorted)

    def union(self, other: CoveredSet) -> CoveredSet:
        _check_same(self, other)
        if isinstance(other, DenseCovered):
            return other.union(self)
        self._consolidate()
        other._consolidate()
        out = SparseCovered(self.total, self.spec_hash)
        out._sorted = np.union1d(self._sorted, other._sorted)
        return out

    def _payload(self) -> np.ndarray:
        self._consolidate()
        return self._sorted


# ---------------------------------------------------------------------------
# reporting


@dataclass(frozen=True)
class CoverageReport:
    total: int
    relevant: int
    covered_total: int
    covered_relevant: int
    r_cov: float
    r_cov_unconstrained: float
    gap_count: int
    constraint_eval: str
    spec_hash: str
    ingest: IngestStats | None = None


def compute_report(covered: CoveredSet, space: CombinationSpace,
                   constraints: Sequence[Constraint], mode: str = "center",
                   ingest: IngestStats | None = None,
                   spec_hash: str = "") -> CoverageReport:
    """Exact counts over the whole space; relevance recomputed on the fly."""
    key = spec_hash or covered.spec_hash
    if covered.spec_hash != key:
        raise SpecHashMismatch("covered set does not match the current spec")
    relevant = 0
    covered_relevant = 0
    for start, mask in relevant_chunks(space, constraints, mode):
        relevant += int(mask.sum())
        if mask.any():
            idx = start + np.flatnonzero(mask).astype(np.uint64)
            covered_relevant += int(covered.contains_many(idx).sum())
    covered_total = covered.count()
    # an empty relevant space is vacuously complete
    r_cov = covered_relevant / relevant if relevant else 1.0
    r_cov_unconstrained = covered_total / space.total if space.total else 1.0
    return CoverageReport(total=space.total, relevant=relevant,
                          covered_total=covered_total, covered_relevant=covered_relevant,
                          r_cov=r_cov, r_cov_unconstrained=r_cov_unconstrained,
                          gap_count=relevant - covered_relevant,
                          constraint_eval=mode, spec_hash=key, ingest=ingest)


def gap_chunks(covered: CoveredSet, space: CombinationSpace,
               constraints: Sequence[Constraint], mode: str = "center",
               limit: int | None = None) -> Iterator[np.ndarray]:
    """Relevant-but-uncovered indices, ascending, in array chunks."""
    remaining = limit
    for start, mask in relevant_chunks(space, constraints, mode):
        if not mask.any():
            continue
        idx = start + np.flatnonzero(mask).astype(np.uint64)
        gaps = idx[~covered.contains_many(idx)]
        if remaining is not None:
            if remaining <= 0:
                return
            gaps = gaps[:remaining]
            remaining -= len(gaps)
        if len(gaps):
            yield gaps


def list_gaps(covered: CoveredSet, space: CombinationSpace,
              constraints: Sequence[Constraint], mode: str = "center",
              limit: int | None = None) -> Iterator[int]:
    for chunk in gap_chunks(covered, space, constraints, mode, limit):
        for combo in chunk:
            yield int(combo)

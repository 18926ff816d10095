"""Discretization: bin edges per parameter, value-to-bin lookup.

Bins are half-open [e_i, e_{i+1}) with a closed last bin, so the edges
partition the full range with no overlap and no hole. Criticality-driven
schemes place edges so every bin carries the same criticality mass,
inverting the piecewise-quadratic cumulative mass analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .spec import (CountScheme, CriticalityProfile, CriticalityScheme,
                   ExplicitEdgesScheme, ParameterSpec, WidthScheme)


@dataclass(frozen=True)
class BinEdges:
    parameter: str
    edges: np.ndarray  # float64, strictly ascending, length n+1

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.float64)
        object.__setattr__(self, "edges", e)
        if e.ndim != 1 or len(e) < 2:
            raise SpecError(f"{self.parameter}: need at least 2 edges")
        if not np.all(np.diff(e) > 0):
            raise SpecError(f"{self.parameter}: edges must be strictly ascending")

    @property
    def n(self) -> int:
        return len(self.edges) - 1

    @property
    def low(self) -> float:
        return float(self.edges[0])

    @property
    def high(self) -> float:
        return float(self.edges[-1])

    def centers(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2.0


def equal_width_edges(low: float, high: float, n: int) -> np.ndarray:
    """n equal-width edges with exact endpoints.

    Uses low + span*i/n (not repeated addition) so the midpoint of an even
    split lands exactly on the arithmetic midpoint; the VerticalCAS sign
    arguments rely on edge 50 of h being exactly 0.
    """
    if n < 1:
        raise SpecError(f"bin count must be >= 1, got {n}")
    span = high - low
    edges = low + span * np.arange(n + 1, dtype=np.float64) / n
    edges[0] = low
    edges[-1] = high
    return edges


def width_edges(low: float, high: float, width: float) -> np.ndarray:
    """ceil(span/width) bins of the given width; the last bin may be narrower."""
    span = high - low
    if width > span:
        raise SpecError(f"bin width {width} exceeds range span {span}")
    n = max(1, math.ceil(span / width - 1e-9))
    edges = low + width * np.arange(n + 1, dtype=np.float64)
    edges[-1] = high
    if edges[-1] <= edges[-2]:
        edges = edges[:-1]
        edges[-1] = high
    return edges


# ---------------------------------------------------------------------------
# criticality profiles


def _clipped_knots(profile: CriticalityProfile, low: float, high: float):
    """Profile knots restricted to [low, high], interpolating at the cut points."""
    xs = np.array([x for x, _ in profile.points], dtype=np.float64)
    cs = np.array([c for _, c in profile.points], dtype=np.float64)
    if xs[0] > low or xs[-1] < high:
        raise SpecError(
            f"profile '{profile.name}' spans [{xs[0]}, {xs[-1]}] but must cover [{low}, {high}]")
    c_low = float(np.interp(low, xs, cs))
    c_high = float(np.interp(high, xs, cs))
    inside = (xs > low) & (xs < high)
    kx = np.concatenate(([low], xs[inside], [high]))
    kc = np.concatenate(([c_low], cs[inside], [c_high]))
    return kx, kc


def profile_mass(profile: CriticalityProfile, low: float, high: float) -> float:
    """Integral of the criticality density over [low, high]."""
    if profile.form == "uniform":
        return high - low
    kx, kc = _clipped_knots(profile, low, high)
    return float(np.trapezoid(kc, kx))


def edges_from_criticality(profile: CriticalityProfile, low: float, high: float,
                           n: int) -> np.ndarray:
    """Edges splitting [low, high] into n bins of equal criticality mass.

    The cumulative mass of a piecewise-linear density is piecewise
    quadratic, so each target mass is inverted in closed form on its
    segment. Uniform profiles short-circuit to the equal-width formula,
    which keeps them bit-identical to a plain count scheme.
    """
    if n < 1:
        raise SpecError(f"bin count must be >= 1, got {n}")
    if profile.form == "uniform":
        return equal_width_edges(low, high, n)

    kx, kc = _clipped_knots(profile, low, high)
    seg_mass = 0.5 * (kc[:-1] + kc[1:]) * np.diff(kx)
    cum = np.concatenate(([0.0], np.cumsum(seg_mass)))
    total = cum[-1]
    if total <= 0.0:
        raise SpecError(f"profile '{profile.name}' has zero criticality mass over [{low}, {high}]")

    edges = np.empty(n + 1, dtype=np.float64)
    edges[0] = low
    edges[n] = high
    for i in range(1, n):
        target = total * i / n
        # first segment whose cumulative mass reaches the target
        seg = int(np.searchsorted(cum, target, side="left")) - 1
        seg = min(max(seg, 0), len(seg_mass) - 1)
        m = target - cum[seg]
        x0, x1 = kx[seg], kx[seg + 1]
        c0, c1 = kc[seg], kc[seg + 1]
        slope = (c1 - c0) / (x1 - x0)
        if abs(slope) * (x1 - x0) <= 1e-12 * max(c0, 1.0):
            # flat segment; zero-density plateaus put the edge at the
            # earliest point reaching the target
            d = m / c0 if c0 > 0 else 0.0
        else:
            disc = c0 * c0 + 2.0 * slope * m
            d = (math.sqrt(max(disc, 0.0)) - c0) / slope
        edges[i] = min(max(x0 + d, low), high)
    if not np.all(np.diff(edges) > 0):
        raise SpecError(f"profile '{profile.name}': equal-mass edges are not strictly ascending "
                        "(density too close to zero somewhere in the range)")
    return edges


# ---------------------------------------------------------------------------
# edge construction and lookup


def build_edges(param: ParameterSpec, profiles=()) -> BinEdges:
    """Concrete edges for one parameter.

    Categorical parameters get one unit-width bin per level (the level
    index is the coordinate); continuous parameters follow their scheme.
    """
    if param.kind == "categorical":
        if not param.levels:
            raise SpecError(f"{param.name}: categorical parameter needs levels")
        return BinEdges(param.name, np.arange(len(param.levels) + 1, dtype=np.float64))

    if param.range is None or param.bin_scheme is None:
        raise SpecError(f"{param.name}: continuous parameter needs range and bin_scheme")
    low, high = param.range
    scheme = param.bin_scheme
    if isinstance(scheme, CountScheme):
        return BinEdges(param.name, equal_width_edges(low, high, scheme.count))
    if isinstance(scheme, WidthScheme):
        return BinEdges(param.name, width_edges(low, high, scheme.width))
    if isinstance(scheme, ExplicitEdgesScheme):
        edges = np.asarray(scheme.edges, dtype=np.float64)
        if edges[0] != low or edges[-1] != high:
            raise SpecError(f"{param.name}: explicit edges must start at {low} and end at {high}")
        return BinEdges(param.name, edges)
    if isinstance(scheme, CriticalityScheme):
        profile = next((p for p in profiles if p.name == scheme.profile), None)
        if profile is None:
            raise SpecError(f"{param.name}: unknown criticality profile '{scheme.profile}'")
        return BinEdges(param.name, edges_from_criticality(profile, low, high, scheme.count))
    raise SpecError(f"{param.name}: unsupported bin scheme {scheme!r}")


def value_to_bin(value: float, edges: BinEdges) -> int | None:
    """Bin index holding the value, or None when outside the range.

    Half-open bins with a closed top bin: edges[i] <= v < edges[i+1] and
    the range maximum falls into bin n-1. NaN is outside by definition.
    """
    e = edges.edges
    if not (e[0] <= value <= e[-1]):
        return None
    i = int(np.searchsorted(e, value, side="right")) - 1
    return min(i, edges.n - 1)


def values_to_bins(values: np.ndarray, edges: BinEdges) -> np.ndarray:
    """Vectorized value_to_bin over in-range values.

    Out-of-range rows are the caller's concern (they carry a mask); their
    indices are clipped into [0, n-1] so they stay inert in later
    vectorized lookups instead of wrapping around.
    """
    idx = np.searchsorted(edges.edges, values, side="right") - 1
    return np.clip(idx, 0, edges.n - 1).astype(np.int64)


def bin_center(index: int, edges: BinEdges) -> float:
    if not 0 <= index < edges.n:
        raise IndexError(f"{edges.parameter}: bin index {index} outside 0..{edges.n - 1}")
    return float((edges.edges[index] + edges.edges[index + 1]) / 2.0)

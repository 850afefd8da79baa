"""Empirical minimum-volume sets over unions of dyadic cells.

All cells of a depth-``j`` grid have the same volume, so the smallest union
reaching a mass target is a prefix of the cells sorted by decreasing count.
Ties are broken by ascending lexicographic cell index, which makes the
solutions for increasing targets nested.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Box, DataError, Dataset, DomainError
from .volume import exact_cellset_volume

# Slack for comparing cumulative counts / n against a float mass target.
MASS_TOL = 1e-12


def flat_index(idx: np.ndarray, depth: int) -> np.ndarray:
    """Row-major scalar key of each cell index row."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return np.zeros(0, dtype=np.int64)
    idx = idx.reshape(idx.shape[0], -1) if idx.ndim > 1 else idx.reshape(-1, 1)
    side = np.int64(2 ** depth)
    flat = np.zeros(idx.shape[0], dtype=np.int64)
    for col in range(idx.shape[1]):
        flat = flat * side + idx[:, col]
    return flat


def cell_indices(points: np.ndarray, box: Box, depth: int, strict: bool = False) -> np.ndarray:
    """Integer cell coordinates of each point; the upper face maps to the last cell."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != box.d:
        raise DataError(f"points have dimension {points.shape[1]}, box has {box.d}")
    side = 2 ** depth
    if strict and not np.all(box.contains(points)):
        raise DataError("point outside the histogram box")
    idx = np.floor((points - box.lower) / box.widths * side).astype(np.int64)
    return np.clip(idx, 0, side - 1)


@dataclass(frozen=True, eq=False)
class DyadicHistogram:
    """Counts of points per nonempty cell, cells in lexicographic order."""

    box: Box
    depth: int
    cells: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def cell_volume(self) -> float:
        return self.box.volume * 2.0 ** (-self.depth * self.d)

    def count_map(self) -> dict:
        return {tuple(int(i) for i in c): int(k) for c, k in zip(self.cells, self.counts)}

    @cached_property
    def greedy_order(self) -> np.ndarray:
        """Cell positions sorted by count descending, then index ascending."""
        keys = [self.cells[:, c] for c in range(self.d - 1, -1, -1)]
        return np.lexsort(keys + [-self.counts])

    @cached_property
    def cumulative_counts(self) -> np.ndarray:
        return np.cumsum(self.counts[self.greedy_order])

    def prefix_length(self, alpha: float, phi: float = 0.0) -> tuple[int, bool]:
        """Number of greedy cells solving the problem, and whether it was feasible."""
        target = alpha - phi
        if target <= 0:
            return 0, True
        need = self.cumulative_counts / self.n >= target - MASS_TOL
        if not np.any(need):
            return len(self.counts), False
        return int(np.argmax(need)) + 1, True


@dataclass(frozen=True, eq=False)
class CellSet:
    box: Box
    depth: int
    cells: np.ndarray
    empirical_mass: float
    volume: float
    feasible: bool = True

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, self.box.d)
        if len(cells):
            order = np.lexsort([cells[:, c] for c in range(cells.shape[1] - 1, -1, -1)])
            cells = cells[order]
        object.__setattr__(self, "cells", cells)

    def __len__(self):
        return self.cells.shape[0]

    def keys(self) -> set:
        return {tuple(int(i) for i in c) for c in self.cells}

    def issubset(self, other: "CellSet") -> bool:
        return self.keys() <= other.keys()

    def union(self, other: "CellSet", mass: float | None = None) -> "CellSet":
        if other.depth != self.depth or other.box != self.box:
            raise DomainError("cannot combine cell sets of different grids")
        keys = sorted(self.keys() | other.keys())
        cells = np.array(keys, dtype=np.int64).reshape(-1, self.box.d)
        return CellSet(self.box, self.depth, cells,
                       max(self.empirical_mass, other.empirical_mass) if mass is None else mass,
                       exact_cellset_volume(cells, self.box, self.depth),
                       self.feasible and other.feasible)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        inside = self.box.contains(points)
        if not len(self):
            return np.zeros(points.shape[0], dtype=bool)
        idx = cell_indices(points, self.box, self.depth)
        hit = np.isin(flat_index(idx, self.depth), flat_index(self.cells, self.depth))
        return hit & inside

    def to_dict(self) -> dict:
        return {"depth": self.depth, "box": self.box.to_dict(),
                "cells": self.cells.tolist(), "mass": self.empirical_mass,
                "volume": self.volume}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def build_histogram(data: Dataset, box: Box, depth: int, strict: bool = False) -> DyadicHistogram:
    """Bin the data on the dyadic grid of ``box`` at resolution ``2**-depth``.

    Points outside the box are clipped into the border cells, or rejected
    when ``strict`` is set.
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    if data.d != box.d:
        raise DataError("data and box dimensions differ")
    idx = cell_indices(data.points, box, depth, strict=strict)
    cells, counts = np.unique(idx, axis=0, return_counts=True)
    return DyadicHistogram(box, depth, cells.astype(np.int64), counts.astype(np.int64), data.n)


def histogram_from_counts(box: Box, depth: int, count_map: dict) -> DyadicHistogram:
    """Histogram from an explicit ``{cell index: count}`` map (zero counts dropped)."""
    items = sorted((tuple(int(i) for i in k), int(v)) for k, v in count_map.items() if v > 0)
    side = 2 ** depth
    for k, v in items:
        if len(k) != box.d or min(k) < 0 or max(k) >= side:
            raise DomainError(f"cell index {k} invalid at depth {depth}")
    cells = np.array([k for k, _ in items], dtype=np.int64).reshape(-1, box.d)
    counts = np.array([v for _, v in items], dtype=np.int64)
    return DyadicHistogram(box, depth, cells, counts, int(counts.sum()))


def phi_penalty(n: int, delta: float, rademacher_c: float = 0.0) -> float:
    """Uniform-deviation penalty ``2 C / sqrt(n) + sqrt(ln(1/delta) / (2n))``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if rademacher_c < 0:
        raise DomainError("Rademacher constant must be nonnegative")
    return 2.0 * rademacher_c / math.sqrt(n) + math.sqrt(math.log(1.0 / delta) / (2.0 * n))


def min_volume_set(hist: DyadicHistogram, alpha: float, phi: float = 0.0) -> CellSet:
    """Smallest union of cells with empirical mass at least ``alpha - phi``.

    If the target exceeds the total mass the full set of nonempty cells is
    returned with ``feasible=False``.
    """
    k, feasible = hist.prefix_length(alpha, phi)
    pos = hist.greedy_order[:k]
    cells = hist.cells[pos]
    mass = float(hist.cumulative_counts[k - 1]) / hist.n if k else 0.0
    return CellSet(hist.box, hist.depth, cells, mass,
                   exact_cellset_volume(cells, hist.box, hist.depth), feasible)


def q_star_estimate(hist: DyadicHistogram, alpha: float) -> float:
    """Histogram density of the last cell admitted at level ``alpha`` (0 if none)."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    k, _ = hist.prefix_length(alpha, 0.0)
    if k == 0:
        return 0.0
    count = hist.counts[hist.greedy_order[k - 1]]
    return float(count) / (hist.n * hist.cell_volume)

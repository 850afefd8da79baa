"""Lebesgue volumes of score level sets ``{x : s(x) >= t}``.

Two providers share the ``level_set_volumes(scorer, thresholds)`` method:
:class:`VolumeEstimator` (Monte-Carlo, uniform points in a box, drawn once
and reused for every scorer and threshold) and :class:`ExactVolume` (a
closed-form volume function).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import Box, DataError, Dataset, DomainError, RandomSource

DEFAULT_MC_SAMPLES = 1_000_000


def bounding_box(data: Dataset, padding_fraction: float = 0.05) -> Box:
    """Per-axis ``[min - p*range, max + p*range]``; flat axes widen by 1 each side."""
    if padding_fraction < 0:
        raise DomainError("padding fraction must be nonnegative")
    lo = data.points.min(axis=0)
    hi = data.points.max(axis=0)
    rng = hi - lo
    pad = padding_fraction * rng
    flat = rng == 0
    pad[flat] = 1.0
    return Box(lo - pad, hi + pad)


class VolumeEstimator:
    """Monte-Carlo level-set volumes on a fixed uniform sample of ``box``.

    Scores of the MC points are cached per scorer object (sorted), so a volume
    query is a binary search. Because every threshold and every scorer is
    evaluated on the same points, estimated volumes are exactly nonincreasing
    in the threshold, and a strictly increasing transform of a scorer selects
    exactly the same points.
    """

    def __init__(self, box: Box, n_samples: int = DEFAULT_MC_SAMPLES,
                 rng: RandomSource | None = None):
        if n_samples < 1:
            raise DomainError("need at least one Monte-Carlo point")
        self.box = box
        self.n_samples = int(n_samples)
        rng = rng if rng is not None else RandomSource(0)
        self.mc_points = box.lower + box.widths * rng.random((self.n_samples, box.d))
        self.mc_points.setflags(write=False)
        self._cache: dict[int, tuple[object, np.ndarray]] = {}

    def sorted_scores(self, scorer) -> np.ndarray:
        if scorer.d != self.box.d:
            raise DataError(f"scorer dimension {scorer.d} != box dimension {self.box.d}")
        hit = self._cache.get(id(scorer))
        if hit is None or hit[0] is not scorer:
            hit = (scorer, np.sort(scorer.score(self.mc_points)))
            self._cache[id(scorer)] = hit
        return hit[1]

    def counts(self, scorer, thresholds) -> np.ndarray:
        """Number of MC points with score ``>= t`` for each threshold."""
        s = self.sorted_scores(scorer)
        t = np.asarray(thresholds, dtype=float)
        return self.n_samples - np.searchsorted(s, t, side="left")

    def level_set_volumes(self, scorer, thresholds) -> np.ndarray:
        return self.box.volume * self.counts(scorer, thresholds) / self.n_samples

    def volume_of(self, scorer, threshold: float) -> float:
        return float(self.level_set_volumes(scorer, [threshold])[0])


def mc_level_set_volumes(est: VolumeEstimator, scorer, thresholds) -> np.ndarray:
    return est.level_set_volumes(scorer, thresholds)


class ExactVolume:
    """Volume provider backed by an exact function ``t -> lambda_s(t)``.

    The function is trusted to be nonincreasing; it receives one threshold at
    a time unless ``vectorized`` is set.
    """

    def __init__(self, fn: Callable, box: Box | None = None, vectorized: bool = False):
        self.fn = fn
        self.box = box
        self.vectorized = vectorized

    @classmethod
    def for_piecewise(cls, scorer) -> "ExactVolume":
        """Exact volumes of a :class:`DyadicPiecewise` scorer inside its box."""
        levels = np.array(sorted(scorer.levels.values()))
        n_cells = 2 ** (scorer.depth * scorer.d)
        n_rest = n_cells - len(levels)
        cv = scorer.cell_volume

        def fn(t):
            t = np.asarray(t, dtype=float)
            listed = len(levels) - np.searchsorted(levels, t, side="left")
            rest = np.where(scorer.default >= t, n_rest, 0)
            return (listed + rest) * cv

        return cls(fn, scorer.box, vectorized=True)

    def level_set_volumes(self, scorer, thresholds) -> np.ndarray:
        t = np.asarray(thresholds, dtype=float)
        if self.vectorized:
            return np.asarray(self.fn(t), dtype=float)
        return np.array([float(self.fn(v)) for v in t.ravel()]).reshape(t.shape)


def exact_cellset_volume(cells, box: Box, depth: int) -> float:
    """``#cells * vol(box) * 2**(-depth*d)`` after validating every index."""
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, box.d) if len(cells) else np.empty((0, box.d))
    side = 2 ** depth
    if cells.size and (cells.min() < 0 or cells.max() >= side):
        raise DomainError(f"cell index out of range for depth {depth}")
    return cells.shape[0] * box.volume * 2.0 ** (-depth * box.d)

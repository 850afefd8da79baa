"""Smoothed-bootstrap confidence bands for MV curves.

Fluctuations ``sqrt(n) (MV_boot - MV_smooth)`` are simulated from the
kernel-smoothed score distribution, their sup over a grid of
``[eps, 1 - eps]`` is collected per replicate, and the ``(1 - eta)``
bootstrap quantile of those sups gives the band radius around the raw
empirical curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, RandomSource, StepCurve
from .kde import KdeModel, kde_quantile, sample_kde
from .mvcurve import ScoreSample, empirical_mv_curve, mass_inverse_index

DEFAULT_GRID = 512


@dataclass(frozen=True)
class ConfidenceBand:
    center: StepCurve
    radius: float
    epsilon: float
    eta: float
    replications: int
    nu_eta: float
    grid: np.ndarray
    sups: np.ndarray

    def __post_init__(self):
        if self.radius < 0:
            raise DomainError("radius must be nonnegative")

    def lower(self, alpha) -> np.ndarray:
        return np.maximum(np.asarray(self.center(alpha)) - self.radius, 0.0)

    def upper(self, alpha) -> np.ndarray:
        return np.asarray(self.center(alpha)) + self.radius

    def contains(self, curve_values, alpha=None) -> bool:
        """Whether values of a curve on ``alpha`` (default: band grid) stay within the radius."""
        alpha = self.grid if alpha is None else np.asarray(alpha, dtype=float)
        vals = np.asarray(curve_values, dtype=float)
        return bool(np.all(np.abs(vals - self.center(alpha)) <= self.radius))

    def summary(self, seed: int | None = None) -> dict:
        return {"nu_eta": float(self.nu_eta), "radius": float(self.radius),
                "epsilon": float(self.epsilon), "eta": float(self.eta),
                "reps": int(self.replications), "seed": seed}


def smoothed_thresholds(model: KdeModel, alpha) -> np.ndarray:
    """Smoothed mass inverse ``F~^dagger(1 - alpha)`` clipped to the observed score range.

    ``alpha = 0`` maps to the largest score. Clipping only acts within about
    ``1/n`` of the mass range ends, and keeps degenerate (tied) samples on the
    empirical curve.
    """
    a = np.asarray(alpha, dtype=float)
    s = model.sorted_scores
    out = np.empty(a.shape)
    top = a <= 0
    out[top] = s[-1]
    if np.any(~top):
        out[~top] = kde_quantile(model, 1.0 - a[~top])
    return np.clip(out, s[0], s[-1])


def smoothed_mv_curve(model: KdeModel, scorer, est, grid: int = DEFAULT_GRID) -> StepCurve:
    """Smoothed MV curve on breakpoints ``g / G``."""
    if grid < 2:
        raise DomainError("grid needs at least 2 points")
    alphas = np.arange(grid) / grid
    vols = est.level_set_volumes(scorer, smoothed_thresholds(model, alphas))
    return StepCurve(np.arange(grid + 1) / grid, vols)


def quantile_rank(reps: int, eta: float) -> int:
    """One-based rank ``ceil((N + 1)(1 - eta))`` clamped to ``N``."""
    return min(reps, max(1, math.ceil((reps + 1) * (1.0 - eta) - 1e-9)))


def alpha_grid(epsilon: float, grid: int) -> np.ndarray:
    return np.linspace(epsilon, 1.0 - epsilon, grid)


def bootstrap_band(sample: ScoreSample, scorer, est, h: float, epsilon: float = 0.05,
                   eta: float = 0.1, reps: int | None = None, grid: int = DEFAULT_GRID,
                   rng: RandomSource | None = None, naive: bool = False) -> ConfidenceBand:
    """Confidence band of level ``1 - eta`` around the empirical MV curve.

    Parameters
    ----------
    sample : ScoreSample
        Scores of the observed data under ``scorer``.
    scorer, est
        The scoring function and a volume provider shared by all replicates.
    h : float
        Kernel bandwidth of the smoothed score distribution.
    epsilon, eta : float
        Mass range ``[epsilon, 1 - epsilon]`` and miscoverage level.
    reps : int, optional
        Number of bootstrap replicates; defaults to ``n``.
    grid : int
        Number of equispaced mass levels used for the sup.
    rng : RandomSource
        Replicate ``j`` draws from child stream ``j``.
    naive : bool
        Resample the raw scores and center at the empirical curve instead.
    """
    if not 0 < epsilon < 0.5:
        raise DomainError("epsilon must lie in (0, 1/2)")
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    n = sample.n
    reps = n if reps is None else int(reps)
    if reps < 1:
        raise DomainError("need at least one replicate")
    if grid < 2:
        raise DomainError("grid needs at least 2 points")
    rng = rng if rng is not None else RandomSource(0)

    center = empirical_mv_curve(sample, scorer, est)
    alphas = alpha_grid(epsilon, grid)
    model = KdeModel(sample.sorted_scores, h)
    if naive:
        ref = center(alphas)
    else:
        ref = est.level_set_volumes(scorer, smoothed_thresholds(model, alphas))
    idx = mass_inverse_index(n, alphas)

    sups = np.empty(reps)
    for j in range(reps):
        child = rng.child(j)
        if naive:
            draws = sample.sorted_scores[child.integers(0, n, n)]
        else:
            draws = sample_kde(model, n, child)
        draws.sort()
        boot = est.level_set_volumes(scorer, draws[idx])
        sups[j] = math.sqrt(n) * float(np.max(np.abs(boot - ref)))
    nu = float(np.sort(sups)[quantile_rank(reps, eta) - 1])
    return ConfidenceBand(center, nu / math.sqrt(n), epsilon, eta, reps, nu, alphas, sups)

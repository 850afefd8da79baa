"""Empirical and exact Mass-Volume curves, closed-form optima, excess mass."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, ndtri

from .core import DomainError, NumericalError, StepCurve
from .scoring import GaussianParams, Scorer


@dataclass(frozen=True)
class ScoreSample:
    """Scores ``s(X_1..X_n)`` sorted ascending."""

    sorted_scores: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.sorted_scores, dtype=float).ravel(), kind="stable")
        if s.size < 1 or not np.all(np.isfinite(s)) or s[0] < 0:
            raise DomainError("scores must be finite, nonnegative and non-empty")
        s.setflags(write=False)
        object.__setattr__(self, "sorted_scores", s)

    @property
    def n(self) -> int:
        return self.sorted_scores.size


def mass_inverse_index(n: int, alpha) -> np.ndarray:
    """Zero-based index of the order statistic ``s_(ceil(n(1-alpha)))``."""
    a = np.asarray(alpha, dtype=float)
    k = np.ceil(n * (1.0 - a) - 1e-9).astype(np.int64)
    return np.clip(k, 1, n) - 1


def empirical_mass_inverse(sample: ScoreSample, alpha: float) -> float:
    """Generalized inverse of the empirical mass function at ``alpha``.

    Returns ``s_(k)`` with ``k = ceil(n (1 - alpha))`` clamped to ``[1, n]``;
    ``alpha = 0`` gives the largest score.
    """
    if not 0.0 <= alpha < 1.0:
        raise DomainError("alpha must lie in [0, 1)")
    return float(sample.sorted_scores[mass_inverse_index(sample.n, alpha)])


def empirical_mv_curve(sample: ScoreSample, scorer: Scorer, est) -> StepCurve:
    """Empirical MV curve: on ``[k/n, (k+1)/n)`` the volume of ``{s >= s_(n-k)}``."""
    n = sample.n
    thresholds = sample.sorted_scores[::-1]
    volumes = np.asarray(est.level_set_volumes(scorer, thresholds), dtype=float)
    return StepCurve(np.arange(n + 1) / n, volumes)


def exact_mv_for_partition(masses, volumes) -> StepCurve:
    """Curve equal to ``volumes[k]`` on ``[masses[k-1], masses[k])`` with mass_0 = 0."""
    m = np.asarray(masses, dtype=float).ravel()
    v = np.asarray(volumes, dtype=float).ravel()
    if m.size < 1 or m.size != v.size:
        raise DomainError("need equally many masses and volumes")
    if m[0] <= 0 or m[-1] > 1 or np.any(np.diff(m) <= 0):
        raise DomainError("masses must increase strictly inside (0, 1]")
    if np.any(np.diff(v) < 0):
        raise DomainError("volumes must be nondecreasing")
    return StepCurve(np.concatenate([[0.0], m]), v)


def mv_star_gaussian_1d(alpha, sigma: float = 1.0):
    """``2 sigma Phi^{-1}((1 + alpha) / 2)``, optimal MV curve of N(0, sigma^2)."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0) or np.any(a >= 1):
        raise DomainError("alpha must lie in [0, 1)")
    out = 2.0 * sigma * ndtri((1.0 + a) / 2.0)
    return float(out) if out.ndim == 0 else out


def chi2_quantile(alpha: float, d: int, tol: float = 1e-12) -> float:
    """Quantile of order ``alpha`` of chi-square(d), by bisection on the CDF.

    The CDF is the regularized lower incomplete gamma ``P(d/2, x/2)``.
    """
    if not 0.0 <= alpha < 1.0:
        raise DomainError("alpha must lie in [0, 1)")
    if alpha == 0.0:
        return 0.0
    lo, hi = 0.0, max(1.0, 2.0 * d)
    while gammainc(d / 2.0, hi / 2.0) < alpha:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalError("chi-square quantile bracket diverged")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            break
        if gammainc(d / 2.0, mid / 2.0) < alpha:
            lo = mid
        else:
            hi = mid
    else:
        raise NumericalError("chi-square quantile bisection did not converge")
    if d == 2 and abs(mid + 2.0 * math.log1p(-alpha)) > 1e-9 * max(1.0, mid):
        raise NumericalError("chi-square bisection disagrees with the d=2 closed form")
    return mid


def mv_star_gaussian_diag(alpha: float, params: GaussianParams) -> float:
    """Volume of the Mahalanobis ellipsoid holding probability ``alpha``.

    ``pi^{d/2} / Gamma(d/2 + 1) * chi2_d(alpha)^{d/2} * prod(sqrt(diag_cov))``.
    """
    if not params.is_diagonal:
        raise DomainError("closed form requires a diagonal covariance")
    d = params.d
    q = chi2_quantile(alpha, d)
    axes = float(np.prod(np.sqrt(params.diag_cov)))
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * q ** (d / 2) * axes


def gaussian_level_at_mass(alpha: float, params: GaussianParams) -> float:
    """Density value ``t`` such that ``{pdf >= t}`` has probability ``alpha``."""
    q = chi2_quantile(alpha, params.d)
    center = float(params.pdf(params.mean[None, :])[0])
    return center * math.exp(-0.5 * q)


def mv_star_derivative(alpha: float, q_star: float) -> float:
    """Slope of the optimal MV curve, the reciprocal of the density quantile."""
    if q_star <= 0:
        raise DomainError("density quantile must be positive")
    return 1.0 / q_star


def excess_mass(alpha: float, mv_star_value: float, q_star: float) -> float:
    return alpha - q_star * mv_star_value


def mv_star_reference(scorer: Scorer, sample_points: np.ndarray, est) -> StepCurve:
    """Numerical MV* of a known density: empirical MV curve of the density itself.

    ``sample_points`` should be a large sample from the same density.
    """
    return empirical_mv_curve(ScoreSample(scorer.score(sample_points)), scorer, est)


def sample_curve(curve: StepCurve, grid) -> np.ndarray:
    return np.asarray(curve(np.asarray(grid, dtype=float)))

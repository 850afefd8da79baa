"""Biweight-kernel smoothing of a score distribution.

The smoothed CDF is ``F(t) = (1/n) sum_i B((t - s_i) / h)`` with ``B`` the
biweight CDF. Only scores within ``h`` of ``t`` contribute a fractional
term, so evaluations work on a sliding window of the sorted scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, NumericalError, RandomSource

BIWEIGHT_MAX = 15.0 / 16.0


def biweight_pdf(u):
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, BIWEIGHT_MAX * (1.0 - u * u) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def biweight_cdf(u):
    u = np.asarray(u, dtype=float)
    uc = np.clip(u, -1.0, 1.0)
    out = 0.5 + BIWEIGHT_MAX * (uc - 2.0 * uc ** 3 / 3.0 + uc ** 5 / 5.0)
    out = np.where(u <= -1.0, 0.0, np.where(u >= 1.0, 1.0, out))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KdeModel:
    sorted_scores: np.ndarray
    bandwidth: float

    def __post_init__(self):
        s = np.sort(np.asarray(self.sorted_scores, dtype=float).ravel())
        if s.size < 1 or not np.all(np.isfinite(s)):
            raise DomainError("scores must be finite and non-empty")
        if not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "sorted_scores", s)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def n(self) -> int:
        return self.sorted_scores.size

    @property
    def support(self) -> tuple[float, float]:
        h = self.bandwidth
        return float(self.sorted_scores[0] - h), float(self.sorted_scores[-1] + h)


def kde_cdf(model: KdeModel, t):
    """Smoothed CDF at ``t`` (scalar or array)."""
    s, h, n = model.sorted_scores, model.bandwidth, model.n
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    # scores <= t - h contribute 1; scores >= t + h contribute 0
    below = np.searchsorted(s, flat - h, side="right")
    upper = np.searchsorted(s, flat + h, side="left")
    width = int(np.max(upper - below)) if flat.size else 0
    total = below.astype(float)
    if width > 0:
        chunk = max(1, 4_000_000 // width)
        for start in range(0, flat.size, chunk):
            sl = slice(start, start + chunk)
            idx = below[sl, None] + np.arange(width)[None, :]
            valid = idx < upper[sl, None]
            vals = s[np.minimum(idx, s.size - 1)]
            contrib = np.where(valid, biweight_cdf((flat[sl, None] - vals) / h), 0.0)
            total[sl] += contrib.sum(axis=1)
    out = (total / n).reshape(t.shape)
    return float(out) if out.ndim == 0 else out


def kde_pdf(model: KdeModel, t):
    s, h = model.sorted_scores, model.bandwidth
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = biweight_pdf((t[:, None] - s[None, :]) / h).sum(axis=1) / (model.n * h)
    return out


def kde_quantile(model: KdeModel, p, tol: float = 1e-10, max_iter: int = 200):
    """Generalized inverse of :func:`kde_cdf` by vectorized monotone bisection.

    Stops per entry once ``|F(t) - p| <= tol`` or the bracket cannot shrink
    further in double precision.

    Raises
    ------
    NumericalError
        If some entry is still unresolved after ``max_iter`` halvings.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0) or np.any(p_arr >= 1):
        raise DomainError("p must lie in (0, 1)")
    flat = p_arr.ravel()
    lo0, hi0 = model.support
    lo = np.full(flat.shape, lo0)
    hi = np.full(flat.shape, hi0)
    result = np.full(flat.shape, np.nan)
    active = np.arange(flat.size)
    for _ in range(max_iter):
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        f = np.asarray(kde_cdf(model, mid)).reshape(-1)
        target = flat[active]
        done = (np.abs(f - target) <= tol) | (mid <= lo[active]) | (mid >= hi[active])
        result[active[done]] = mid[done]
        go_up = (f < target) & ~done
        go_down = ~go_up & ~done
        lo[active[go_up]] = mid[go_up]
        hi[active[go_down]] = mid[go_down]
        active = active[~done]
    if active.size:
        raise NumericalError(f"kde_quantile did not converge for {active.size} level(s)")
    out = result.reshape(p_arr.shape)
    return float(out) if out.ndim == 0 else out


def default_bandwidth(n: int, scale: float = 1.0) -> float:
    """``scale * (ln n / n) ** (1/5)``, the rate-optimal bandwidth shape."""
    if n < 2:
        raise DomainError("bandwidth rule needs n >= 2")
    if not scale > 0:
        raise DomainError("scale must be positive")
    return scale * (math.log(n) / n) ** 0.2


def bandwidth_for(scores, bandwidth: float | None = None) -> float:
    """Explicit bandwidth, or the default rule scaled by the score spread."""
    if bandwidth is not None:
        return float(bandwidth)
    scores = np.asarray(scores, dtype=float)
    sd = float(np.std(scores, ddof=1)) if scores.size > 1 else 0.0
    if sd <= 0:
        sd = max(abs(float(scores.mean())), 1.0) * 1e-6 if scores.size else 1e-6
    return default_bandwidth(max(scores.size, 2), sd)


def biweight_noise(m: int, rng: RandomSource) -> np.ndarray:
    """``m`` biweight draws by rejection under the box ``[-1, 1] x [0, 15/16]``."""
    out = np.empty(m)
    filled = 0
    while filled < m:
        batch = max(64, int(2.0 * (m - filled)))
        u = rng.uniform(-1.0, 1.0, batch)
        v = rng.uniform(0.0, BIWEIGHT_MAX, batch)
        keep = u[v <= BIWEIGHT_MAX * (1.0 - u * u) ** 2]
        take = min(keep.size, m - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sample_kde(model: KdeModel, m: int, rng: RandomSource) -> np.ndarray:
    """``m`` i.i.d. draws from the smoothed distribution."""
    if m < 1:
        raise DomainError("m must be at least 1")
    picks = model.sorted_scores[rng.integers(0, model.n, m)]
    return picks + model.bandwidth * biweight_noise(m, rng)

import math

import numpy as np
import pytest

from mvrank.bootstrap import (ConfidenceBand, alpha_grid, bootstrap_band, quantile_rank,
                              smoothed_mv_curve, smoothed_thresholds)
from mvrank.core import Box, DomainError, RandomSource
from mvrank.kde import KdeModel, sample_kde
from mvrank.mvcurve import ScoreSample, empirical_mv_curve
from mvrank.scoring import (FunctionScorer, GaussianDensity, GaussianMixtureDensity,
                            GaussianParams, gm2d_params, simulate_mixture)
from mvrank.volume import VolumeEstimator, bounding_box


@pytest.fixture(scope="module")
def gm_setup():
    data = simulate_mixture(gm2d_params(), 500, RandomSource(10))
    f = GaussianMixtureDensity(gm2d_params())
    est = VolumeEstimator(bounding_box(data), 100_000, RandomSource(11))
    return ScoreSample(f.score(data.points)), f, est


def test_quantile_rank():
    assert quantile_rank(19, 0.1) == 18
    assert quantile_rank(1, 0.1) == 1
    assert quantile_rank(500, 0.1) == 451
    assert quantile_rank(10, 0.01) == 10


def test_smoothed_curve_tiny_bandwidth_matches_empirical():
    rs = RandomSource(12)
    f = GaussianDensity(GaussianParams([0.0], [1.0]))
    x = rs.normal((40, 1))
    est = VolumeEstimator(Box([-4.0], [4.0]), 50_000, rs.child(1))
    sample = ScoreSample(f.score(x))
    emp = empirical_mv_curve(sample, f, est)
    sm = smoothed_mv_curve(KdeModel(sample.sorted_scores, 1e-12), f, est, 64)
    alphas = np.arange(64) / 64
    clear = np.abs(40 * (1 - alphas) - np.round(40 * (1 - alphas))) > 1e-6
    step = est.box.volume / est.n_samples
    assert np.all(np.abs(sm(alphas[clear]) - emp(alphas[clear])) <= step)


def test_smoothed_curve_constant_scorer():
    const = FunctionScorer(lambda x: np.ones(x.shape[0]), 1)
    est = VolumeEstimator(Box([0.0], [2.0]), 1000, RandomSource(13))
    curve = smoothed_mv_curve(KdeModel(np.ones(10), 0.3), const, est, 32)
    assert np.all(curve.values == 2.0)


def test_smoothed_curve_monotone_on_mixture(gm_setup):
    sample, f, est = gm_setup
    curve = smoothed_mv_curve(KdeModel(sample.sorted_scores, 0.005), f, est, 256)
    assert curve.is_nondecreasing()


def test_smoothed_thresholds_decrease():
    m = KdeModel(np.abs(RandomSource(14).normal(100)), 0.1)
    t = smoothed_thresholds(m, np.linspace(0, 0.99, 50))
    assert np.all(np.diff(t) <= 0)
    assert t[0] == m.sorted_scores[-1]


def test_band_reference_configuration(gm_setup):
    sample, f, est = gm_setup
    band = bootstrap_band(sample, f, est, 0.005, epsilon=0.05, eta=0.1, reps=sample.n,
                          rng=RandomSource(15))
    assert band.radius >= 0
    assert band.replications == 500
    c = band.center(band.grid)
    assert np.all(band.lower(band.grid) <= c) and np.all(c <= band.upper(band.grid))
    assert band.grid[0] == 0.05 and band.grid[-1] == pytest.approx(0.95)
    assert band.nu_eta == pytest.approx(band.radius * math.sqrt(500))
    assert band.contains(c)
    s = band.summary(15)
    assert s["reps"] == 500 and s["seed"] == 15 and s["nu_eta"] == band.nu_eta


def test_band_replicate_oracle(gm_setup):
    sample, f, est = gm_setup
    h, eps, grid = 0.01, 0.05, 64
    rng = RandomSource(16)
    band = bootstrap_band(sample, f, est, h, eps, 0.1, 7, grid, rng)
    # recompute every replicate sup by direct counting on the MC points
    mc = f.score(est.mc_points)
    alphas = np.linspace(eps, 1 - eps, grid)
    model = KdeModel(sample.sorted_scores, h)
    ref_t = smoothed_thresholds(model, alphas)
    ref = np.array([np.mean(mc >= t) for t in ref_t]) * est.box.volume
    n = sample.n
    sups = []
    for j in range(7):
        draws = np.sort(sample_kde(model, n, rng.child(j)))
        idx = np.clip(np.ceil(n * (1 - alphas) - 1e-9).astype(int), 1, n) - 1
        vols = np.array([np.mean(mc >= t) for t in draws[idx]]) * est.box.volume
        sups.append(math.sqrt(n) * np.max(np.abs(vols - ref)))
    assert np.allclose(np.sort(band.sups), np.sort(sups), rtol=1e-12)
    assert band.nu_eta == pytest.approx(sorted(sups)[quantile_rank(7, 0.1) - 1], rel=1e-12)


def test_band_single_replicate_and_eta_order(gm_setup):
    sample, f, est = gm_setup
    one = bootstrap_band(sample, f, est, 0.01, reps=1, grid=32, rng=RandomSource(17))
    assert one.radius == pytest.approx(one.sups[0] / math.sqrt(sample.n))
    wide = bootstrap_band(sample, f, est, 0.01, eta=0.1, reps=50, grid=32, rng=RandomSource(18))
    narrow = bootstrap_band(sample, f, est, 0.01, eta=0.5, reps=50, grid=32, rng=RandomSource(18))
    assert narrow.radius <= wide.radius


def test_band_naive_mode(gm_setup):
    sample, f, est = gm_setup
    band = bootstrap_band(sample, f, est, 0.01, reps=30, grid=32, rng=RandomSource(19),
                          naive=True)
    assert band.radius >= 0 and band.sups.size == 30


def test_band_reproducible(gm_setup):
    sample, f, est = gm_setup
    a = bootstrap_band(sample, f, est, 0.01, reps=20, grid=32, rng=RandomSource(20))
    b = bootstrap_band(sample, f, est, 0.01, reps=20, grid=32, rng=RandomSource(20))
    assert np.array_equal(a.sups, b.sups)


def test_band_validation(gm_setup):
    sample, f, est = gm_setup
    with pytest.raises(DomainError):
        bootstrap_band(sample, f, est, 0.01, epsilon=0.6)
    with pytest.raises(DomainError):
        bootstrap_band(sample, f, est, 0.01, eta=0.0)
    with pytest.raises(DomainError):
        bootstrap_band(sample, f, est, 0.01, reps=0)
    with pytest.raises(DomainError):
        ConfidenceBand(None, -1.0, 0.05, 0.1, 1, 0.0, alpha_grid(0.05, 4), np.zeros(1))

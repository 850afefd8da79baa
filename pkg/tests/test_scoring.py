import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mvrank.core import Box, DataError, Dataset, DomainError, RandomSource
from mvrank.scoring import (DyadicPiecewise, GaussianDensity, GaussianMixtureDensity,
                            GaussianParams, MixtureParams, MonotoneTransform,
                            MonotoneTransformed, gm2d_params, mixture_from_spec, parse_scorer,
                            score_batch, score_point, scorer_from_dict, simulate_mixture,
                            transform_catalogue)

GM = gm2d_params()


def _gm_oracle(x):
    a = stats.multivariate_normal([0, 0], [[2, 2], [2, 4]]).pdf(x)
    b = stats.multivariate_normal([-1, -1], [[2, 0], [0, 2]]).pdf(x)
    return 0.5 * a + 0.5 * b


def test_standard_normal_at_zero():
    f = GaussianDensity(GaussianParams([0.0], [1.0]))
    assert score_point(f, [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)


def test_mixture_matches_scipy():
    pts = RandomSource(1).normal((50, 2)) * 3
    f = GaussianMixtureDensity(GM)
    assert np.allclose(f.score(pts), _gm_oracle(pts), rtol=1e-12, atol=0)


def test_score_batch_matches_pointwise():
    f = GaussianMixtureDensity(GM)
    pts = np.array([[0.0, 0.0], [1.0, -2.0], [-3.0, 4.0]])
    batch = score_batch(f, Dataset(pts))
    assert [score_point(f, p) for p in pts] == list(batch)
    assert np.allclose(batch, _gm_oracle(pts), rtol=1e-12)


def test_identity_affine_transform():
    base = GaussianMixtureDensity(GM)
    ident = MonotoneTransformed(MonotoneTransform("affine", 1.0, 0.0), base)
    pts = RandomSource(2).normal((10, 2))
    assert np.array_equal(ident.score(pts), base.score(pts))


def test_constant_dyadic_scorer():
    sc = DyadicPiecewise(Box([0.0], [1.0]), 2, {}, default=0.7)
    assert np.all(score_batch(sc, Dataset(RandomSource(3).random((20, 1)))) == 0.7)


def test_dyadic_scorer_hand_levels():
    sc = DyadicPiecewise(Box([0.0, 0.0], [1.0, 1.0]), 1, {(0, 1): 2.0, (1, 1): 1.0})
    pts = np.array([[0.2, 0.7], [0.8, 0.9], [0.3, 0.2], [1.0, 1.0], [2.0, 0.5]])
    assert list(sc.score(pts)) == [2.0, 1.0, 0.0, 1.0, 0.0]
    assert sc.level_set_volume(1.5) == 0.25
    assert sc.level_set_volume(0.5) == 0.5
    assert sc.level_set_volume(0.0) == 1.0


def test_truncated_density_integrates_to_one():
    f = GaussianDensity(GaussianParams([0.5], [0.0225]), Box([0.0], [1.0]))
    x = np.linspace(-0.5, 1.5, 200_001)[:, None]
    assert np.trapezoid(f.score(x), x[:, 0]) == pytest.approx(1.0, abs=1e-4)
    assert f.score(np.array([[-0.01], [1.01]])).tolist() == [0.0, 0.0]


@pytest.mark.parametrize("psi", transform_catalogue(), ids=lambda t: f"{t.kind}{t.p}")
@settings(max_examples=50, deadline=None)
@given(a=st.floats(0, 50), b=st.floats(0, 50))
def test_catalogue_strictly_increasing(psi, a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    assert psi(lo) <= psi(hi)
    assert psi(0.0) >= 0


def test_transform_validation():
    with pytest.raises(DomainError):
        MonotoneTransform("affine", a=-1.0)
    with pytest.raises(DomainError):
        MonotoneTransform("power", p=0.0)
    with pytest.raises(DomainError):
        MonotoneTransform("log")


def test_dimension_mismatch():
    with pytest.raises(DataError):
        GaussianMixtureDensity(GM).score(np.zeros((3, 1)))


def test_simulate_reproducible_and_shaped():
    a = simulate_mixture(GM, 500, RandomSource(4))
    b = simulate_mixture(GM, 500, RandomSource(4))
    assert a.points.shape == (500, 2)
    assert np.array_equal(a.points, b.points)


def test_simulate_tiny_variance_mean():
    p = MixtureParams([1.0], [GaussianParams([1.5, -2.0], [1e-12, 1e-12])])
    x = simulate_mixture(p, 1000, RandomSource(5)).points
    assert np.allclose(x.mean(axis=0), [1.5, -2.0], atol=1e-4)


def test_simulate_degenerate_weights():
    p = MixtureParams([1.0, 0.0], [GaussianParams([-50.0], [1.0]), GaussianParams([50.0], [1.0])])
    x = simulate_mixture(p, 400, RandomSource(6)).points
    assert np.all(x < 0)


def test_simulated_moments_match_mixture():
    x = simulate_mixture(GM, 200_000, RandomSource(7)).points
    # oracle moments: mean 0.5 mu1 + 0.5 mu2; second moment averages Sigma + mu mu^T
    mean = np.array([-0.5, -0.5])
    second = 0.5 * np.array([[2, 2], [2, 4]]) + 0.5 * (np.array([[2, 0], [0, 2]]) + 1.0)
    cov = second - np.outer(mean, mean)
    assert np.allclose(x.mean(axis=0), mean, atol=0.02)
    assert np.allclose(np.cov(x.T), cov, atol=0.05)


def test_scorer_spec_round_trip():
    specs = [
        GaussianDensity(GaussianParams([0.0, 1.0], [1.0, 2.0])),
        GaussianMixtureDensity(GM),
        DyadicPiecewise(Box([0.0], [2.0]), 3, {(1,): 2.0, (4,): 0.5}),
        MonotoneTransformed(MonotoneTransform("power", p=3.0),
                            GaussianDensity(GaussianParams([0.0], [1.0]))),
    ]
    pts = RandomSource(8).random((20, 2))
    for sc in specs:
        back = parse_scorer(json.dumps(sc.to_dict()))
        x = pts[:, : sc.d]
        assert np.array_equal(back.score(x), sc.score(x))


def test_scorer_spec_errors_and_aliases():
    assert mixture_from_spec("gm2d").d == 2
    sc = scorer_from_dict({"kind": "gaussian_mixture", "params": {"preset": "gm2d"}})
    assert sc.d == 2
    with pytest.raises(DataError):
        parse_scorer('{"kind": "nope"}')
    with pytest.raises(DataError):
        parse_scorer("not-json-nor-file")

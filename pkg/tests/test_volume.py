import math

import numpy as np
import pytest

from mvrank.core import Box, DataError, Dataset, DomainError, RandomSource
from mvrank.scoring import DyadicPiecewise, FunctionScorer, GaussianDensity, GaussianParams
from mvrank.volume import (ExactVolume, VolumeEstimator, bounding_box, exact_cellset_volume,
                           mc_level_set_volumes)

UNIT2 = Box([0.0, 0.0], [1.0, 1.0])


def test_bounding_box_hand_values():
    data = Dataset([[0.0, 0.0], [1.0, 2.0]])
    b = bounding_box(data, 0.0)
    assert b.lower.tolist() == [0.0, 0.0] and b.upper.tolist() == [1.0, 2.0]
    assert b.volume == 2.0
    b = bounding_box(data, 0.1)
    assert np.allclose(b.lower, [-0.1, -0.2]) and np.allclose(b.upper, [1.1, 2.2])


def test_bounding_box_single_point():
    b = bounding_box(Dataset([[3.0, -1.0, 2.0]]), 0.05)
    assert b.volume == 8.0


def test_constant_scorer_volumes():
    const = FunctionScorer(lambda x: np.ones(x.shape[0]), 2)
    est = VolumeEstimator(Box([0, 0], [2, 3]), 1000, RandomSource(0))
    assert est.volume_of(const, 0.5) == 6.0
    assert est.volume_of(const, 2.0) == 0.0


def test_half_square():
    s = FunctionScorer(lambda x: x[:, 0], 2)
    est = VolumeEstimator(UNIT2, 10 ** 6, RandomSource(1))
    assert abs(mc_level_set_volumes(est, s, [0.5])[0] - 0.5) <= 3 * math.sqrt(0.25 / 10 ** 6)


def test_volumes_nonincreasing_and_shared_points():
    f = GaussianDensity(GaussianParams([0.5, 0.5], [0.1, 0.2]))
    est = VolumeEstimator(UNIT2, 20_000, RandomSource(2))
    t = np.linspace(0, 3, 50)
    v = est.level_set_volumes(f, t)
    assert np.all(np.diff(v) <= 0)
    # oracle: direct count on the same points
    direct = np.array([np.mean(f.score(est.mc_points) >= ti) for ti in t])
    assert np.allclose(v, direct * UNIT2.volume, rtol=0, atol=1e-15)


def test_estimator_is_reproducible():
    a = VolumeEstimator(UNIT2, 100, RandomSource(3)).mc_points
    b = VolumeEstimator(UNIT2, 100, RandomSource(3)).mc_points
    assert np.array_equal(a, b)
    assert np.all(UNIT2.contains(a))


def test_estimator_dimension_check():
    est = VolumeEstimator(UNIT2, 100, RandomSource(3))
    with pytest.raises(DataError):
        est.volume_of(GaussianDensity(GaussianParams([0.0], [1.0])), 0.1)
    with pytest.raises(DomainError):
        VolumeEstimator(UNIT2, 0)


def test_exact_cellset_volume():
    assert exact_cellset_volume([[0, 1]], UNIT2, 1) == 0.25
    every = [[i, j] for i in range(4) for j in range(4)]
    assert exact_cellset_volume(every, UNIT2, 2) == UNIT2.volume
    assert exact_cellset_volume([], UNIT2, 2) == 0.0
    with pytest.raises(DomainError):
        exact_cellset_volume([[0, 4]], UNIT2, 2)


def test_exact_volume_for_piecewise_matches_mc():
    sc = DyadicPiecewise(Box([0.0, 0.0], [2.0, 1.0]), 2, {(0, 0): 3.0, (1, 2): 1.0, (3, 3): 1.0},
                         default=0.5)
    exact = ExactVolume.for_piecewise(sc)
    t = np.array([0.0, 0.6, 1.0, 2.0, 3.0, 3.5])
    want = np.array([2.0, 3 / 8, 3 / 8, 1 / 8, 1 / 8, 0.0])
    assert np.array_equal(exact.level_set_volumes(sc, t), want)
    assert [sc.level_set_volume(v) for v in t] == list(want)
    mc = VolumeEstimator(sc.box, 200_000, RandomSource(4)).level_set_volumes(sc, t)
    assert np.allclose(mc, want, atol=0.02)


def test_exact_volume_scalar_function():
    ev = ExactVolume(lambda t: max(0.0, 1.0 - t))
    assert ev.level_set_volumes(None, [0.25, 2.0]).tolist() == [0.75, 0.0]

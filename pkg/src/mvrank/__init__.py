"""Unsupervised anomaly ranking with Mass-Volume curves."""

__version__ = "0.1.0"

from .arank import ARankConfig, ARankModel, fit_arank, score_arank
from .bootstrap import ConfidenceBand, bootstrap_band
from .core import (Box, DataError, Dataset, DomainError, NumericalError, RandomSource,
                   StepCurve)
from .kde import KdeModel, kde_cdf, kde_quantile, sample_kde
from .minvol import build_histogram, min_volume_set, phi_penalty
from .mvcurve import ScoreSample, empirical_mv_curve
from .volume import ExactVolume, VolumeEstimator, bounding_box

__all__ = [
    "ARankConfig", "ARankModel", "Box", "ConfidenceBand", "DataError", "Dataset",
    "DomainError", "ExactVolume", "KdeModel", "NumericalError", "RandomSource",
    "ScoreSample", "StepCurve", "VolumeEstimator", "bootstrap_band", "bounding_box",
    "build_histogram", "empirical_mv_curve", "fit_arank", "kde_cdf", "kde_quantile",
    "min_volume_set", "phi_penalty", "sample_kde", "score_arank",
]

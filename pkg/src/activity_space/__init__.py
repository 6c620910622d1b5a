# flake8: noqa

from activity_space.config import AnalysisConfig, ConfigError
from activity_space.core import *
from activity_space.estimators import (
    DensityRankingEstimator,
    KdeThresholdEstimator,
    LevelSetEstimator,
)
from activity_space.export import package_version
from activity_space.kde import evaluate_kde, kde_at_samples, kde_field, quartic_kernel
from activity_space.mixture import MixtureModel, paper_model, sample
from activity_space.pipeline import ActivitySpacePipeline, AnalysisResult

__version__ = package_version()

"""Seeded synthetic datasets written straight into the datastore format."""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from sklearn.datasets import make_blobs
from sklearn.datasets import make_regression

from constants import Constants
from modules.datastore import DatasetMeta
from modules.datastore import TargetKind
from modules.datastore import write_dataset
from modules.error_classes import InvalidParameterError
from modules.model_cache_logging import to_log


class SynthTask(Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"
    # Poisson counts per class, for multinomial naive Bayes
    COUNTS = "counts"


@dataclass(frozen=True)
class SynthSpec:
    task: SynthTask
    n: int = Constants.DEFAULT_SYNTH_N
    d: int = Constants.DEFAULT_SYNTH_D
    seed: int = Constants.DEFAULT_SEED
    noise: float = Constants.DEFAULT_SYNTH_NOISE
    class_count: int = Constants.DEFAULT_SYNTH_CLASSES
    spread: float = Constants.DEFAULT_BLOB_SPREAD
    # None: d * DEFAULT_EFFECTIVE_RANK_FRACTION; 0: independent features
    effective_rank: Optional[int] = None

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise InvalidParameterError(f"Need n >= 1 and d >= 1, got n={self.n}, d={self.d}")
        if self.noise < 0:
            raise InvalidParameterError(f"Noise must be >= 0, got {self.noise}")
        if self.task is not SynthTask.REGRESSION and self.class_count < 2:
            raise InvalidParameterError(f"Need at least 2 classes, got {self.class_count}")
        if self.effective_rank is not None and not 0 <= self.effective_rank <= self.d:
            raise InvalidParameterError(f"Effective rank must lie in [0, {self.d}], got {self.effective_rank}")

    @property
    def feature_rank(self):
        """Effective rank handed to make_regression, None for independent features."""
        if self.effective_rank is None:
            return max(1, int(self.d * Constants.DEFAULT_EFFECTIVE_RANK_FRACTION))
        return self.effective_rank or None


@dataclass(frozen=True)
class SynthResult:
    meta: DatasetMeta
    # ground truth: regression coefficients, blob centers or Poisson rates
    truth: np.ndarray


def make_regression_data(spec):
    X, y, coef = make_regression(n_samples=spec.n,
                                 n_features=spec.d,
                                 n_informative=spec.d,
                                 noise=spec.noise,
                                 effective_rank=spec.feature_rank,
                                 coef=True,
                                 random_state=spec.seed)
    return X, y, np.asarray(coef)


def make_classification_data(spec):
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(-spec.spread, spec.spread, size=(spec.class_count, spec.d))
    X, y = make_blobs(n_samples=spec.n,
                      n_features=spec.d,
                      centers=centers,
                      cluster_std=max(spec.noise, 1e-12),
                      random_state=spec.seed)
    return X, y.astype(np.float64), centers


def make_count_data(spec):
    rng = np.random.default_rng(spec.seed)
    rates = rng.gamma(shape=2.0, scale=spec.spread / 2.0, size=(spec.class_count, spec.d))
    y = rng.integers(0, spec.class_count, size=spec.n)
    X = rng.poisson(rates[y]).astype(np.float64)
    return X, y.astype(np.float64), rates


def synth_data(spec, project_paths):
    """Generate and store a dataset; the same spec always yields the same bytes."""
    if spec.task is SynthTask.REGRESSION:
        X, y, truth = make_regression_data(spec)
        meta = DatasetMeta(n=spec.n, d=spec.d, target_kind=TargetKind.REGRESSION)
    else:
        generator = make_classification_data if spec.task is SynthTask.CLASSIFICATION else make_count_data
        X, y, truth = generator(spec)
        meta = DatasetMeta(n=spec.n, d=spec.d, target_kind=TargetKind.CLASSIFICATION, class_count=spec.class_count)
    to_log(f"Synthesized {spec.task.value} data: n={spec.n}, d={spec.d}, seed={spec.seed}, noise={spec.noise}")
    write_dataset(project_paths, X, y, meta)
    return SynthResult(meta, truth)

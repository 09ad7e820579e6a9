"""Gaussian and multinomial naive Bayes kept as per-class counters.

Every counter is a sum over records of the class, so the same signed add / remove / merge
algebra as for linear regression applies. Parameters are extracted from counters on demand.
"""
import struct
from dataclasses import dataclass
from dataclasses import fields
from enum import Enum

import numpy as np

from constants import Constants
from modules.common import IdRange
from modules.datastore import as_batch
from modules.error_classes import CorruptDataFileError
from modules.error_classes import DimensionMismatchError
from modules.error_classes import InvalidMergeError
from modules.error_classes import InvalidPlanError
from modules.error_classes import ModelCacheError

# descriptor lo u64, hi u64, class_count u32, d u32, kind tag u8
_HEADER_FORMAT = "<QQIIB"
_HEADER_SIZE = struct.calcsize(_HEADER_FORMAT)


class NBKind(Enum):
    GAUSSIAN = "gaussian"
    MULTINOMIAL = "multinomial"

    @property
    def tag(self):
        return 0 if self is NBKind.GAUSSIAN else 1

    @classmethod
    def from_tag(cls, tag):
        if tag not in (0, 1):
            raise CorruptDataFileError(f"Unknown naive Bayes kind tag {tag}")
        return cls.GAUSSIAN if tag == 0 else cls.MULTINOMIAL


class _ClassStats:
    """Shared counter algebra; subclasses are frozen dataclasses of numpy arrays."""
    kind = None
    count_fields = ()

    def __post_init__(self):
        for f in fields(self):
            arr = np.array(getattr(self, f.name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, f.name, arr)

    def counters(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def class_count(self):
        return self.N.shape[0]

    @property
    def shape(self):
        return self.class_count, self.d

    def signed(self, other, sign):
        return type(self)(**{k: v + sign * getattr(other, k) for k, v in self.counters().items()})


@dataclass(frozen=True)
class GaussianClassStats(_ClassStats):
    N: np.ndarray   # (c,) samples per class
    S: np.ndarray   # (c, d) feature sums
    SS: np.ndarray  # (c, d) feature square-sums
    kind = NBKind.GAUSSIAN
    count_fields = ("N",)

    @property
    def d(self):
        return self.S.shape[1]

    @property
    def total_points(self):
        return float(self.N.sum())

    @classmethod
    def zeros(cls, class_count, d):
        return cls(np.zeros(class_count), np.zeros((class_count, d)), np.zeros((class_count, d)))


@dataclass(frozen=True)
class MultinomialClassStats(_ClassStats):
    N: np.ndarray    # (c,) total feature count per class
    Nci: np.ndarray  # (c, d) per-feature counts
    M: np.ndarray    # (c,) samples per class, used for the prior
    kind = NBKind.MULTINOMIAL
    count_fields = ("N", "Nci", "M")

    @property
    def d(self):
        return self.Nci.shape[1]

    @property
    def total_points(self):
        return float(self.M.sum())

    @classmethod
    def zeros(cls, class_count, d):
        return cls(np.zeros(class_count), np.zeros((class_count, d)), np.zeros(class_count))


_STATS_TYPES = {NBKind.GAUSSIAN: GaussianClassStats, NBKind.MULTINOMIAL: MultinomialClassStats}


@dataclass(frozen=True)
class NBParameters:
    kind: NBKind
    priors: np.ndarray
    defined: np.ndarray
    means: np.ndarray = None
    variances: np.ndarray = None
    theta: np.ndarray = None

    @property
    def class_count(self):
        return self.priors.shape[0]

    @property
    def d(self):
        return (self.means if self.kind is NBKind.GAUSSIAN else self.theta).shape[1]

    def to_dict(self):
        ret = {"kind": self.kind.value, "priors": self.priors.tolist(), "defined": self.defined.tolist()}
        if self.kind is NBKind.GAUSSIAN:
            ret["means"] = self.means.tolist()
            ret["variances"] = self.variances.tolist()
        else:
            ret["theta"] = self.theta.tolist()
        return ret


def _one_hot(batch, class_count):
    labels = batch.y
    if len(labels) and (np.any(labels < 0) or np.any(labels >= class_count)
                        or np.any(labels != np.floor(labels))):
        bad = labels[(labels < 0) | (labels >= class_count) | (labels != np.floor(labels))][0]
        raise ModelCacheError(f"Class label {bad} outside [0, {class_count})")
    onehot = np.zeros((len(labels), class_count))
    onehot[np.arange(len(labels)), labels.astype(np.int64)] = 1.0
    return onehot


def compute_gaussian_stats(points, class_count, d=None):
    batch = as_batch(points, d=d)
    onehot = _one_hot(batch, class_count)
    X = batch.X
    return GaussianClassStats(onehot.sum(axis=0), onehot.T @ X, onehot.T @ (X * X))


def compute_multinomial_stats(points, class_count, d=None):
    batch = as_batch(points, d=d)
    if np.any(batch.X < 0):
        raise ModelCacheError("Multinomial naive Bayes needs non-negative count features")
    onehot = _one_hot(batch, class_count)
    Nci = onehot.T @ batch.X
    return MultinomialClassStats(Nci.sum(axis=1), Nci, onehot.sum(axis=0))


def compute_stats(points, kind, class_count, d=None):
    kind = NBKind(kind)
    if kind is NBKind.GAUSSIAN:
        return compute_gaussian_stats(points, class_count, d=d)
    return compute_multinomial_stats(points, class_count, d=d)


def zeros(kind, class_count, d):
    return _STATS_TYPES[NBKind(kind)].zeros(class_count, d)


def _check_same_shape(a, b):
    if type(a) is not type(b) or a.shape != b.shape:
        raise DimensionMismatchError(
            f"Cannot combine {type(a).__name__}{a.shape} with {type(b).__name__}{b.shape}"
        )


def update_stats(base, delta, sign=1):
    """base + sign * delta over every counter."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    _check_same_shape(base, delta)
    result = base.signed(delta, sign)
    for name in result.count_fields:
        values = getattr(result, name)
        if np.any(values < -Constants.NEGATIVE_COUNT_TOL):
            raise InvalidPlanError(f"Counter {name} became negative ({values.min()}); the plan removes absent points")
    return result


def merge_stats(s1, s2, overlap=None, ranges=None):
    """s1 + s2, minus the overlap counters when the two ranges share points.

    When ranges=(range1, range2) is given, the presence of overlap is validated against it.
    """
    if ranges is not None:
        r1, r2 = ranges
        if r1.overlaps(r2) and overlap is None:
            raise InvalidMergeError(f"Ranges {r1} and {r2} overlap; counters of the overlap are required")
        if not r1.overlaps(r2) and overlap is not None:
            raise InvalidMergeError(f"Ranges {r1} and {r2} are disjoint; no overlap expected")
    merged = update_stats(s1, s2, 1)
    if overlap is not None:
        merged = update_stats(merged, overlap, -1)
    return merged


def variance_floor(stats):
    """1e-9 * (global per-feature variance + 1)."""
    total = stats.N.sum()
    mean = stats.S.sum(axis=0) / total
    global_var = np.maximum(stats.SS.sum(axis=0) / total - mean ** 2, 0.0)
    return Constants.VARIANCE_FLOOR_SCALE * (global_var + 1.0)


def extract_parameters(stats, kind=None):
    kind = stats.kind if kind is None else NBKind(kind)
    if kind is not stats.kind:
        raise DimensionMismatchError(f"Counters are {stats.kind.value}, requested {kind.value} parameters")
    if stats.total_points <= 0:
        raise ModelCacheError("Cannot extract parameters from empty counters")

    if kind is NBKind.GAUSSIAN:
        N = stats.N
        defined = N > 0
        safe_n = np.where(defined, N, 1.0)[:, None]
        means = stats.S / safe_n
        variances = np.maximum(stats.SS / safe_n - means ** 2, variance_floor(stats)[None, :])
        means[~defined] = np.nan
        variances[~defined] = np.nan
        return NBParameters(kind, N / N.sum(), defined, means=means, variances=variances)

    d = stats.d
    theta = (stats.Nci + 1.0) / (stats.N[:, None] + d)
    priors = stats.M / stats.M.sum()
    return NBParameters(kind, priors, stats.M > 0, theta=theta)


def log_scores(params, X):
    """(k, c) unnormalized log posteriors; -inf for classes without data."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.d:
        raise DimensionMismatchError(f"Feature vector of dimension {X.shape[1]}, model has {params.d}")
    with np.errstate(divide="ignore"):
        log_prior = np.log(params.priors)
    if params.kind is NBKind.GAUSSIAN:
        mu = np.where(params.defined[:, None], params.means, 0.0)
        var = np.where(params.defined[:, None], params.variances, 1.0)
        diff = X[:, None, :] - mu[None, :, :]
        log_lik = -0.5 * (np.log(2.0 * np.pi * var)[None, :, :] + diff ** 2 / var[None, :, :]).sum(axis=2)
    else:
        # the multinomial coefficient depends on x only and is dropped
        log_lik = X @ np.log(params.theta).T
    scores = log_prior[None, :] + log_lik
    scores[:, ~params.defined] = -np.inf
    return scores


def predict(params, x):
    """Class index and per-class log-scores; ties go to the lowest class index."""
    scores = log_scores(params, x)[0]
    return int(np.argmax(scores)), scores


def predict_batch(params, X):
    return np.argmax(log_scores(params, X), axis=1)


def accuracy(params, batch):
    if len(batch) == 0:
        return float("nan")
    return float(np.mean(predict_batch(params, batch.X) == batch.labels()))


@dataclass(frozen=True)
class NBModel:
    stats: _ClassStats
    parameters: NBParameters
    descriptor: IdRange

    @classmethod
    def fit(cls, stats, descriptor):
        return cls(stats, extract_parameters(stats), descriptor)


def serialize_stats(stats, descriptor):
    header = struct.pack(_HEADER_FORMAT, descriptor.lo, descriptor.hi, stats.class_count, stats.d, stats.kind.tag)
    return header + b"".join(v.astype("<f8").tobytes() for v in stats.counters().values())


def deserialize_stats(blob):
    """Returns (stats, descriptor)."""
    if len(blob) < _HEADER_SIZE:
        raise CorruptDataFileError("Naive Bayes payload is truncated")
    lo, hi, class_count, d, tag = struct.unpack_from(_HEADER_FORMAT, blob)
    stats_type = _STATS_TYPES[NBKind.from_tag(tag)]
    shapes = {f.name: (class_count, d) if f.name in ("S", "SS", "Nci") else (class_count,)
              for f in fields(stats_type)}
    expected = _HEADER_SIZE + 8 * sum(int(np.prod(s)) for s in shapes.values())
    if len(blob) != expected:
        raise CorruptDataFileError(f"Naive Bayes payload has {len(blob)} bytes, expected {expected}")
    offset = _HEADER_SIZE
    counters = {}
    for name, shape in shapes.items():
        size = int(np.prod(shape))
        counters[name] = np.frombuffer(blob, dtype="<f8", count=size, offset=offset).reshape(shape).copy()
        offset += size * 8
    return stats_type(**counters), IdRange(lo, hi)

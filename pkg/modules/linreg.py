"""Ridge linear regression kept as incremental sufficient statistics.

A materialized model stores A = X^T X and B = X^T y for its id range. Both are sums over
records, so models over disjoint ranges add, and removing a sub-range subtracts. The ridge
penalty belongs to the query: weights solve (A + lambda I) w = B for whatever lambda is asked.
"""
import logging
import struct
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from constants import Constants
from modules.common import IdRange
from modules.datastore import as_batch
from modules.error_classes import CorruptDataFileError
from modules.error_classes import DimensionMismatchError
from modules.error_classes import InvalidMergeError
from modules.error_classes import InvalidPlanError
from modules.error_classes import SingularSystemError
from modules.model_cache_logging import to_log

# descriptor lo u64, hi u64, n_points u64, d u32
_HEADER_FORMAT = "<QQQI"
_HEADER_SIZE = struct.calcsize(_HEADER_FORMAT)


@dataclass(frozen=True)
class SufficientStats:
    A: np.ndarray
    B: np.ndarray
    n_points: int

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        B = np.array(self.B, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or B.shape != (A.shape[0],):
            raise DimensionMismatchError(f"Inconsistent stats shapes A{A.shape}, B{B.shape}")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def d(self):
        return self.B.shape[0]

    @classmethod
    def zeros(cls, d):
        return cls(np.zeros((d, d)), np.zeros(d), 0)


@dataclass(frozen=True)
class LinRegModel:
    stats: SufficientStats
    lam: float
    weights: np.ndarray
    descriptor: IdRange

    @classmethod
    def fit(cls, stats, lam, descriptor):
        return cls(stats, lam, solve_weights(stats, lam), descriptor)


def compute_stats(points, d=None):
    """From-scratch statistics over a batch of records."""
    batch = as_batch(points, d=d)
    X, y = batch.X, batch.y
    return SufficientStats(X.T @ X, X.T @ y, len(batch))


def _check_same_dim(base, delta):
    if base.d != delta.d:
        raise DimensionMismatchError(f"Cannot combine stats of dimension {base.d} and {delta.d}")


def add_stats(base, delta, sign=1):
    """base + sign * delta; sign is +1 (add points) or -1 (remove points)."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    _check_same_dim(base, delta)
    n_points = base.n_points + sign * delta.n_points
    if n_points < 0:
        raise InvalidPlanError(f"Removing {delta.n_points} points from stats over {base.n_points} points")
    return SufficientStats(base.A + sign * delta.A, base.B + sign * delta.B, n_points)


def _relative_residual(M, w, B):
    return np.linalg.norm(M @ w - B) / max(1.0, np.linalg.norm(B))


def _factorize(M, lam):
    """Return a solve(rhs) closure over a Cholesky or, failing that, LU factorization."""
    try:
        factor = scipy.linalg.cho_factor(M, check_finite=True)
        return lambda rhs: scipy.linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError:
        # removals may leave A + lam I indefinite at rounding level
        to_log("Cholesky factorization failed, falling back to LU", level=logging.WARNING)
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu_piv = scipy.linalg.lu_factor(M)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError) as err:
            raise SingularSystemError(f"System (A + {lam} I) is singular: {err}")
    return lambda rhs: scipy.linalg.lu_solve(lu_piv, rhs)


def solve_weights(stats, lam):
    """Solve (A + lam I) w = B with Cholesky, falling back to LU."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    d = stats.d
    M = stats.A + lam * np.eye(d)
    if lam == 0 and np.linalg.matrix_rank(stats.A) < d:
        raise SingularSystemError(
            f"A is rank-deficient (rank {np.linalg.matrix_rank(stats.A)} < {d}) and lambda = 0"
        )
    solve = _factorize(M, lam)
    w = solve(stats.B)
    if not np.all(np.isfinite(w)):
        raise SingularSystemError("Solver produced non-finite weights")
    # one step of iterative refinement
    w = w + solve(stats.B - M @ w)
    residual = _relative_residual(M, w, stats.B)
    if residual > Constants.SOLVER_RESIDUAL_TOL:
        raise SingularSystemError(f"Relative residual {residual:.3e} above tolerance; system is ill-posed")
    return w


def merge_models(m1, m2, overlap_stats=None):
    """Combine two models: plain sum when disjoint, sum minus the shared part otherwise."""
    _check_same_dim(m1.stats, m2.stats)
    overlapping = m1.descriptor.overlaps(m2.descriptor)
    if overlapping and overlap_stats is None:
        raise InvalidMergeError(
            f"Descriptors {m1.descriptor} and {m2.descriptor} overlap; statistics of the overlap are required"
        )
    if not overlapping and overlap_stats is not None:
        raise InvalidMergeError(f"Descriptors {m1.descriptor} and {m2.descriptor} are disjoint; no overlap expected")
    merged = add_stats(m1.stats, m2.stats, 1)
    if overlapping:
        merged = add_stats(merged, overlap_stats, -1)
    return merged


def predict(weights, X):
    return np.asarray(X, dtype=np.float64) @ weights


def serialize_stats(stats, descriptor):
    header = struct.pack(_HEADER_FORMAT, descriptor.lo, descriptor.hi, stats.n_points, stats.d)
    return header + stats.A.astype("<f8").tobytes() + stats.B.astype("<f8").tobytes()


def deserialize_stats(blob):
    """Returns (stats, descriptor)."""
    if len(blob) < _HEADER_SIZE:
        raise CorruptDataFileError("Linear regression payload is truncated")
    lo, hi, n_points, d = struct.unpack_from(_HEADER_FORMAT, blob)
    expected = _HEADER_SIZE + (d * d + d) * 8
    if len(blob) != expected:
        raise CorruptDataFileError(f"Linear regression payload has {len(blob)} bytes, expected {expected}")
    values = np.frombuffer(blob, dtype="<f8", offset=_HEADER_SIZE)
    A = values[:d * d].reshape(d, d).copy()
    B = values[d * d:].copy()
    return SufficientStats(A, B, n_points), IdRange(lo, hi)

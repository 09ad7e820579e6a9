"""Cost model used by the planner.

F(n) is the cost of fetching n base points and turning them into statistics, C(model) the cost
of loading one materialized model, c_merge the cost of one signed composition. The default
model is linear, F(n) = c_seek + c_row * n and C(model) = c_seek + c_byte * payload bytes, with
coefficients measured on the dataset at hand and cached per model kind. Units are milliseconds.
"""
import json
import os
import time
from dataclasses import asdict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from constants import Constants
from modules.common import IdRange
from modules.common import ModelKind
from modules.error_classes import InvalidParameterError
from modules.model_cache_logging import to_log
from modules import linreg
from modules import logreg
from modules import model_payloads
from modules import naive_bayes

CMC = Constants.CostModelConstants


def _zero(_):
    return 0.0


@dataclass(frozen=True)
class CostModel:
    fetch_cost: Callable[[int], float]
    model_cost: Callable[[object], float]
    merge_cost: float
    # per-edge extra paid by directed fetch edges: points fetched there must also be trained
    train_cost: Callable[[int], float] = _zero

    def __post_init__(self):
        if not (self.merge_cost >= 0 and np.isfinite(self.merge_cost)):
            raise InvalidParameterError(f"Merge cost must be finite and >= 0, got {self.merge_cost}")


@dataclass(frozen=True)
class LinearCostParameters:
    seek_cost: float
    row_cost: float
    model_byte_cost: float
    merge_cost: float
    train_row_cost: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (value >= 0 and np.isfinite(value)):
                raise InvalidParameterError(f"Cost coefficient {name} must be finite and >= 0, got {value}")

    def fetch_cost(self, n):
        return self.seek_cost + self.row_cost * n

    def to_cost_model(self, payload_bytes):
        """payload_bytes maps a model descriptor to the size of its stored payload."""
        def model_cost(descriptor):
            return self.seek_cost + self.model_byte_cost * payload_bytes(descriptor)

        def train_cost(n):
            return self.train_row_cost * n

        return CostModel(self.fetch_cost, model_cost, self.merge_cost, train_cost)

    def dump_to_json(self, path):
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=4)

    @classmethod
    def from_json(cls, path):
        with open(path, "r") as f:
            values = json.load(f)
        try:
            return cls(**values)
        except TypeError as err:
            raise InvalidParameterError(f"Malformed cost model file {path}: {err}")


def linear_cost_model(seek_cost, row_cost, model_cost, merge_cost, train_row_cost=0.0):
    """Fixed-coefficient model where every stored model costs the same to load."""
    return CostModel(lambda n: seek_cost + row_cost * n,
                     lambda _: model_cost,
                     merge_cost,
                     lambda n: train_row_cost * n)


def _local_compute(kind, meta):
    if kind is ModelKind.LINREG:
        return lambda batch: linreg.compute_stats(batch)
    if kind is ModelKind.NB_GAUSSIAN:
        return lambda batch: naive_bayes.compute_gaussian_stats(batch, meta.class_count)
    if kind is ModelKind.NB_MULTINOMIAL:
        return lambda batch: naive_bayes.compute_multinomial_stats(batch, meta.class_count)
    # logistic fetch edges pay their training separately
    return lambda batch: None


def _empty_payload(kind, meta):
    d = meta.d
    if kind is ModelKind.LINREG:
        return linreg.SufficientStats.zeros(d)
    if kind is ModelKind.NB_GAUSSIAN:
        return naive_bayes.GaussianClassStats.zeros(meta.class_count, d)
    if kind is ModelKind.NB_MULTINOMIAL:
        return naive_bayes.MultinomialClassStats.zeros(meta.class_count, d)
    return logreg.ChunkModel(IdRange(0, 0), np.zeros(d), 1)


def _add(kind, a, b):
    if kind is ModelKind.LINREG:
        return linreg.add_stats(a, b)
    if kind is ModelKind.LOGREG_CHUNK:
        return a.w + b.w
    return naive_bayes.update_stats(a, b)


def _best_ms(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, (time.perf_counter() - t0) * 1000.0)
    return best


def calibrate(datastore, kind, sgd_config=None):
    """Time two fetch sizes to fit F, a payload decode for C and a composition for c_merge."""
    meta = datastore.meta
    n_large = min(CMC.CALIBRATION_LARGE_ROWS, datastore.n)
    n_small = min(CMC.CALIBRATION_SMALL_ROWS, max(1, n_large // 10))
    compute = _local_compute(kind, meta)

    def fetch_and_compute(n):
        return lambda: compute(datastore.fetch_range(0, n - 1))

    t_small = _best_ms(fetch_and_compute(n_small), CMC.CALIBRATION_REPEATS)
    t_large = _best_ms(fetch_and_compute(n_large), CMC.CALIBRATION_REPEATS)
    if n_large > n_small:
        row_cost = max((t_large - t_small) / (n_large - n_small), CMC.MIN_ROW_COST)
    else:
        row_cost = max(t_large / n_large, CMC.MIN_ROW_COST)
    seek_cost = max(t_small - row_cost * n_small, CMC.MIN_SEEK_COST)

    payload = _empty_payload(kind, meta)
    blob = model_payloads.encode(kind, payload, payload.descriptor if kind is ModelKind.LOGREG_CHUNK else IdRange(0, 0))
    t_decode = _best_ms(lambda: model_payloads.decode(kind, blob), CMC.CALIBRATION_REPEATS)
    model_byte_cost = max(t_decode / len(blob), 0.0)

    merge_total = _best_ms(lambda: [_add(kind, payload, payload) for _ in range(CMC.MERGE_CALIBRATION_REPEATS)], 1)
    merge_cost = merge_total / CMC.MERGE_CALIBRATION_REPEATS

    train_row_cost = 0.0
    if kind is ModelKind.LOGREG_CHUNK:
        cfg = sgd_config or logreg.SGDConfig(Constants.DEFAULT_ALPHA, Constants.DEFAULT_LAMBDA)
        batch = datastore.fetch_range(0, n_small - 1)
        train_row_cost = _best_ms(lambda: logreg.train_chunk(batch, cfg), 1) / n_small

    params = LinearCostParameters(seek_cost, row_cost, model_byte_cost, merge_cost, train_row_cost)
    to_log(f"Calibrated {kind.value} costs: seek {seek_cost:.4f} ms, row {row_cost:.2e} ms, "
           f"model byte {model_byte_cost:.2e} ms, merge {merge_cost:.4f} ms, train row {train_row_cost:.2e} ms")
    return params


def load_or_calibrate(project_paths, datastore, kind, recalibrate=False, sgd_config=None):
    path = project_paths.cost_model_json(kind.value)
    if os.path.isfile(path) and not recalibrate:
        to_log(f"Using cached cost model {path}")
        return LinearCostParameters.from_json(path)
    params = calibrate(datastore, kind, sgd_config=sgd_config)
    params.dump_to_json(path)
    return params

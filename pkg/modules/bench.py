"""Benchmark harness: speedup of model reuse over from-scratch builds versus catalog coverage.

For every coverage target a fresh catalog is seeded with models at uniformly random
positions until the target share of the dataset is covered. Then the same query set is
answered twice per query, once from scratch (T0) and once through the planner (T), and the
mean of T0 / T is reported as speedup.
"""
import csv
import os
import shutil
from dataclasses import asdict
from dataclasses import dataclass
from enum import Enum

import numpy as np

from constants import Constants
from modules.bench_progress import BenchProgress
from modules.catalog import Catalog
from modules.common import IdRange
from modules.common import ModelKind
from modules.error_classes import CoverageUnreachableError
from modules.error_classes import InvalidParameterError
from modules.executor import ModelQueryEngine
from modules.executor import baseline_build
from modules.executor import check_kind_fits_data
from modules.model_cache_logging import to_log
from modules import linreg
from modules import logreg
from modules import naive_bayes
from modules.naive_bayes import NBKind
from parallelization.thread_pool import execute_parallel_step

BC = Constants.BenchConstants


class DistributionKind(Enum):
    FIXED = "fixed"
    UNIFORM = "uniform"
    NORMAL = "normal"


@dataclass(frozen=True)
class SizeDistribution:
    kind: DistributionKind
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind is DistributionKind.FIXED and self.a < 1:
            raise InvalidParameterError(f"Fixed size must be >= 1, got {self.a}")
        if self.kind is DistributionKind.UNIFORM and not 1 <= self.a <= self.b:
            raise InvalidParameterError(f"Uniform sizes need 1 <= lo <= hi, got {self.a}, {self.b}")
        if self.kind is DistributionKind.NORMAL and (self.a < 1 or self.b < 0):
            raise InvalidParameterError(f"Normal sizes need mean >= 1 and sigma >= 0, got {self.a}, {self.b}")

    @classmethod
    def parse(cls, value):
        """fixed:k, uniform:lo:hi or normal:mean:sigma"""
        parts = value.split(":")
        try:
            kind = DistributionKind(parts[0])
            numbers = [float(x) for x in parts[1:]]
        except ValueError:
            raise InvalidParameterError(f"Cannot parse size distribution {value!r}")
        expected = 1 if kind is DistributionKind.FIXED else 2
        if len(numbers) != expected:
            raise InvalidParameterError(f"{kind.value} distribution takes {expected} numbers, got {value!r}")
        return cls(kind, *numbers)

    @property
    def mean(self):
        if self.kind is DistributionKind.UNIFORM:
            return (self.a + self.b) / 2.0
        return self.a

    def sample(self, rng, lower, upper):
        """One size in [lower, upper]; normal draws outside the support are redrawn."""
        if self.kind is DistributionKind.FIXED:
            size = int(self.a)
        elif self.kind is DistributionKind.UNIFORM:
            size = int(rng.integers(int(self.a), int(self.b) + 1))
        else:
            size = int(round(rng.normal(self.a, self.b)))
            for _ in range(100):
                if size >= lower:
                    break
                size = int(round(rng.normal(self.a, self.b)))
        return min(max(size, lower), upper)


@dataclass(frozen=True)
class BenchSpec:
    kind: ModelKind
    coverage_targets: tuple = BC.COVERAGE_TARGETS
    model_size_dist: SizeDistribution = SizeDistribution.parse(BC.DEFAULT_SIZE_DIST)
    query_size_dist: SizeDistribution = SizeDistribution.parse(BC.DEFAULT_SIZE_DIST)
    query_count: int = BC.DEFAULT_QUERY_COUNT
    seed: int = Constants.DEFAULT_SEED

    def __post_init__(self):
        if any(not 0 <= c <= 100 for c in self.coverage_targets):
            raise InvalidParameterError(f"Coverage targets must lie in [0, 100], got {self.coverage_targets}")
        if self.query_count < 1:
            raise InvalidParameterError(f"Query count must be >= 1, got {self.query_count}")


@dataclass
class BenchRow:
    coverage: float
    speedup: float
    plan_ms: float
    io_ms: float
    merge_ms: float
    train_ms: float
    acc_mean_diff: float
    acc_pos_mean_diff: float
    acc_max_diff: float
    catalog_bytes: int

    def to_csv_row(self):
        return [asdict(self)[c] for c in BC.CSV_HEADER]


@dataclass
class SweepRow:
    model_size: int
    coverage: float
    speedup: float
    catalog_bytes: int

    def to_csv_row(self):
        return [asdict(self)[c] for c in BC.SWEEP_CSV_HEADER]


@dataclass
class QueryMeasurement:
    t0_ms: float
    t_ms: float
    timings: dict
    acc_diff: float = float("nan")

    @property
    def speedup(self):
        return self.t0_ms / max(self.t_ms, 1e-9)


def _build_payload(kind, batch, meta, cfg):
    if kind is ModelKind.LINREG:
        return linreg.compute_stats(batch)
    if kind is ModelKind.LOGREG_CHUNK:
        return logreg.train_chunk(batch, cfg.to_sgd_config())
    nb_kind = NBKind.GAUSSIAN if kind is ModelKind.NB_GAUSSIAN else NBKind.MULTINOMIAL
    return naive_bayes.compute_stats(batch, nb_kind, meta.class_count)


def seed_catalog(catalog, datastore, kind, target_pct, size_dist, rng, cfg):
    """Materialize models at random positions until the kind's coverage reaches target_pct.

    Logistic chunks only exist on the chunk grid, so they are placed on random grid cells.
    """
    n = datastore.n
    if target_pct <= 0:
        return catalog.coverage(kind, n)
    mean_size = cfg.chunk_size if kind is ModelKind.LOGREG_CHUNK else size_dist.mean
    max_attempts = int(BC.MAX_SEEDING_ATTEMPTS_FACTOR * max(1.0, n / mean_size))
    attempts = 0
    while catalog.coverage(kind, n) < target_pct:
        attempts += 1
        if attempts > max_attempts:
            raise CoverageUnreachableError(
                f"Coverage {catalog.coverage(kind, n):.1f}% after {max_attempts} models, target {target_pct}%"
            )
        if kind is ModelKind.LOGREG_CHUNK:
            cells = n // cfg.chunk_size
            if cells < 1:
                raise CoverageUnreachableError(f"Dataset of {n} points holds no chunk of size {cfg.chunk_size}")
            lo = int(rng.integers(0, cells)) * cfg.chunk_size
            id_range = IdRange(lo, lo + cfg.chunk_size - 1)
        else:
            size = size_dist.sample(rng, 1, n)
            lo = int(rng.integers(0, n - size + 1))
            id_range = IdRange(lo, lo + size - 1)
        payload = _build_payload(kind, datastore.fetch(id_range), datastore.meta, cfg)
        catalog.materialize(id_range, kind, payload)
    achieved = catalog.coverage(kind, n)
    to_log(f"Seeded {len(catalog)} {kind.value} models, coverage {achieved:.1f}%")
    return achieved


def make_queries(datastore, kind, spec, cfg):
    rng = np.random.default_rng([spec.seed, 1])
    n = datastore.n
    lower = 2 * cfg.chunk_size if kind is ModelKind.LOGREG_CHUNK else 1
    if lower > n:
        raise InvalidParameterError(f"Logistic queries need >= {lower} points, dataset has {n}")
    queries = []
    for _ in range(spec.query_count):
        size = spec.query_size_dist.sample(rng, lower, n)
        lo = int(rng.integers(0, n - size + 1))
        queries.append(IdRange(lo, lo + size - 1))
    return queries


def measure_query(engine, query, kind, cfg, reuse_first):
    """Time one query from scratch and through the planner; the order alternates between queries."""
    def run_baseline():
        return baseline_build(query, kind, engine.datastore, cfg)

    def run_reuse():
        return engine.answer_query(query, kind, cfg)

    if reuse_first:
        report = run_reuse()
        base = run_baseline()
    else:
        base = run_baseline()
        report = run_reuse()
    measurement = QueryMeasurement(base.total_ms, report.total_ms, report.timings)
    if kind is ModelKind.LOGREG_CHUNK:
        batch = engine.datastore.fetch(query)
        w_sgd = logreg.train_chunk(batch, cfg.to_sgd_config()).w
        measurement.acc_diff = logreg.accuracy(w_sgd, batch) - logreg.accuracy(report.model.w_mu, batch)
    return measurement


def accuracy_stats(diffs):
    diffs = np.asarray([d for d in diffs if np.isfinite(d)])
    if diffs.size == 0:
        return float("nan"), float("nan"), float("nan")
    positive = diffs[diffs > 0]
    pos_mean = float(positive.mean()) if positive.size else 0.0
    return float(diffs.mean()), pos_mean, float(diffs.max())


def run_query_set(engine, queries, kind, cfg):
    jobs = [lambda q=q, i=i: measure_query(engine, q, kind, cfg, reuse_first=i % 2 == 1)
            for i, q in enumerate(queries)]
    return execute_parallel_step(jobs, cfg.parallel, "bench_query")


def summarize(coverage, measurements, catalog_bytes):
    timings = {k: float(np.mean([m.timings[k] for m in measurements])) for k in ("plan_ms", "io_ms", "merge_ms", "train_ms")}
    acc_mean, acc_pos, acc_max = accuracy_stats([m.acc_diff for m in measurements])
    return BenchRow(coverage=coverage,
                    speedup=float(np.mean([m.speedup for m in measurements])),
                    acc_mean_diff=acc_mean,
                    acc_pos_mean_diff=acc_pos,
                    acc_max_diff=acc_max,
                    catalog_bytes=catalog_bytes,
                    **timings)


class BenchRunner:
    """Runs a bench spec against one dataset; each target gets its own catalog under bench/."""

    def __init__(self, project_paths, datastore, spec, cfg, cost_params, continue_run=False):
        self.project_paths = project_paths
        self.datastore = datastore
        self.spec = spec
        self.cfg = cfg
        self.cost_params = cost_params
        self.continue_run = continue_run
        # query results must not change the coverage being measured
        self.cfg.materialize = False
        check_kind_fits_data(spec.kind, datastore.meta)
        os.makedirs(project_paths.bench_dir, exist_ok=True)

    def fresh_catalog(self, label):
        catalog_dir = os.path.join(self.project_paths.bench_dir, label)
        if os.path.isdir(catalog_dir):
            shutil.rmtree(catalog_dir)
        paths = self.project_paths.with_catalog_dir(catalog_dir)
        return paths, Catalog(paths)

    def _run_with_catalog(self, label, coverage_target, size_dist, seed_offset):
        kind = self.spec.kind
        paths, catalog = self.fresh_catalog(label)
        rng = np.random.default_rng([self.spec.seed, seed_offset])
        achieved = seed_catalog(catalog, self.datastore, kind, coverage_target, size_dist, rng, self.cfg)
        engine = ModelQueryEngine(paths, self.datastore, catalog, cost_params=self.cost_params)
        queries = make_queries(self.datastore, kind, self.spec, self.cfg)
        measurements = run_query_set(engine, queries, kind, self.cfg)
        return achieved, measurements, catalog.storage_bytes(kind)

    def run_coverage(self):
        targets = {f"coverage_{c:g}": c for c in sorted(self.spec.coverage_targets)}
        progress = BenchProgress(self.project_paths.bench_status, targets, self.continue_run)

        def run_target(label):
            target = targets[label]
            achieved, measurements, catalog_bytes = self._run_with_catalog(
                label, target, self.spec.model_size_dist, int(target * 100))
            row = summarize(target, measurements, catalog_bytes)
            to_log(f"Coverage {target}% (achieved {achieved:.1f}%): speedup {row.speedup:.3f}")
            return asdict(row)

        rows = progress.execute_targets(run_target)
        return [BenchRow(**r) for r in rows]

    def run_model_size_sweep(self, model_sizes, coverage=BC.DEFAULT_SWEEP_COVERAGE):
        if self.spec.kind is ModelKind.LOGREG_CHUNK:
            raise InvalidParameterError("The model-size sweep varies free model ranges; logistic chunks are fixed-size")
        targets = {f"model_size_{s}": s for s in model_sizes}
        progress = BenchProgress(self.project_paths.bench_status, targets, self.continue_run)

        def run_target(label):
            size = targets[label]
            dist = SizeDistribution(DistributionKind.FIXED, size)
            _, measurements, catalog_bytes = self._run_with_catalog(label, coverage, dist, size)
            speedup = float(np.mean([m.speedup for m in measurements]))
            to_log(f"Model size {size} at {coverage}% coverage: speedup {speedup:.3f}")
            return asdict(SweepRow(size, coverage, speedup, catalog_bytes))

        rows = progress.execute_targets(run_target)
        return [SweepRow(**r) for r in rows]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        f.write(BC.SPEEDUP_NOTE + "\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row.to_csv_row())
    to_log(f"Wrote {len(rows)} bench rows to {path}")

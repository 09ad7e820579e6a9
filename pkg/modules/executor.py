"""Execution of query plans and the end-to-end query engine."""
import json
import logging
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from modules.common import ModelKind
from modules.cost_model import linear_cost_model
from modules.cost_model import load_or_calibrate
from modules.datastore import TargetKind
from modules.error_classes import InvalidParameterError
from modules.error_classes import InvalidPlanError
from modules.error_classes import NoPlanError
from modules.model_cache_logging import to_log
from modules.planner import StepOp
from modules.planner import baseline_plan
from modules.planner import check_telescoping
from modules.planner import plan_query
from modules.planner import render_plan
from modules.timing import TimingLedger
from modules import linreg
from modules import logreg
from modules import naive_bayes
from modules.naive_bayes import NBKind


@dataclass
class ExecutionReport:
    query: object
    kind: ModelKind
    model: object
    plan: object
    timings: dict
    steps_executed: int
    bytes_fetched: int
    total_ms: float = 0.0
    materialized_id: Optional[str] = None
    fallback: bool = False

    @property
    def weights(self):
        if self.kind is ModelKind.LINREG:
            return self.model.weights
        if self.kind is ModelKind.LOGREG_CHUNK:
            return self.model.w_mu
        return None

    def model_dict(self):
        if self.kind is ModelKind.LINREG:
            return {"weights": self.model.weights.tolist(), "n_points": self.model.stats.n_points,
                    "lambda": self.model.lam}
        if self.kind is ModelKind.LOGREG_CHUNK:
            return {"w_mu": self.model.w_mu.tolist(),
                    "chunk_size": self.model.chunk_size,
                    "chunks": len(self.model.contributing),
                    "reused_chunks": len(self.model.reused),
                    "trained_chunks": len(self.model.trained)}
        return self.model.parameters.to_dict()

    def to_dict(self):
        return {
            "query": self.query.to_string(),
            "kind": self.kind.cli_name,
            "model": self.model_dict(),
            "plan": self.plan.to_dict(),
            "timings": self.timings,
            "total_ms": self.total_ms,
            "steps_executed": self.steps_executed,
            "bytes_fetched": self.bytes_fetched,
            "materialized_id": self.materialized_id,
            "fallback_to_baseline": self.fallback,
        }

    def to_json(self):
        # NaN (undefined classes) is not valid JSON
        return json.dumps(self.to_dict(), indent=4, default=str).replace("NaN", "null")

    def render_text(self):
        lines = [render_plan(self.plan), ""]
        model = self.model_dict()
        for key, value in model.items():
            lines.append(f"{key}: {np.array2string(np.asarray(value), precision=6) if isinstance(value, list) else value}")
        timings = ", ".join(f"{k} {v:.2f}" for k, v in self.timings.items())
        lines.append(f"timings (ms): {timings}; total {self.total_ms:.2f}")
        lines.append(f"steps executed: {self.steps_executed}; bytes fetched: {self.bytes_fetched}")
        if self.materialized_id:
            lines.append(f"materialized as {self.materialized_id}")
        return "\n".join(lines)


def check_kind_fits_data(kind, meta):
    if kind is not ModelKind.LINREG and meta.target_kind is not TargetKind.CLASSIFICATION:
        raise InvalidParameterError(f"{kind.cli_name} needs a classification dataset, this one is {meta.target_kind.value}")
    if kind is ModelKind.LOGREG_CHUNK and meta.class_count != 2:
        raise InvalidParameterError(f"Logistic regression needs 2 classes, dataset has {meta.class_count}")


def _stats_of(kind, batch, meta):
    if kind is ModelKind.LINREG:
        return linreg.compute_stats(batch)
    nb_kind = NBKind.GAUSSIAN if kind is ModelKind.NB_GAUSSIAN else NBKind.MULTINOMIAL
    return naive_bayes.compute_stats(batch, nb_kind, meta.class_count)


def _zero_stats(kind, meta):
    if kind is ModelKind.LINREG:
        return linreg.SufficientStats.zeros(meta.d)
    nb_kind = NBKind.GAUSSIAN if kind is ModelKind.NB_GAUSSIAN else NBKind.MULTINOMIAL
    return naive_bayes.zeros(nb_kind, meta.class_count, meta.d)


def _compose(kind, acc, stats, sign):
    if kind is ModelKind.LINREG:
        return linreg.add_stats(acc, stats, sign)
    return naive_bayes.update_stats(acc, stats, sign)


def _points_in(kind, stats):
    return stats.n_points if kind is ModelKind.LINREG else stats.total_points


def _execute_statistics(plan, query, kind, catalog, datastore, cfg, ledger):
    meta = datastore.meta
    acc = _zero_stats(kind, meta)
    bytes_fetched = 0
    # a telescoping plan never removes more than its additions hold, so no running count goes negative
    ordered = sorted(plan.steps, key=lambda s: s.op is StepOp.REMOVE)
    for step in ordered:
        if step.is_fetch:
            with ledger.section("io_ms"):
                batch = datastore.fetch(step.id_range)
            bytes_fetched += datastore.bytes_for(len(batch))
            with ledger.section("train_ms"):
                stats = _stats_of(kind, batch, meta)
        else:
            with ledger.section("io_ms"):
                stats = catalog.load_model(step.model_id)
        with ledger.section("merge_ms"):
            acc = _compose(kind, acc, stats, step.op.sign)
    if round(_points_in(kind, acc)) != len(query):
        raise InvalidPlanError(f"Plan produced statistics over {_points_in(kind, acc)} points, query has {len(query)}")
    with ledger.section("train_ms"):
        if kind is ModelKind.LINREG:
            model = linreg.LinRegModel.fit(acc, cfg.lam, query)
        else:
            model = naive_bayes.NBModel.fit(acc, query)

    materialized_id = None
    single_model = len(plan.steps) == 1 and not plan.steps[0].is_fetch and plan.steps[0].id_range == query
    if cfg.materialize and catalog is not None and not single_model:
        with ledger.section("io_ms"):
            materialized_id = catalog.materialize(query, kind, acc)
    return model, bytes_fetched, materialized_id


def execute(plan, query, kind, catalog, datastore, cfg, ledger=None):
    """Run the plan: signed composition of statistics, or chunk assembly for logistic models."""
    ledger = ledger or TimingLedger()
    check_telescoping(plan.steps, query)
    check_kind_fits_data(kind, datastore.meta)
    if kind is ModelKind.LOGREG_CHUNK:
        if any(s.op is StepOp.REMOVE for s in plan.steps):
            raise InvalidPlanError("Logistic models cannot have points removed")
        allowed_ids = set(plan.model_ids)
        model = logreg.incremental_logreg(query,
                                          catalog,
                                          datastore,
                                          cfg.to_sgd_config(),
                                          cfg.chunk_size,
                                          reuse=bool(allowed_ids),
                                          materialize=cfg.materialize and catalog is not None,
                                          allowed_ids=allowed_ids,
                                          workers=cfg.parallel,
                                          ledger=ledger)
        bytes_fetched = datastore.bytes_for(sum(len(r) for r in model.trained))
        materialized_id = None
    else:
        model, bytes_fetched, materialized_id = _execute_statistics(plan, query, kind, catalog, datastore, cfg, ledger)
    return ExecutionReport(query,
                           kind,
                           model,
                           plan,
                           ledger.as_dict(),
                           len(plan.steps),
                           bytes_fetched,
                           total_ms=ledger.elapsed_ms(),
                           materialized_id=materialized_id)


def baseline_build(query, kind, datastore, cfg, cost_model=None, ledger=None):
    """From-scratch build over the raw query range; nothing is read from or written to a catalog."""
    ledger = ledger or TimingLedger()
    datastore.check_range(query.lo, query.hi)
    with ledger.section("plan_ms"):
        plan = baseline_plan(query, kind, cost_model or linear_cost_model(0.0, 1.0, 0.0, 0.0))
    return execute(plan, query, kind, None, datastore, cfg, ledger=ledger)


class ModelQueryEngine:
    """relevant models -> plan graph -> cheapest plan -> execution, against one data directory."""

    def __init__(self, project_paths, datastore, catalog, cost_params=None, recalibrate=False):
        self.project_paths = project_paths
        self.datastore = datastore
        self.catalog = catalog
        self.recalibrate = recalibrate
        self._cost_params = dict(cost_params or {})
        self._lock = threading.Lock()

    def cost_parameters(self, kind, cfg=None):
        with self._lock:
            if kind not in self._cost_params:
                sgd_config = cfg.to_sgd_config() if cfg is not None and kind is ModelKind.LOGREG_CHUNK else None
                self._cost_params[kind] = load_or_calibrate(self.project_paths,
                                                            self.datastore,
                                                            kind,
                                                            recalibrate=self.recalibrate,
                                                            sgd_config=sgd_config)
            return self._cost_params[kind]

    def cost_model(self, kind, snapshot, cfg=None):
        params = self.cost_parameters(kind, cfg)
        return params.to_cost_model(lambda d: snapshot.payload_bytes(d.model_id))

    def plan(self, query, kind, cfg, ledger=None):
        """Plan only; also what --explain prints."""
        ledger = ledger or TimingLedger()
        self.datastore.check_range(query.lo, query.hi)
        # calibration, when needed, is not planning time
        self.cost_parameters(kind, cfg)
        with ledger.section("plan_ms"):
            snapshot = self.catalog.snapshot()
            cost_model = self.cost_model(kind, snapshot, cfg)
            if not cfg.reuse:
                return baseline_plan(query, kind, cost_model), False
            relevant = snapshot.relevant_models(query, kind)
            chunk_size = cfg.chunk_size if kind is ModelKind.LOGREG_CHUNK else None
            try:
                return plan_query(relevant, query, kind, cost_model, chunk_size=chunk_size), False
            except NoPlanError as err:
                to_log(f"{err}; falling back to a from-scratch build", level=logging.WARNING)
                return baseline_plan(query, kind, cost_model), True

    def answer_query(self, query, kind, cfg):
        ledger = TimingLedger()
        check_kind_fits_data(kind, self.datastore.meta)
        plan, fallback = self.plan(query, kind, cfg, ledger=ledger)
        report = execute(plan, query, kind, self.catalog, self.datastore, cfg, ledger=ledger)
        report.fallback = fallback
        to_log(f"Answered {kind.cli_name} query {query} with {len(plan.steps)} steps in {report.total_ms:.1f} ms")
        return report

    def baseline(self, query, kind, cfg):
        return baseline_build(query, kind, self.datastore, cfg)

import json

import numpy as np
import pytest

from conftest import CHEAP_MODEL_COSTS
from conftest import FIXED_COSTS
from modules.catalog import Catalog
from modules.common import IdRange
from modules.common import ModelKind
from modules.cost_model import linear_cost_model
from modules.error_classes import InvalidParameterError
from modules.error_classes import InvalidPlanError
from modules.executor import ModelQueryEngine
from modules.executor import baseline_build
from modules.executor import execute
from modules import linreg
from modules import naive_bayes
from modules.planner import ExecutionPlan
from modules.planner import PlanStep
from modules.planner import StepOp

QUERY = IdRange(20, 39)


def _close(a, b):
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-9)


def _same_nb(got, expected):
    for name in ("priors", "means", "variances", "theta"):
        left, right = getattr(got, name), getattr(expected, name)
        if left is None:
            assert right is None
            continue
        np.testing.assert_allclose(left, right, rtol=1e-6, atol=1e-9, equal_nan=True)


def _materialize_from_data(catalog, store, kind, id_range):
    batch = store.fetch(id_range)
    if kind is ModelKind.LINREG:
        stats = linreg.compute_stats(batch)
    else:
        nb_kind = naive_bayes.NBKind.GAUSSIAN if kind is ModelKind.NB_GAUSSIAN else naive_bayes.NBKind.MULTINOMIAL
        stats = naive_bayes.compute_stats(batch, nb_kind, store.meta.class_count)
    return catalog.materialize(id_range, kind, stats)


def _four_model_plan(catalog, store, kind):
    d3 = _materialize_from_data(catalog, store, kind, IdRange(10, 29))
    d4 = _materialize_from_data(catalog, store, kind, IdRange(30, 49))
    steps = (PlanStep(StepOp.ADD, IdRange(10, 29), d3, 1.0),
             PlanStep(StepOp.ADD, IdRange(30, 49), d4, 1.0),
             PlanStep(StepOp.REMOVE, IdRange(10, 19), None, 10.0),
             PlanStep(StepOp.REMOVE, IdRange(40, 49), None, 10.0))
    return ExecutionPlan(QUERY, kind, steps, 22.0, 20.0)


def test_four_model_plan_equals_scratch_build_linreg(regression_store, catalog, query_params):
    store, X, y = regression_store
    cfg = query_params(no_materialize=True, lam=0.5)
    report = execute(_four_model_plan(catalog, store, ModelKind.LINREG), QUERY, ModelKind.LINREG, catalog, store, cfg)
    lo, hi = QUERY.lo, QUERY.hi + 1
    expected = np.linalg.solve(X[lo:hi].T @ X[lo:hi] + 0.5 * np.eye(X.shape[1]), X[lo:hi].T @ y[lo:hi])
    _close(report.weights, expected)
    assert report.steps_executed == 4
    assert report.bytes_fetched == store.bytes_for(20)


@pytest.mark.parametrize("kind", [ModelKind.NB_GAUSSIAN, ModelKind.NB_MULTINOMIAL])
def test_four_model_plan_equals_scratch_build_nb(counts_store, catalog, query_params, kind):
    store, _, _ = counts_store
    cfg = query_params(kind=kind.value, no_materialize=True)
    report = execute(_four_model_plan(catalog, store, kind), QUERY, kind, catalog, store, cfg)
    scratch = baseline_build(QUERY, kind, store, cfg)
    _same_nb(report.model.parameters, scratch.model.parameters)


def test_single_fetch_plan_matches_baseline(regression_store, catalog, query_params):
    store, _, _ = regression_store
    cfg = query_params(no_materialize=True)
    scratch = baseline_build(IdRange(0, 499), ModelKind.LINREG, store, cfg)
    again = baseline_build(IdRange(0, 499), ModelKind.LINREG, store, cfg)
    np.testing.assert_array_equal(scratch.weights, again.weights)
    assert scratch.timings["io_ms"] > 0
    assert scratch.plan.steps[0].is_fetch and len(scratch.plan.steps) == 1


def test_invalid_plans_are_rejected(regression_store, catalog, query_params):
    store, _, _ = regression_store
    cfg = query_params(no_materialize=True)
    plan = ExecutionPlan(QUERY, ModelKind.LINREG, (PlanStep(StepOp.ADD, IdRange(20, 29), None, 1.0),), 1.0, 1.0)
    with pytest.raises(InvalidPlanError):
        execute(plan, QUERY, ModelKind.LINREG, catalog, store, cfg)


def test_kind_must_fit_the_dataset(regression_store, catalog, query_params, fixed_cost_params, project_paths):
    store, _, _ = regression_store
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params=fixed_cost_params)
    with pytest.raises(InvalidParameterError):
        engine.answer_query(QUERY, ModelKind.NB_GAUSSIAN, query_params(kind="nb-gaussian"))


@pytest.mark.parametrize("costs", [FIXED_COSTS, CHEAP_MODEL_COSTS], ids=["fixed", "cheap_models"])
@pytest.mark.parametrize("kind, store_fixture", [(ModelKind.LINREG, "regression_store"),
                                                 (ModelKind.NB_GAUSSIAN, "counts_store"),
                                                 (ModelKind.NB_MULTINOMIAL, "counts_store")])
def test_random_catalogs_match_scratch_builds(kind, store_fixture, costs, request, tmp_path, query_params,
                                              project_paths):
    store = request.getfixturevalue(store_fixture)[0]
    rng = np.random.default_rng(11)
    cfg = query_params(kind=kind.value, no_materialize=True)
    removals = 0
    for trial in range(25):
        catalog = Catalog(project_paths.with_catalog_dir(str(tmp_path / f"catalog_{trial}")))
        for _ in range(int(rng.integers(0, 8))):
            lo = int(rng.integers(0, store.n - 400))
            _materialize_from_data(catalog, store, kind, IdRange(lo, lo + int(rng.integers(50, 400))))
        lo = int(rng.integers(0, store.n - 600))
        query = IdRange(lo, lo + int(rng.integers(100, 600)))
        engine = ModelQueryEngine(project_paths, store, catalog, cost_params={kind: costs})
        report = engine.answer_query(query, kind, cfg)
        removals += sum(s.op is StepOp.REMOVE for s in report.plan.steps)
        scratch = baseline_build(query, kind, store, cfg)
        if kind is ModelKind.LINREG:
            _close(report.weights, scratch.weights)
        else:
            _same_nb(report.model.parameters, scratch.model.parameters)
    if costs is CHEAP_MODEL_COSTS:
        assert removals > 0


@pytest.mark.parametrize("kind, store_fixture", [(ModelKind.LINREG, "regression_store"),
                                                 (ModelKind.NB_GAUSSIAN, "counts_store"),
                                                 (ModelKind.NB_MULTINOMIAL, "counts_store")])
def test_planned_removal_before_any_addition(kind, store_fixture, request, catalog, query_params, project_paths):
    store = request.getfixturevalue(store_fixture)[0]
    model_id = _materialize_from_data(catalog, store, kind, IdRange(0, 49))
    cfg = query_params(kind=kind.value, no_materialize=True)
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params={kind: CHEAP_MODEL_COSTS})
    query = IdRange(10, 49)
    report = engine.answer_query(query, kind, cfg)
    first, second = report.plan.steps
    assert first.op is StepOp.REMOVE and first.is_fetch and first.id_range == IdRange(0, 9)
    assert second.op is StepOp.ADD and second.model_id == model_id
    assert report.bytes_fetched == store.bytes_for(10)
    scratch = baseline_build(query, kind, store, cfg)
    if kind is ModelKind.LINREG:
        _close(report.weights, scratch.weights)
    else:
        _same_nb(report.model.parameters, scratch.model.parameters)


def test_empty_catalog_gives_the_baseline(regression_store, catalog, query_params, fixed_cost_params, project_paths):
    store, _, _ = regression_store
    cfg = query_params(no_materialize=True)
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params=fixed_cost_params)
    report = engine.answer_query(IdRange(100, 899), ModelKind.LINREG, cfg)
    assert len(report.plan.steps) == 1 and report.plan.steps[0].is_fetch
    np.testing.assert_array_equal(report.weights, engine.baseline(IdRange(100, 899), ModelKind.LINREG, cfg).weights)
    assert len(catalog) == 0


def test_repeated_query_reuses_its_own_result(regression_store, catalog, query_params, fixed_cost_params,
                                              project_paths):
    store, _, _ = regression_store
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params=fixed_cost_params)
    cfg = query_params()
    first = engine.answer_query(IdRange(100, 899), ModelKind.LINREG, cfg)
    assert first.materialized_id is not None
    second = engine.answer_query(IdRange(100, 899), ModelKind.LINREG, cfg)
    assert second.plan.model_ids == (first.materialized_id,) and len(second.plan.steps) == 1
    assert second.materialized_id is None
    _close(second.weights, first.weights)


def test_no_reuse_ignores_the_catalog(regression_store, catalog, query_params, fixed_cost_params, project_paths):
    store, _, _ = regression_store
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params=fixed_cost_params)
    engine.answer_query(IdRange(100, 899), ModelKind.LINREG, query_params())
    report = engine.answer_query(IdRange(100, 899), ModelKind.LINREG, query_params(no_reuse=True, no_materialize=True))
    assert report.plan.steps[0].is_fetch


def test_logistic_query_is_bit_equal_to_no_catalog_run(classification_store, catalog, query_params,
                                                       fixed_cost_params, project_paths):
    store, _, _ = classification_store
    cfg = query_params(kind="logreg", chunk_size=200, lam=1e-3, alpha=0.05)
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params=fixed_cost_params)
    engine.answer_query(IdRange(400, 1199), ModelKind.LOGREG_CHUNK, cfg)
    assert len(catalog.descriptors(ModelKind.LOGREG_CHUNK)) == 4

    query = IdRange(150, 1349)
    report = engine.answer_query(query, ModelKind.LOGREG_CHUNK, cfg)
    scratch = baseline_build(query, ModelKind.LOGREG_CHUNK, store, cfg)
    assert all(s.op is StepOp.ADD for s in report.plan.steps)
    assert len(report.model.reused) == 4
    np.testing.assert_array_equal(report.weights, scratch.weights)


def test_logistic_reuse_is_bit_neutral_over_random_queries(classification_store, catalog, query_params,
                                                          fixed_cost_params, project_paths):
    store, _, _ = classification_store
    cfg = query_params(kind="logreg", chunk_size=100, lam=1e-3, alpha=0.05)
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params=fixed_cost_params)
    rng = np.random.default_rng(5)
    reused = 0
    for _ in range(50):
        size = int(rng.integers(200, 800))
        lo = int(rng.integers(0, store.n - size + 1))
        query = IdRange(lo, lo + size - 1)
        report = engine.answer_query(query, ModelKind.LOGREG_CHUNK, cfg)
        scratch = baseline_build(query, ModelKind.LOGREG_CHUNK, store, cfg)
        np.testing.assert_array_equal(report.weights, scratch.weights)
        reused += len(report.model.reused)
    assert reused > 0


def test_report_renders_as_json(regression_store, catalog, query_params, fixed_cost_params, project_paths):
    store, _, _ = regression_store
    engine = ModelQueryEngine(project_paths, store, catalog, cost_params=fixed_cost_params)
    report = engine.answer_query(IdRange(0, 99), ModelKind.LINREG, query_params(no_materialize=True))
    decoded = json.loads(report.to_json())
    assert decoded["query"] == "0:99"
    assert set(decoded["timings"]) == {"plan_ms", "io_ms", "merge_ms", "train_ms"}
    assert len(decoded["model"]["weights"]) == store.d
    assert decoded["steps_executed"] == len(decoded["plan"]["steps"])
    assert sum(decoded["timings"].values()) <= decoded["total_ms"] * 1.05
    assert "Plan for linreg query" in report.render_text()


def test_classes_missing_from_the_range_render_as_null(counts_store, query_params):
    store, _, _ = counts_store
    cfg = query_params(kind="nb-gaussian", no_materialize=True)
    report = baseline_build(IdRange(0, 0), ModelKind.NB_GAUSSIAN, store, cfg, cost_model=linear_cost_model(0, 1, 0, 0))
    decoded = json.loads(report.to_json())
    assert decoded["model"]["defined"].count(False) == store.meta.class_count - 1
    assert any(row[0] is None for row in decoded["model"]["means"])

import numpy as np
import pytest

from modules.common import IdRange
from modules.datastore import Record
from modules.datastore import RecordBatch
from modules.error_classes import InvalidPlanError
from modules.error_classes import ModelCacheError
from modules import naive_bayes
from modules.naive_bayes import NBKind


def _class_batch(rng, n, d, classes, counts=False):
    X = rng.poisson(3.0, size=(n, d)).astype(float) if counts else rng.normal(size=(n, d))
    return RecordBatch(0, X, rng.integers(0, classes, size=n).astype(float))


def test_empty_input_gives_zero_counters():
    stats = naive_bayes.compute_gaussian_stats([], 2, d=3)
    assert stats.total_points == 0 and not stats.S.any()


def test_hand_evaluated_gaussian_parameters():
    points = [Record(0, np.array([2.0]), 0.0), Record(1, np.array([4.0]), 0.0)]
    stats = naive_bayes.compute_gaussian_stats(points, 1)
    assert (stats.N[0], stats.S[0, 0], stats.SS[0, 0]) == (2.0, 6.0, 20.0)
    params = naive_bayes.extract_parameters(stats)
    assert params.means[0, 0] == pytest.approx(3.0)
    assert params.variances[0, 0] == pytest.approx(1.0)
    assert params.priors[0] == 1.0


def test_counters_match_naive_loop():
    rng = np.random.default_rng(0)
    batch = _class_batch(rng, 500, 4, 3)
    stats = naive_bayes.compute_gaussian_stats(batch, 3)
    for c in range(3):
        rows = [x for x, y in zip(batch.X, batch.y) if y == c]
        assert stats.N[c] == len(rows)
        np.testing.assert_allclose(stats.S[c], np.sum(rows, axis=0), rtol=1e-12)
        np.testing.assert_allclose(stats.SS[c], np.sum(np.square(rows), axis=0), rtol=1e-12)


def test_out_of_range_label_rejected():
    with pytest.raises(ModelCacheError):
        naive_bayes.compute_gaussian_stats([Record(0, np.zeros(2), 5.0)], 2)


def test_multinomial_smoothing():
    stats = naive_bayes.MultinomialClassStats(np.array([7.0]), np.array([[3.0, 4.0]]), np.array([2.0]))
    params = naive_bayes.extract_parameters(stats)
    assert params.theta[0, 0] == pytest.approx(4.0 / 9.0)
    assert params.theta[0].sum() == pytest.approx(1.0, abs=1e-12)


def test_update_with_a_point_and_removing_half():
    rng = np.random.default_rng(1)
    batch = _class_batch(rng, 40, 3, 2, counts=True)
    for kind in NBKind:
        full = naive_bayes.compute_stats(batch, kind, 2)
        head = naive_bayes.compute_stats(batch[:39], kind, 2)
        point = naive_bayes.compute_stats(batch[39:], kind, 2)
        added = naive_bayes.update_stats(head, point)
        for name, value in full.counters().items():
            np.testing.assert_allclose(getattr(added, name), value, rtol=1e-12)

        first_half = naive_bayes.update_stats(full, naive_bayes.compute_stats(batch[20:], kind, 2), -1)
        oracle = naive_bayes.compute_stats(batch[:20], kind, 2)
        for name in first_half.count_fields:
            np.testing.assert_array_equal(getattr(first_half, name), getattr(oracle, name))


def test_negative_counts_signal_invalid_plan():
    rng = np.random.default_rng(2)
    small = naive_bayes.compute_gaussian_stats(_class_batch(rng, 2, 2, 2), 2)
    big = naive_bayes.compute_gaussian_stats(_class_batch(rng, 30, 2, 2), 2)
    with pytest.raises(InvalidPlanError):
        naive_bayes.update_stats(small, big, -1)


def test_overlapping_merge():
    rng = np.random.default_rng(3)
    batch = _class_batch(rng, 20, 2, 2)
    s1 = naive_bayes.compute_gaussian_stats(batch[0:15], 2)
    s2 = naive_bayes.compute_gaussian_stats(batch[10:20], 2)
    overlap = naive_bayes.compute_gaussian_stats(batch[10:15], 2)
    merged = naive_bayes.merge_stats(s1, s2, overlap, ranges=(IdRange(0, 14), IdRange(10, 19)))
    full = naive_bayes.compute_gaussian_stats(batch, 2)
    np.testing.assert_array_equal(merged.N, full.N)
    np.testing.assert_allclose(merged.S, full.S, rtol=1e-9, atol=1e-9)


def test_undefined_class_never_predicted():
    points = [Record(0, np.array([1.0]), 0.0), Record(1, np.array([1.5]), 0.0)]
    params = naive_bayes.extract_parameters(naive_bayes.compute_gaussian_stats(points, 2))
    assert not params.defined[1]
    assert naive_bayes.predict(params, np.array([100.0]))[0] == 0


def test_ties_go_to_lowest_class():
    points = [Record(0, np.array([1.0]), 0.0), Record(1, np.array([3.0]), 0.0),
              Record(2, np.array([1.0]), 1.0), Record(3, np.array([3.0]), 1.0)]
    params = naive_bayes.extract_parameters(naive_bayes.compute_gaussian_stats(points, 2))
    assert naive_bayes.predict(params, np.array([2.0]))[0] == 0


def test_predictions_match_direct_probabilities():
    rng = np.random.default_rng(4)
    batch = _class_batch(rng, 200, 2, 3)
    params = naive_bayes.extract_parameters(naive_bayes.compute_gaussian_stats(batch, 3))
    for x in batch.X[:50]:
        dens = params.priors * np.prod(
            np.exp(-(x - params.means) ** 2 / (2 * params.variances)) / np.sqrt(2 * np.pi * params.variances),
            axis=1)
        assert naive_bayes.predict(params, x)[0] == int(np.argmax(dens))


def test_serialization_round_trip_is_exact():
    rng = np.random.default_rng(5)
    stats = naive_bayes.compute_multinomial_stats(_class_batch(rng, 50, 3, 2, counts=True), 2)
    restored, descriptor = naive_bayes.deserialize_stats(naive_bayes.serialize_stats(stats, IdRange(5, 54)))
    assert descriptor == IdRange(5, 54)
    for name, value in stats.counters().items():
        np.testing.assert_array_equal(getattr(restored, name), value)

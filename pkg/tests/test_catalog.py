import os
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from modules.catalog import Catalog
from modules.catalog import preprocess_descriptors
from modules.common import IdRange
from modules.common import ModelDescriptor
from modules.common import ModelKind
from modules.datastore import RecordBatch
from modules.error_classes import ChecksumMismatchError
from modules.error_classes import CatalogError
from modules.error_classes import UnknownModelError
from modules.linreg import SufficientStats
from modules.logreg import ChunkModel
from modules import naive_bayes
from modules.project_paths import ProjectPaths

LINREG = ModelKind.LINREG


def _stats(seed=0, d=2):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(5, d))
    return SufficientStats(X.T @ X, X.T @ rng.normal(size=5), 5)


def _descriptor(lo, hi, name):
    return ModelDescriptor(IdRange(lo, hi), LINREG, name)


def _paths_of(catalog):
    return ProjectPaths(os.path.dirname(catalog.catalog_dir))


ranges = st.tuples(st.integers(0, 200), st.integers(0, 30)).map(lambda t: (t[0], t[0] + t[1]))


def _components_oracle(descriptors):
    """Connected components of the overlap graph, by union-find."""
    parent = list(range(len(descriptors)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, a in enumerate(descriptors):
        for j, b in enumerate(descriptors):
            if a.id_range.overlaps(b.id_range):
                parent[find(i)] = find(j)
    groups = {}
    for i, d in enumerate(descriptors):
        groups.setdefault(find(i), []).append(d)
    return sorted((min(d.l for d in g), max(d.u for d in g), frozenset(d.model_id for d in g))
                  for g in groups.values())


def _closure_oracle(descriptors, query):
    relevant = {d.model_id for d in descriptors if d.id_range.overlaps(query)}
    changed = True
    while changed:
        changed = False
        for d in descriptors:
            if d.model_id in relevant:
                continue
            if any(d.id_range.overlaps(o.id_range) for o in descriptors if o.model_id in relevant):
                relevant.add(d.model_id)
                changed = True
    return relevant


@pytest.fixture
def four_models():
    return [_descriptor(0, 19, "D1"), _descriptor(0, 9, "D2"), _descriptor(10, 29, "D3"), _descriptor(30, 49, "D4")]


def test_preprocess_merges_overlapping_descriptors(four_models):
    enhanced = preprocess_descriptors(four_models)
    assert [e.id_range for e in enhanced] == [IdRange(0, 29), IdRange(30, 49)]
    assert set(enhanced[0].members) == {"D1", "D2", "D3"}
    assert enhanced[1].members == ("D4",)


def test_preprocess_edge_cases():
    assert preprocess_descriptors([]) == []
    single = preprocess_descriptors([_descriptor(3, 7, "a")])
    assert single[0].id_range == IdRange(3, 7) and single[0].members == ("a",)
    # adjacent ranges share no point
    assert len(preprocess_descriptors([_descriptor(0, 9, "a"), _descriptor(10, 19, "b")])) == 2
    assert len(preprocess_descriptors([_descriptor(0, 10, "a"), _descriptor(10, 19, "b")])) == 1


@given(st.lists(ranges, max_size=100))
def test_preprocess_matches_overlap_components(spans):
    descriptors = [_descriptor(lo, hi, f"m{i}") for i, (lo, hi) in enumerate(spans)]
    enhanced = preprocess_descriptors(descriptors)
    got = sorted((e.id_range.lo, e.id_range.hi, frozenset(e.members)) for e in enhanced)
    assert got == _components_oracle(descriptors)
    for a, b in zip(enhanced, enhanced[1:]):
        assert a.id_range.hi < b.id_range.lo


def test_relevant_models_of_four_model_catalog(catalog):
    for lo, hi in [(0, 19), (0, 9), (10, 29), (30, 49)]:
        catalog.materialize(IdRange(lo, hi), LINREG, _stats())
    relevant = catalog.relevant_models(IdRange(20, 39), LINREG)
    assert len(relevant) == 4
    assert catalog.relevant_models(IdRange(60, 70), LINREG) == []
    assert catalog.relevant_models(IdRange(20, 39), ModelKind.NB_GAUSSIAN) == []


@settings(max_examples=50, deadline=None)
@given(st.lists(ranges, max_size=30), ranges)
def test_relevant_models_match_transitive_closure(tmp_path_factory, spans, q):
    catalog = Catalog(ProjectPaths(str(tmp_path_factory.mktemp("closure"))))
    for lo, hi in spans:
        catalog.materialize(IdRange(lo, hi), LINREG, _stats())
    query = IdRange(*q)
    got = {d.model_id for d in catalog.relevant_models(query, LINREG)}
    assert got == _closure_oracle(catalog.descriptors(LINREG), query)


def test_materialize_updates_enhanced_descriptors(catalog):
    catalog.materialize(IdRange(10, 20), LINREG, _stats())
    assert [e.id_range for e in catalog.enhanced_descriptors(LINREG)] == [IdRange(10, 20)]
    catalog.materialize(IdRange(15, 30), LINREG, _stats())
    enhanced = catalog.enhanced_descriptors(LINREG)
    assert [e.id_range for e in enhanced] == [IdRange(10, 30)] and len(enhanced[0].members) == 2
    catalog.materialize(IdRange(40, 50), LINREG, _stats())
    assert [e.id_range for e in catalog.enhanced_descriptors(LINREG)] == [IdRange(10, 30), IdRange(40, 50)]
    assert catalog.enhanced_descriptors(LINREG) == catalog.preprocess_descriptors(LINREG)


def test_coverage(catalog):
    assert catalog.coverage(LINREG, 100) == 0.0
    catalog.materialize(IdRange(0, 49), LINREG, _stats())
    catalog.materialize(IdRange(25, 74), LINREG, _stats())
    assert catalog.coverage(LINREG, 100) == pytest.approx(75.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(ranges, max_size=20))
def test_coverage_matches_bitmap(tmp_path_factory, spans):
    catalog = Catalog(ProjectPaths(str(tmp_path_factory.mktemp("coverage"))))
    bitmap = np.zeros(300, dtype=bool)
    for lo, hi in spans:
        catalog.materialize(IdRange(lo, hi), LINREG, _stats())
        bitmap[lo:hi + 1] = True
    assert catalog.coverage(LINREG, 300) == pytest.approx(100.0 * bitmap.sum() / 300)


def test_round_trip_of_every_kind(catalog):
    stats = _stats(1, d=3)
    linreg_id = catalog.materialize(IdRange(0, 9), LINREG, stats)
    loaded = catalog.load_model(linreg_id)
    np.testing.assert_array_equal(loaded.A, stats.A)
    np.testing.assert_array_equal(loaded.B, stats.B)
    assert loaded.n_points == stats.n_points

    rng = np.random.default_rng(2)
    counts = rng.poisson(3.0, size=(20, 4)).astype(float)
    batch = RecordBatch(0, counts, rng.integers(0, 3, size=20).astype(float))
    for kind, nb_kind in [(ModelKind.NB_GAUSSIAN, naive_bayes.NBKind.GAUSSIAN),
                          (ModelKind.NB_MULTINOMIAL, naive_bayes.NBKind.MULTINOMIAL)]:
        nb_stats = naive_bayes.compute_stats(batch, nb_kind, 3)
        restored = catalog.load_model(catalog.materialize(IdRange(0, 19), kind, nb_stats))
        for name, value in nb_stats.counters().items():
            np.testing.assert_array_equal(restored.counters()[name], value)

    chunk = ChunkModel(IdRange(100, 149), rng.normal(size=4), 50, "abcdef0123456789")
    restored = catalog.load_model(catalog.materialize(IdRange(100, 149), ModelKind.LOGREG_CHUNK, chunk))
    np.testing.assert_array_equal(restored.w, chunk.w)


def test_bulk_round_trip(catalog):
    rng = np.random.default_rng(3)
    stored = {}
    for i in range(1000):
        lo = int(rng.integers(0, 10_000))
        stats = _stats(i)
        stored[catalog.materialize(IdRange(lo, lo + int(rng.integers(0, 500))), LINREG, stats)] = stats
    reloaded = Catalog(_paths_of(catalog))
    assert len(reloaded) == len(stored)
    for model_id, stats in stored.items():
        np.testing.assert_array_equal(reloaded.load_model(model_id).A, stats.A)


def test_duplicate_range_replaces_the_old_model(catalog):
    old_id = catalog.materialize(IdRange(0, 9), LINREG, _stats(0))
    new_id = catalog.materialize(IdRange(0, 9), LINREG, _stats(1))
    assert old_id != new_id and len(catalog) == 1
    with pytest.raises(UnknownModelError):
        catalog.get_entry(old_id)
    # a different kind over the same range is a separate model
    catalog.materialize(IdRange(0, 9), ModelKind.NB_GAUSSIAN, naive_bayes.GaussianClassStats.zeros(2, 2))
    assert len(catalog) == 2
    reloaded = Catalog(_paths_of(catalog))
    assert {d.model_id for d in reloaded.descriptors()} == {d.model_id for d in catalog.descriptors()}


def test_corrupt_payload_is_detected(catalog):
    model_id = catalog.materialize(IdRange(0, 9), LINREG, _stats())
    path = os.path.join(catalog.payloads_dir, catalog.get_entry(model_id).payload_file)
    with open(path, "r+b") as f:
        f.seek(-1, os.SEEK_END)
        last = f.read(1)
        f.seek(-1, os.SEEK_END)
        f.write(bytes([last[0] ^ 0xFF]))
    with pytest.raises(ChecksumMismatchError):
        catalog.load_model(model_id)
    os.remove(path)
    with pytest.raises(CatalogError):
        catalog.load_model(model_id)


def test_unknown_model_id(catalog):
    with pytest.raises(UnknownModelError):
        catalog.load_model("linreg-999999")


def test_payload_kind_must_match(catalog):
    with pytest.raises(CatalogError):
        catalog.materialize(IdRange(0, 9), ModelKind.NB_MULTINOMIAL, naive_bayes.GaussianClassStats.zeros(2, 2))


def test_rebuild_is_deterministic(catalog):
    rng = np.random.default_rng(4)
    for i in range(50):
        lo = int(rng.integers(0, 1000))
        catalog.materialize(IdRange(lo, lo + int(rng.integers(0, 80))), LINREG, _stats(i))
    first = Catalog(_paths_of(catalog)).enhanced_descriptors(LINREG)
    second = Catalog(_paths_of(catalog)).enhanced_descriptors(LINREG)
    assert first == second == catalog.preprocess_descriptors(LINREG)
    assert catalog.enhanced_descriptors(LINREG) == first


def test_member_order_does_not_depend_on_insertion_order(catalog):
    late = catalog.materialize(IdRange(50, 60), LINREG, _stats(1))
    early = catalog.materialize(IdRange(0, 55), LINREG, _stats(2))
    middle = catalog.materialize(IdRange(40, 45), LINREG, _stats(3))
    enhanced, = catalog.enhanced_descriptors(LINREG)
    assert enhanced.members == (early, middle, late)
    assert Catalog(_paths_of(catalog)).enhanced_descriptors(LINREG) == [enhanced]


def test_chunk_lookup_keeps_contained_chunks_only(catalog):
    for lo in (0, 100, 200, 300):
        chunk = ChunkModel(IdRange(lo, lo + 99), np.zeros(2), 100)
        catalog.materialize(IdRange(lo, lo + 99), ModelKind.LOGREG_CHUNK, chunk)
    relevant = catalog.relevant_models(IdRange(50, 349), ModelKind.LOGREG_CHUNK)
    assert [d.id_range for d in relevant] == [IdRange(100, 199), IdRange(200, 299)]


def test_concurrent_materialize(catalog):
    def writer(offset):
        for i in range(25):
            lo = offset * 1000 + i * 10
            catalog.materialize(IdRange(lo, lo + 4), LINREG, _stats(i))

    threads = [threading.Thread(target=writer, args=(t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(catalog) == 100
    assert len({d.model_id for d in catalog.descriptors()}) == 100
    assert len(Catalog(_paths_of(catalog))) == 100


def test_storage_bytes_independent_of_range_length(catalog):
    short = catalog.materialize(IdRange(0, 9), LINREG, _stats(d=3))
    long = catalog.materialize(IdRange(0, 99_999), LINREG, _stats(d=3))
    assert catalog.get_entry(short).payload_bytes == catalog.get_entry(long).payload_bytes
    assert catalog.storage_bytes(LINREG) == 2 * catalog.get_entry(short).payload_bytes

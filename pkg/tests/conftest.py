"""Shared fixtures: small datasets written through the real datastore."""
import numpy as np
import pytest

from modules.catalog import Catalog
from modules.cost_model import LinearCostParameters
from modules.common import ModelKind
from modules.datastore import DataStore
from modules.datastore import DatasetMeta
from modules.datastore import TargetKind
from modules.datastore import write_dataset
from modules.parameters import QueryParameters
from modules.project_paths import ProjectPaths


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run desk-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# fixed coefficients keep planner choices independent of machine speed
FIXED_COSTS = LinearCostParameters(seek_cost=5.0, row_cost=0.01, model_byte_cost=1e-6, merge_cost=0.1,
                                   train_row_cost=0.05)
# rows are dear and models free: plans subtract fetched rows from wide models
CHEAP_MODEL_COSTS = LinearCostParameters(seek_cost=1.0, row_cost=1.0, model_byte_cost=0.0, merge_cost=0.0)


def write_regression(paths, n=2_000, d=4, seed=0, noise=0.1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    y = X @ w + noise * rng.normal(size=n)
    write_dataset(paths, X, y, DatasetMeta(n=n, d=d, target_kind=TargetKind.REGRESSION))
    return X, y, w


def write_classification(paths, n=2_000, d=3, classes=2, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-3, 3, size=(classes, d))
    y = rng.integers(0, classes, size=n)
    X = centers[y] + rng.normal(size=(n, d))
    write_dataset(paths, X, y.astype(float), DatasetMeta(n=n, d=d, target_kind=TargetKind.CLASSIFICATION,
                                                         class_count=classes))
    return X, y


def write_mirrored_classes(paths, n=4_000, d=5, shift=1.0, seed=0):
    """Two classes centered at +shift and -shift on every feature; separable through the origin."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    X = (2 * y - 1)[:, None] * shift + rng.normal(size=(n, d))
    write_dataset(paths, X, y.astype(float), DatasetMeta(n=n, d=d, target_kind=TargetKind.CLASSIFICATION,
                                                         class_count=2))
    return X, y


def write_counts(paths, n=2_000, d=5, classes=3, seed=0):
    rng = np.random.default_rng(seed)
    rates = rng.uniform(0.5, 6.0, size=(classes, d))
    y = rng.integers(0, classes, size=n)
    X = rng.poisson(rates[y]).astype(float)
    write_dataset(paths, X, y.astype(float), DatasetMeta(n=n, d=d, target_kind=TargetKind.CLASSIFICATION,
                                                         class_count=classes))
    return X, y


@pytest.fixture
def tmp_data_dir(tmp_path):
    return str(tmp_path / "data")


@pytest.fixture
def project_paths(tmp_data_dir):
    return ProjectPaths(tmp_data_dir)


@pytest.fixture
def regression_store(project_paths):
    X, y, w = write_regression(project_paths)
    return DataStore(project_paths), X, y


@pytest.fixture
def classification_store(project_paths):
    X, y = write_classification(project_paths)
    return DataStore(project_paths), X, y


@pytest.fixture
def counts_store(project_paths):
    X, y = write_counts(project_paths)
    return DataStore(project_paths), X, y


@pytest.fixture
def catalog(project_paths):
    return Catalog(project_paths)


@pytest.fixture
def fixed_cost_params():
    return {kind: FIXED_COSTS for kind in ModelKind}


@pytest.fixture
def query_params(tmp_data_dir):
    def make(**kwargs):
        kwargs.setdefault("kind", "linreg")
        return QueryParameters.create(tmp_data_dir, **kwargs)
    return make

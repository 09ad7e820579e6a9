"""Materialize command implementation: build a model from raw data and store it."""
from modules.catalog import Catalog
from modules.common import ModelKind
from modules.datastore import DataStore
from modules.error_classes import InvalidParameterError
from modules.executor import baseline_build
from modules.executor import check_kind_fits_data
from modules.model_cache_logging import to_log
from modules.parameters import QueryParameters
from modules.project_paths import ProjectPaths
from modules import logreg


def _materialize_chunks(params, datastore, catalog, id_range):
    """Logistic models are stored per grid chunk; leftovers at the range ends are not stored."""
    cfg = params.to_sgd_config()
    pieces = [p for p in logreg.aligned_pieces(id_range, params.chunk_size) if p.aligned]
    if not pieces:
        raise InvalidParameterError(f"Range {id_range} contains no full chunk of size {params.chunk_size}")
    model_ids = []
    for piece in pieces:
        chunk = logreg.train_chunk(datastore.fetch(piece.id_range), cfg)
        model_ids.append(catalog.materialize(piece.id_range, ModelKind.LOGREG_CHUNK, chunk))
    return model_ids


def do_materialize(params: QueryParameters,
                   project_paths: ProjectPaths,
                   args):
    datastore = DataStore(project_paths)
    catalog = Catalog(project_paths)
    kind = params.model_kind
    id_range = params.id_range
    datastore.check_range(id_range.lo, id_range.hi)
    check_kind_fits_data(kind, datastore.meta)

    if kind is ModelKind.LOGREG_CHUNK:
        model_ids = _materialize_chunks(params, datastore, catalog, id_range)
    else:
        report = baseline_build(id_range, kind, datastore, params)
        model_ids = [catalog.materialize(id_range, kind, report.model.stats)]
    to_log(f"Materialized {len(model_ids)} {kind.value} models over {id_range}")
    for model_id in model_ids:
        print(model_id)

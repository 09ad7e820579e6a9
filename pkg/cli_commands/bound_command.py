"""Bound command: chunk-averaged SGD versus single-run SGD on one query range."""
from modules.datastore import DataStore
from modules.executor import check_kind_fits_data
from modules.common import ModelKind
from modules.model_cache_logging import to_log
from modules.parameters import QueryParameters
from modules.project_paths import ProjectPaths
from modules import logreg


def do_bound(params: QueryParameters,
             project_paths: ProjectPaths,
             args):
    datastore = DataStore(project_paths)
    check_kind_fits_data(ModelKind.LOGREG_CHUNK, datastore.meta)
    query = params.id_range
    datastore.check_range(query.lo, query.hi)
    report = logreg.averaging_diagnostic(query, datastore, params.to_sgd_config(), params.chunk_size, params.delta)
    inp = report.inputs
    to_log(f"Bound check on {query}: distance {report.distance:.6g}, bound {report.bound:.6g}")
    print(f"distance\t{report.distance:.6g}")
    print(f"bound\t{report.bound:.6g}")
    print(f"R\t{inp.R:.6g}")
    print(f"chunks\t{inp.p}")
    print(f"holds\t{report.holds}")

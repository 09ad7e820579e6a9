"""Catalog inspection commands: list, show, coverage, stats, rebuild."""
import os

import numpy as np

from modules.catalog import Catalog
from modules.common import ModelKind
from modules.datastore import DataStore
from modules.error_classes import InvalidParameterError
from modules.model_cache_logging import to_log
from modules.parameters import QueryParameters
from modules.project_paths import ProjectPaths
from modules import linreg
from modules import logreg
from modules import naive_bayes


def _kind_or_none(params):
    return params.model_kind if params.kind else None


def catalog_list(catalog, kind):
    for d in catalog.descriptors(kind):
        entry = catalog.get_entry(d.model_id)
        print(f"{d.model_id}\t{d.model_kind.value}\t{d.l}\t{d.u}\t{entry.payload_bytes}")


def catalog_show(catalog, model_id):
    entry = catalog.get_entry(model_id)
    payload = catalog.load_model(model_id)
    d = entry.descriptor
    print(f"model_id: {d.model_id}")
    print(f"kind: {d.model_kind.value}")
    print(f"range: {d.id_range}")
    print(f"payload: {entry.payload_file} ({entry.payload_bytes} bytes)")
    print(f"checksum: {entry.checksum}")
    if isinstance(payload, linreg.SufficientStats):
        print(f"points: {payload.n_points}")
        print(f"B: {np.array2string(payload.B, precision=6)}")
    elif isinstance(payload, logreg.ChunkModel):
        print(f"chunk size: {payload.chunk_size}")
        print(f"sgd config: {payload.fingerprint}")
        print(f"w: {np.array2string(payload.w, precision=6)}")
    elif isinstance(payload, naive_bayes.GaussianClassStats):
        print(f"points per class: {np.array2string(payload.N)}")
    else:
        print(f"points per class: {np.array2string(payload.M)}")
        print(f"feature counts per class: {np.array2string(payload.N)}")


def catalog_coverage(catalog, datastore, kind):
    kinds = [kind] if kind else list(ModelKind)
    for k in kinds:
        print(f"{k.value}\t{catalog.coverage(k, datastore.n):.2f}%")


def catalog_stats(catalog, datastore):
    data_bytes = os.path.getsize(datastore.data_file)
    print("kind\tmodels\tbytes\tratio_to_data\tcoverage")
    for k in ModelKind:
        models = len(catalog.descriptors(k))
        if not models:
            continue
        stored = catalog.storage_bytes(k)
        print(f"{k.value}\t{models}\t{stored}\t{stored / data_bytes:.4%}\t{catalog.coverage(k, datastore.n):.2f}%")
    print(f"total\t{len(catalog)}\t{catalog.storage_bytes()}\t{catalog.storage_bytes() / data_bytes:.4%}\t-")


def catalog_rebuild(catalog):
    catalog.load()
    for k in ModelKind:
        enhanced = catalog.enhanced_descriptors(k)
        if enhanced:
            to_log(f"{k.value}: {len(enhanced)} enhanced descriptors")
            for ed in enhanced:
                print(f"{k.value}\t{ed.id_range.lo}\t{ed.id_range.hi}\t{','.join(ed.members)}")


def do_catalog(params: QueryParameters,
               project_paths: ProjectPaths,
               args):
    catalog = Catalog(project_paths)
    action = args.action
    if action == "list":
        catalog_list(catalog, _kind_or_none(params))
    elif action == "show":
        if not args.model_id:
            raise InvalidParameterError("catalog show needs a model id")
        catalog_show(catalog, args.model_id)
    elif action == "coverage":
        catalog_coverage(catalog, DataStore(project_paths), _kind_or_none(params))
    elif action == "stats":
        catalog_stats(catalog, DataStore(project_paths))
    elif action == "rebuild":
        catalog_rebuild(catalog)
    else:
        raise InvalidParameterError(f"Unknown catalog action {action}")

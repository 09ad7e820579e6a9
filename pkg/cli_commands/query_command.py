"""Query command implementation."""
from modules.catalog import Catalog
from modules.datastore import DataStore
from modules.executor import ModelQueryEngine
from modules.executor import check_kind_fits_data
from modules.parameters import QueryParameters
from modules.planner import render_plan
from modules.project_paths import ProjectPaths


def do_query(params: QueryParameters,
             project_paths: ProjectPaths,
             args):
    datastore = DataStore(project_paths)
    catalog = Catalog(project_paths)
    engine = ModelQueryEngine(project_paths, datastore, catalog, recalibrate=params.recalibrate)
    kind = params.model_kind
    query = params.id_range
    check_kind_fits_data(kind, datastore.meta)

    if params.explain:
        plan, _ = engine.plan(query, kind, params)
        print(render_plan(plan))
        return

    report = engine.answer_query(query, kind, params)
    if params.report == "json":
        print(report.to_json())
    else:
        print(report.render_text())

"""Ingest command implementation."""
from modules.datastore import ingest_csv
from modules.model_cache_logging import to_log
from modules.parameters import QueryParameters
from modules.project_paths import ProjectPaths


def do_ingest(params: QueryParameters,
              project_paths: ProjectPaths,
              args):
    meta = ingest_csv(args.input_csv,
                      args.target,
                      args.task,
                      project_paths,
                      class_count=args.classes)
    to_log(f"Dataset ready: n={meta.n}, d={meta.d}, target {meta.target_kind.value}"
           + (f", {meta.class_count} classes" if meta.class_count else ""))
    print(f"{meta.n}\t{meta.d}\t{meta.target_kind.value}\t{meta.class_count}")

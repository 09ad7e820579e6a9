"""Bench command implementation."""
import os

from constants import Constants
from modules.bench import BenchRunner
from modules.bench import BenchSpec
from modules.bench import SizeDistribution
from modules.bench import write_csv
from modules.common import ModelKind
from modules.cost_model import load_or_calibrate
from modules.datastore import DataStore
from modules.error_classes import InvalidParameterError
from modules.model_cache_logging import to_log
from modules.parameters import QueryParameters
from modules.project_paths import ProjectPaths

BC = Constants.BenchConstants


def _int_list(value, label):
    try:
        return tuple(int(x) for x in value.split(",") if x.strip())
    except ValueError:
        raise InvalidParameterError(f"{label} must be a comma-separated list of integers, got {value!r}")


def do_bench(params: QueryParameters,
             project_paths: ProjectPaths,
             args):
    datastore = DataStore(project_paths)
    kind = params.model_kind
    spec = BenchSpec(kind=kind,
                     coverage_targets=_int_list(args.coverage_targets, "--coverage-targets"),
                     model_size_dist=SizeDistribution.parse(args.model_size_dist),
                     query_size_dist=SizeDistribution.parse(args.query_size_dist),
                     query_count=args.queries,
                     seed=params.seed)
    sgd_config = params.to_sgd_config() if kind is ModelKind.LOGREG_CHUNK else None
    cost_params = {kind: load_or_calibrate(project_paths, datastore, kind,
                                           recalibrate=params.recalibrate, sgd_config=sgd_config)}
    runner = BenchRunner(project_paths, datastore, spec, params, cost_params, continue_run=args.continue_run)
    out_csv = args.out or os.path.join(project_paths.bench_dir, f"bench_{kind.value}.csv")

    if args.sweep == "model-size":
        model_sizes = _int_list(args.model_sizes, "--model-sizes")
        if not model_sizes:
            raise InvalidParameterError("--sweep model-size needs --model-sizes")
        rows = runner.run_model_size_sweep(model_sizes, coverage=args.sweep_coverage)
        write_csv(out_csv, BC.SWEEP_CSV_HEADER, rows)
    else:
        rows = runner.run_coverage()
        write_csv(out_csv, BC.CSV_HEADER, rows)
    to_log(f"Bench results saved to {out_csv}")
    print(out_csv)

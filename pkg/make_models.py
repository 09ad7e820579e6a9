#!/usr/bin/env python3
"""Model cache master script."""
import argparse
import logging
import os
import subprocess
import sys
from datetime import datetime as dt

from cli_commands.bench_command import do_bench
from cli_commands.bound_command import do_bound
from cli_commands.catalog_command import do_catalog
from cli_commands.ingest_command import do_ingest
from cli_commands.materialize_command import do_materialize
from cli_commands.query_command import do_query
from cli_commands.synth_command import do_synth
from constants import Constants
from modules.common import QUERY_KIND_CHOICES
from modules.error_classes import InvalidParameterError
from modules.error_classes import ModelCacheError
from modules.model_cache_logging import setup_logger
from modules.model_cache_logging import to_log
from modules.parameters import QueryParameters
from modules.project_directory import DataDirectoryManager
from modules.project_paths import ProjectPaths
from version import __version__

SCRIPT_LOCATION = os.path.abspath(os.path.dirname(__file__))
BC = Constants.BenchConstants

COMMANDS = {
    "ingest": do_ingest,
    "synth": do_synth,
    "materialize": do_materialize,
    "query": do_query,
    "catalog": do_catalog,
    "bench": do_bench,
    "bound": do_bound,
}
# these commands create the data directory, all others expect it
CREATING_COMMANDS = {"ingest", "synth"}
# commands that need --kind and --range
RANGE_COMMANDS = {"materialize", "query"}


def _data_parent():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--data", required=True, help="Data directory holding the dataset and its catalog")
    parent.add_argument("--seed", default=Constants.DEFAULT_SEED, type=int)
    parent.add_argument("--params_from_file",
                        default=None,
                        help="Read parameters from a specified config file")
    parent.add_argument("--quiet", "-q", action="store_true", help="Log to the run.log file only")
    return parent


def _model_parent(kind_required):
    parent = argparse.ArgumentParser(add_help=False)
    model_params = parent.add_argument_group("Model Parameters")
    model_params.add_argument("--kind", choices=QUERY_KIND_CHOICES, required=kind_required)
    model_params.add_argument("--lambda", dest="lam", default=Constants.DEFAULT_LAMBDA, type=float)
    model_params.add_argument("--alpha", default=Constants.DEFAULT_ALPHA, type=float, help="SGD learning rate")
    model_params.add_argument("--epochs", default=Constants.DEFAULT_EPOCHS, type=int)
    model_params.add_argument("--chunk-size", default=Constants.DEFAULT_CHUNK_SIZE, type=int,
                              help="Logistic regression chunk size")
    model_params.add_argument("--parallel", default=1, type=int, help="Worker threads")
    model_params.add_argument("--recalibrate", action="store_true", help="Measure the cost model again")
    return parent


def parse_args():
    app = argparse.ArgumentParser(description=Constants.DESCRIPTION)
    app.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = app.add_subparsers(dest="command", required=True)
    data_parent = _data_parent()

    ingest = sub.add_parser("ingest", parents=[data_parent], help="Load a CSV file into a data directory")
    ingest.add_argument("input_csv", help="CSV file with a header line")
    ingest.add_argument("--target", required=True, help="Name of the target column")
    ingest.add_argument("--task", choices=["regression", "classification"], default="regression")
    ingest.add_argument("--classes", default=None, type=int, help="Number of classes; inferred by default")
    ingest.add_argument("--force", "-f", action="store_true", help="Overwrite the data directory if exists")

    synth = sub.add_parser("synth", parents=[data_parent], help="Write a seeded synthetic dataset")
    synth.add_argument("--task", choices=["regression", "classification", "counts"], default="regression")
    synth.add_argument("--n", default=Constants.DEFAULT_SYNTH_N, type=int)
    synth.add_argument("--d", default=Constants.DEFAULT_SYNTH_D, type=int)
    synth.add_argument("--noise", default=Constants.DEFAULT_SYNTH_NOISE, type=float)
    synth.add_argument("--classes", default=Constants.DEFAULT_SYNTH_CLASSES, type=int)
    synth.add_argument("--spread", default=Constants.DEFAULT_BLOB_SPREAD, type=float,
                       help="Half-width of the box class centers are drawn from")
    synth.add_argument("--effective-rank", default=None, type=int,
                       help="Approximate rank of the correlated regression features; d/2 by default, 0 for independent features")
    synth.add_argument("--force", "-f", action="store_true", help="Overwrite the data directory if exists")

    materialize = sub.add_parser("materialize", parents=[data_parent, _model_parent(True)],
                                 help="Build a model over a range and store it")
    materialize.add_argument("--range", required=True, help="Closed id range l:u")

    query = sub.add_parser("query", parents=[data_parent, _model_parent(True)],
                           help="Build a model over a range reusing stored models")
    query.add_argument("--range", required=True, help="Closed id range l:u")
    query.add_argument("--no-reuse", action="store_true", help="Build from scratch")
    query.add_argument("--no-materialize", action="store_true", help="Do not store the result")
    query.add_argument("--explain", action="store_true", help="Print the plan without executing it")
    query.add_argument("--report", choices=Constants.REPORT_FORMATS, default=Constants.DEFAULT_REPORT)

    catalog = sub.add_parser("catalog", parents=[data_parent], help="Inspect the catalog")
    catalog.add_argument("action", choices=["list", "show", "coverage", "stats", "rebuild"])
    catalog.add_argument("model_id", nargs="?", default=None)
    catalog.add_argument("--kind", choices=QUERY_KIND_CHOICES, default=None)

    bench = sub.add_parser("bench", parents=[data_parent, _model_parent(True)],
                           help="Speedup of reuse versus catalog coverage")
    bench.add_argument("--coverage-targets", default=",".join(str(c) for c in BC.COVERAGE_TARGETS))
    bench.add_argument("--model-size-dist", default=BC.DEFAULT_SIZE_DIST,
                       help="fixed:k, uniform:lo:hi or normal:mean:sigma")
    bench.add_argument("--query-size-dist", default=BC.DEFAULT_SIZE_DIST)
    bench.add_argument("--queries", default=BC.DEFAULT_QUERY_COUNT, type=int)
    bench.add_argument("--out", default=None, help="CSV output file")
    bench.add_argument("--sweep", choices=["coverage", "model-size"], default="coverage")
    bench.add_argument("--model-sizes", default="", help="Comma-separated model sizes for --sweep model-size")
    bench.add_argument("--sweep-coverage", default=BC.DEFAULT_SWEEP_COVERAGE, type=float)
    bench.add_argument("--continue", dest="continue_run", action="store_true",
                       help="Skip coverage targets completed by a previous run")

    bound = sub.add_parser("bound", parents=[data_parent, _model_parent(False)],
                           help="Chunk-averaged versus single-run SGD distance and its bound")
    bound.add_argument("--range", required=True, help="Closed id range l:u")
    bound.add_argument("--delta", default=Constants.DEFAULT_DELTA, type=float)

    if len(sys.argv) < 2:
        app.print_help()
        sys.exit(1)

    args = app.parse_args()
    if args.command == "bound":
        args.kind = "logreg"
    return args


def log_version():
    """Get git hash and current branch if possible."""
    cmd_hash = "git rev-parse HEAD"
    cmd_branch = "git rev-parse --abbrev-ref HEAD"
    try:
        git_hash = subprocess.check_output(
            cmd_hash, shell=True, cwd=SCRIPT_LOCATION, stderr=subprocess.DEVNULL
        ).decode("utf-8").strip()
        git_branch = subprocess.check_output(
            cmd_branch, shell=True, cwd=SCRIPT_LOCATION, stderr=subprocess.DEVNULL
        ).decode("utf-8").strip()
    except subprocess.CalledProcessError:
        git_hash = "unknown"
        git_branch = "unknown"
    version = f"Version {__version__}\nCommit: {git_hash}\nBranch: {git_branch}\n"
    to_log("# Model Cache #")
    to_log(version)
    return version


def run_command(args):
    start_time = dt.now()
    creating = args.command in CREATING_COMMANDS
    data_dir = DataDirectoryManager(args.data,
                                    force_override=getattr(args, "force", False),
                                    must_exist=not creating).data_dir
    project_paths = ProjectPaths(data_dir)
    setup_logger(project_paths.log_file, write_to_console=not args.quiet)
    log_version()
    parameters = QueryParameters(args)
    if args.command in RANGE_COMMANDS and parameters.query_range is None:
        raise InvalidParameterError(f"{args.command} needs --range")
    to_log(f"Running {args.command} on {data_dir}")
    to_log(f"Command started at {start_time}")
    parameters.dump_to_json(data_dir)

    COMMANDS[args.command](parameters, project_paths, args)

    tot_runtime = dt.now() - start_time
    to_log(f"{args.command} done in {tot_runtime}")


def main():
    args = parse_args()
    try:
        run_command(args)
    except ModelCacheError as err:
        to_log(f"Error! {err}", level=logging.ERROR)
        sys.exit(1)


if __name__ == "__main__":
    main()

"""Synth command implementation."""
from modules.model_cache_logging import to_log
from modules.parameters import QueryParameters
from modules.project_paths import ProjectPaths
from modules.synth import SynthSpec
from modules.synth import SynthTask
from modules.synth import synth_data


def do_synth(params: QueryParameters,
             project_paths: ProjectPaths,
             args):
    spec = SynthSpec(task=SynthTask(args.task),
                     n=args.n,
                     d=args.d,
                     seed=params.seed,
                     noise=args.noise,
                     class_count=args.classes,
                     spread=args.spread,
                     effective_rank=args.effective_rank)
    result = synth_data(spec, project_paths)
    to_log(f"Ground truth ({spec.task.value}) has shape {result.truth.shape}")
    print(f"{result.meta.n}\t{result.meta.d}\t{result.meta.target_kind.value}\t{result.meta.class_count}")

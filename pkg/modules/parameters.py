"""Class to manage query parameters."""
import argparse
import os
import json
from constants import Constants as Const
from modules.common import IdRange
from modules.common import ModelKind
from modules.common import QUERY_KIND_CHOICES
from modules.error_classes import InvalidParameterError
from modules.logreg import SGDConfig
from modules.model_cache_logging import to_log


class QueryParameters:
    def __init__(self, args):
        self.data_dir = os.path.abspath(args.data)
        self.kind = getattr(args, "kind", None)
        query_range = getattr(args, "range", None)
        self.query_range = query_range.to_string() if isinstance(query_range, IdRange) else query_range
        self.params_from_file = getattr(args, "params_from_file", None)

        self.lam = getattr(args, "lam", Const.DEFAULT_LAMBDA)
        self.alpha = getattr(args, "alpha", Const.DEFAULT_ALPHA)
        self.epochs = getattr(args, "epochs", Const.DEFAULT_EPOCHS)
        self.chunk_size = getattr(args, "chunk_size", Const.DEFAULT_CHUNK_SIZE)
        self.seed = getattr(args, "seed", Const.DEFAULT_SEED)
        self.delta = getattr(args, "delta", Const.DEFAULT_DELTA)

        self.reuse = not getattr(args, "no_reuse", False)
        self.materialize = not getattr(args, "no_materialize", False)
        self.explain = getattr(args, "explain", False)
        self.report = getattr(args, "report", Const.DEFAULT_REPORT)
        self.parallel = getattr(args, "parallel", 1)
        self.recalibrate = getattr(args, "recalibrate", False)

        # if params file specified: parse the information from it:
        if self.params_from_file:
            self.__parse_params_file()
        # perform sanity checks and quit if something is wrong
        self.sanity_checks()

    @classmethod
    def create(cls, data_dir, **kwargs):
        """Build parameters without a command line, e.g. for the bench harness."""
        args = argparse.Namespace(data=data_dir, **kwargs)
        return cls(args)

    def sanity_checks(self):
        if self.kind is not None and self.kind not in QUERY_KIND_CHOICES:
            raise InvalidParameterError(f"Unknown model kind {self.kind}")
        if self.lam < 0:
            raise InvalidParameterError(f"--lambda must be >= 0, got {self.lam}")
        if self.kind == "logreg" and self.lam <= 0:
            raise InvalidParameterError(f"Logistic regression needs --lambda > 0, got {self.lam}")
        if self.alpha <= 0:
            raise InvalidParameterError(f"--alpha must be > 0, got {self.alpha}")
        if self.epochs < 1:
            raise InvalidParameterError(f"--epochs must be >= 1, got {self.epochs}")
        if self.chunk_size < 1:
            raise InvalidParameterError(f"--chunk-size must be >= 1, got {self.chunk_size}")
        if self.seed < 0:
            raise InvalidParameterError(f"--seed must be >= 0, got {self.seed}")
        if not 0 < self.delta < 1:
            raise InvalidParameterError(f"--delta must lie in (0, 1), got {self.delta}")
        if self.report not in Const.REPORT_FORMATS:
            raise InvalidParameterError(f"--report must be one of {Const.REPORT_FORMATS}, got {self.report}")
        if self.parallel < 1:
            raise InvalidParameterError(f"--parallel must be >= 1, got {self.parallel}")
        if self.query_range is not None:
            IdRange.from_string(self.query_range)

    def __parse_params_file(self):
        """Read params file."""
        ignored_params = {
            "data_dir",
            "kind",
            "query_range",
            "params_from_file",
        }
        to_log(f"Reading params from {self.params_from_file}")
        with open(self.params_from_file, "r") as f:
            attributes = json.load(f)

        for key, value in attributes.items():
            if key in ignored_params:
                continue
            if not hasattr(self, key):
                raise InvalidParameterError(f"Unknown parameter {key} in {self.params_from_file}")
            setattr(self, key, value)
            to_log(f"* parameter {key}, assigned value: {value}")

    @property
    def model_kind(self):
        return ModelKind.from_string(self.kind)

    @property
    def id_range(self):
        return IdRange.from_string(self.query_range)

    def to_sgd_config(self):
        return SGDConfig(alpha=self.alpha, lam=self.lam, epochs=self.epochs, shuffle_seed=self.seed)

    def dump_to_json(self, directory):
        json_file_path = os.path.join(directory, Const.PARAMS_JSON_FILENAME)
        attributes = vars(self)  # get all attributes as a dictionary
        with open(json_file_path, "w") as f:
            json.dump(attributes, f, indent=4)

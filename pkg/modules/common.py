"""Common types and functions that can be potentially necessary for all modules."""
import os.path
from dataclasses import dataclass
from enum import Enum

from modules.error_classes import DataStoreError
from modules.error_classes import InvalidParameterError


@dataclass(frozen=True, order=True)
class IdRange:
    """Closed range of record ids [lo, hi]."""
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise InvalidParameterError(f"Invalid id range [{self.lo},{self.hi}]")

    def __len__(self):
        return self.hi - self.lo + 1

    def overlaps(self, other):
        # closed ranges: a shared endpoint is a shared point
        return self.lo <= other.hi and other.lo <= self.hi

    def contains(self, other):
        return self.lo <= other.lo and other.hi <= self.hi

    def intersection(self, other):
        if not self.overlaps(other):
            return None
        return IdRange(max(self.lo, other.lo), min(self.hi, other.hi))

    def to_string(self):
        return f"{self.lo}:{self.hi}"

    @classmethod
    def from_string(cls, value):
        """Parse the CLI form 'l:u'."""
        parts = value.split(":")
        if len(parts) != 2:
            raise InvalidParameterError(f"Range must look like l:u, got {value!r}")
        try:
            lo, hi = int(parts[0]), int(parts[1])
        except ValueError:
            raise InvalidParameterError(f"Range bounds must be integers, got {value!r}")
        return cls(lo, hi)

    def __repr__(self):
        return f"[{self.lo},{self.hi}]"


class ModelKind(Enum):
    LINREG = "linreg"
    NB_GAUSSIAN = "nb-gaussian"
    NB_MULTINOMIAL = "nb-multinomial"
    LOGREG_CHUNK = "logreg-chunk"

    @classmethod
    def from_string(cls, value):
        # the CLI names the logistic query kind 'logreg', its materialized form is a chunk
        if value == "logreg":
            return cls.LOGREG_CHUNK
        return cls(value)

    @property
    def cli_name(self):
        return "logreg" if self is ModelKind.LOGREG_CHUNK else self.value

    @property
    def supports_removal(self):
        return self is not ModelKind.LOGREG_CHUNK


QUERY_KIND_CHOICES = ["linreg", "nb-gaussian", "nb-multinomial", "logreg"]


@dataclass(frozen=True)
class ModelDescriptor:
    """Id range tagging one materialized model."""
    id_range: IdRange
    model_kind: ModelKind
    model_id: str

    @property
    def l(self):
        return self.id_range.lo

    @property
    def u(self):
        return self.id_range.hi


def read_key_value_file(path):
    """Read a 'key = value' text file into a dict of strings."""
    ret = {}
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            ret[key.strip()] = value.strip()
    return ret


def write_key_value_file(path, values):
    with open(path, "w") as f:
        for key, value in values.items():
            f.write(f"{key} = {value}\n")


def check_expected_file(path, label):
    if os.path.isfile(path):
        return
    err_msg = (
        f"Error! An expected file {path} was not found. "
        f"The failed operation label is: {label}"
    )
    raise DataStoreError(err_msg)

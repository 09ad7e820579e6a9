"""Persistent, ordered record store for the base dataset.

Layout of the data file: a fixed header (magic "MCDS", version u32, n u64, d u32,
target_kind u8, class_count u32) followed by n rows of d+1 little-endian doubles,
features first and the target last. Fixed-width rows make any id reachable with one seek.
Next to it lives a human-readable key = value meta sidecar.
"""
import csv
import math
import os
import struct
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from constants import Constants
from modules.common import IdRange
from modules.common import read_key_value_file
from modules.common import write_key_value_file
from modules.common import check_expected_file
from modules.error_classes import CorruptDataFileError
from modules.error_classes import DimensionMismatchError
from modules.error_classes import IngestError
from modules.error_classes import RangeOutOfBoundsError
from modules.model_cache_logging import to_log

DSC = Constants.DataStoreConstants
HEADER_SIZE = struct.calcsize(DSC.HEADER_FORMAT)


class TargetKind(Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"

    @property
    def code(self):
        return DSC.TARGET_KIND_CODES[self.value]

    @classmethod
    def from_code(cls, code):
        for name, value in DSC.TARGET_KIND_CODES.items():
            if value == code:
                return cls(name)
        raise CorruptDataFileError(f"Unknown target kind code {code}")


@dataclass(frozen=True)
class Record:
    id: int
    features: np.ndarray
    target: float


@dataclass
class DatasetMeta:
    n: int
    d: int
    target_kind: TargetKind
    class_count: int = 0
    source_path: str = ""

    def __post_init__(self):
        if self.n < 0:
            raise CorruptDataFileError(f"Record count must be >= 0, got {self.n}")
        if self.d < 1:
            raise CorruptDataFileError(f"Feature dimension must be >= 1, got {self.d}")
        if self.target_kind is TargetKind.CLASSIFICATION and self.class_count < 2:
            raise CorruptDataFileError(f"Classification data needs >= 2 classes, got {self.class_count}")

    @property
    def row_bytes(self):
        return (self.d + 1) * DSC.ROW_ITEM_BYTES

    @property
    def data_bytes(self):
        return HEADER_SIZE + self.n * self.row_bytes

    def to_header(self):
        return struct.pack(DSC.HEADER_FORMAT,
                           DSC.MAGIC,
                           DSC.VERSION,
                           self.n,
                           self.d,
                           self.target_kind.code,
                           self.class_count)

    def dump_sidecar(self, path):
        write_key_value_file(path, {
            "n": self.n,
            "d": self.d,
            "target_kind": self.target_kind.value,
            "class_count": self.class_count,
            "source_path": self.source_path,
        })

    @classmethod
    def from_sidecar(cls, path):
        values = read_key_value_file(path)
        try:
            return cls(n=int(values["n"]),
                       d=int(values["d"]),
                       target_kind=TargetKind(values["target_kind"]),
                       class_count=int(values.get("class_count", 0)),
                       source_path=values.get("source_path", ""))
        except (KeyError, ValueError) as err:
            raise CorruptDataFileError(f"Malformed meta file {path}: {err}")


class RecordBatch(Sequence):
    """Contiguous run of records held as a feature matrix and a target vector."""

    def __init__(self, first_id, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(f"Feature matrix {X.shape} does not match targets {y.shape}")
        self.first_id = first_id
        self.X = X
        self.y = y

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def ids(self):
        return np.arange(self.first_id, self.first_id + len(self), dtype=np.int64)

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            start, stop, step = i.indices(len(self))
            if step != 1:
                raise IndexError("RecordBatch slices must be contiguous")
            return RecordBatch(self.first_id + start, self.X[start:stop], self.y[start:stop])
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return Record(self.first_id + i, self.X[i], float(self.y[i]))

    def labels(self):
        return self.y.astype(np.int64)

    @classmethod
    def empty(cls, d, first_id=0):
        return cls(first_id, np.zeros((0, d)), np.zeros(0))

    @classmethod
    def from_records(cls, records, d=None):
        records = list(records)
        if not records:
            if d is None:
                raise DimensionMismatchError("Cannot infer dimension of an empty record list")
            return cls.empty(d)
        dims = {len(r.features) for r in records}
        if len(dims) != 1 or (d is not None and dims != {d}):
            raise DimensionMismatchError(f"Records disagree on feature dimension: {sorted(dims)}")
        X = np.vstack([np.asarray(r.features, dtype=np.float64) for r in records])
        y = np.array([r.target for r in records], dtype=np.float64)
        return cls(records[0].id, X, y)


def as_batch(points, d=None):
    """Accept a RecordBatch or any sequence of Record."""
    if isinstance(points, RecordBatch):
        if d is not None and points.d != d:
            raise DimensionMismatchError(f"Expected dimension {d}, got {points.d}")
        return points
    return RecordBatch.from_records(points, d=d)


def write_dataset(project_paths, X, y, meta):
    """Write a complete dataset (used by the synthesizers)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise IngestError("Refusing to store NaN/Inf values")
    rows = np.empty((X.shape[0], X.shape[1] + 1), dtype=DSC.ROW_DTYPE)
    rows[:, :-1] = X
    rows[:, -1] = y
    tmp_path = f"{project_paths.data_file}.tmp"
    with open(tmp_path, "wb") as f:
        f.write(meta.to_header())
        f.write(rows.tobytes())
    os.replace(tmp_path, project_paths.data_file)
    meta.dump_sidecar(project_paths.meta_file)
    to_log(f"Saved {meta.n} records (d={meta.d}, {meta.target_kind.value}) to {project_paths.data_file}")
    return meta


def _parse_cell(value, row, column):
    try:
        parsed = float(value)
    except ValueError:
        raise IngestError(f"Non-numeric value {value!r}", row=row, column=column)
    if not math.isfinite(parsed):
        raise IngestError(f"Non-finite value {value!r}", row=row, column=column)
    return parsed


def ingest_csv(path, target_column, kind, project_paths, class_count=None):
    """Parse a CSV file into the binary store; ids are row indices."""
    kind = TargetKind(kind)
    if not os.path.isfile(path):
        raise IngestError(f"Input file {path} does not exist")
    to_log(f"Ingesting {path}, target column {target_column!r} ({kind.value})")

    with open(path, "r", newline="") as in_f:
        reader = csv.reader(in_f)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"Input file {path} is empty")
        header = [h.strip() for h in header]
        if target_column not in header:
            raise IngestError(f"Target column {target_column!r} not found in header {header}")
        target_idx = header.index(target_column)
        feature_idx = [i for i in range(len(header)) if i != target_idx]
        d = len(feature_idx)
        if d < 1:
            raise IngestError("At least one feature column is required")

        n = 0
        max_label = -1
        block = []
        tmp_path = f"{project_paths.data_file}.tmp"
        out_f = open(tmp_path, "wb")
        # placeholder header, rewritten once n is known
        out_f.write(b"\0" * HEADER_SIZE)
        try:
            for row_num, row in enumerate(reader):
                if not row:
                    continue
                if len(row) != len(header):
                    raise IngestError(f"Expected {len(header)} cells, found {len(row)}", row=row_num)
                values = [_parse_cell(row[i], row_num, header[i]) for i in feature_idx]
                target = _parse_cell(row[target_idx], row_num, target_column)
                if kind is TargetKind.CLASSIFICATION:
                    if target < 0 or not float(target).is_integer():
                        raise IngestError(f"Class label must be a non-negative integer, got {target}",
                                          row=row_num, column=target_column)
                    if class_count is not None and target >= class_count:
                        raise IngestError(f"Class label {int(target)} >= class count {class_count}",
                                          row=row_num, column=target_column)
                    max_label = max(max_label, int(target))
                values.append(target)
                block.append(values)
                n += 1
                if len(block) >= DSC.INGEST_BLOCK_ROWS:
                    out_f.write(np.asarray(block, dtype=DSC.ROW_DTYPE).tobytes())
                    block = []
            if block:
                out_f.write(np.asarray(block, dtype=DSC.ROW_DTYPE).tobytes())

            if kind is TargetKind.CLASSIFICATION:
                resolved_classes = class_count if class_count is not None else max(2, max_label + 1)
            else:
                resolved_classes = 0
            meta = DatasetMeta(n=n, d=d, target_kind=kind, class_count=resolved_classes,
                               source_path=os.path.abspath(path))
            out_f.seek(0)
            out_f.write(meta.to_header())
        except Exception:
            out_f.close()
            os.remove(tmp_path)
            raise
        out_f.close()

    os.replace(tmp_path, project_paths.data_file)
    meta.dump_sidecar(project_paths.meta_file)
    to_log(f"Ingested {n} records with {d} features into {project_paths.data_file}")
    return meta


class DataStore:
    """Read-only view over an ingested dataset; safe for concurrent readers."""

    def __init__(self, project_paths):
        check_expected_file(project_paths.data_file, "open datastore")
        check_expected_file(project_paths.meta_file, "open datastore")
        self.data_file = project_paths.data_file
        self.meta = DatasetMeta.from_sidecar(project_paths.meta_file)
        self.__verify_header()

    def __verify_header(self):
        with open(self.data_file, "rb") as f:
            raw = f.read(HEADER_SIZE)
        if len(raw) != HEADER_SIZE:
            raise CorruptDataFileError(f"{self.data_file}: truncated header")
        magic, version, n, d, kind_code, class_count = struct.unpack(DSC.HEADER_FORMAT, raw)
        if magic != DSC.MAGIC or version != DSC.VERSION:
            raise CorruptDataFileError(f"{self.data_file}: not a dataset file (magic {magic!r}, version {version})")
        if (n, d, class_count) != (self.meta.n, self.meta.d, self.meta.class_count) \
                or TargetKind.from_code(kind_code) is not self.meta.target_kind:
            raise CorruptDataFileError(f"{self.data_file}: header disagrees with the meta file")
        expected_size = self.meta.data_bytes
        if os.path.getsize(self.data_file) != expected_size:
            raise CorruptDataFileError(f"{self.data_file}: expected {expected_size} bytes")

    @property
    def n(self):
        return self.meta.n

    @property
    def d(self):
        return self.meta.d

    @property
    def full_range(self):
        return IdRange(0, self.n - 1)

    def check_range(self, lo, hi):
        if not (0 <= lo <= hi <= self.n - 1):
            raise RangeOutOfBoundsError(f"Range [{lo},{hi}] outside dataset [0,{self.n - 1}]")

    def fetch_range(self, lo, hi):
        """Records with lo <= id <= hi in ascending id order."""
        self.check_range(lo, hi)
        count = hi - lo + 1
        width = self.d + 1
        with open(self.data_file, "rb") as f:
            f.seek(HEADER_SIZE + lo * self.meta.row_bytes)
            flat = np.fromfile(f, dtype=DSC.ROW_DTYPE, count=count * width)
        if flat.size != count * width:
            raise CorruptDataFileError(f"{self.data_file}: short read for range [{lo},{hi}]")
        rows = flat.reshape(count, width)
        return RecordBatch(lo, rows[:, :self.d], rows[:, self.d])

    def fetch(self, id_range):
        return self.fetch_range(id_range.lo, id_range.hi)

    def count_in_range(self, lo, hi):
        # dense ids: the count is the length of the range
        if hi < lo:
            raise RangeOutOfBoundsError(f"Inverted range [{lo},{hi}]")
        return hi - lo + 1

    def bytes_for(self, count):
        return count * self.meta.row_bytes

"""Registry of materialized models.

The index file is line oriented: model_id, kind, l, u, payload file, checksum. Payloads
live one per file under payloads/. Per model kind, overlapping descriptors are merged into
enhanced descriptors so that the models relevant to a query can be found by a range lookup.
"""
import bisect
import hashlib
import os
import threading
from dataclasses import dataclass

from constants import Constants
from modules.common import IdRange
from modules.common import ModelDescriptor
from modules.common import ModelKind
from modules.error_classes import CatalogError
from modules.error_classes import ChecksumMismatchError
from modules.error_classes import UnknownModelError
from modules.model_cache_logging import to_log
from modules import model_payloads

CC = Constants.CatalogConstants


@dataclass(frozen=True)
class EnhancedDescriptor:
    id_range: IdRange
    members: tuple


@dataclass(frozen=True)
class CatalogEntry:
    descriptor: ModelDescriptor
    payload_file: str
    checksum: str
    payload_bytes: int

    def to_line(self):
        d = self.descriptor
        return "\t".join([d.model_id, d.model_kind.value, str(d.l), str(d.u), self.payload_file, self.checksum])


def preprocess_descriptors(descriptors):
    """Sort by l and sweep, merging descriptors that share at least one point."""
    ret = []
    cur_lo = cur_hi = None
    members = []
    for d in sorted(descriptors, key=lambda x: (x.l, x.u, x.model_id)):
        if cur_hi is not None and d.l <= cur_hi:
            cur_hi = max(cur_hi, d.u)
            members.append(d.model_id)
            continue
        if cur_hi is not None:
            ret.append(EnhancedDescriptor(IdRange(cur_lo, cur_hi), tuple(members)))
        cur_lo, cur_hi, members = d.l, d.u, [d.model_id]
    if cur_hi is not None:
        ret.append(EnhancedDescriptor(IdRange(cur_lo, cur_hi), tuple(members)))
    return ret


def _checksum(blob):
    return hashlib.new(CC.CHECKSUM_ALGO, blob).hexdigest()


class CatalogSnapshot:
    """Immutable view of the catalog; planning runs against one snapshot."""

    def __init__(self, entries, enhanced):
        self.entries = entries
        self.enhanced = enhanced
        self._enhanced_his = {kind: [e.id_range.hi for e in eds] for kind, eds in enhanced.items()}

    def descriptors(self, kind=None):
        ret = [e.descriptor for e in self.entries.values() if kind is None or e.descriptor.model_kind is kind]
        return sorted(ret, key=lambda d: (d.l, d.u, d.model_id))

    def relevant_models(self, query, kind):
        """Every member of every enhanced descriptor intersecting the query."""
        eds = self.enhanced.get(kind, [])
        start = bisect.bisect_left(self._enhanced_his.get(kind, []), query.lo)
        ret = []
        for ed in eds[start:]:
            if ed.id_range.lo > query.hi:
                break
            ret.extend(self.entries[m].descriptor for m in ed.members)
        if kind is ModelKind.LOGREG_CHUNK:
            # chunks cannot be removed from, so only chunks inside the query are usable
            ret = [d for d in ret if query.contains(d.id_range)]
        return sorted(ret, key=lambda d: (d.l, d.u, d.model_id))

    def coverage(self, kind, n):
        if n <= 0:
            return 0.0
        covered = sum(len(ed.id_range) for ed in self.enhanced.get(kind, []))
        return 100.0 * covered / n

    def payload_bytes(self, model_id):
        return self.entries[model_id].payload_bytes


class Catalog:
    def __init__(self, project_paths):
        self.catalog_dir = project_paths.catalog_dir
        self.index_file = project_paths.catalog_index
        self.payloads_dir = project_paths.payloads_dir
        os.makedirs(self.payloads_dir, exist_ok=True)
        self._lock = threading.RLock()
        self._next_seq = 1
        self._snapshot = CatalogSnapshot({}, {})
        self.load()

    def load(self):
        """Read the index from disk and recompute all enhanced descriptors."""
        entries = {}
        max_seq = 0
        if os.path.isfile(self.index_file):
            with open(self.index_file, "r") as f:
                for line_num, line in enumerate(f):
                    line = line.rstrip("\n")
                    if not line or line.startswith("#"):
                        continue
                    entry = self.__parse_index_line(line, line_num)
                    entries[entry.descriptor.model_id] = entry
                    max_seq = max(max_seq, self.__seq_of(entry.descriptor.model_id))
        with self._lock:
            self._next_seq = max_seq + 1
            self._snapshot = CatalogSnapshot(entries, self.__all_enhanced(entries))
        to_log(f"Catalog {self.catalog_dir}: {len(entries)} materialized models")

    def __parse_index_line(self, line, line_num):
        parts = line.split("\t")
        if len(parts) != len(CC.INDEX_COLUMNS):
            raise CatalogError(f"{self.index_file}:{line_num + 1}: expected {len(CC.INDEX_COLUMNS)} columns")
        model_id, kind, lo, hi, payload_file, checksum = parts
        try:
            descriptor = ModelDescriptor(IdRange(int(lo), int(hi)), ModelKind(kind), model_id)
        except ValueError as err:
            raise CatalogError(f"{self.index_file}:{line_num + 1}: {err}")
        path = os.path.join(self.payloads_dir, payload_file)
        size = os.path.getsize(path) if os.path.isfile(path) else 0
        return CatalogEntry(descriptor, payload_file, checksum, size)

    @staticmethod
    def __seq_of(model_id):
        tail = model_id.rsplit("-", 1)[-1]
        return int(tail) if tail.isdigit() else 0

    @staticmethod
    def __all_enhanced(entries):
        by_kind = {}
        for entry in entries.values():
            by_kind.setdefault(entry.descriptor.model_kind, []).append(entry.descriptor)
        return {kind: preprocess_descriptors(ds) for kind, ds in by_kind.items()}

    def snapshot(self):
        return self._snapshot

    def materialize(self, id_range, kind, payload):
        """Persist a model; an existing model of the same kind and range is replaced."""
        blob = model_payloads.encode(kind, payload, id_range)
        with self._lock:
            model_id = f"{kind.value}-{self._next_seq:06d}"
            self._next_seq += 1
            payload_file = f"{model_id}{CC.PAYLOAD_SUFFIX}"
            tmp_path = os.path.join(self.payloads_dir, f"{payload_file}.tmp")
            with open(tmp_path, "wb") as f:
                f.write(blob)
            os.replace(tmp_path, os.path.join(self.payloads_dir, payload_file))
            entry = CatalogEntry(ModelDescriptor(id_range, kind, model_id), payload_file, _checksum(blob), len(blob))

            old = self._snapshot
            retired = [e for e in old.entries.values()
                       if e.descriptor.model_kind is kind and e.descriptor.id_range == id_range]
            entries = {k: v for k, v in old.entries.items() if all(k != r.descriptor.model_id for r in retired)}
            entries[model_id] = entry
            enhanced = dict(old.enhanced)
            if retired:
                enhanced[kind] = preprocess_descriptors(
                    [e.descriptor for e in entries.values() if e.descriptor.model_kind is kind]
                )
                self.__write_index(entries)
                for r in retired:
                    to_log(f"Replacing {r.descriptor.model_id} by {model_id} for {kind.value} {id_range}")
                    retired_path = os.path.join(self.payloads_dir, r.payload_file)
                    if os.path.isfile(retired_path):
                        os.remove(retired_path)
            else:
                enhanced[kind] = self.__insert_enhanced(old.enhanced.get(kind, []), entry.descriptor, entries)
                with open(self.index_file, "a") as f:
                    f.write(entry.to_line() + "\n")
            self._snapshot = CatalogSnapshot(entries, enhanced)
        return model_id

    @staticmethod
    def __insert_enhanced(enhanced, descriptor, entries):
        """Merge one new descriptor into a sorted, disjoint enhanced list."""
        r = descriptor.id_range
        lo, hi, members = r.lo, r.hi, [descriptor.model_id]
        kept = []
        for ed in enhanced:
            if ed.id_range.overlaps(r):
                lo, hi = min(lo, ed.id_range.lo), max(hi, ed.id_range.hi)
                members.extend(ed.members)
            else:
                kept.append(ed)
        # same member order as preprocess_descriptors
        members.sort(key=lambda m: (entries[m].descriptor.l, entries[m].descriptor.u, m))
        kept.append(EnhancedDescriptor(IdRange(lo, hi), tuple(members)))
        return sorted(kept, key=lambda e: e.id_range.lo)

    def __write_index(self, entries):
        tmp_path = f"{self.index_file}.tmp"
        with open(tmp_path, "w") as f:
            for entry in sorted(entries.values(), key=lambda e: self.__seq_of(e.descriptor.model_id)):
                f.write(entry.to_line() + "\n")
        os.replace(tmp_path, self.index_file)

    def get_entry(self, model_id):
        entry = self._snapshot.entries.get(model_id)
        if entry is None:
            raise UnknownModelError(f"Unknown model id {model_id}")
        return entry

    def load_model(self, model_id):
        entry = self.get_entry(model_id)
        path = os.path.join(self.payloads_dir, entry.payload_file)
        if not os.path.isfile(path):
            raise CatalogError(f"Payload {path} of model {model_id} is missing")
        with open(path, "rb") as f:
            blob = f.read()
        if _checksum(blob) != entry.checksum:
            raise ChecksumMismatchError(f"Payload of model {model_id} does not match its checksum")
        return model_payloads.decode(entry.descriptor.model_kind, blob)

    def preprocess_descriptors(self, kind):
        """Batch recomputation of the enhanced descriptors of one kind."""
        return preprocess_descriptors(self._snapshot.descriptors(kind))

    def enhanced_descriptors(self, kind):
        return list(self._snapshot.enhanced.get(kind, []))

    def relevant_models(self, query, kind):
        return self._snapshot.relevant_models(query, kind)

    def coverage(self, kind, n):
        return self._snapshot.coverage(kind, n)

    def descriptors(self, kind=None):
        return self._snapshot.descriptors(kind)

    def storage_bytes(self, kind=None):
        return sum(e.payload_bytes for e in self._snapshot.entries.values()
                   if kind is None or e.descriptor.model_kind is kind)

    def __len__(self):
        return len(self._snapshot.entries)

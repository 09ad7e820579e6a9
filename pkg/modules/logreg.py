"""Chunked logistic regression with parameter averaging.

A query range is cut along a global grid of chunk size l anchored at id 0. Each grid chunk
gets its own SGD model, seeded from (global seed, chunk start), so a chunk trained by one
query is bit-identical to the one any other query would train. Materialized chunks are
reused, the rest are trained from base data, and the query model is the uniform average
of every contributing chunk. Points can be added to such a model, never removed.
"""
import hashlib
import logging
import math
import struct
from dataclasses import dataclass
from typing import Optional
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import expit

from modules.common import IdRange
from modules.common import ModelKind
from modules.datastore import as_batch
from modules.error_classes import CorruptDataFileError
from modules.error_classes import InvalidParameterError
from modules.error_classes import ModelCacheError
from modules.error_classes import TrainingDivergedError
from modules.model_cache_logging import to_log
from modules.timing import NullLedger
from parallelization.thread_pool import execute_parallel_step

if TYPE_CHECKING:
    from modules.catalog import Catalog
    from modules.datastore import DataStore

# descriptor lo u64, hi u64, chunk_size u64, d u32, config fingerprint 16 ascii bytes
_HEADER_FORMAT = "<QQQI16s"
_HEADER_SIZE = struct.calcsize(_HEADER_FORMAT)
# exp() overflows beyond this; the sigmoid is saturated long before
_MAX_MARGIN = 700.0


@dataclass(frozen=True)
class SGDConfig:
    alpha: float
    lam: float
    epochs: int = 1
    shuffle_seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameterError(f"Learning rate alpha must be > 0, got {self.alpha}")
        if not self.lam > 0:
            raise InvalidParameterError(f"Regularization lambda must be > 0, got {self.lam}")
        if self.epochs < 1:
            raise InvalidParameterError(f"Epochs must be >= 1, got {self.epochs}")
        if self.shuffle_seed < 0:
            raise InvalidParameterError(f"Shuffle seed must be >= 0, got {self.shuffle_seed}")

    def fingerprint(self):
        key = f"{self.alpha!r}|{self.lam!r}|{self.epochs}|{self.shuffle_seed}"
        return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ChunkModel:
    descriptor: IdRange
    w: np.ndarray
    chunk_size: int
    fingerprint: str = ""

    def __post_init__(self):
        if len(self.descriptor) != self.chunk_size:
            raise ModelCacheError(f"Chunk {self.descriptor} does not have size {self.chunk_size}")


@dataclass(frozen=True)
class MixtureModel:
    w_mu: np.ndarray
    contributing: tuple
    chunk_size: int
    reused: tuple = ()
    trained: tuple = ()


@dataclass(frozen=True)
class ChunkLayout:
    chunks: list
    remainder: Optional[IdRange] = None


@dataclass(frozen=True)
class ChunkPiece:
    """One contributing piece of a query: a grid chunk, or a non-aligned leftover."""
    id_range: IdRange
    aligned: bool


@dataclass(frozen=True)
class BoundInputs:
    R: float
    lam: float
    l: int
    q_size: int
    p: int
    delta: float

    def __post_init__(self):
        if not self.R > 0:
            raise InvalidParameterError(f"R must be > 0, got {self.R}")
        if not 0 < self.delta < 1:
            raise InvalidParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.lam > 0 or self.l < 1 or self.q_size < 1:
            raise InvalidParameterError("lambda, l and |D_q| must be positive")
        if self.p != self.q_size // self.l:
            raise InvalidParameterError(f"p must equal floor(|D_q| / l) = {self.q_size // self.l}, got {self.p}")


@dataclass(frozen=True)
class BoundReport:
    w_mu: np.ndarray
    w_sgd: np.ndarray
    distance: float
    bound: float
    inputs: BoundInputs

    @property
    def holds(self):
        return self.distance <= self.bound


def _check_binary(y):
    if len(y) and not np.all((y == 0) | (y == 1)):
        bad = y[(y != 0) & (y != 1)][0]
        raise ModelCacheError(f"Logistic regression needs labels in {{0, 1}}, found {bad}")


def loss_and_gradient(w, points, lam):
    """Mean cross-entropy plus lam * ||w||^2, and its gradient."""
    batch = as_batch(points, d=len(w))
    X, y = batch.X, batch.y
    _check_binary(y)
    w = np.asarray(w, dtype=np.float64)
    reg_loss = lam * float(w @ w)
    reg_grad = 2.0 * lam * w
    if len(batch) == 0:
        return reg_loss, reg_grad
    z = X @ w
    # -[y log h + (1 - y) log(1 - h)] = log(1 + e^z) - y z
    data_loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    data_grad = X.T @ (expit(z) - y) / len(batch)
    return data_loss + reg_loss, data_grad + reg_grad


def chunk_rng(shuffle_seed, chunk_start):
    return np.random.default_rng(np.random.SeedSequence([shuffle_seed, chunk_start]))


def _sgd(X, y, cfg, rng):
    """Per-sample SGD from w = 0; returns w and the loss after each epoch."""
    n, d = X.shape
    w = np.zeros(d)
    alpha, two_lam = cfg.alpha, 2.0 * cfg.lam
    losses = []
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            xi = X[i]
            z = min(max(float(xi @ w), -_MAX_MARGIN), _MAX_MARGIN)
            h = 1.0 / (1.0 + math.exp(-z))
            w = w - alpha * ((h - y[i]) * xi + two_lam * w)
        if not np.all(np.isfinite(w)):
            raise TrainingDivergedError(f"SGD diverged with learning rate alpha={cfg.alpha}; try a smaller alpha")
        z = X @ w
        losses.append(float(np.mean(np.logaddexp(0.0, z) - y * z)) + cfg.lam * float(w @ w))
    return w, losses


def train_chunk(points, cfg, return_losses=False):
    """Train one chunk; the shuffle order depends only on the seed and the chunk start id."""
    batch = as_batch(points)
    if len(batch) < 1:
        raise ModelCacheError("Cannot train a chunk without points")
    _check_binary(batch.y)
    w, losses = _sgd(batch.X, batch.y, cfg, chunk_rng(cfg.shuffle_seed, batch.first_id))
    model = ChunkModel(IdRange(batch.first_id, batch.first_id + len(batch) - 1), w, len(batch), cfg.fingerprint())
    if return_losses:
        return model, losses
    return model


def make_chunks(id_range, l):
    """Consecutive chunks of exactly l ids starting at id_range.lo, plus a shorter remainder."""
    q_size = len(id_range)
    if l < 1 or l > q_size // 2:
        raise InvalidParameterError(f"Chunk size {l} violates 1 <= l <= |D_q|/2 for |D_q| = {q_size}")
    p = q_size // l
    chunks = [IdRange(id_range.lo + i * l, id_range.lo + (i + 1) * l - 1) for i in range(p)]
    remainder = None
    if p * l < q_size:
        remainder = IdRange(id_range.lo + p * l, id_range.hi)
    return ChunkLayout(chunks, remainder)


def aligned_pieces(id_range, l):
    """Cut a range along the global grid (multiples of l), ids ascending."""
    pieces = []
    start = id_range.lo
    while start <= id_range.hi:
        grid_end = (start // l + 1) * l - 1
        end = min(grid_end, id_range.hi)
        aligned = start % l == 0 and end == grid_end
        pieces.append(ChunkPiece(IdRange(start, end), aligned))
        start = end + 1
    return pieces


def is_grid_chunk(id_range, l):
    return id_range.lo % l == 0 and len(id_range) == l


def average_weights(weights):
    """Uniform mixture; rows must arrive in ascending id order for reproducible sums."""
    return np.mean(np.vstack(weights), axis=0)


def mixture_weight_method(batch, pieces, cfg):
    """Train every piece of an in-memory batch and average (no catalog involved)."""
    ws = []
    for piece in pieces:
        offset = piece.id_range.lo - batch.first_id
        ws.append(train_chunk(batch[offset:offset + len(piece.id_range)], cfg).w)
    return average_weights(ws)


def _reusable_chunks(query, catalog, cfg, l, allowed_ids):
    available = {}
    fingerprint = cfg.fingerprint()
    for descriptor in catalog.relevant_models(query, ModelKind.LOGREG_CHUNK):
        if not is_grid_chunk(descriptor.id_range, l):
            continue
        if allowed_ids is not None and descriptor.model_id not in allowed_ids:
            continue
        chunk = catalog.load_model(descriptor.model_id)
        if chunk.fingerprint != fingerprint:
            to_log(f"Chunk {descriptor.model_id} was trained with other SGD settings, not reusing it",
                   level=logging.WARNING)
            continue
        available[descriptor.id_range] = chunk
    return available


def incremental_logreg(query: IdRange,
                       catalog: "Catalog",
                       datastore: "DataStore",
                       cfg: SGDConfig,
                       chunk_size: int,
                       reuse=True,
                       materialize=True,
                       allowed_ids=None,
                       workers=1,
                       ledger=None):
    """Assemble the query model from materialized chunks plus freshly trained ones."""
    ledger = ledger or NullLedger()
    datastore.check_range(query.lo, query.hi)
    l = chunk_size
    if l < 1 or l > len(query) // 2:
        raise InvalidParameterError(f"Chunk size {l} violates 1 <= l <= |D_q|/2 for |D_q| = {len(query)}")
    pieces = aligned_pieces(query, l)

    available = {}
    if reuse:
        with ledger.section("io_ms"):
            available = _reusable_chunks(query, catalog, cfg, l, allowed_ids)

    to_train = [p for p in pieces if not (p.aligned and p.id_range in available)]

    def train_job(piece):
        def job():
            with ledger.section("io_ms"):
                batch = datastore.fetch(piece.id_range)
            with ledger.section("train_ms"):
                return train_chunk(batch, cfg)
        return job

    trained = execute_parallel_step([train_job(p) for p in to_train], workers, "train_chunk")
    trained_by_range = {c.descriptor: c for c in trained}

    if materialize:
        with ledger.section("io_ms"):
            for piece in to_train:
                # leftovers are not on the grid, so no other query could reuse them
                if piece.aligned:
                    catalog.materialize(piece.id_range, ModelKind.LOGREG_CHUNK, trained_by_range[piece.id_range])

    with ledger.section("merge_ms"):
        ws = []
        for piece in pieces:
            source = available if piece.id_range in available and piece.aligned else trained_by_range
            ws.append(source[piece.id_range].w)
        w_mu = average_weights(ws)
    reused = tuple(p.id_range for p in pieces if p.aligned and p.id_range in available)
    to_log(f"Logistic query {query}: {len(pieces)} chunks, {len(reused)} reused, {len(to_train)} trained")
    return MixtureModel(w_mu,
                        tuple(p.id_range for p in pieces),
                        l,
                        reused=reused,
                        trained=tuple(p.id_range for p in to_train))


def predict_proba(w, X):
    return expit(np.asarray(X, dtype=np.float64) @ w)


def accuracy(w, points):
    batch = as_batch(points, d=len(w))
    if len(batch) == 0:
        return float("nan")
    return float(np.mean((predict_proba(w, batch.X) >= 0.5) == (batch.y == 1)))


def averaging_bound(inp):
    """Distance bound between the chunk-averaged weights and single-run SGD weights."""
    first = inp.R * math.sqrt(2.0) / inp.lam * (1.0 / math.sqrt(inp.l) + 1.0 / math.sqrt(inp.q_size))
    second = (2.0 * math.sqrt(2.0) * inp.R / (inp.lam * math.sqrt(inp.p * inp.l))) * math.sqrt(math.log(1.0 / inp.delta))
    return first + second


def bound_inputs(batch, lam, l, delta):
    R = float(np.max(np.linalg.norm(batch.X, axis=1)))
    return BoundInputs(R=R, lam=lam, l=l, q_size=len(batch), p=len(batch) // l, delta=delta)


def averaging_diagnostic(query, datastore, cfg, l, delta):
    """Compare chunk averaging with SGD over the whole query against the bound.

    R is the largest feature-vector norm observed in the query range.
    """
    batch = datastore.fetch(query)
    layout = make_chunks(query, l)
    pieces = [ChunkPiece(c, True) for c in layout.chunks]
    if layout.remainder is not None:
        pieces.append(ChunkPiece(layout.remainder, False))
    w_mu = mixture_weight_method(batch, pieces, cfg)
    w_sgd = train_chunk(batch, cfg).w
    inputs = bound_inputs(batch, cfg.lam, l, delta)
    return BoundReport(w_mu, w_sgd, float(np.linalg.norm(w_mu - w_sgd)), averaging_bound(inputs), inputs)


def serialize_chunk(chunk, descriptor=None):
    descriptor = descriptor or chunk.descriptor
    header = struct.pack(_HEADER_FORMAT, descriptor.lo, descriptor.hi, chunk.chunk_size, len(chunk.w),
                         chunk.fingerprint.encode("ascii").ljust(16, b"\0"))
    return header + np.asarray(chunk.w, dtype="<f8").tobytes()


def deserialize_chunk(blob):
    if len(blob) < _HEADER_SIZE:
        raise CorruptDataFileError("Chunk payload is truncated")
    lo, hi, chunk_size, d, fingerprint = struct.unpack_from(_HEADER_FORMAT, blob)
    if len(blob) != _HEADER_SIZE + 8 * d:
        raise CorruptDataFileError(f"Chunk payload has {len(blob)} bytes, expected {_HEADER_SIZE + 8 * d}")
    w = np.frombuffer(blob, dtype="<f8", offset=_HEADER_SIZE).copy()
    return ChunkModel(IdRange(lo, hi), w, chunk_size, fingerprint.rstrip(b"\0").decode("ascii"))


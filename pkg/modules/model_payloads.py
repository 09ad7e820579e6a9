"""Serialization of materialized model payloads, one codec per model kind."""
from modules.common import ModelKind
from modules.error_classes import CatalogError
from modules import linreg
from modules import logreg
from modules import naive_bayes
from modules.naive_bayes import NBKind


def _nb_kind(kind):
    return NBKind.GAUSSIAN if kind is ModelKind.NB_GAUSSIAN else NBKind.MULTINOMIAL


def encode(kind, payload, id_range):
    if kind is ModelKind.LINREG:
        return linreg.serialize_stats(payload, id_range)
    if kind in (ModelKind.NB_GAUSSIAN, ModelKind.NB_MULTINOMIAL):
        if payload.kind is not _nb_kind(kind):
            raise CatalogError(f"{payload.kind.value} counters cannot be stored as {kind.value}")
        return naive_bayes.serialize_stats(payload, id_range)
    if kind is ModelKind.LOGREG_CHUNK:
        if payload.descriptor != id_range:
            raise CatalogError(f"Chunk {payload.descriptor} stored under descriptor {id_range}")
        return logreg.serialize_chunk(payload)
    raise CatalogError(f"No codec for model kind {kind}")


def decode(kind, blob):
    """Payload object only; the descriptor lives in the catalog index."""
    if kind is ModelKind.LINREG:
        return linreg.deserialize_stats(blob)[0]
    if kind in (ModelKind.NB_GAUSSIAN, ModelKind.NB_MULTINOMIAL):
        stats = naive_bayes.deserialize_stats(blob)[0]
        if stats.kind is not _nb_kind(kind):
            raise CatalogError(f"Payload holds {stats.kind.value} counters, index says {kind.value}")
        return stats
    if kind is ModelKind.LOGREG_CHUNK:
        return logreg.deserialize_chunk(blob)
    raise CatalogError(f"No codec for model kind {kind}")

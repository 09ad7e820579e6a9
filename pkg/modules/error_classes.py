"""Classes that define specific model cache exceptions."""


class ModelCacheError(Exception):
    pass


class DataStoreError(ModelCacheError):
    pass


class IngestError(DataStoreError):
    def __init__(self, msg, row=None, column=None):
        location = ""
        if row is not None:
            location += f" (row {row}"
            location += f", column {column})" if column is not None else ")"
        super().__init__(f"{msg}{location}")
        self.row = row
        self.column = column


class RangeOutOfBoundsError(DataStoreError):
    pass


class CorruptDataFileError(DataStoreError):
    pass


class DimensionMismatchError(ModelCacheError):
    pass


class SingularSystemError(ModelCacheError):
    pass


class InvalidPlanError(ModelCacheError):
    pass


class InvalidMergeError(ModelCacheError):
    pass


class TrainingDivergedError(ModelCacheError):
    pass


class InvalidParameterError(ModelCacheError):
    pass


class CatalogError(ModelCacheError):
    pass


class UnknownModelError(CatalogError):
    pass


class ChecksumMismatchError(CatalogError):
    pass


class NoPlanError(ModelCacheError):
    pass


class CoverageUnreachableError(ModelCacheError):
    pass


class ParallelExecutionError(ModelCacheError):
    pass

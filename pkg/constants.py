"""Project-wide constants."""


class Constants:
    DESCRIPTION = (
        "Materialize machine-learning models as incremental sufficient statistics "
        "and answer range-scoped model queries by reusing them."
    )

    # defaults
    DEFAULT_LAMBDA = 1e-3
    DEFAULT_ALPHA = 0.05
    DEFAULT_EPOCHS = 1
    DEFAULT_CHUNK_SIZE = 10_000
    DEFAULT_SEED = 0
    DEFAULT_DELTA = 0.05
    DEFAULT_REPORT = "text"
    REPORT_FORMATS = ("text", "json")

    # numeric tolerances
    SOLVER_RESIDUAL_TOL = 1e-9
    NEGATIVE_COUNT_TOL = 1e-9
    VARIANCE_FLOOR_SCALE = 1e-9

    # synthesizer defaults
    DEFAULT_SYNTH_N = 1_000_000
    DEFAULT_SYNTH_D = 10
    DEFAULT_SYNTH_NOISE = 1.0
    DEFAULT_SYNTH_CLASSES = 2
    DEFAULT_BLOB_SPREAD = 4.0
    # regression features span roughly d * fraction directions; 0 as --effective-rank means independent features
    DEFAULT_EFFECTIVE_RANK_FRACTION = 0.5

    # file names inside a data directory
    DATA_FILENAME = "dataset.bin"
    META_FILENAME = "dataset.meta"
    CATALOG_DIRNAME = "catalog"
    CATALOG_INDEX_FILENAME = "index.tsv"
    PAYLOADS_DIRNAME = "payloads"
    LOG_FILENAME = "run.log"
    PARAMS_JSON_FILENAME = "query_parameters.json"
    COST_MODEL_FILENAME_TEMPLATE = "cost_model_{kind}.json"
    BENCH_DIRNAME = "bench"
    BENCH_STATUS_FILENAME = "bench_status.json"

    class DataStoreConstants:
        MAGIC = b"MCDS"
        VERSION = 1
        # magic, version u32, n u64, d u32, target_kind u8, class_count u32
        HEADER_FORMAT = "<4sIQIBI"
        ROW_DTYPE = "<f8"
        ROW_ITEM_BYTES = 8
        INGEST_BLOCK_ROWS = 65_536
        TARGET_KIND_CODES = {"regression": 0, "classification": 1}

    class CatalogConstants:
        INDEX_COLUMNS = ("model_id", "kind", "l", "u", "payload_file", "checksum")
        PAYLOAD_SUFFIX = ".bin"
        CHECKSUM_ALGO = "sha256"

    class CostModelConstants:
        CALIBRATION_SMALL_ROWS = 1_000
        CALIBRATION_LARGE_ROWS = 50_000
        CALIBRATION_REPEATS = 3
        MERGE_CALIBRATION_REPEATS = 200
        # cost units are milliseconds
        MIN_SEEK_COST = 1e-3
        MIN_ROW_COST = 1e-6

    class BenchConstants:
        COVERAGE_TARGETS = (0, 20, 40, 60, 80, 90)
        DEFAULT_QUERY_COUNT = 200
        DEFAULT_SIZE_DIST = "normal:50000:12500"
        DEFAULT_SWEEP_COVERAGE = 50
        MAX_SEEDING_ATTEMPTS_FACTOR = 50
        CSV_HEADER = (
            "coverage",
            "speedup",
            "plan_ms",
            "io_ms",
            "merge_ms",
            "train_ms",
            "acc_mean_diff",
            "acc_pos_mean_diff",
            "acc_max_diff",
            "catalog_bytes",
        )
        SWEEP_CSV_HEADER = ("model_size", "coverage", "speedup", "catalog_bytes")
        # the CSV speedup column is T0/T: 2.0 means twice as fast as the baseline
        SPEEDUP_NOTE = "# speedup = T0/T (baseline time over reuse time)"

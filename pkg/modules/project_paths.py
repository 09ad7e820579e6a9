"""Class that holds paths related to a data directory and its catalog."""
import os

from constants import Constants


class ProjectPaths:
    def __init__(self, data_dir, create_dirs=True):
        self.data_dir = self._j_abs(data_dir)
        self.data_file = self._j_abs(data_dir, Constants.DATA_FILENAME)
        self.meta_file = self._j_abs(data_dir, Constants.META_FILENAME)
        self.log_file = self._j_abs(data_dir, Constants.LOG_FILENAME)
        self.params_json = self._j_abs(data_dir, Constants.PARAMS_JSON_FILENAME)

        # catalog of materialized models
        self.catalog_dir = self._j_abs(data_dir, Constants.CATALOG_DIRNAME)
        self.catalog_index = self._j_abs(self.catalog_dir, Constants.CATALOG_INDEX_FILENAME)
        self.payloads_dir = self._j_abs(self.catalog_dir, Constants.PAYLOADS_DIRNAME)

        # bench harness
        self.bench_dir = self._j_abs(data_dir, Constants.BENCH_DIRNAME)
        self.bench_status = self._j_abs(self.bench_dir, Constants.BENCH_STATUS_FILENAME)
        # Create necessary directories
        if create_dirs:
            self._create_dirs()

    @staticmethod
    def _j_abs(*args):
        """Apply both abspath and join."""
        return os.path.abspath(os.path.join(*args))

    def _create_dirs(self):
        directories_to_create = [
            self.data_dir,
            self.catalog_dir,
            self.payloads_dir,
        ]
        for directory in directories_to_create:
            os.makedirs(directory, exist_ok=True)

    def cost_model_json(self, kind_value):
        filename = Constants.COST_MODEL_FILENAME_TEMPLATE.format(kind=kind_value)
        return self._j_abs(self.data_dir, filename)

    def with_catalog_dir(self, catalog_dir):
        """Same dataset, separate catalog (bench runs one catalog per coverage target)."""
        other = ProjectPaths(self.data_dir, create_dirs=False)
        other.catalog_dir = self._j_abs(catalog_dir)
        other.catalog_index = self._j_abs(catalog_dir, Constants.CATALOG_INDEX_FILENAME)
        other.payloads_dir = self._j_abs(catalog_dir, Constants.PAYLOADS_DIRNAME)
        os.makedirs(other.payloads_dir, exist_ok=True)
        return other

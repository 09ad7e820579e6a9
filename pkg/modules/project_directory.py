"""Class to manage the data directory."""
import os
import shutil

from modules.error_classes import DataStoreError


class DataDirectoryManager:
    def __init__(self, data_dir, force_override=False, must_exist=False):
        self.data_dir = os.path.abspath(data_dir) if data_dir else os.getcwd()
        self.force_override = force_override
        self.must_exist = must_exist
        self.__create_directory_if_possible()

    def __create_directory_if_possible(self):
        if self.must_exist:
            if not os.path.isdir(self.data_dir):
                raise DataStoreError(f"Data directory {self.data_dir} does not exist; run ingest or synth first")
            return
        if os.path.exists(self.data_dir) and self.force_override:
            shutil.rmtree(self.data_dir)
            os.makedirs(self.data_dir)
        elif os.path.exists(self.data_dir):
            self.__check_whether_override()
        else:
            os.makedirs(self.data_dir)

    def __check_whether_override(self):
        """A fresh dataset must not silently invalidate an existing catalog."""
        existing = [x for x in os.listdir(self.data_dir) if not x.startswith(".")]
        if existing:
            raise DataStoreError(
                f"Data directory {self.data_dir} is not empty. Use --force to overwrite it."
            )

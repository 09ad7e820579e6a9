"""Per-target progress of a bench run, so that an interrupted run can continue."""
import json
import logging
import os
from enum import Enum

from modules.error_classes import CoverageUnreachableError
from modules.model_cache_logging import to_log


class TargetStatus(Enum):
    NOT_STARTED = "not_started"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    SKIPPED = "skipped"

    @classmethod
    def from_string(cls, value):
        return cls(value)


class BenchProgress:
    """Status and finished result row of every bench target, kept in a JSON file."""

    def __init__(self, status_file, targets, continue_run=False):
        self.status_file = status_file
        self.targets = list(targets)
        self.status = {t: TargetStatus.NOT_STARTED for t in self.targets}
        self.rows = {}
        self.load_or_init(continue_run)

    def load_or_init(self, continue_run):
        if continue_run and os.path.exists(self.status_file):
            with open(self.status_file, "r") as f:
                loaded = json.load(f)
            for target, entry in loaded.items():
                if target not in self.status:
                    continue
                status = TargetStatus.from_string(entry["status"])
                # anything unfinished is redone from scratch
                if status in (TargetStatus.COMPLETED, TargetStatus.SKIPPED):
                    self.status[target] = status
                    if entry.get("row") is not None:
                        self.rows[target] = entry["row"]
            done = sum(s is TargetStatus.COMPLETED for s in self.status.values())
            to_log(f"### Continuing bench run: {done} of {len(self.targets)} targets already completed")
        self.save()

    def save(self):
        serializable = {t: {"status": s.value, "row": self.rows.get(t)} for t, s in self.status.items()}
        tmp_path = f"{self.status_file}.tmp"
        with open(tmp_path, "w") as f:
            json.dump(serializable, f, indent=4)
        os.replace(tmp_path, self.status_file)

    def mark(self, target, status, row=None):
        self.status[target] = status
        if row is not None:
            self.rows[target] = row
        self.save()

    def pending(self):
        return [t for t in self.targets if self.status[t] is TargetStatus.NOT_STARTED]

    def execute_targets(self, run_target):
        """run_target(target) returns a JSON-serializable result row."""
        for target in self.pending():
            self.mark(target, TargetStatus.RUNNING)
            try:
                row = run_target(target)
            except CoverageUnreachableError as err:
                to_log(f"Skipping bench target {target}: {err}", level=logging.WARNING)
                self.mark(target, TargetStatus.SKIPPED)
                continue
            except Exception as err:
                to_log(f"An error occurred while running bench target {target}: {err}")
                self.mark(target, TargetStatus.FAILED)
                raise
            self.mark(target, TargetStatus.COMPLETED, row)
        return [self.rows[t] for t in self.targets if t in self.rows]

"""Wall-clock accounting for query execution."""
import threading
import time
from contextlib import contextmanager

SECTIONS = ("plan_ms", "io_ms", "merge_ms", "train_ms")


class TimingLedger:
    """Accumulates milliseconds per section; safe to share between worker threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._totals = {name: 0.0 for name in SECTIONS}
        self._start = time.perf_counter()

    @contextmanager
    def section(self, name):
        if name not in self._totals:
            raise KeyError(f"Unknown timing section {name}")
        t0 = time.perf_counter()
        try:
            yield
        finally:
            elapsed = (time.perf_counter() - t0) * 1000.0
            with self._lock:
                self._totals[name] += elapsed

    def add(self, name, ms):
        with self._lock:
            self._totals[name] += ms

    def elapsed_ms(self):
        return (time.perf_counter() - self._start) * 1000.0

    def as_dict(self):
        with self._lock:
            return dict(self._totals)


class NullLedger(TimingLedger):
    """Ledger for callers that do not care about timings."""

    @contextmanager
    def section(self, name):
        yield

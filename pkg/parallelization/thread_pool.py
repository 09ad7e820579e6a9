"""Module to manage concurrent execution of independent jobs."""
from concurrent.futures import ThreadPoolExecutor

from modules.model_cache_logging import to_log
from modules.error_classes import ParallelExecutionError


class PoolConfig:
    """Model for a pool configuration."""
    def __init__(self, workers, label, **kwargs):
        self.workers = max(1, int(workers))
        self.label = label
        self.thread_name_prefix = kwargs.get("thread_name_prefix", label)

    def is_sequential(self):
        return self.workers == 1


class ThreadPoolWrapper:
    """
    Thread pool manager.
    """

    def __init__(self, config_instance: PoolConfig):
        self.config_instance = config_instance
        self.label = config_instance.label
        self.results = None
        self.failures = []

    def execute(self, jobs):
        """Run zero-argument callables; results keep the order of the job list."""
        jobs = list(jobs)
        self.results = [None] * len(jobs)
        self.failures = []
        if self.config_instance.is_sequential() or len(jobs) <= 1:
            for num, job in enumerate(jobs):
                self._run_one(num, job)
            return self.results
        to_log(f"Parallel manager: pushing {len(jobs)} {self.label} jobs to {self.config_instance.workers} workers")
        with ThreadPoolExecutor(max_workers=self.config_instance.workers,
                                thread_name_prefix=self.config_instance.thread_name_prefix) as pool:
            futures = {pool.submit(job): num for num, job in enumerate(jobs)}
            for future, num in futures.items():
                try:
                    self.results[num] = future.result()
                except Exception as err:
                    self.failures.append((num, err))
        return self.results

    def _run_one(self, num, job):
        try:
            self.results[num] = job()
        except Exception as err:
            self.failures.append((num, err))

    def check_failed(self):
        if not self.failures:
            return
        num, first_err = self.failures[0]
        to_log(f"\n### Error! {len(self.failures)} {self.label} jobs failed, first was job {num}: {first_err}")
        # library errors keep their own type so callers can react to them
        if len(self.failures) == 1 or all(type(e) is type(first_err) for _, e in self.failures):
            raise first_err
        raise ParallelExecutionError(f"Jobs for {self.label} died: {first_err}") from first_err


def execute_parallel_step(jobs, workers, step_label):
    """

    Execute Parallel Step

    Runs independent jobs with the given number of worker threads.
    Facilitates the cooperation between PoolConfig and ThreadPoolWrapper classes.

    Parameters:
    - jobs (iterable of callables): The jobs to execute, each taking no arguments.
    - workers (int): Number of worker threads; 1 runs the jobs in the calling thread.
    - step_label (str): The label for the step, used in log and error messages.

    Returns:
    list: job results in the order of the job list.

    Raises:
    - ParallelExecutionError: If jobs fail with different error types.

    """
    pool_config = PoolConfig(workers, step_label)
    pool_manager = ThreadPoolWrapper(pool_config)
    results = pool_manager.execute(jobs)
    pool_manager.check_failed()
    return results

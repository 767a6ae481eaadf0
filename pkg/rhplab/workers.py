import logging
import os
from contextlib import contextmanager

try:
    from joblib import Parallel, delayed
    JOBLIB_AVAILABLE = True
except ImportError:
    Parallel = None
    delayed = None
    JOBLIB_AVAILABLE = False

logger = logging.getLogger("rhplab.workers")

_n_jobs_override = None


def configured_n_jobs():
    if _n_jobs_override is not None:
        return _n_jobs_override
    try:
        from django.conf import settings
        if settings.configured:
            return int(getattr(settings, "RHPLAB_N_JOBS", 1))
    except Exception:
        pass
    return 1


@contextmanager
def using_n_jobs(n_jobs):
    """Run the enclosed checks with ``n_jobs`` workers regardless of settings."""
    global _n_jobs_override
    previous, _n_jobs_override = _n_jobs_override, n_jobs
    try:
        yield
    finally:
        _n_jobs_override = previous


def parallel_map(fn, items, n_jobs=None):
    """Ordered map of ``fn`` over ``items``, fanned out through joblib when asked to."""
    items = list(items)
    if n_jobs is None:
        n_jobs = configured_n_jobs()
    if n_jobs == 1 or len(items) < 2 or not JOBLIB_AVAILABLE:
        if n_jobs != 1 and not JOBLIB_AVAILABLE:
            logger.warning("joblib is not installed; running %d tasks sequentially", len(items))
        return [fn(item) for item in items]
    logger.info("dispatching %d tasks to joblib (n_jobs=%s)", len(items), n_jobs)
    return Parallel(n_jobs=n_jobs)(delayed(fn)(item) for item in items)


def parallel_first(fn, items, failed, n_jobs=None):
    """Ordered results of ``fn`` up to and including the first one for which ``failed`` is true.

    Items are mapped in batches of a few tasks per worker, so a failure stops
    the scan after the batch it was found in.
    """
    items = list(items)
    if n_jobs is None:
        n_jobs = configured_n_jobs()
    workers = n_jobs if n_jobs > 0 else (os.cpu_count() or 1)
    size = 1 if n_jobs == 1 else workers * 4
    results = []
    for start in range(0, len(items), size):
        for result in parallel_map(fn, items[start:start + size], n_jobs):
            results.append(result)
            if failed(result):
                return results
    return results

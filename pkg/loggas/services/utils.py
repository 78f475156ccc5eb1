import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, Tuple

import numpy as np


def richardson(coarse, fine, order: int = 1):
    """Extrapolate two levels with step ratio 2 and error O(h^order)"""
    factor = 2.0 ** order
    return (factor * np.asarray(fine) - np.asarray(coarse)) / (factor - 1.0)


def jackknife(samples: np.ndarray, estimator: Callable, n_blocks: int = 100) -> Tuple[float, float]:
    """Delete-one-block jackknife of estimator over the leading axis of samples

    Returns the full-sample estimate and its standard error.
    """
    samples = np.asarray(samples)
    count = samples.shape[0]
    n_blocks = min(n_blocks, count)
    if n_blocks < 2:
        raise ValueError("Jackknife needs at least two samples")
    blocks = np.array_split(np.arange(count), n_blocks)
    estimates = []
    for block in blocks:
        keep = np.ones(count, dtype=bool)
        keep[block] = False
        estimates.append(estimator(samples[keep]))
    estimates = np.asarray(estimates)
    spread = np.sum((estimates - estimates.mean()) ** 2) * (n_blocks - 1) / n_blocks
    return float(estimator(samples)), float(np.sqrt(spread))


def sample_covariance(pairs: np.ndarray) -> float:
    """Unbiased covariance of the two columns of pairs"""
    return float(np.cov(pairs[:, 0], pairs[:, 1], ddof=1)[0, 1])


def default_workers() -> int:
    return os.cpu_count() or 1


def chunked(indices: Sequence[int], chunks: int) -> List[np.ndarray]:
    chunks = max(1, min(chunks, len(indices)))
    return [c for c in np.array_split(np.asarray(indices), chunks) if len(c)]


def map_chunks(worker: Callable, jobs: List, workers: int) -> List:
    """worker over jobs, in a process pool when more than one worker is asked for"""
    if workers <= 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))

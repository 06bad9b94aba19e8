"""Replica-level parallelism with deterministic stream derivation"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, TypeVar

import numpy as np

from .logger import logger
from .settings import resolve_workers

T = TypeVar("T")


@dataclass(frozen=True)
class ReplicaStreams:
    """Independent random streams owned by one replica"""
    init: np.random.Generator
    noise: np.random.Generator
    batch: np.random.Generator


def replica_streams(seed: int, replica: int = 0) -> ReplicaStreams:
    """
    Derive the three streams of a replica from (master seed, replica index).

    Rule: SeedSequence(seed, spawn_key=(replica,)).spawn(3) gives the initial
    sample, Brownian increment and batch partition streams, in that order,
    each driving a PCG64 generator.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    root = np.random.SeedSequence(seed, spawn_key=(replica,))
    init_seq, noise_seq, batch_seq = root.spawn(3)
    return ReplicaStreams(
        init=np.random.default_rng(init_seq),
        noise=np.random.default_rng(noise_seq),
        batch=np.random.default_rng(batch_seq),
    )


def map_replicas(task: Callable[[int], T], replicas: int, workers: Optional[int] = None) -> List[T]:
    """
    Run task(replica_index) for every replica and return results in index order.

    Args:
        task: Callable receiving the replica index; must own all of its state
        replicas: Number of replicas
        workers: Thread count (defaults to RBM_WORKERS / CPU count)

    Returns:
        Results ordered by replica index
    """
    if replicas < 1:
        raise ValueError(f"replica count must be positive, got {replicas}")
    worker_count = min(resolve_workers(workers), replicas)
    if worker_count == 1:
        return [task(index) for index in range(replicas)]
    logger.get_logger().debug(f"Running {replicas} replicas on {worker_count} workers")
    with ThreadPoolExecutor(max_workers=worker_count) as executor:
        return list(executor.map(task, range(replicas)))

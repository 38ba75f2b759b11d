"""
Replication worker pool and random streams.

Replications are processed in fixed-size chunks. Chunk k always draws from
the same counter-based stream, whatever the number of workers, and chunk
results are returned in chunk order, so every reduction over them is
bit-stable.
"""

import logging
from functools import lru_cache
from typing import Any, Callable

import numpy as np
from PySide6.QtCore import QObject, QRunnable, QThreadPool, Qt, Signal, Slot

from grainlab.errors import ArgumentError, GrainLabError, SimulationError

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 4096

# Counter word selecting the stream family; one block of 2**64 per stream index.
REPLICATION_STREAMS = 0
POINT_STREAMS = 1

ChunkTask = Callable[[np.random.Generator, int, int], Any]


@lru_cache(maxsize=256)
def _key_words(seed: int) -> tuple[int, int]:
    words = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(words[0]), int(words[1])


def stream_key(seed: int) -> np.ndarray:
    """128-bit Philox key derived from a master seed."""
    if int(seed) != seed or seed < 0:
        raise ArgumentError(f"seed must be a nonnegative integer, got {seed}")
    return np.array(_key_words(int(seed)), dtype=np.uint64)


def stream_generator(seed: int, index: int, family: int = REPLICATION_STREAMS) -> np.random.Generator:
    """Independent generator for (seed, stream index) using a Philox counter offset."""
    counter = np.array([0, index, family, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=stream_key(seed), counter=counter))


def derive_seed(seed: int, *path: int) -> int:
    """Child master seed for a sub-study identified by an integer path."""
    return int(np.random.SeedSequence([int(seed), *path]).generate_state(1, dtype=np.uint64)[0])


def chunk_layout(total: int, chunk_size: int) -> list[tuple[int, int, int]]:
    """(chunk index, first replication, count) for `total` replications."""
    if total < 1:
        raise ArgumentError(f"replication count must be positive, got {total}")
    if chunk_size < 1:
        raise ArgumentError(f"chunk_size must be positive, got {chunk_size}")
    return [
        (k, start, min(chunk_size, total - start))
        for k, start in enumerate(range(0, total, chunk_size))
    ]


class WorkerSignals(QObject):
    """Signals emitted by a chunk worker."""
    finished = Signal(int, object)  # chunk index, result
    error = Signal(int, object)     # chunk index, exception


class ChunkWorker(QRunnable):
    """Runs one replication chunk on its own random stream."""

    def __init__(self, task: ChunkTask, seed: int, chunk_index: int, start: int, count: int):
        super().__init__()
        self.signals = WorkerSignals()
        self.task = task
        self.seed = seed
        self.chunk_index = chunk_index
        self.start = start
        self.count = count

    @Slot()
    def run(self):
        try:
            rng = stream_generator(self.seed, self.chunk_index)
            result = self.task(rng, self.start, self.count)
            self.signals.finished.emit(self.chunk_index, result)
        except Exception as e:
            logger.exception("ChunkWorker: chunk %d failed", self.chunk_index)
            self.signals.error.emit(self.chunk_index, e)


class ReplicationPool:
    """
    Runs replication chunks on a QThreadPool and collects results in chunk order.

    The pool runs headless: signals are connected with DirectConnection so
    results are stored from the worker threads without an event loop.
    """

    def __init__(self, workers: int = 1, chunk_size: int = DEFAULT_CHUNK_SIZE):
        if workers < 1:
            raise ArgumentError(f"workers must be at least 1, got {workers}")
        if chunk_size < 1:
            raise ArgumentError(f"chunk_size must be positive, got {chunk_size}")
        self.workers = int(workers)
        self.chunk_size = int(chunk_size)

    def map_chunks(self, task: ChunkTask, total: int, seed: int) -> list:
        """
        Apply `task(rng, start, count)` to every chunk of `total` replications.

        Args:
            task: Function of the chunk generator, first replication index and count
            total: Number of replications
            seed: Master seed

        Returns:
            Chunk results in chunk order
        """
        layout = chunk_layout(total, self.chunk_size)
        if self.workers == 1 or len(layout) == 1:
            results = []
            for k, start, count in layout:
                try:
                    results.append(task(stream_generator(seed, k), start, count))
                except Exception as e:
                    raise _as_simulation_error(k, e)
            return results

        results: list = [None] * len(layout)
        errors: dict[int, Exception] = {}

        def store(index, result):
            results[index] = result

        def fail(index, exc):
            errors[index] = exc

        pool = QThreadPool()
        pool.setMaxThreadCount(self.workers)
        workers = []
        for k, start, count in layout:
            worker = ChunkWorker(task, seed, k, start, count)
            worker.setAutoDelete(False)
            worker.signals.finished.connect(store, type=Qt.ConnectionType.DirectConnection)
            worker.signals.error.connect(fail, type=Qt.ConnectionType.DirectConnection)
            workers.append(worker)
            pool.start(worker)
        logger.debug("ReplicationPool: dispatched %d chunks to %d workers", len(layout), self.workers)
        pool.waitForDone()

        if errors:
            first = min(errors)
            raise _as_simulation_error(first, errors[first])
        return results


def _as_simulation_error(chunk_index: int, exc: Exception) -> Exception:
    """Library errors pass through unchanged; anything else becomes a SimulationError."""
    if isinstance(exc, GrainLabError):
        return exc
    error = SimulationError(f"Replication chunk {chunk_index} failed: {type(exc).__name__}: {exc}")
    error.__cause__ = exc
    return error

"""Counter-based random streams and chunked, scheduling-independent reductions.

Every Monte Carlo estimator in the package draws its samples in fixed-size
chunks; chunk ``k`` of a stream keyed ``(seed, *key)`` uses its own Philox
generator keyed ``(seed, *key, k)``.  The result of a reduction therefore
depends only on the seed, the key and the sample count, never on how many
workers were used.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

CHUNK = 1 << 17

T = TypeVar("T")


def _as_word(k) -> int:
    if isinstance(k, str):
        # stable across processes, unlike hash()
        return int.from_bytes(k.encode()[:8].ljust(8, b"\0"), "little")
    return int(k) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple = ()

    def child(self, *k) -> "Stream":
        return Stream(self.seed, self.key + tuple(_as_word(x) for x in k))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(_as_word(k) for k in self.key))
        return np.random.Generator(np.random.Philox(ss))


def default_seed() -> int:
    return int(os.environ.get("HEATLAB_SEED", "0"))


def as_stream(stream) -> Stream:
    if isinstance(stream, Stream):
        return stream
    if stream is None:
        return Stream(default_seed())
    return Stream(int(stream))


def chunk_sizes(n: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


_workers = 1


def set_workers(n: int) -> None:
    """Cap the number of worker threads used by chunked reductions."""
    global _workers
    _workers = max(1, int(n))


def map_chunks(fn: Callable[[Stream, int], T], stream: Stream, n: int,
               chunk: int = CHUNK, workers: int | None = None) -> list[T]:
    """Apply ``fn(stream.child(k), size_k)`` to every chunk, results in chunk order."""
    sizes = chunk_sizes(n, chunk)
    jobs = [(stream.child(k), size) for k, size in enumerate(sizes)]
    workers = _workers if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(s, size) for s, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def ordered_sum(values: Sequence[float]) -> float:
    return float(np.sum(np.asarray(values, dtype=float)))

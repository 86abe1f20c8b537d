"""Split a training set into disjoint, non-empty client shards."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DataError

SIZE_CONCENTRATION = 10.0


@dataclass(frozen=True)
class ClientShard:
    client_id: int
    indices: np.ndarray

    def __len__(self) -> int:
        return self.indices.size


def _apportion(total: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of ``total * weights`` (weights sum to 1)."""
    raw = total * weights
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    if short > 0:
        # stable sort keeps ties in client order
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def partition_uneven(train: Dataset, k: int, seed: int = 0, min_size: int = 1) -> list[ClientShard]:
    """IID shards with mildly uneven sizes.

    Sizes are ``min_size`` plus a Dirichlet(10)-proportional share of the
    remaining samples; sample assignment follows one seeded shuffle.
    ``min_size`` is lowered when ``k * min_size`` exceeds the sample count.
    """
    n = len(train)
    if k < 1:
        raise ValueError("client count must be >= 1")
    if k > n:
        raise DataError(f"cannot split {n} samples across {k} clients")
    rng = np.random.default_rng(seed)
    floor = max(1, min(min_size, n // k))
    weights = rng.dirichlet(np.full(k, SIZE_CONCENTRATION))
    sizes = floor + _apportion(n - floor * k, weights)
    order = rng.permutation(n)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    return [ClientShard(i, np.sort(order[bounds[i]:bounds[i + 1]])) for i in range(k)]


def partition_dirichlet(train: Dataset, k: int, alpha: float = 0.5, seed: int = 0) -> list[ClientShard]:
    """Label-skew shards: each class is spread over clients by Dirichlet(alpha) proportions.

    A client left empty takes one sample from the currently largest shard.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if k < 1:
        raise ValueError("client count must be >= 1")
    if k > len(train):
        raise DataError(f"cannot split {len(train)} samples across {k} clients")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    for c in range(train.class_count):
        members = rng.permutation(np.flatnonzero(train.labels == c))
        if members.size == 0:
            continue
        counts = _apportion(members.size, rng.dirichlet(np.full(k, alpha)))
        start = 0
        for client, cnt in enumerate(counts):
            buckets[client].extend(members[start:start + cnt].tolist())
            start += cnt
    for client in range(k):
        if not buckets[client]:
            donor = max(range(k), key=lambda j: (len(buckets[j]), -j))
            buckets[client].append(buckets[donor].pop())
    return [ClientShard(i, np.sort(np.array(b, dtype=np.int64))) for i, b in enumerate(buckets)]


def check_partition(shards: list[ClientShard], n: int) -> None:
    """Raise unless shards are non-empty, pairwise disjoint and cover ``range(n)``."""
    if any(len(s) == 0 for s in shards):
        raise DataError("empty client shard")
    joined = np.concatenate([s.indices for s in shards])
    if joined.size != n or not np.array_equal(np.sort(joined), np.arange(n)):
        raise DataError("client shards are not a disjoint cover of the training set")

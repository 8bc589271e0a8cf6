"""Client data partitioning and participant sampling.

Splits a dataset across simulated clients with quantity skew (Dirichlet
proportions), label skew (per-class Dirichlet allocation), attribute skew
(per-client affine feature shifts), or a k-means cluster split for sparse
tf-idf corpora. Every split is an exact partition of the input samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.cluster import KMeans

QUANTITY_SKEW = "quantity_skew"
LABEL_SKEW = "label_skew"
CLUSTER_SPLIT = "cluster_split"
IID = "iid"

_MAX_REDRAWS = 100


@dataclass
class ClientShard:
    """One client's local dataset plus the originating sample indices."""

    client_id: int
    rows: object  # dense ndarray or scipy sparse matrix
    labels: np.ndarray
    indices: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.rows.shape[0] < 1:
            raise ValueError(f"client {self.client_id}: empty shard")
        if self.rows.shape[0] != len(self.labels):
            raise ValueError(f"client {self.client_id}: row/label count mismatch")
        if self.indices is None:
            self.indices = np.arange(self.rows.shape[0])

    @property
    def n_c(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class HeterogeneityConfig:
    mode: str = IID
    alpha_iid: float = 1000.0
    sigma_ms: float = 0.0
    participation: float = 1.0

    def __post_init__(self):
        if self.mode not in (QUANTITY_SKEW, LABEL_SKEW, CLUSTER_SPLIT, IID):
            raise ValueError(f"unknown partition mode {self.mode!r}")
        if self.alpha_iid <= 0.0:
            raise ValueError("alpha_iid must be positive")
        if self.sigma_ms < 0.0:
            raise ValueError("sigma_ms must be non-negative")
        if not 0.0 < self.participation <= 1.0:
            raise ValueError("participation must lie in (0, 1]")


def _shards_from_index_lists(X, y, index_lists) -> list[ClientShard]:
    shards = []
    for cid, idx in enumerate(index_lists):
        idx = np.asarray(idx, dtype=np.int64)
        shards.append(ClientShard(cid, X[idx], np.asarray(y)[idx], indices=idx))
    return shards


def iid_split(X, y, C: int, rng: np.random.Generator) -> list[ClientShard]:
    """Uniform shuffle-and-deal split into C near-equal shards."""
    N = X.shape[0]
    if N < C:
        raise ValueError(f"dataset of {N} samples cannot cover {C} clients")
    perm = rng.permutation(N)
    return _shards_from_index_lists(X, y, np.array_split(perm, C))


def dirichlet_quantity_split(X, y, C: int, alpha_iid: float, rng: np.random.Generator) -> list[ClientShard]:
    """Allocate samples to clients by Dirichlet(alpha) proportions.

    Redraws the proportions if any client would end up empty; when the
    concentration is so small that empty draws are near-certain, the last
    draw is repaired by donating samples from the largest shards instead.
    """
    N = X.shape[0]
    if C < 1:
        raise ValueError("need at least one client")
    if N < C:
        raise ValueError(f"dataset of {N} samples cannot cover {C} clients")
    for _ in range(_MAX_REDRAWS):
        props = rng.dirichlet(np.full(C, alpha_iid))
        bounds = np.floor(np.cumsum(props) * N).astype(np.int64)
        bounds[-1] = N
        counts = np.diff(np.concatenate(([0], bounds)))
        if counts.min() >= 1:
            break
    else:
        while counts.min() < 1:
            counts[int(np.argmin(counts))] += 1
            counts[int(np.argmax(counts))] -= 1
    perm = rng.permutation(N)
    return _shards_from_index_lists(X, y, np.split(perm, np.cumsum(counts)[:-1]))


def dirichlet_label_split(X, y, C: int, alpha_iid: float, rng: np.random.Generator) -> list[ClientShard]:
    """Allocate each class to clients by its own Dirichlet(alpha) draw.

    Clients may see zero samples of some class, but never end up with an
    empty shard overall (samples are reassigned from the largest shard if
    needed).
    """
    y = np.asarray(y)
    N = X.shape[0]
    if N < C:
        raise ValueError(f"dataset of {N} samples cannot cover {C} clients")
    classes = np.unique(y)
    buckets: list[list[np.ndarray]] = [[] for _ in range(C)]
    for cls in classes:
        cls_idx = rng.permutation(np.flatnonzero(y == cls))
        props = rng.dirichlet(np.full(C, alpha_iid))
        bounds = np.floor(np.cumsum(props) * len(cls_idx)).astype(np.int64)
        bounds[-1] = len(cls_idx)
        counts = np.diff(np.concatenate(([0], bounds)))
        start = 0
        for c in range(C):
            buckets[c].append(cls_idx[start : start + counts[c]])
            start += counts[c]
    lists = [np.concatenate(b) if b else np.array([], dtype=np.int64) for b in buckets]
    # repair empty shards by taking one sample from the currently largest
    for c in range(C):
        while len(lists[c]) == 0:
            donor = int(np.argmax([len(l) for l in lists]))
            lists[c] = lists[donor][-1:]
            lists[donor] = lists[donor][:-1]
    lists = [np.sort(l) for l in lists]
    return _shards_from_index_lists(X, y, lists)


def affine_shift(shards: list[ClientShard], sigma_ms: float, rng: np.random.Generator) -> list[ClientShard]:
    """Attribute skew: per client draw mu_c ~ N(0, sigma_ms^2), then add
    N(mu_c, 1) noise to every feature value. Sparse shards are left alone."""
    out = []
    for shard in shards:
        if sp.issparse(shard.rows):
            warnings.warn("affine_shift skipped for sparse features", stacklevel=2)
            out.append(shard)
            continue
        mu_c = rng.normal(0.0, sigma_ms)
        noise = rng.normal(mu_c, 1.0, size=shard.rows.shape)
        out.append(ClientShard(shard.client_id, shard.rows + noise, shard.labels, shard.indices))
    return out


def cluster_split_rcv1(
    X,
    y,
    rng: np.random.Generator,
    k: int = 10,
    parts: int = 20,
    C: int = 100,
) -> list[ClientShard]:
    """k-means split for sparse corpora: k clusters, each cut into `parts`
    even pieces, two distinct (cluster, part) pairs per client.

    Requires k * parts == 2 * C so every pair is consumed exactly once.
    Clusters too small to yield `parts` non-empty pieces are merged into
    the next smallest cluster (with a warning).
    """
    if k * parts != 2 * C:
        raise ValueError(f"k*parts must equal 2*C, got {k}*{parts} != 2*{C}")
    N = X.shape[0]
    # L2-normalize rows so Euclidean k-means approximates cosine clustering
    if sp.issparse(X):
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        norms[norms == 0.0] = 1.0
        Xn = sp.diags(1.0 / norms) @ X.tocsr()
    else:
        norms = np.linalg.norm(X, axis=1)
        norms[norms == 0.0] = 1.0
        Xn = X / norms[:, None]
    km_seed = int(rng.integers(0, 2**31 - 1))
    km = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=100, tol=1e-4, random_state=km_seed)
    assignment = km.fit_predict(Xn)

    clusters = [np.flatnonzero(assignment == c) for c in range(k)]
    clusters.sort(key=len)
    while len(clusters) > 1 and len(clusters[0]) < parts:
        warnings.warn("merging undersized k-means cluster", stacklevel=2)
        smallest = clusters.pop(0)
        clusters[0] = np.concatenate([clusters[0], smallest])
        clusters.sort(key=len)
    if len(clusters[0]) < parts:
        raise ValueError("dataset too small to split clusters into non-empty parts")

    # each merged cluster contributes `parts` pieces; replicate cluster list
    # so the total pair count stays k*parts
    pairs = []
    per_cluster_parts = parts * k // len(clusters)
    extra = parts * k - per_cluster_parts * len(clusters)
    for ci, idx in enumerate(clusters):
        n_parts = per_cluster_parts + (1 if ci < extra else 0)
        shuffled = rng.permutation(idx)
        for piece in np.array_split(shuffled, n_parts):
            pairs.append((ci, piece))

    order = rng.permutation(len(pairs))
    shards = []
    yarr = np.asarray(y) if not sp.issparse(y) else y
    for cid in range(C):
        a, b = pairs[order[2 * cid]], pairs[order[2 * cid + 1]]
        idx = np.sort(np.concatenate([a[1], b[1]]))
        labels = yarr[idx] if not sp.issparse(yarr) else yarr[idx]
        shards.append(ClientShard(cid, X[idx], np.asarray(labels), indices=idx))
    return shards


def sample_participants(C: int, gamma_c: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform without-replacement draw of K = floor(gamma_c * C) client ids."""
    K = int(np.floor(gamma_c * C))
    if K < 1:
        raise ValueError(f"gamma_c={gamma_c} with C={C} selects zero participants")
    return np.sort(rng.choice(C, size=K, replace=False))


def split_dataset(X, y, C: int, het: HeterogeneityConfig, rng: np.random.Generator) -> list[ClientShard]:
    """Dispatch on the configured heterogeneity mode, then apply any affine shift."""
    if het.mode == IID:
        shards = iid_split(X, y, C, rng)
    elif het.mode == QUANTITY_SKEW:
        shards = dirichlet_quantity_split(X, y, C, het.alpha_iid, rng)
    elif het.mode == LABEL_SKEW:
        shards = dirichlet_label_split(X, y, C, het.alpha_iid, rng)
    else:
        shards = cluster_split_rcv1(X, y, rng, C=C)
    if het.sigma_ms > 0.0:
        shards = affine_shift(shards, het.sigma_ms, rng)
    return shards

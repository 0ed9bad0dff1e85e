"""Embedding-space k-means and graph modularity, plus cluster-count
selection by maximizing modularity of the induced node partition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, GraphError

__all__ = [
    "ClusterAssignment",
    "kmeans",
    "modularity",
    "select_k_by_modularity",
]


@dataclass
class ClusterAssignment:
    k: int
    labels: np.ndarray
    inertia: float
    modularity: float = float("nan")
    inertia_history: list[float] = field(default_factory=list)


def _kmeanspp_centers(points: np.ndarray, k: int,
                      rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(0, n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:  # all remaining points coincide with a center
            centers[j:] = points[rng.integers(0, n, size=k - j)]
            break
        probs = d2 / total
        idx = np.searchsorted(np.cumsum(probs), rng.random(), side="right")
        centers[j] = points[min(idx, n - 1)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 300,
           rel_tol: float = 1e-6) -> ClusterAssignment:
    """Lloyd's algorithm with k-means++ seeding on Euclidean distance.

    Stops after ``max_iter`` rounds or when the relative inertia change
    drops below ``rel_tol``. Inertia never increases between rounds.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if not 1 <= k <= n:
        raise GraphError(f"k must be in 1..{n}")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_centers(points, k, rng)
    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    sq = (points ** 2).sum(axis=1)
    for _ in range(max_iter):
        d2 = sq[:, None] - 2.0 * (points @ centers.T) + (centers ** 2).sum(axis=1)
        labels = d2.argmin(axis=1)
        inertia = float(np.maximum(d2[np.arange(n), labels], 0.0).sum())
        history.append(inertia)
        for j in range(k):
            members = points[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:  # re-seed an empty cluster at the worst-fit point
                centers[j] = points[d2[np.arange(n), labels].argmax()]
        if len(history) >= 2:
            prev, cur = history[-2], history[-1]
            if prev - cur <= rel_tol * max(prev, 1e-300):
                break
    d2 = sq[:, None] - 2.0 * (points @ centers.T) + (centers ** 2).sum(axis=1)
    labels = d2.argmin(axis=1)
    inertia = float(np.maximum(d2[np.arange(n), labels], 0.0).sum())
    history.append(inertia)
    return ClusterAssignment(k, labels, inertia, inertia_history=history)


def modularity(g: Graph, labels: np.ndarray) -> float:
    """Newman-Girvan modularity of a node partition.

    Q = sum_c [ e_c/|E| - (deg_c / 2|E|)^2 ] with e_c the intra-cluster
    edge count and deg_c the summed degree of cluster c.
    """
    labels = np.asarray(labels)
    if len(labels) != g.num_nodes:
        raise GraphError("labels must cover all nodes")
    if g.num_edges == 0:
        return 0.0
    edges = g.edge_array()
    same = labels[edges[:, 0]] == labels[edges[:, 1]]
    _, inv = np.unique(labels, return_inverse=True)
    ncl = inv.max() + 1
    intra = np.bincount(inv[edges[:, 0]][same], minlength=ncl).astype(np.float64)
    deg_sum = np.bincount(inv, weights=g.degrees.astype(np.float64),
                          minlength=ncl)
    m = float(g.num_edges)
    return float((intra / m - (deg_sum / (2.0 * m)) ** 2).sum())


def select_k_by_modularity(g: Graph, embeddings: np.ndarray, k_range,
                           seed: int):
    """Cluster the embeddings for each k and pick the k whose partition
    has the highest graph modularity. Returns (best_k, table) where table
    rows are (k, modularity, inertia)."""
    k_range = list(k_range)
    if not k_range:
        raise GraphError("k_range is empty")
    table = []
    assignments = {}
    for k in k_range:
        a = kmeans(embeddings, k, seed)
        a.modularity = modularity(g, a.labels)
        table.append((k, a.modularity, a.inertia))
        assignments[k] = a
    best_k = max(table, key=lambda row: row[1])[0]
    return best_k, table, assignments

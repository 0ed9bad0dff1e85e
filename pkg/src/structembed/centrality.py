"""Classic node centralities and the embedding self-similarity analysis.

The self-similarity score of a node is the summed dot product between its
embedding and each neighbor's embedding; a node structurally central to
its surroundings scores high. Correlating those scores against PageRank,
betweenness, harmonic closeness and degree (Spearman rank correlation)
quantifies which global graph notions the embedding space captures.
"""

from __future__ import annotations

from collections import deque

import numpy as np
import scipy.sparse as sp
from scipy import stats

from .graph import Graph

__all__ = [
    "pagerank",
    "betweenness",
    "harmonic_closeness",
    "self_similarity_scores",
    "centrality_correlations",
]


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 200) -> np.ndarray:
    """Power iteration; dangling (isolated) nodes redistribute uniformly."""
    n = g.num_nodes
    deg = g.degrees.astype(np.float64)
    src = np.repeat(np.arange(n), g.degrees)
    inv = np.zeros(n)
    nz = deg > 0
    inv[nz] = 1.0 / deg[nz]
    P = sp.csr_matrix((inv[src], (g.targets, src)), shape=(n, n))
    r = np.full(n, 1.0 / n)
    dangling = ~nz
    for _ in range(max_iter):
        r_new = damping * (P @ r) + damping * r[dangling].sum() / n \
            + (1.0 - damping) / n
        if np.abs(r_new - r).sum() < tol:
            return r_new
        r = r_new
    return r


def betweenness(g: Graph, normalized: bool = True) -> np.ndarray:
    """Exact shortest-path betweenness (Brandes' accumulation)."""
    n = g.num_nodes
    bc = np.zeros(n)
    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        dist[s] = 0
        sigma[s] = 1.0
        order = []
        q = deque([s])
        preds: list[list[int]] = [[] for _ in range(n)]
        while q:
            v = q.popleft()
            order.append(v)
            for w in g.neighbors(v):
                w = int(w)
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    bc /= 2.0  # undirected: each pair counted twice
    if normalized and n > 2:
        bc /= (n - 1) * (n - 2) / 2.0
    return bc


def harmonic_closeness(g: Graph) -> np.ndarray:
    """Sum over reachable others of 1/distance (well-defined on
    disconnected graphs)."""
    n = g.num_nodes
    out = np.zeros(n)
    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        dist[s] = 0
        q = deque([s])
        acc = 0.0
        while q:
            v = q.popleft()
            if v != s:
                acc += 1.0 / dist[v]
            for w in g.neighbors(v):
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(int(w))
        out[s] = acc
    return out


def self_similarity_scores(g: Graph, embeddings: np.ndarray) -> np.ndarray:
    """s_n = sum over neighbors m of e_n . e_m."""
    n = g.num_nodes
    src = np.repeat(np.arange(n), g.degrees)
    A = sp.csr_matrix((np.ones(len(src)), (src, g.targets)), shape=(n, n))
    neighbor_sum = A @ embeddings
    return np.einsum("ij,ij->i", embeddings, neighbor_sum)


def centrality_correlations(g: Graph, embeddings: np.ndarray) -> dict[str, float]:
    """Spearman rho between self-similarity scores and each centrality."""
    scores = self_similarity_scores(g, embeddings)
    metrics = {
        "pagerank": pagerank(g),
        "betweenness": betweenness(g),
        "closeness": harmonic_closeness(g),
        "degree": g.degrees.astype(np.float64),
    }
    return {name: float(stats.spearmanr(scores, vals).statistic)
            for name, vals in metrics.items()}

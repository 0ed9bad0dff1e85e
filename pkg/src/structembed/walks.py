"""Uniform random walks, (target, context) pair extraction, and the
negative-sample noise distribution.

Corpus generation advances all walks in lockstep with a single seeded
stream of uniforms, so the result is a deterministic function of the seed
alone (no dependence on scheduling or thread count).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, GraphError

__all__ = [
    "WalkConfig",
    "WalkCorpus",
    "NoiseDistribution",
    "random_walk",
    "generate_corpus",
    "context_pairs",
    "pair_count",
    "build_noise",
    "save_corpus",
]


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int
    walk_length: int
    seed: int

    def __post_init__(self):
        if self.walks_per_node < 1 or self.walk_length < 1:
            raise GraphError("walks_per_node and walk_length must be >= 1")


def random_walk(g: Graph, start: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Walk of ``length`` nodes from ``start``, each step uniform over the
    current node's neighbors. An isolated start yields just [start]."""
    if not 0 <= start < g.num_nodes:
        raise GraphError(f"start node {start} out of range")
    walk = np.empty(length, dtype=np.int32)
    walk[0] = start
    cur = start
    for t in range(1, length):
        nbrs = g.neighbors(cur)
        if nbrs.size == 0:
            return walk[:t].copy()
        cur = int(nbrs[rng.integers(0, nbrs.size)])
        walk[t] = cur
    return walk


@dataclass
class WalkCorpus:
    """walks_per_node * |V| walks in one (num_walks, walk_length) array.

    Walk k starts at node k % |V| (replica k // |V|). ``lengths[k]`` is 1
    for isolated starts and walk_length otherwise; columns past the length
    hold repeats of the stranded node and must be ignored.
    """

    walks: np.ndarray    # int32 (num_walks, walk_length)
    lengths: np.ndarray  # int32 (num_walks,)

    @property
    def num_walks(self) -> int:
        return self.walks.shape[0]

    def walk(self, k: int) -> np.ndarray:
        return self.walks[k, : self.lengths[k]]

    def __iter__(self):
        for k in range(self.num_walks):
            yield self.walk(k)


def generate_corpus(g: Graph, cfg: WalkConfig) -> WalkCorpus:
    """walks_per_node uniform walks from every node, lockstep-vectorized."""
    n, w, s = g.num_nodes, cfg.walks_per_node, cfg.walk_length
    rng = np.random.default_rng(cfg.seed)
    starts = np.tile(np.arange(n, dtype=np.int32), w)
    walks = np.empty((w * n, s), dtype=np.int32)
    walks[:, 0] = starts
    degrees = g.degrees.astype(np.int64)
    offsets = g.offsets
    cur = starts.astype(np.int64)
    stuck = degrees[cur] == 0
    for t in range(1, s):
        u = rng.random(cur.size)
        deg = degrees[cur]
        step = np.floor(u * np.maximum(deg, 1)).astype(np.int64)
        nxt = g.targets[offsets[cur] + step]
        nxt = np.where(stuck, cur, nxt)  # isolated starts stay put
        walks[:, t] = nxt
        cur = nxt.astype(np.int64)
    lengths = np.where(stuck, 1, s).astype(np.int32)
    return WalkCorpus(walks, lengths)


def context_pairs(walk: np.ndarray, window: int) -> np.ndarray:
    """All (target, context) pairs within ``window`` positions, repetitions
    kept, clipped at the walk ends. Shape (k, 2)."""
    if window < 1:
        raise GraphError("window must be >= 1")
    L = len(walk)
    out = []
    for t in range(L):
        for o in range(max(0, t - window), min(L, t + window + 1)):
            if o != t:
                out.append((walk[t], walk[o]))
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def pair_count(length: int, window: int) -> int:
    """Closed-form number of pairs context_pairs emits."""
    if length <= 1:
        return 0
    p = min(window, length - 1)
    return 2 * p * length - p * (p + 1)


class NoiseDistribution:
    """Distribution over nodes for negative samples.

    ``uniform`` gives every node probability 1/|V|; ``frequency`` weights
    nodes by (visit count)^0.75.
    """

    def __init__(self, probs: np.ndarray, kind: str):
        total = probs.sum()
        if not np.isfinite(total) or total <= 0:
            raise GraphError("noise distribution must have positive mass")
        self.kind = kind
        self.probs = probs / total
        self.cumulative = np.cumsum(self.probs)
        self.cumulative[-1] = 1.0
        self._uniform = kind == "uniform"
        self._n = len(probs)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self._uniform:
            return rng.integers(0, self._n, size=size, dtype=np.int64)
        return np.searchsorted(self.cumulative, rng.random(size), side="right")


def build_noise(g: Graph, kind: str = "uniform",
                corpus: WalkCorpus | None = None,
                counts: np.ndarray | None = None,
                exponent: float = 0.75) -> NoiseDistribution:
    if kind == "uniform":
        return NoiseDistribution(np.full(g.num_nodes, 1.0 / g.num_nodes), kind)
    if kind == "frequency":
        if counts is None:
            if corpus is None:
                raise GraphError("frequency noise needs a corpus or counts")
            counts = np.zeros(g.num_nodes)
            for walk in corpus:
                np.add.at(counts, walk, 1.0)
        return NoiseDistribution(np.power(np.asarray(counts, dtype=np.float64),
                                          exponent), kind)
    raise GraphError(f"unknown noise kind: {kind}")


def save_corpus(corpus: WalkCorpus, path) -> None:
    """One walk per line, space-separated node ids."""
    with open(path, "w", encoding="utf-8") as f:
        for walk in corpus:
            f.write(" ".join(map(str, walk.tolist())) + "\n")

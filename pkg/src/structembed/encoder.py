"""Sparse structural features: distance-degree histograms over node
neighborhoods.

For a node n and radius alpha, count how often each (hop distance c,
induced degree delta) pair occurs among the nodes within distance alpha.
Counts are optionally log2(1+z)-transformed and scaled so the largest
entry is 1. Degrees beyond the configured maximum fold into the top bin,
which is what makes the features usable on unseen graphs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, GraphError, neighborhood_subgraph

__all__ = [
    "EncoderConfig",
    "SparseFeatures",
    "FeatureMatrix",
    "fit_config",
    "encode_node",
    "encode_all",
    "feature_index",
    "index_to_pair",
    "write_features",
    "read_features",
]


@dataclass(frozen=True)
class EncoderConfig:
    """Feature-space geometry shared by training and inference.

    ``delta_max`` is the number of degree bins per distance (normally the
    max degree of the training graph). The flat feature space has
    ``(alpha + 1) * delta_max`` slots: distances run 0..alpha and degree
    bins 1..delta_max, with bin 1 also absorbing the degree-0 root case.
    ``log_degree_bins`` switches to log2-sized degree bins (off by default).
    """

    alpha: int
    delta_max: int
    apply_log: bool = True
    apply_unit_norm: bool = True
    log_degree_bins: bool = False

    def __post_init__(self):
        if self.alpha < 0:
            raise GraphError("alpha must be >= 0")
        if self.delta_max < 1:
            raise GraphError("delta_max must be >= 1")

    @property
    def num_bins(self) -> int:
        if self.log_degree_bins:
            return int(np.log2(self.delta_max)) + 1
        return self.delta_max

    @property
    def dim(self) -> int:
        return (self.alpha + 1) * self.num_bins


@dataclass
class SparseFeatures:
    """One node's sparse vector: strictly increasing indices, values > 0."""

    indices: np.ndarray  # int64, sorted ascending
    values: np.ndarray   # float64
    dim: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def nnz(self) -> int:
        return len(self.indices)


def fit_config(g: Graph, alpha: int, **flags) -> EncoderConfig:
    """Config whose degree bins cover the given training graph.

    Edgeless graphs get a single degree bin.
    """
    return EncoderConfig(alpha=alpha, delta_max=max(1, g.max_degree), **flags)


def _degree_bin(degrees: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
    """Map induced degrees to 0-based bin offsets, clipping at the top.

    Degree 0 (bare root) maps into bin 1 so no node encodes to the zero
    vector.
    """
    d = np.maximum(degrees, 1)
    if cfg.log_degree_bins:
        return np.minimum(np.log2(d).astype(np.int64), cfg.num_bins - 1)
    return np.minimum(d, cfg.delta_max) - 1


def feature_index(c: int, delta: int, cfg: EncoderConfig) -> int:
    """Flat slot of a (distance, degree) pair."""
    if not 0 <= c <= cfg.alpha:
        raise GraphError("distance outside 0..alpha")
    return c * cfg.num_bins + int(_degree_bin(np.asarray([delta]), cfg)[0])


def index_to_pair(flat: int, cfg: EncoderConfig) -> tuple[int, int]:
    """Inverse of feature_index (top bin returns its lower degree bound)."""
    c, b = divmod(flat, cfg.num_bins)
    delta = (1 << b) if cfg.log_degree_bins else b + 1
    return c, delta


def encode_node(g: Graph, n: int, cfg: EncoderConfig) -> SparseFeatures:
    """Distance-degree histogram of the alpha-ball around ``n``."""
    nodes, dists, induced = neighborhood_subgraph(g, n, cfg.alpha)
    flat = dists.astype(np.int64) * cfg.num_bins + _degree_bin(induced, cfg)
    idx, counts = np.unique(flat, return_counts=True)
    vals = counts.astype(np.float64)
    if cfg.apply_log:
        vals = np.log2(1.0 + vals)
    if cfg.apply_unit_norm and vals.size:
        vals = vals / vals.max()
    return SparseFeatures(idx, vals, cfg.dim)


class FeatureMatrix:
    """Per-node sparse features for a whole graph, CSR-backed."""

    def __init__(self, matrix: sp.csr_matrix, cfg: EncoderConfig):
        self.matrix = matrix
        self.cfg = cfg
        self.num_nodes = matrix.shape[0]

    def row(self, i: int) -> SparseFeatures:
        start, end = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return SparseFeatures(
            self.matrix.indices[start:end].astype(np.int64),
            self.matrix.data[start:end].copy(),
            self.cfg.dim,
        )

    def __len__(self) -> int:
        return self.num_nodes


def encode_all(g: Graph, cfg: EncoderConfig, threads: int = 1) -> FeatureMatrix:
    """Encode every node. Rows are independent, so results are identical
    for any thread count."""
    rows: list[SparseFeatures | None] = [None] * g.num_nodes

    def work(i):
        rows[i] = encode_node(g, i, cfg)

    if threads > 1 and g.num_nodes > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(g.num_nodes)))
    else:
        for i in range(g.num_nodes):
            work(i)

    indptr = np.zeros(g.num_nodes + 1, dtype=np.int64)
    np.cumsum([r.nnz() for r in rows], out=indptr[1:])
    indices = np.concatenate([r.indices for r in rows]) if rows else np.empty(0, np.int64)
    data = np.concatenate([r.values for r in rows]) if rows else np.empty(0)
    mat = sp.csr_matrix((data, indices, indptr), shape=(g.num_nodes, cfg.dim))
    return FeatureMatrix(mat, cfg)


def write_features(fm: FeatureMatrix, path) -> None:
    """Text export: ``node_id (c,delta):value ...`` one node per line."""
    cfg = fm.cfg
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# alpha={cfg.alpha} delta_max={cfg.delta_max} dim={cfg.dim} "
                f"log={int(cfg.apply_log)} unit_norm={int(cfg.apply_unit_norm)} "
                f"log_bins={int(cfg.log_degree_bins)}\n")
        for i in range(fm.num_nodes):
            row = fm.row(i)
            parts = [
                f"({flat // cfg.num_bins},{index_to_pair(int(flat), cfg)[1]}):{v:.17g}"
                for flat, v in zip(row.indices, row.values)
            ]
            f.write(str(i) + (" " + " ".join(parts) if parts else "") + "\n")


def read_features(path) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline()
        if not header.startswith("#"):
            raise GraphError(f"{path}: missing feature header")
        kv = dict(tok.split("=") for tok in header[1:].split())
        cfg = EncoderConfig(
            alpha=int(kv["alpha"]),
            delta_max=int(kv["delta_max"]),
            apply_log=bool(int(kv["log"])),
            apply_unit_norm=bool(int(kv["unit_norm"])),
            log_degree_bins=bool(int(kv.get("log_bins", "0"))),
        )
        all_idx, all_val, indptr = [], [], [0]
        for line in f:
            parts = line.split()
            if not parts:
                continue
            entries = parts[1:]
            idx = np.empty(len(entries), dtype=np.int64)
            val = np.empty(len(entries))
            for j, ent in enumerate(entries):
                pair, v = ent.rsplit(":", 1)
                c, delta = pair.strip("()").split(",")
                idx[j] = feature_index(int(c), int(delta), cfg)
                val[j] = float(v)
            all_idx.append(idx)
            all_val.append(val)
            indptr.append(indptr[-1] + len(entries))
        indices = np.concatenate(all_idx) if all_idx else np.empty(0, np.int64)
        data = np.concatenate(all_val) if all_val else np.empty(0)
        mat = sp.csr_matrix((data, indices, np.asarray(indptr, np.int64)),
                            shape=(len(indptr) - 1, cfg.dim))
        return FeatureMatrix(mat, cfg)

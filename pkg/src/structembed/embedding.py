"""The learnable feature-to-embedding matrix and its forward/backward maps.

A node embedding is the sparse-weighted sum of matrix rows selected by its
structural features: e = x^T W. Both trainers share this single parameter
object; gradients flow back through the same sparse pattern.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderConfig, FeatureMatrix, SparseFeatures

__all__ = [
    "EmbeddingMatrix",
    "MatrixFormatError",
    "init_matrix",
    "forward",
    "forward_all",
    "accumulate_gradient",
    "save_matrix",
    "load_matrix",
    "write_node_embeddings",
]

_MAGIC = b"SEMBED01"
_VERSION = 1


class MatrixFormatError(ValueError):
    """Corrupt, truncated, or incompatible embedding-matrix file."""


@dataclass
class EmbeddingMatrix:
    """Dense (num_features x dim) parameter matrix with the encoder
    geometry it was trained for."""

    values: np.ndarray  # (rows, cols) float64
    alpha: int
    delta_max: int
    init_seed: int = 0

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def init_matrix(rows: int, cols: int, seed: int, scale: float | None = None,
                alpha: int = 0, delta_max: int = 1) -> EmbeddingMatrix:
    """Uniform(-scale, +scale) init; scale defaults to 0.5/cols."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix must have at least one row and column")
    if scale is None:
        scale = 0.5 / cols
    rng = np.random.default_rng(seed)
    vals = rng.uniform(-scale, scale, size=(rows, cols))
    return EmbeddingMatrix(vals, alpha=alpha, delta_max=delta_max, init_seed=seed)


def forward(x: SparseFeatures, W: EmbeddingMatrix) -> np.ndarray:
    """e = sum over entries value * W[index]; zero vector for empty x."""
    if x.dim != W.rows:
        raise ValueError(f"feature dim {x.dim} != matrix rows {W.rows}")
    if x.nnz() == 0:
        return np.zeros(W.cols)
    return x.values @ W.values[x.indices]


def forward_all(fm: FeatureMatrix, W: EmbeddingMatrix) -> np.ndarray:
    """Embeddings for every row of a feature matrix, (num_nodes x dim)."""
    if fm.cfg.dim != W.rows:
        raise ValueError(f"feature dim {fm.cfg.dim} != matrix rows {W.rows}")
    return fm.matrix @ W.values


def accumulate_gradient(x: SparseFeatures, grad_e: np.ndarray,
                        grad_W: np.ndarray) -> None:
    """grad_W[i] += x_i * grad_e for every nonzero feature i of x."""
    if x.dim != grad_W.shape[0] or len(grad_e) != grad_W.shape[1]:
        raise ValueError("gradient buffer shape mismatch")
    grad_W[x.indices] += x.values[:, None] * grad_e[None, :]


def save_matrix(W: EmbeddingMatrix, path) -> None:
    """Self-describing binary: magic, version, geometry, row-major f64."""
    header = _MAGIC + struct.pack(
        "<5I", _VERSION, W.rows, W.cols, W.alpha, W.delta_max
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(W.values, dtype="<f8").tobytes())


def load_matrix(path, expect: EncoderConfig | None = None) -> EmbeddingMatrix:
    """Load and validate a matrix file; optionally check it matches an
    encoder config (alpha, delta_max, dim)."""
    with open(path, "rb") as f:
        blob = f.read()
    head_len = len(_MAGIC) + 5 * 4
    if len(blob) < head_len or blob[: len(_MAGIC)] != _MAGIC:
        raise MatrixFormatError(f"{path}: not an embedding matrix file")
    version, rows, cols, alpha, delta_max = struct.unpack(
        "<5I", blob[len(_MAGIC):head_len]
    )
    if version != _VERSION:
        raise MatrixFormatError(f"{path}: unsupported version {version}")
    expected_bytes = head_len + rows * cols * 8
    if len(blob) != expected_bytes:
        raise MatrixFormatError(
            f"{path}: corrupt file, expected {expected_bytes} bytes got {len(blob)}"
        )
    vals = np.frombuffer(blob[head_len:], dtype="<f8").reshape(rows, cols).copy()
    W = EmbeddingMatrix(vals, alpha=alpha, delta_max=delta_max)
    if expect is not None:
        if (expect.alpha, expect.delta_max, expect.dim) != (alpha, delta_max, rows):
            raise MatrixFormatError(
                f"{path}: matrix was trained for alpha={alpha} delta_max={delta_max} "
                f"(dim={rows}) but encoder expects alpha={expect.alpha} "
                f"delta_max={expect.delta_max} (dim={expect.dim})"
            )
    return W


def write_node_embeddings(embeddings: np.ndarray, path,
                          node_labels: list[str] | None = None) -> None:
    """Text export: ``node_id v1 ... vd`` per node."""
    with open(path, "w", encoding="utf-8") as f:
        for i, row in enumerate(embeddings):
            name = node_labels[i] if node_labels is not None else str(i)
            f.write(name + " " + " ".join(f"{v:.17g}" for v in row) + "\n")

"""Skip-gram negative-sampling training of the embedding matrix.

For every (target, context) pair drawn from random walks the objective
adds log sigma(e_t . e_o) plus, for z sampled noise nodes, log
sigma(-e_t . e_i); we ascend its gradient through the sparse linear
embedding. The batch engine works on whole index arrays: node embeddings
are refreshed as X @ W per batch, pair gradients are scattered back with
one sparse matrix product, and the parameter gradient is X^T @ grad_E.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .embedding import EmbeddingMatrix, init_matrix
from .encoder import EncoderConfig, FeatureMatrix, encode_all
from .graph import Graph, GraphError
from .walks import WalkConfig, build_noise, generate_corpus

__all__ = [
    "UnsupConfig",
    "TrainReport",
    "TrainingDiverged",
    "pair_loss_and_grad",
    "batch_loss_and_grad",
    "train_unsupervised",
    "embed_nodes",
    "log_sigmoid",
]


class TrainingDiverged(RuntimeError):
    """Objective became non-finite."""


def log_sigmoid(x):
    """log(1/(1+exp(-x))), stable for |x| up to ~1e308."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pair_loss_and_grad(e_t: np.ndarray, e_o: np.ndarray, negatives):
    """Objective value and exact gradients for one positive pair.

    Returns (loss, grad_t, grad_o, [grad_neg_i...]). Loss is the term to
    MAXIMIZE: log sigma(e_t.e_o) + sum_i log sigma(-e_t.e_i).
    """
    e_t = np.asarray(e_t, dtype=np.float64)
    e_o = np.asarray(e_o, dtype=np.float64)
    negatives = [np.asarray(e, dtype=np.float64) for e in negatives]
    if any(not np.isfinite(v).all() for v in (e_t, e_o, *negatives)):
        raise TrainingDiverged("non-finite embedding input")
    dot_pos = float(e_t @ e_o)
    loss = float(log_sigmoid(dot_pos))
    c_pos = float(_sigmoid(np.asarray([-dot_pos]))[0])  # 1 - sigma(dot)
    grad_t = c_pos * e_o
    grad_o = c_pos * e_t
    grad_negs = []
    for e_i in negatives:
        dot = float(e_t @ e_i)
        loss += float(log_sigmoid(-dot))
        c = -float(_sigmoid(np.asarray([dot]))[0])  # d/d dot of log sigma(-dot)
        grad_t += c * e_i
        grad_negs.append(c * e_t)
    return loss, grad_t, grad_o, grad_negs


def batch_loss_and_grad(X: sp.csr_matrix, W: np.ndarray,
                        targets: np.ndarray, contexts: np.ndarray,
                        negatives: np.ndarray):
    """Objective and dW for a frozen batch of pairs, vectorized.

    The gradient of the sum over the batch is assembled as
    X^T @ (S @ (X @ W)) where S holds the per-pair sigmoid coefficients.
    """
    num_nodes = X.shape[0]
    E = X @ W
    et = E[targets]
    dot_pos = np.einsum("ij,ij->i", et, E[contexts])
    c_pos = _sigmoid(-dot_pos)
    loss = log_sigmoid(dot_pos).sum()
    z = negatives.shape[1]
    c_neg = np.empty_like(negatives, dtype=W.dtype)
    for i in range(z):  # chunked to avoid a (B, z, d) intermediate
        dot = np.einsum("ij,ij->i", et, E[negatives[:, i]])
        loss += log_sigmoid(-dot).sum()
        c_neg[:, i] = -_sigmoid(dot)
    rows = np.concatenate([targets, contexts,
                           np.repeat(targets, z), negatives.ravel()])
    cols = np.concatenate([contexts, targets,
                           negatives.ravel(), np.repeat(targets, z)])
    vals = np.concatenate([c_pos, c_pos, c_neg.ravel(), c_neg.ravel()])
    S = sp.coo_matrix((vals, (rows, cols)), shape=(num_nodes, num_nodes)).tocsr()
    grad_E = S @ E
    grad_W = (X.T @ grad_E).astype(W.dtype, copy=False)
    return float(loss), grad_W


@dataclass(frozen=True)
class UnsupConfig:
    """Hyper-parameters of the walk-based objective and its optimizer."""

    negatives: int = 5
    window: int = 10
    learning_rate: float = 0.01
    epochs: int = 5
    batch_size: int = 10_000
    optimizer: str = "adam"                 # "adam" | "sgd"
    seed: int = 0
    parallel_mode: str = "deterministic"    # "deterministic" | "racy"
    threads: int = 1
    noise: str = "uniform"                  # "uniform" | "frequency"
    dtype: str = "float64"                  # engine precision
    walk_block: int = 4096                  # walks per shuffle block

    def __post_init__(self):
        if self.negatives < 1 or self.window < 1:
            raise GraphError("negatives and window must be >= 1")
        if self.learning_rate < 0 or self.epochs < 1 or self.batch_size < 1:
            raise GraphError("bad optimizer settings")
        if self.optimizer not in ("adam", "sgd"):
            raise GraphError(f"unknown optimizer: {self.optimizer}")
        if self.parallel_mode not in ("deterministic", "racy"):
            raise GraphError(f"unknown parallel_mode: {self.parallel_mode}")


@dataclass
class TrainReport:
    epoch_objectives: list[float] = field(default_factory=list)
    phase_seconds: dict[str, float] = field(default_factory=dict)
    final_objective: float = float("nan")
    pairs_per_epoch: int = 0

    def to_dict(self) -> dict:
        return {
            "epoch_objectives": self.epoch_objectives,
            "phase_seconds": self.phase_seconds,
            "final_objective": self.final_objective,
            "pairs_per_epoch": self.pairs_per_epoch,
        }


class _Adam:
    """Ascent-direction Adam on a dense parameter array."""

    def __init__(self, shape, lr, dtype):
        self.lr = lr
        self.m = np.zeros(shape, dtype=dtype)
        self.v = np.zeros(shape, dtype=dtype)
        self.t = 0
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8

    def step(self, W, grad):
        self.t += 1
        self.m += (1.0 - self.beta1) * (grad - self.m)
        self.v += (1.0 - self.beta2) * (grad * grad - self.v)
        mhat = self.m / (1.0 - self.beta1 ** self.t)
        vhat = self.v / (1.0 - self.beta2 ** self.t)
        W += self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, W, grad):
        W += self.lr * grad


def _block_pairs(walks: np.ndarray, lengths: np.ndarray, window: int):
    """Both-direction context pairs for a block of equal-length walks."""
    full = walks[lengths > 1]
    if full.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    s = full.shape[1]
    ts, cs = [], []
    for dt in range(1, min(window, s - 1) + 1):
        a = full[:, :-dt].ravel()
        b = full[:, dt:].ravel()
        ts.append(a)
        cs.append(b)
        ts.append(b)
        cs.append(a)
    return (np.concatenate(ts).astype(np.int64),
            np.concatenate(cs).astype(np.int64))


def train_unsupervised(g: Graph, enc_cfg: EncoderConfig, walk_cfg: WalkConfig,
                       cfg: UnsupConfig, dim: int = 8,
                       W_init: EmbeddingMatrix | None = None,
                       features: FeatureMatrix | None = None):
    """Learn the embedding matrix by gradient ascent on the walk objective.

    Deterministic mode consumes batches in a seed-fixed order with a single
    writer, so the returned matrix is bit-identical across runs and thread
    counts. Racy mode lets a thread pool update the shared matrix without
    locks; per-scalar races are benign but the reported objective is then
    approximate.
    """
    dtype = np.dtype(cfg.dtype)
    t0 = time.perf_counter()
    if features is None:
        features = encode_all(g, enc_cfg, threads=max(1, cfg.threads))
    if features.cfg.dim != enc_cfg.dim:
        raise GraphError("feature matrix does not match encoder config")
    X = features.matrix.astype(dtype)
    t_encode = time.perf_counter() - t0

    t0 = time.perf_counter()
    corpus = generate_corpus(g, walk_cfg)
    noise = build_noise(g, cfg.noise, corpus=corpus)
    t_walk = time.perf_counter() - t0

    root = np.random.SeedSequence(cfg.seed)
    ss_init, ss_train = root.spawn(2)
    if W_init is None:
        W_init = init_matrix(enc_cfg.dim, dim, seed=ss_init.generate_state(1)[0],
                             alpha=enc_cfg.alpha, delta_max=enc_cfg.delta_max)
    W = W_init.values.astype(dtype).copy()
    if cfg.optimizer == "adam":
        opt = _Adam(W.shape, cfg.learning_rate, dtype)
    else:
        opt = _Sgd(cfg.learning_rate)

    num_walks = corpus.num_walks
    block = max(1, min(cfg.walk_block, num_walks))
    report = TrainReport()

    def run_batch(t_idx, o_idx, rng):
        negs = noise.sample(rng, (t_idx.size, cfg.negatives))
        loss, grad_W = batch_loss_and_grad(X, W, t_idx, o_idx, negs)
        if not np.isfinite(loss):
            raise TrainingDiverged("objective became non-finite")
        opt.step(W, grad_W)
        return loss

    t0 = time.perf_counter()
    pool = (ThreadPoolExecutor(max_workers=cfg.threads)
            if cfg.parallel_mode == "racy" and cfg.threads > 1 else None)
    try:
        for epoch in range(cfg.epochs):
            ss_epoch = ss_train.spawn(1)[0]
            rng_epoch = np.random.default_rng(ss_epoch)
            walk_order = rng_epoch.permutation(num_walks)
            total_loss = 0.0
            total_pairs = 0
            futures = []
            for lo in range(0, num_walks, block):
                sel = walk_order[lo:lo + block]
                t_idx, o_idx = _block_pairs(corpus.walks[sel],
                                            corpus.lengths[sel], cfg.window)
                if t_idx.size == 0:
                    continue
                perm = rng_epoch.permutation(t_idx.size)
                t_idx, o_idx = t_idx[perm], o_idx[perm]
                total_pairs += t_idx.size
                for b in range(0, t_idx.size, cfg.batch_size):
                    tb = t_idx[b:b + cfg.batch_size]
                    ob = o_idx[b:b + cfg.batch_size]
                    rng_b = np.random.default_rng(ss_epoch.spawn(1)[0])
                    if pool is None:
                        total_loss += run_batch(tb, ob, rng_b)
                    else:
                        futures.append(pool.submit(run_batch, tb, ob, rng_b))
            if pool is not None:
                total_loss = sum(f.result() for f in futures)
            mean_obj = total_loss / max(1, total_pairs)
            if not np.isfinite(mean_obj):
                raise TrainingDiverged("objective became non-finite")
            report.epoch_objectives.append(mean_obj)
            report.pairs_per_epoch = total_pairs
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    report.phase_seconds = {
        "encode": t_encode,
        "walks": t_walk,
        "optimize": time.perf_counter() - t0,
    }
    report.final_objective = (report.epoch_objectives[-1]
                              if report.epoch_objectives else float("nan"))
    out = EmbeddingMatrix(W.astype(np.float64), alpha=enc_cfg.alpha,
                          delta_max=enc_cfg.delta_max, init_seed=W_init.init_seed)
    return out, report


def embed_nodes(g: Graph, enc_cfg: EncoderConfig, W: EmbeddingMatrix,
                threads: int = 1, features: FeatureMatrix | None = None) -> np.ndarray:
    """Embedding table for any graph, seen or unseen.

    Re-encodes with the training-time config (degrees above delta_max fold
    into the top bin), then applies the linear map.
    """
    if enc_cfg.dim != W.rows:
        raise GraphError(f"encoder dim {enc_cfg.dim} != matrix rows {W.rows}")
    if features is None:
        features = encode_all(g, enc_cfg, threads=threads)
    return features.matrix @ W.values

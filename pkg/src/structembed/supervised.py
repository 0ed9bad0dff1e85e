"""Downstream predictors on top of the structural embeddings.

Two heads: a logistic classifier over Hadamard edge features for link
prediction, and a multi-label feed-forward network trained jointly with
the embedding matrix (the gradient flows through the sparse linear map
into the shared parameter matrix). All backprop is explicit so the
composite gradients can be checked against finite differences.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .embedding import EmbeddingMatrix
from .encoder import EncoderConfig, FeatureMatrix, encode_all
from .graph import Graph, GraphError
from .metrics import micro_f1
from .unsupervised import embed_nodes

__all__ = [
    "EdgeClassifier",
    "EdgeHyper",
    "HeadConfig",
    "MultiLabelHead",
    "GraphBundle",
    "LabeledNodeDataset",
    "JointReport",
    "edge_features",
    "fit_logistic",
    "train_edge_classifier",
    "joint_loss_and_grads",
    "multilabel_loss",
    "train_joint",
    "predict",
    "micro_f1_at_threshold",
]


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def edge_features(e_u: np.ndarray, e_v: np.ndarray) -> np.ndarray:
    """Hadamard (element-wise) product; symmetric in its arguments."""
    e_u = np.asarray(e_u)
    e_v = np.asarray(e_v)
    if e_u.shape != e_v.shape:
        raise GraphError("embedding length mismatch")
    return e_u * e_v


@dataclass(frozen=True)
class EdgeHyper:
    learning_rate: float = 0.05
    iterations: int = 500
    l2: float = 1e-4
    standardize: bool = True
    seed: int = 0


@dataclass
class EdgeClassifier:
    """Binary logistic regression over edge feature vectors.

    Holds the feature standardization fitted on its training set so
    scoring applies the same transform.
    """

    weights: np.ndarray
    bias: float
    feat_mean: np.ndarray
    feat_scale: np.ndarray

    def decision(self, feats: np.ndarray) -> np.ndarray:
        z = (feats - self.feat_mean) / self.feat_scale
        return z @ self.weights + self.bias

    def predict_proba(self, feats: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision(feats))


def fit_logistic(feats: np.ndarray, labels: np.ndarray,
                 hyper: EdgeHyper) -> EdgeClassifier:
    """Full-batch gradient training of L2-regularized logistic regression
    (adaptive-moment steps on the mean binary cross-entropy)."""
    labels = np.asarray(labels, dtype=np.float64)
    if labels.min() == labels.max():
        raise GraphError("training set has a single class")
    if hyper.standardize:
        mean = feats.mean(axis=0)
        scale = feats.std(axis=0)
        scale[scale == 0] = 1.0
    else:
        mean = np.zeros(feats.shape[1])
        scale = np.ones(feats.shape[1])
    Z = (feats - mean) / scale
    n, d = Z.shape
    w = np.zeros(d)
    b = 0.0
    m = np.zeros(d + 1)
    v = np.zeros(d + 1)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    for t in range(1, hyper.iterations + 1):
        p = _sigmoid(Z @ w + b)
        resid = (p - labels) / n
        g = np.concatenate([Z.T @ resid + hyper.l2 * w, [resid.sum()]])
        m += (1 - beta1) * (g - m)
        v += (1 - beta2) * (g * g - v)
        mhat = m / (1 - beta1 ** t)
        vhat = v / (1 - beta2 ** t)
        step = hyper.learning_rate * mhat / (np.sqrt(vhat) + eps)
        w -= step[:d]
        b -= step[d]
    return EdgeClassifier(w, float(b), mean, scale)


def train_edge_classifier(split, W: EmbeddingMatrix, enc_cfg: EncoderConfig,
                          hyper: EdgeHyper = EdgeHyper(),
                          embeddings: np.ndarray | None = None) -> EdgeClassifier:
    """Classify removed edges vs sampled non-edges from Hadamard features
    of the train-graph embeddings."""
    if embeddings is None:
        embeddings = embed_nodes(split.train_graph, enc_cfg, W)
    pos = split.positive_edges
    neg = split.negative_edges
    feats = np.vstack([
        edge_features(embeddings[pos[:, 0]], embeddings[pos[:, 1]]),
        edge_features(embeddings[neg[:, 0]], embeddings[neg[:, 1]]),
    ])
    labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    return fit_logistic(feats, labels, hyper)


def multilabel_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    """Summed binary cross-entropy over every (node, label) cell.

    ``logits`` are pre-sigmoid scores; stable for large magnitudes.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if logits.shape != labels.shape:
        raise GraphError("prediction/label shape mismatch")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise GraphError("labels must be binary")
    return float((labels * _softplus(-logits)
                  + (1.0 - labels) * _softplus(logits)).sum())


@dataclass(frozen=True)
class HeadConfig:
    hidden: tuple[int, ...] = (256, 256, 256)
    activation: str = "elu"          # "elu" | "relu"
    learning_rate: float = 0.005
    epochs: int = 1000
    patience: int = 100
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.activation not in ("elu", "relu"):
            raise GraphError(f"unknown activation: {self.activation}")


class MultiLabelHead:
    """Feed-forward net mapping concat(embedding, attributes) to M logits."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray],
                 activation: str = "elu"):
        self.weights = weights
        self.biases = biases
        self.activation = activation

    @classmethod
    def create(cls, input_dim: int, hidden: tuple[int, ...], num_labels: int,
               activation: str, seed: int) -> "MultiLabelHead":
        rng = np.random.default_rng(seed)
        sizes = [input_dim, *hidden, num_labels]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, activation)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def num_labels(self) -> int:
        return self.weights[-1].shape[1]

    def _act(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        out = z.copy()
        neg = z < 0
        out[neg] = np.expm1(z[neg])
        return out

    def _act_grad(self, z, a):
        if self.activation == "relu":
            return (z > 0).astype(z.dtype)
        g = np.ones_like(z)
        neg = z < 0
        g[neg] = a[neg] + 1.0  # d/dz (exp(z)-1) = exp(z)
        return g

    def forward(self, H: np.ndarray):
        """Logits plus the per-layer cache needed for backward."""
        caches = []
        a = H
        for k in range(len(self.weights) - 1):
            z = a @ self.weights[k] + self.biases[k]
            a_next = self._act(z)
            caches.append((a, z, a_next))
            a = a_next
        logits = a @ self.weights[-1] + self.biases[-1]
        caches.append((a, None, None))
        return logits, caches

    def backward(self, caches, grad_logits: np.ndarray):
        """Parameter gradients and the gradient w.r.t. the input batch."""
        gw = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        a_last = caches[-1][0]
        gw[-1] = a_last.T @ grad_logits
        gb[-1] = grad_logits.sum(axis=0)
        grad_a = grad_logits @ self.weights[-1].T
        for k in range(len(self.weights) - 2, -1, -1):
            a_in, z, a_out = caches[k]
            grad_z = grad_a * self._act_grad(z, a_out)
            gw[k] = a_in.T @ grad_z
            gb[k] = grad_z.sum(axis=0)
            grad_a = grad_z @ self.weights[k].T
        return gw, gb, grad_a

    def predict_logits(self, H: np.ndarray) -> np.ndarray:
        return self.forward(H)[0]

    def predict_proba(self, H: np.ndarray) -> np.ndarray:
        return _sigmoid(self.predict_logits(H))

    def copy_params(self):
        return ([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def set_params(self, params):
        weights, biases = params
        self.weights = [w.copy() for w in weights]
        self.biases = [b.copy() for b in biases]


@dataclass
class GraphBundle:
    """One graph with its labels, optional node attributes, and split role."""

    graph: Graph
    labels: np.ndarray                     # (V, M) binary
    attributes: np.ndarray | None = None   # (V, K) reals
    role: str = "train"                    # train | val | test

    def __post_init__(self):
        if self.labels.shape[0] != self.graph.num_nodes:
            raise GraphError("labels do not cover all nodes")
        if self.attributes is not None and \
                self.attributes.shape[0] != self.graph.num_nodes:
            raise GraphError("attributes do not cover all nodes")


@dataclass
class LabeledNodeDataset:
    bundles: list[GraphBundle]

    def __post_init__(self):
        ms = {b.labels.shape[1] for b in self.bundles}
        if len(ms) > 1:
            raise GraphError("label width differs across graphs")
        widths = {0 if b.attributes is None else b.attributes.shape[1]
                  for b in self.bundles}
        if len(widths) > 1:
            raise GraphError("attribute width differs across graphs")
        self.num_labels = ms.pop()
        self.attr_width = widths.pop()

    def by_role(self, role: str) -> list[GraphBundle]:
        return [b for b in self.bundles if b.role == role]


@dataclass
class JointReport:
    epoch_losses: list[float] = field(default_factory=list)
    val_f1_history: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float = 0.0
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epoch_losses": self.epoch_losses,
            "val_f1_history": self.val_f1_history,
            "best_epoch": self.best_epoch,
            "best_val_f1": self.best_val_f1,
            "seconds": self.seconds,
        }


def micro_f1_at_threshold(probs: np.ndarray, labels: np.ndarray,
                          threshold: float = 0.5) -> float:
    return micro_f1(probs >= threshold, labels)


class _AdamGroup:
    """Descent Adam over a list of parameter arrays updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float):
        self.lr = lr
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _bundle_input(E: np.ndarray, bundle: GraphBundle) -> np.ndarray:
    if bundle.attributes is None:
        return E
    return np.hstack([E, bundle.attributes])


def joint_loss_and_grads(X: sp.csr_matrix, W: np.ndarray,
                         head: MultiLabelHead, bundle: GraphBundle,
                         node_idx: np.ndarray | None = None):
    """Loss of the label objective on one graph plus exact gradients for
    the head parameters and the shared embedding matrix."""
    E = X @ W
    H = _bundle_input(E, bundle)
    labels = bundle.labels
    if node_idx is not None:
        H = H[node_idx]
        labels = labels[node_idx]
    logits, caches = head.forward(H)
    loss = multilabel_loss(logits, labels)
    grad_logits = _sigmoid(logits) - labels
    gw, gb, grad_H = head.backward(caches, grad_logits)
    d = W.shape[1]
    if node_idx is not None:
        grad_E = np.zeros_like(E)
        grad_E[node_idx] = grad_H[:, :d]
    else:
        grad_E = grad_H[:, :d]
    grad_W = X.T @ grad_E
    return loss, gw, gb, grad_W


def train_joint(dataset: LabeledNodeDataset, enc_cfg: EncoderConfig,
                head_cfg: HeadConfig, W_init: EmbeddingMatrix,
                feature_cache: dict[int, FeatureMatrix] | None = None,
                log_every: int = 0):
    """Minimize the multi-label cross-entropy end to end.

    One step per training graph per epoch (all its labeled nodes as the
    batch); early stopping keeps the parameters of the epoch with the best
    validation micro-F1 and stops after ``patience`` epochs without
    improvement.
    """
    train_bundles = dataset.by_role("train")
    val_bundles = dataset.by_role("val")
    if not train_bundles:
        raise GraphError("dataset has no training graphs")
    if not val_bundles:
        raise GraphError("dataset has no validation graphs")

    cache = feature_cache if feature_cache is not None else {}

    def feats(bundle: GraphBundle) -> sp.csr_matrix:
        key = id(bundle)
        if key not in cache:
            cache[key] = encode_all(bundle.graph, enc_cfg)
        return cache[key].matrix

    d = W_init.cols
    W = W_init.values.copy()
    head = MultiLabelHead.create(d + dataset.attr_width, head_cfg.hidden,
                                 dataset.num_labels, head_cfg.activation,
                                 head_cfg.seed)
    opt = _AdamGroup([W, *head.weights, *head.biases], head_cfg.learning_rate)

    report = JointReport()
    best = (head.copy_params(), W.copy())
    t0 = time.perf_counter()
    epochs_since_best = 0
    for epoch in range(head_cfg.epochs):
        total = 0.0
        for bundle in train_bundles:
            loss, gw, gb, grad_W = joint_loss_and_grads(
                feats(bundle), W, head, bundle)
            if not np.isfinite(loss):
                raise GraphError("training diverged: non-finite loss")
            opt.step([W, *head.weights, *head.biases], [grad_W, *gw, *gb])
            total += loss
        report.epoch_losses.append(total)

        probs = [head.predict_proba(_bundle_input(feats(b) @ W, b))
                 for b in val_bundles]
        truths = [b.labels for b in val_bundles]
        f1 = micro_f1_at_threshold(np.vstack(probs), np.vstack(truths),
                                   head_cfg.threshold)
        report.val_f1_history.append(f1)
        if f1 > report.best_val_f1 or report.best_epoch < 0:
            report.best_val_f1 = f1
            report.best_epoch = epoch
            best = (head.copy_params(), W.copy())
            epochs_since_best = 0
        else:
            epochs_since_best += 1
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}: loss {total:.2f} val_f1 {f1:.4f}",
                  flush=True)
        if epochs_since_best >= head_cfg.patience:
            break
    head.set_params(best[0])
    W = best[1]
    report.seconds = time.perf_counter() - t0
    out = EmbeddingMatrix(W, alpha=enc_cfg.alpha, delta_max=enc_cfg.delta_max,
                          init_seed=W_init.init_seed)
    return out, head, report


def predict(head: MultiLabelHead, W: EmbeddingMatrix, enc_cfg: EncoderConfig,
            graph: Graph, attributes: np.ndarray | None = None) -> np.ndarray:
    """Per-node label probabilities on any graph (inductive path)."""
    expected_attr = head.input_dim - W.cols
    got_attr = 0 if attributes is None else attributes.shape[1]
    if expected_attr != got_attr:
        raise GraphError(
            f"head expects {expected_attr} attribute columns, got {got_attr}")
    E = embed_nodes(graph, enc_cfg, W)
    H = E if attributes is None else np.hstack([E, attributes])
    return head.predict_proba(H)

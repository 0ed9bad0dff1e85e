"""End-to-end task protocols shared by the CLI and the acceptance suite.

Each protocol owns the train/evaluate orchestration for one task and
returns a plain dict ready to serialize: link prediction (edge split,
unsupervised training on the mutilated graph, Hadamard logistic
classifier, held-out AUC), embedding clustering (k selection by graph
modularity plus centrality correlations), and inductive multi-label
classification.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .centrality import centrality_correlations
from .clustering import select_k_by_modularity
from .embedding import EmbeddingMatrix, init_matrix
from .encoder import EncoderConfig, fit_config
from .graph import Graph, GraphError, split_edges_for_link_prediction
from .metrics import roc_auc
from .supervised import (EdgeHyper, HeadConfig, LabeledNodeDataset,
                         edge_features, fit_logistic, micro_f1_at_threshold,
                         predict, train_joint)
from .unsupervised import UnsupConfig, embed_nodes, train_unsupervised
from .walks import WalkConfig

__all__ = [
    "link_prediction_protocol",
    "cluster_analysis",
    "classification_protocol",
    "split_pairs_for_classifier",
]


def split_pairs_for_classifier(positives: np.ndarray, negatives: np.ndarray,
                               test_fraction: float, seed: int):
    """Stratified split of the labeled pair set into classifier train/test."""
    rng = np.random.default_rng(seed)

    def part(pairs):
        idx = rng.permutation(len(pairs))
        cut = int(round(len(pairs) * (1.0 - test_fraction)))
        return pairs[idx[:cut]], pairs[idx[cut:]]

    pos_tr, pos_te = part(positives)
    neg_tr, neg_te = part(negatives)
    return (pos_tr, neg_tr), (pos_te, neg_te)


def _pair_feats(E: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return edge_features(E[pairs[:, 0]], E[pairs[:, 1]])


def link_prediction_protocol(g: Graph, *, alpha: int, dim: int,
                             walk_cfg: WalkConfig, unsup_cfg: UnsupConfig,
                             fraction: float = 0.5,
                             classifier_test_fraction: float = 0.5,
                             edge_hyper: EdgeHyper | None = None,
                             seed: int = 0) -> dict:
    """Edge-removal link prediction, end to end.

    Half the edges (by default) come out while the remaining graph stays
    connected; embeddings are trained on the mutilated graph only, and a
    logistic classifier over Hadamard pair features is scored by ROC-AUC
    on a held-out part of the pair set.
    """
    t0 = time.perf_counter()
    split = split_edges_for_link_prediction(g, fraction, seed)
    enc_cfg = fit_config(split.train_graph, alpha)
    W, report = train_unsupervised(split.train_graph, enc_cfg, walk_cfg,
                                   unsup_cfg, dim=dim)
    E = embed_nodes(split.train_graph, enc_cfg, W,
                    threads=max(1, unsup_cfg.threads))
    (pos_tr, neg_tr), (pos_te, neg_te) = split_pairs_for_classifier(
        split.positive_edges, split.negative_edges,
        classifier_test_fraction, seed + 1)
    hyper = edge_hyper or EdgeHyper(seed=seed)
    feats_tr = np.vstack([_pair_feats(E, pos_tr), _pair_feats(E, neg_tr)])
    labels_tr = np.concatenate([np.ones(len(pos_tr)), np.zeros(len(neg_tr))])
    clf = fit_logistic(feats_tr, labels_tr, hyper)
    feats_te = np.vstack([_pair_feats(E, pos_te), _pair_feats(E, neg_te)])
    labels_te = np.concatenate([np.ones(len(pos_te)), np.zeros(len(neg_te))])
    auc_test = roc_auc(clf.decision(feats_te), labels_te)
    auc_train = roc_auc(clf.decision(feats_tr), labels_tr)
    return {
        "task": "link-prediction",
        "auc_test": auc_test,
        "auc_train": auc_train,
        "num_positive": int(len(split.positive_edges)),
        "num_negative": int(len(split.negative_edges)),
        "train_graph_edges": int(split.train_graph.num_edges),
        "encoder": {"alpha": enc_cfg.alpha, "delta_max": enc_cfg.delta_max},
        "train_report": report.to_dict(),
        "seconds": time.perf_counter() - t0,
    }


def cluster_analysis(g: Graph, embeddings: np.ndarray, k_range,
                     seed: int = 0) -> dict:
    """Cluster embeddings across k, score partitions by graph modularity,
    and correlate embedding self-similarity with centralities."""
    best_k, table, assignments = select_k_by_modularity(
        g, embeddings, k_range, seed)
    corr = centrality_correlations(g, embeddings)
    return {
        "task": "cluster",
        "best_k": int(best_k),
        "modularity_table": [
            {"k": int(k), "modularity": float(q), "inertia": float(i)}
            for k, q, i in table
        ],
        "correlations": corr,
        "labels": assignments[best_k].labels.tolist(),
    }


def classification_protocol(dataset: LabeledNodeDataset, *, alpha: int,
                            dim: int, head_cfg: HeadConfig,
                            seed: int = 0, log_every: int = 0) -> dict:
    """Supervised multi-label training with early stopping, scored by
    micro-F1 on the held-out test graphs (inductive)."""
    train_bundles = dataset.by_role("train")
    test_bundles = dataset.by_role("test")
    if not test_bundles:
        raise GraphError("dataset has no test graphs")
    delta_max = max(max(1, b.graph.max_degree) for b in train_bundles)
    enc_cfg = EncoderConfig(alpha=alpha, delta_max=delta_max)
    W_init = init_matrix(enc_cfg.dim, dim, seed=seed,
                         alpha=alpha, delta_max=delta_max)
    W, head, report = train_joint(dataset, enc_cfg, head_cfg, W_init,
                                  log_every=log_every)
    probs, truths = [], []
    for b in test_bundles:
        probs.append(predict(head, W, enc_cfg, b.graph, b.attributes))
        truths.append(b.labels)
    test_f1 = micro_f1_at_threshold(np.vstack(probs), np.vstack(truths),
                                    head_cfg.threshold)
    return {
        "task": "classify",
        "test_micro_f1": test_f1,
        "best_val_micro_f1": report.best_val_f1,
        "best_epoch": report.best_epoch,
        "epochs_run": len(report.epoch_losses),
        "encoder": {"alpha": enc_cfg.alpha, "delta_max": enc_cfg.delta_max},
        "with_attributes": dataset.attr_width > 0,
        "seconds": report.seconds,
    }

"""Scalar evaluation metrics: ROC-AUC and micro-averaged F1."""

from __future__ import annotations

import numpy as np

from .graph import GraphError

__all__ = ["roc_auc", "micro_f1", "average_ranks"]


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties mid-ranked."""
    values = np.asarray(values)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve via the rank statistic.

    Equals P(score_pos > score_neg) + 0.5 P(tie); ties share mid-ranks.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise GraphError("roc_auc needs both classes present")
    ranks = average_ranks(scores)
    rank_sum = ranks[labels].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def micro_f1(pred: np.ndarray, truth: np.ndarray) -> float:
    """2TP / (2TP + FP + FN) pooled over every (row, label) cell."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise GraphError("prediction/truth shape mismatch")
    p = pred > 0.5
    t = truth > 0.5
    tp = np.logical_and(p, t).sum()
    fp = np.logical_and(p, ~t).sum()
    fn = np.logical_and(~p, t).sum()
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 1.0

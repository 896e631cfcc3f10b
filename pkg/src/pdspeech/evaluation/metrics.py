"""Classification scoring: voting, confusion counts, MCC, ROC, AUC.

Label 1 is the positive (patient) class throughout.  Accuracy,
sensitivity, and specificity are reported as percentages; correlation
and AUC stay on their natural scales.
"""

from __future__ import annotations

import math

import numpy as np


def majority_vote(probs: np.ndarray) -> int:
    """Combine per-item posteriors for class 1 into one decision.

    Each item votes by thresholding at 0.5; an even split falls back to
    the mean posterior.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("probs must be a non-empty 1-D array")
    votes_for = int((probs > 0.5).sum())
    votes_against = probs.size - votes_for
    if votes_for != votes_against:
        return int(votes_for > votes_against)
    return int(probs.mean() > 0.5)


def confusion_counts(y_true: np.ndarray,
                     y_pred: np.ndarray) -> tuple[int, int, int, int]:
    """(tp, tn, fp, fn) with class 1 positive."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D and the same length")
    if y_true.size == 0:
        raise ValueError("empty label arrays")
    for arr, name in ((y_true, "y_true"), (y_pred, "y_pred")):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} must contain only 0 and 1")
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    tn = int(((y_true == 0) & (y_pred == 0)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    return tp, tn, fp, fn


def mcc_from_counts(tp: int, tn: int, fp: int, fn: int) -> float:
    """Matthews correlation; 0.0 when any marginal is empty."""
    denom = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    if denom == 0.0:
        return 0.0
    return (tp * tn - fp * fn) / denom


def classification_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> dict:
    """accuracy/sensitivity/specificity in percent, plus raw mcc.

    Sensitivity (specificity) is NaN when the true labels contain no
    positives (negatives).
    """
    tp, tn, fp, fn = confusion_counts(y_true, y_pred)
    n = tp + tn + fp + fn
    sens = 100.0 * tp / (tp + fn) if tp + fn else float("nan")
    spec = 100.0 * tn / (tn + fp) if tn + fp else float("nan")
    return {
        "accuracy": 100.0 * (tp + tn) / n,
        "sensitivity": sens,
        "specificity": spec,
        "mcc": mcc_from_counts(tp, tn, fp, fn),
        "n": n,
    }


def roc_curve(y_true: np.ndarray,
              scores: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """False/true positive rates swept over descending score thresholds.

    Returns ``(fpr, tpr, thresholds)``.  The first point is (0, 0) at
    threshold +inf; each subsequent threshold admits every item scoring
    at or above it, so tied scores move the curve in one step and the
    last point is (1, 1).
    """
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=float)
    if y_true.shape != scores.shape or y_true.ndim != 1:
        raise ValueError("y_true and scores must be 1-D and the same length")
    if not np.isin(y_true, (0, 1)).all():
        raise ValueError("y_true must contain only 0 and 1")
    n_pos = int((y_true == 1).sum())
    n_neg = y_true.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    sorted_true = y_true[order]
    sorted_scores = scores[order]
    # indices where a new distinct threshold ends (last of each tie group)
    distinct = np.flatnonzero(np.diff(sorted_scores) != 0)
    cut = np.concatenate([distinct, [scores.size - 1]])
    tp_cum = np.cumsum(sorted_true == 1)[cut]
    fp_cum = np.cumsum(sorted_true == 0)[cut]
    fpr = np.concatenate([[0.0], fp_cum / n_neg])
    tpr = np.concatenate([[0.0], tp_cum / n_pos])
    thresholds = np.concatenate([[np.inf], sorted_scores[cut]])
    return fpr, tpr, thresholds


def auc_from_roc(fpr: np.ndarray, tpr: np.ndarray) -> float:
    """Trapezoidal area under the curve."""
    fpr = np.asarray(fpr, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    if fpr.shape != tpr.shape or fpr.ndim != 1 or fpr.size < 2:
        raise ValueError("fpr and tpr must be matching 1-D arrays")
    if (np.diff(fpr) < 0).any():
        raise ValueError("fpr must be non-decreasing")
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) * 0.5))


def roc_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    fpr, tpr, _ = roc_curve(y_true, scores)
    return auc_from_roc(fpr, tpr)


def summarize_folds(fold_metrics: list[dict]) -> dict:
    """Across-fold mean and population std for each percent metric."""
    if not fold_metrics:
        raise ValueError("no fold metrics to summarize")
    out = {}
    for key in ("accuracy", "sensitivity", "specificity"):
        values = np.array([m[key] for m in fold_metrics], dtype=float)
        out[f"{key}_mean"] = float(values.mean())
        out[f"{key}_std"] = float(values.std())
    out["n_folds"] = len(fold_metrics)
    return out

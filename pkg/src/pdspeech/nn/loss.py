"""Softmax cross-entropy, numerically stable in both directions."""

from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-shift stabilization; rows sum to 1."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"expected [N, K] logits, got shape {z.shape}")
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_targets(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    t = np.asarray(targets)
    if t.ndim != 1 or t.shape[0] != logits.shape[0]:
        raise ValueError(f"targets shape {t.shape} does not match logits {logits.shape}")
    if not np.issubdtype(t.dtype, np.integer):
        raise ValueError("targets must be integer class indices")
    if t.min() < 0 or t.max() >= logits.shape[1]:
        raise ValueError(
            f"target out of range: classes are 0..{logits.shape[1] - 1}, "
            f"got [{t.min()}, {t.max()}]"
        )
    return t


def softmax_xent(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch plus the softmax probabilities.

    The loss is computed as logsumexp(z) - z_target after a max shift, so a
    confidently correct prediction never produces log(0).
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"expected [N, K] logits, got shape {z.shape}")
    t = _check_targets(z, targets)
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    losses = log_norm - shifted[np.arange(z.shape[0]), t]
    probs = softmax(z)
    return float(losses.mean()), probs


def softmax_xent_grad(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of the mean cross-entropy w.r.t. the logits: (p - onehot)/N."""
    p = np.asarray(probs, dtype=np.float64)
    t = _check_targets(p, targets)
    grad = p.copy()
    grad[np.arange(p.shape[0]), t] -= 1.0
    return grad / p.shape[0]

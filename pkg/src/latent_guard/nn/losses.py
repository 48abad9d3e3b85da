"""Training losses: binary cross-entropy and the L1 activity penalty."""

from __future__ import annotations

import numpy as np

BCE_CLIP = 1e-7


def _clipped(prediction):
    p = np.asarray(prediction, dtype=np.float64)
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise ValueError(
            f"bce_loss predictions must lie in [0, 1], got range "
            f"[{p.min()}, {p.max()}] (is the sigmoid missing?)"
        )
    return np.clip(p, BCE_CLIP, 1.0 - BCE_CLIP)


def bce_loss(prediction, target):
    """Mean binary cross-entropy over all elements.

    Predictions are clamped to [1e-7, 1 - 1e-7] before the logs; targets
    must lie in [0, 1].
    """
    p = _clipped(prediction)
    t = np.asarray(target, dtype=np.float64)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p))))


def bce_loss_per_sample(prediction, target):
    """BCE averaged per sample (over all non-batch axes): [N, ...] -> [N]."""
    p = _clipped(prediction)
    t = np.asarray(target, dtype=np.float64)
    elementwise = -(t * np.log(p) + (1.0 - t) * np.log1p(-p))
    return elementwise.reshape(elementwise.shape[0], -1).mean(axis=1)


def bce_loss_and_grad(prediction, target):
    """BCE value plus its gradient w.r.t. the (clamped) predictions."""
    p = _clipped(prediction)
    t = np.asarray(target, dtype=np.float64)
    loss = float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p))))
    grad = (p - t) / (p * (1.0 - p)) / p.size
    return loss, grad


def l1_penalty(activations, lam):
    """L1 activity penalty ``lam * sum(|a|)`` and its subgradient.

    sign(0) is taken as 0.
    """
    if lam < 0:
        raise ValueError(f"l1 penalty weight must be >= 0, got {lam}")
    a = np.asarray(activations, dtype=np.float64)
    return float(lam * np.abs(a).sum()), lam * np.sign(a)

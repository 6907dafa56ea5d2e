"""Prediction head: log-mapped directional states concatenated with the
Euclidean utterance features, one hidden layer, two softmax logits.

Logit column 0 is the hate class.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .params import ClassifierParams, ModelConfig


def classify(h_up, h_down, x_euclid, cp: ClassifierParams, cfg: ModelConfig, backend,
             rng: np.random.Generator | None = None, training: bool = False):
    """Two-class logits (M, 2) for a batch of nodes."""
    feats = ad.concat([backend.logmap0(h_up), backend.logmap0(h_down), x_euclid], axis=-1)
    if training and cfg.dropout > 0.0:
        feats = ad.dropout(feats, cfg.dropout, rng, training=True)
    hidden = ad.tanh(ad.matmul(feats, ad.transpose(cp.w1)) + cp.b1)
    return ad.matmul(hidden, ad.transpose(cp.w2)) + cp.b2


def hate_probability(logits):
    """P(hate) from the two-class softmax."""
    return ad.softmax(logits, axis=-1)[..., 0]


def bce_loss(logits, labels: np.ndarray, mask: np.ndarray):
    """Mean binary cross-entropy over nodes with mask = 1.

    With two softmax classes this equals categorical cross-entropy; it is
    written against both columns so the gradient stays balanced.
    """
    total = float(mask.sum())
    if total == 0:
        raise ValueError("loss mask selects no nodes")
    logp = ad.log(ad.clip(ad.softmax(logits, axis=-1), 1e-12, None))
    y = labels.astype(np.float64)
    per_node = -(y * logp[..., 0] + (1.0 - y) * logp[..., 1])
    return ad.sum(per_node * mask) / total

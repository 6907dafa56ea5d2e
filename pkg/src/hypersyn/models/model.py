"""End-to-end wiring: user context pipeline -> tree recursion -> head.

``CorpusView`` precomputes everything static about a corpus (user order,
histories, normalized adjacency, per-tree level structures) so the
training loop only reruns the differentiable parts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..data.schema import Corpus
from ..geometry import make_backend
from . import csht as csht_mod
from . import hfan as hfan_mod
from . import hgcn as hgcn_mod
from .classifier import classify
from .params import ModelConfig, ModelParams


@dataclass
class CorpusView:
    user_order: list[str]
    user_row: dict[str, int]
    histories: list[np.ndarray]
    adjacency: np.ndarray
    tree_batches: dict[str, csht_mod.TreeBatch]  # one per tree id

    @classmethod
    def build(cls, corpus: Corpus) -> "CorpusView":
        order = sorted(corpus.users)
        return cls(
            user_order=order,
            user_row={uid: i for i, uid in enumerate(order)},
            histories=[corpus.users[uid].history for uid in order],
            adjacency=hgcn_mod.normalize_adjacency(corpus.graph, order),
            tree_batches={t.id: csht_mod.build_batch([t]) for t in corpus.trees},
        )

    def merged_batch(self, corpus: Corpus, tree_ids: list[str]) -> csht_mod.TreeBatch:
        trees = {t.id: t for t in corpus.trees}
        return csht_mod.build_batch([trees[tid] for tid in tree_ids])


def backend_for(cfg: ModelConfig):
    return make_backend(cfg.geometry, cfg.kappa)


def user_context(view: CorpusView, params: ModelParams, backend,
                 rng: np.random.Generator | None = None, training: bool = False):
    """Per-user context vectors (N, g), or None without user context."""
    cfg = params.config
    if not cfg.use_user_context:
        return None
    if cfg.use_hfan:
        hist = hfan_mod.encode_histories(view.histories, params.hfan, cfg, backend, rng, training)
    else:
        hist = hfan_mod.mean_history_vectors(view.histories, backend)
    if cfg.use_hgcn:
        return hgcn_mod.hgcn_forward(hist, view.adjacency, params.hgcn, cfg, backend)
    return hgcn_mod.project_user_vectors(hist, params.user_proj, backend)


def forward_batch(batch: csht_mod.TreeBatch, users, view: CorpusView, params: ModelParams,
                  backend, rng: np.random.Generator | None = None, training: bool = False):
    """Logits (M, 2) for every node of the batch, in batch order."""
    cfg = params.config
    x_points = backend.expmap0(batch.embeddings)
    user_points = None
    if users is not None:
        author_rows = np.asarray([view.user_row[a] for a in batch.authors], dtype=np.int64)
        user_points = ad.take(users, author_rows)
    h_up, h_down = csht_mod.csht_forward(batch, x_points, user_points, params.csht, cfg, backend)
    return classify(h_up, h_down, batch.embeddings, params.classifier, cfg, backend, rng, training)


def predict_tree(tree_id: str, view: CorpusView, params: ModelParams) -> dict[str, float]:
    """Evaluation-mode hate probabilities for one tree, keyed by node id."""
    backend = backend_for(params.config)
    users = user_context(view, params, backend)
    batch = view.tree_batches[tree_id]
    logits = forward_batch(batch, users, view, params, backend)
    probs = ad.value_of(ad.softmax(logits, axis=-1))[:, 0]
    return dict(zip(batch.node_ids, probs.tolist()))


def predict_node(node_id: str, tree_id: str, view: CorpusView, params: ModelParams) -> float:
    """Hate probability of a single utterance within its tree."""
    probs = predict_tree(tree_id, view, params)
    if node_id not in probs:
        raise KeyError(f"node {node_id!r} not in tree {tree_id!r}")
    return probs[node_id]

"""Context-synergized hyperbolic tree LSTM.

A bidirectional recursion over conversation trees. Each cell fuses the
node's utterance vector with its author's context vector through separate
gate pairs, aggregates child hidden states with an Einstein midpoint, and
combines child cells through per-child forget gates summed with iterated
gyrovector addition (a fixed ascending-id order, since the addition is not
associative).

The upward pass consumes children before parents; the downward pass feeds
each node its parent's state as the sole predecessor, with roots receiving
the origin. Trees are processed level-by-level so all nodes of a depth
advance in one vectorized step.

Gate products exploit log(exp(t)) = t at the origin: a sigmoid- or
tanh-valued gate tangent multiplies the other factor's tangent directly,
which is the same Mobius pointwise product with two map pairs fewer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import value_of
from ..data.schema import ConversationTree
from .params import CshtDirectionParams, ModelConfig


@dataclass
class LevelSpec:
    rows: np.ndarray  # global node indices at this depth, deterministic order
    child_rows: np.ndarray  # (n, K) positions within the next level, 0-padded
    child_mask: np.ndarray  # (n, K) 1 where a real child exists
    parent_rows: np.ndarray  # (n,) position within the previous level, -1 at roots


@dataclass
class TreeBatch:
    """Level-indexed view over a list of trees for batched recursion."""

    node_ids: list[str]
    embeddings: np.ndarray  # (M, d)
    authors: list[str]
    labels: np.ndarray  # (M,)
    implicit: np.ndarray  # (M,) 1 only where the label is implicit hate
    splits: list[str]
    depths: np.ndarray  # (M,)
    levels: list[LevelSpec]

    @property
    def size(self) -> int:
        return len(self.node_ids)


def build_batch(trees: list[ConversationTree]) -> TreeBatch:
    node_ids: list[str] = []
    embeddings = []
    authors: list[str] = []
    labels = []
    implicit = []
    splits = []
    depths = []
    index: dict[str, int] = {}
    per_level: dict[int, list[int]] = {}

    for tree in trees:
        for uid in sorted(tree.nodes):
            node = tree.nodes[uid]
            index[uid] = len(node_ids)
            node_ids.append(uid)
            embeddings.append(node.embedding)
            authors.append(node.author_id)
            labels.append(node.label_hate)
            implicit.append(1 if node.label_implicit == 1 else 0)
            splits.append(node.split)
            depths.append(tree.depth[uid])
            per_level.setdefault(tree.depth[uid], []).append(index[uid])

    pos_in_level: dict[int, int] = {}
    level_rows = []
    for depth in range(max(per_level) + 1):
        rows = np.asarray(per_level[depth], dtype=np.int64)
        for pos, g in enumerate(rows):
            pos_in_level[g] = pos
        level_rows.append(rows)

    children_of: dict[int, list[int]] = {i: [] for i in range(len(node_ids))}
    parent_of: dict[int, int] = {}
    for tree in trees:
        for uid in sorted(tree.nodes):
            g = index[uid]
            for kid in tree.children[uid]:
                children_of[g].append(index[kid])
                parent_of[index[kid]] = g

    levels = []
    for rows in level_rows:
        kmax = max(max((len(children_of[g]) for g in rows), default=0), 1)
        child_rows = np.zeros((len(rows), kmax), dtype=np.int64)
        child_mask = np.zeros((len(rows), kmax))
        parent_rows = np.full(len(rows), -1, dtype=np.int64)
        for i, g in enumerate(rows):
            for k, kid in enumerate(children_of[g]):
                child_rows[i, k] = pos_in_level[kid]
                child_mask[i, k] = 1.0
            if g in parent_of:
                parent_rows[i] = pos_in_level[parent_of[g]]
        levels.append(LevelSpec(rows, child_rows, child_mask, parent_rows))

    return TreeBatch(
        node_ids=node_ids,
        embeddings=np.stack(embeddings),
        authors=authors,
        labels=np.asarray(labels, dtype=np.int64),
        implicit=np.asarray(implicit, dtype=np.int64),
        splits=splits,
        depths=np.asarray(depths, dtype=np.int64),
        levels=levels,
    )


def direction_bias_points(dp: CshtDirectionParams, backend) -> dict:
    """Gate bias ball points, hoisted out of the per-level loop."""
    pts = {"f": backend.expmap0(dp.b_f)}
    for name in ("gate_i", "gate_u", "gate_m", "gate_s", "gate_o"):
        gate = getattr(dp, name)
        if gate is not None:
            pts[name] = backend.expmap0(gate.b)
    return pts


def csht_cell(x, u, child_h, child_c, child_mask, dp: CshtDirectionParams, backend, bias_points=None):
    """One cell evaluation over a batch of nodes.

    ``x``: (n, d) utterance points; ``u``: (n, g) author context points or
    None; ``child_h``/``child_c``: (n, K, h) predecessor states with
    ``child_mask`` (n, K). Returns (hidden, cell) of shape (n, h).
    """
    if bias_points is None:
        bias_points = direction_bias_points(dp, backend)
    n, kmax = child_mask.shape
    h_tilde = backend.midpoint(child_h, child_mask)  # all-zero mask rows -> origin

    r = backend.matvec(dp.w_fx, x)
    if u is not None:
        r = backend.add(r, backend.matvec(dp.w_fg, u))

    hidden_dim = value_of(h_tilde).shape[-1]
    r_rows = ad.reshape(r, (n, 1, hidden_dim))
    f_pre = backend.add(backend.add(r_rows, backend.matvec(dp.u_f, child_h)), bias_points["f"])
    forget_t = ad.sigmoid(backend.logmap0(f_pre))  # (n, K, h) gate tangents

    def gate_tangent(name, own, squash):
        gate = getattr(dp, name)
        pre = backend.add(
            backend.add(backend.matvec(gate.w, own), backend.matvec(gate.u, h_tilde)),
            bias_points[name],
        )
        return squash(backend.logmap0(pre))

    i_t = gate_tangent("gate_i", x, ad.sigmoid)
    u_t = gate_tangent("gate_u", x, ad.tanh)
    cell = backend.expmap0(i_t * u_t)
    if u is not None:
        m_t = gate_tangent("gate_m", u, ad.sigmoid)
        s_t = gate_tangent("gate_s", u, ad.tanh)
        cell = backend.add(cell, backend.expmap0(m_t * s_t))

    for k in range(kmax):
        term = backend.scale_ew(forget_t[:, k, :], child_c[:, k, :])
        candidate = backend.add(cell, term)
        mk = child_mask[:, k : k + 1]
        cell = candidate * mk + cell * (1.0 - mk)

    o_t = gate_tangent("gate_o", u if u is not None else x, ad.sigmoid)
    hidden = backend.expmap0(o_t * ad.tanh(backend.logmap0(cell)))
    return hidden, cell


def csht_forward(batch: TreeBatch, x_points, user_points, params, cfg: ModelConfig, backend):
    """Run both directions over a batch; returns (h_up, h_down), each (M, h).

    ``x_points``: (M, d) manifold utterance points in batch order;
    ``user_points``: (M, g) per-node author context points or None. With
    ``cfg.bidirectional`` off, the downward states are the origin.
    """
    up = _directional_pass(batch, x_points, user_points, params.up, cfg, backend, downward=False)
    if cfg.bidirectional:
        down = _directional_pass(batch, x_points, user_points, params.down, cfg, backend, downward=True)
    else:
        down = np.zeros((batch.size, cfg.h))
    return up, down


def _directional_pass(batch, x_points, user_points, dp, cfg, backend, downward: bool):
    bias_points = direction_bias_points(dp, backend)
    h_levels: dict[int, object] = {}
    c_levels: dict[int, object] = {}
    order = range(len(batch.levels)) if downward else range(len(batch.levels) - 1, -1, -1)
    for depth in order:
        spec = batch.levels[depth]
        n = len(spec.rows)
        x = ad.take(x_points, spec.rows)
        u = ad.take(user_points, spec.rows) if user_points is not None else None

        if downward:
            if depth == 0:
                pred_h = np.zeros((n, 1, cfg.h))
                pred_c = np.zeros((n, 1, cfg.h))
                mask = np.zeros((n, 1))
            else:
                prev_h, prev_c = h_levels[depth - 1], c_levels[depth - 1]
                pred_h = ad.reshape(ad.take(prev_h, spec.parent_rows), (n, 1, cfg.h))
                pred_c = ad.reshape(ad.take(prev_c, spec.parent_rows), (n, 1, cfg.h))
                mask = np.ones((n, 1))
        else:
            if depth == len(batch.levels) - 1:
                k = spec.child_mask.shape[1]
                pred_h = np.zeros((n, k, cfg.h))
                pred_c = np.zeros((n, k, cfg.h))
                mask = np.zeros((n, k))
            else:
                nxt_h, nxt_c = h_levels[depth + 1], c_levels[depth + 1]
                k = spec.child_rows.shape[1]
                pred_h = ad.reshape(ad.take(nxt_h, spec.child_rows.reshape(-1)), (n, k, cfg.h))
                pred_c = ad.reshape(ad.take(nxt_c, spec.child_rows.reshape(-1)), (n, k, cfg.h))
                mask = spec.child_mask

        h_levels[depth], c_levels[depth] = csht_cell(x, u, pred_h, pred_c, mask, dp, backend, bias_points)

    stacked = ad.concat([h_levels[d] for d in range(len(batch.levels))], axis=0)
    flat_rows = np.concatenate([batch.levels[d].rows for d in range(len(batch.levels))])
    inverse = np.empty(batch.size, dtype=np.int64)
    inverse[flat_rows] = np.arange(batch.size)
    return ad.take(stacked, inverse)

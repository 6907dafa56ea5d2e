"""Hyperbolic graph convolution over the user social graph.

Each layer Mobius-multiplies node vectors by a weight matrix, aggregates
every node's neighborhood (self-loop included) with a Frechet mean
weighted by the symmetrically normalized adjacency row, and applies a
ReLU between the incoming and outgoing curvature regimes.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import value_of
from ..data.schema import SocialGraph
from ..geometry import ops
from .params import HgcnParams, ModelConfig


def normalize_adjacency(graph: SocialGraph, order: list[str] | None = None) -> np.ndarray:
    """Dense symmetric D^-1/2 (A + I) D^-1/2 over users in ``order``.

    Self-loops are added before normalization so isolated users keep their
    own signal. Desk-scale graphs keep this dense; rows double as Frechet
    weights downstream.
    """
    if not graph.vertices:
        raise ValueError("empty social graph")
    order = order or sorted(graph.vertices)
    index = {uid: i for i, uid in enumerate(order)}
    n = len(order)
    a = np.eye(n)
    for (u, v) in graph.edge_pairs():
        a[index[u], index[v]] = 1.0
        a[index[v], index[u]] = 1.0
    inv_sqrt_deg = 1.0 / np.sqrt(a.sum(axis=1))
    return a * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]


def neighbor_table(adj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Padded neighbor indices and matching weights per node.

    Returns (indices, weights) of shape (N, K) where K is the max
    neighborhood size; padding has weight zero and index zero (the padded
    weight nullifies the gathered point inside the weighted mean).
    """
    n = adj.shape[0]
    neighbor_lists = [np.flatnonzero(adj[i]) for i in range(n)]
    k = max(len(lst) for lst in neighbor_lists)
    idx = np.zeros((n, k), dtype=np.int64)
    w = np.zeros((n, k))
    for i, lst in enumerate(neighbor_lists):
        idx[i, : len(lst)] = lst
        w[i, : len(lst)] = adj[i, lst]
    return idx, w


def _degree_buckets(adj: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Rows grouped by similar neighborhood size so the padded width tracks
    each group instead of the global hub maximum. Returns
    (rows, indices (B, K), weights (B, K)) triples."""
    idx, w = neighbor_table(adj)
    sizes = (w > 0).sum(axis=1)
    buckets = []
    bounds = [0, 4, 8, 16, 32, idx.shape[1]]
    for lo, hi in zip(bounds, bounds[1:]):
        rows = np.flatnonzero((sizes > lo) & (sizes <= hi)) if lo else np.flatnonzero(sizes <= hi)
        if rows.size:
            buckets.append((rows, idx[rows, :hi], w[rows, :hi]))
    return buckets


# Iteration budget for the neighborhood Karcher flow inside training steps.
# Near-boundary point sets can cycle under the clamped vector field; they
# fail fast into the tangent-mean fallback instead of burning the full
# contract budget on every differentiated step.
AGGREGATION_MAX_ITER = 30


def hgcn_forward(vectors, adj: np.ndarray, params: HgcnParams, cfg: ModelConfig, backend):
    """Refine per-user vectors (N, dim_in) into (N, g) context vectors."""
    n = adj.shape[0]
    if value_of(vectors).shape[0] != n:
        raise ValueError(f"vector count {value_of(vectors).shape[0]} != graph size {n}")
    buckets = _degree_buckets(adj)
    kappas = params.kappas(cfg.trainable_curvature)
    x = vectors
    for layer, w in enumerate(params.weights):
        k_in, k_out = kappas[layer], kappas[layer + 1]
        x = backend.matvec(w, x, kappa=k_in)
        dim = value_of(x).shape[-1]
        chunks = []
        order = []
        for rows, idx, weights in buckets:
            points = ad.reshape(ad.take(x, idx.reshape(-1)), (rows.size, idx.shape[1], dim))
            chunks.append(backend.frechet(points, weights, kappa=k_in, max_iter=AGGREGATION_MAX_ITER))
            order.append(rows)
        stacked = ad.concat(chunks, axis=0)
        inverse = np.empty(n, dtype=np.int64)
        inverse[np.concatenate(order)] = np.arange(n)
        x = ad.take(stacked, inverse)
        x = backend.activation(x, ad.relu, kappa_in=k_in, kappa_out=k_out)
    return x


def project_user_vectors(vectors, proj, backend):
    """HGCN bypass: one Mobius linear map down to the context dimension."""
    return backend.matvec(proj, vectors)

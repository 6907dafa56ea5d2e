"""Fourier-attention encoder compressing a user's historical utterance
sequence into one hyperbolic user vector.

Pipeline per user: treat the (ball-projected) history rows as manifold
points, log-map to the tangent space at the origin, mix with the 2-D DFT,
exp-map back through a learned projection, run a gyrovector GRU over time,
then aggregate the per-step outputs with distance-scored attention whose
weights feed an Einstein midpoint in the Klein model.

The DFT runs per distinct history length (no padding enters the
transform) with orthonormal 1/sqrt(S*d) scaling so the exponential map is
not saturated; the recurrence then runs once over padded, masked rows.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import value_of
from ..geometry import ops
from ..spectral import dft2_real
from .params import GruParams, HfanParams, ModelConfig


def gru_step(h_prev, x_t, p: GruParams, backend, bias_points=None):
    """One gyrovector GRU step.

    Gates are Euclidean vectors read off in the tangent space; the
    candidate is a gate-scaled Mobius composition without a squashing
    nonlinearity; the new state interpolates along the displacement
    (-h) + h_tilde scaled by the update gate.
    """
    if bias_points is None:
        bias_points = gru_bias_points(p, backend)
    bz, br, bh = bias_points
    z = ad.sigmoid(backend.logmap0(backend.add(backend.add(backend.matvec(p.w_z, x_t), backend.matvec(p.u_z, h_prev)), bz)))
    r = ad.sigmoid(backend.logmap0(backend.add(backend.add(backend.matvec(p.w_r, x_t), backend.matvec(p.u_r, h_prev)), br)))
    h_tilde = backend.add(
        backend.add(backend.matvec(p.w_h, backend.scale_ew(r, h_prev)), backend.matvec(p.u_h, x_t)), bh
    )
    return backend.add(h_prev, backend.scale_ew(z, backend.add(-h_prev, h_tilde)))


def gru_bias_points(p: GruParams, backend):
    return backend.expmap0(p.b_z), backend.expmap0(p.b_r), backend.expmap0(p.b_h)


def attention_pool(states, params: HfanParams, backend, beta=None, mask: np.ndarray | None = None):
    """Distance-scored Einstein-midpoint pooling over per-step states.

    ``states``: (..., S, l) manifold points. Scores are
    exp(-beta * d(centroid, state) - offset); the offset cancels under the
    midpoint normalization but is kept as a learnable for completeness.
    ``beta`` overrides the softplus-reparameterized value (used to probe
    the beta -> 0 degeneration); ``mask`` zeroes padded steps.
    """
    if beta is None:
        beta = ad.log(1.0 + ad.exp(params.beta_raw))
    dist = backend.attention_distance(params.centroid, states)
    alpha = ad.exp(-1.0 * (beta * dist) - params.offset)
    if mask is not None:
        alpha = alpha * mask
    if backend.hyperbolic:
        klein = ops.to_klein(states, backend.kappa)
        mid = ops.einstein_midpoint(klein, alpha, backend.kappa)
        return ops.from_klein(mid, backend.kappa)
    return backend.midpoint(states, alpha)


def _mixed_tangents(histories: list[np.ndarray], cfg: ModelConfig, backend) -> tuple[np.ndarray, np.ndarray]:
    """Ball-project, log-map, and frequency-mix every history, padded to the
    longest length. All of this precedes any parameter, so it runs as plain
    numpy. Returns (tangents (N, S_max, d), mask (N, S_max))."""
    lengths = np.asarray([h.shape[0] for h in histories])
    s_max = int(lengths.max())
    n = len(histories)
    d = histories[0].shape[1]
    tangents = np.zeros((n, s_max, d))
    mask = np.zeros((n, s_max))
    groups: dict[int, list[int]] = {}
    for i, s in enumerate(lengths):
        groups.setdefault(int(s), []).append(i)
    for s, idx in groups.items():
        block = np.stack([histories[i] for i in idx])
        tangent = value_of(backend.logmap0(ops.project_to_ball(block, backend.kappa) if backend.hyperbolic else block))
        if cfg.use_dft:
            # orthonormal scaling: the raw transform has operator norm
            # sqrt(S * d), which would saturate the exponential map
            tangent = value_of(dft2_real(tangent)) / np.sqrt(s * d)
        tangents[idx, :s, :] = tangent
        mask[idx, :s] = 1.0
    return tangents, mask


def encode_histories(
    histories: list[np.ndarray],
    params: HfanParams,
    cfg: ModelConfig,
    backend,
    rng: np.random.Generator | None = None,
    training: bool = False,
):
    """Encode every user's history; returns an (N, l) tensor of ball points."""
    tangents, mask = _mixed_tangents(histories, cfg, backend)
    if training and cfg.dropout > 0.0:
        tangents = tangents * ((rng.random(tangents.shape) >= cfg.dropout) / (1.0 - cfg.dropout))
    x = backend.expmap0(ad.matmul(tangents, ad.transpose(params.w_in)))  # (N, S_max, l)

    if cfg.use_gru:
        n, s_max = mask.shape
        biases = gru_bias_points(params.gru, backend)
        h = np.zeros((n, cfg.l))
        outputs = []
        for t in range(s_max):
            h_new = gru_step(h, x[:, t, :], params.gru, backend, biases)
            mt = mask[:, t : t + 1]
            h = h_new * mt + h * (1.0 - mt)
            outputs.append(h)
        states = ad.stack(outputs, axis=1)  # (N, S_max, l)
    else:
        states = x
    return attention_pool(states, params, backend, mask=mask)


def mean_history_vectors(histories: list[np.ndarray], backend):
    """HFAN bypass: per-user mean of the raw history rows, exp-mapped."""
    means = np.stack([h.mean(axis=0) for h in histories])
    return backend.expmap0(means)

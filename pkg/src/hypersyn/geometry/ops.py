"""Curvature-parameterized Poincare-ball operations, plus Klein/Lorentz
model conversions, the Einstein midpoint, and the weighted Frechet mean.

All functions act on the last axis of their inputs and broadcast over any
leading axes, so a single call handles one point or a whole batch. Inputs
may be plain numpy arrays or autodiff tensors; the same code path serves
both, which is what lets gradients flow through every geometric step.

Conventions:
  * ``kappa`` is the (strictly negative) sectional curvature; the ball has
    radius 1/sqrt(-kappa) and c denotes -kappa.
  * conformal factor lambda_x = 2 / (1 - c * ||x||^2).
  * atanh arguments are clamped to [0, 1 - 1e-10]; norms are floored at
    1e-15 before any division.
  * outputs that live on the ball are re-projected with margin 1e-5; the
    projection is the identity (gradient 1) inside the ball and a constant
    (gradient 0) outside.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor, value_of

BALL_EPS = 1e-5
NORM_FLOOR = 1e-15
ATANH_CAP = 1.0 - 1e-10


def _absk(kappa):
    """c = -kappa > 0; works for floats and tensors."""
    return -kappa if isinstance(kappa, Tensor) else -float(kappa)


def _sqnorm(x, keepdims: bool = True):
    return ad.sum(x * x, axis=-1, keepdims=keepdims)


def _safe_norm(x, keepdims: bool = True):
    return ad.sqrt(ad.clip(_sqnorm(x, keepdims), NORM_FLOOR**2, None))


def _dot(x, y, keepdims: bool = True):
    return ad.sum(x * y, axis=-1, keepdims=keepdims)


def _atanh_safe(z):
    return ad.atanh(ad.clip(z, 0.0, ATANH_CAP))


def _acosh(z):
    return ad.log(z + ad.sqrt(ad.clip(z * z - 1.0, 0.0, None)))


def project_to_ball(x, kappa=-1.0):
    """Pull points inside the open ball, leaving a 1e-5 margin.

    Points already inside pass through untouched (gradient 1); points at or
    beyond the margin are replaced by their radially rescaled value as a
    tape constant (gradient 0).
    """
    c = float(value_of(_absk(kappa)))
    data = value_of(x)
    max_norm = (1.0 - BALL_EPS) / np.sqrt(c)
    nrm = np.linalg.norm(data, axis=-1, keepdims=True)
    inside = nrm <= max_norm
    if inside.all():
        return x
    clipped = data * (max_norm / np.maximum(nrm, NORM_FLOOR))
    mask = inside.astype(np.float64)
    return x * mask + clipped * (1.0 - mask)


def mobius_add(x, y, kappa=-1.0, project: bool = True):
    """Gyrovector addition of ball points. Not commutative."""
    c = _absk(kappa)
    x2 = _sqnorm(x)
    y2 = _sqnorm(y)
    xy = _dot(x, y)
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    den = 1.0 + 2.0 * c * xy + (c * c) * (x2 * y2)
    out = num / den
    return project_to_ball(out, kappa) if project else out


def expmap0(v, kappa=-1.0, project: bool = True):
    """Exponential map at the origin: tangent vector to ball point."""
    c = _absk(kappa)
    sc = ad.sqrt(c)
    nv = _safe_norm(v)
    out = ad.tanh(sc * nv) / (sc * nv) * v
    return project_to_ball(out, kappa) if project else out


def logmap0(y, kappa=-1.0):
    """Logarithmic map at the origin: ball point to tangent vector."""
    c = _absk(kappa)
    sc = ad.sqrt(c)
    ny = _safe_norm(y)
    return _atanh_safe(sc * ny) / (sc * ny) * y


def _lambda_factor(x, c):
    return 2.0 / ad.clip(1.0 - c * _sqnorm(x), NORM_FLOOR, None)


def expmap(base, v, kappa=-1.0):
    """Exponential map at an arbitrary base point."""
    c = _absk(kappa)
    sc = ad.sqrt(c)
    nv = _safe_norm(v)
    arg = sc * nv * _lambda_factor(base, c) * 0.5
    return mobius_add(base, ad.tanh(arg) / (sc * nv) * v, kappa)


def logmap(base, y, kappa=-1.0):
    """Logarithmic map at an arbitrary base point."""
    c = _absk(kappa)
    sc = ad.sqrt(c)
    u = mobius_add(-base, y, kappa, project=False)
    nu = _safe_norm(u)
    return 2.0 * _atanh_safe(sc * nu) / (sc * nu * _lambda_factor(base, c)) * u


def mobius_matvec(w, x, kappa=-1.0):
    """Matrix action on a ball point: expmap0(logmap0(x) @ w^T)."""
    return expmap0(ad.matmul(logmap0(x, kappa), ad.transpose(w)), kappa)


def mobius_pointwise(x, y, kappa=-1.0):
    """Commutative elementwise product via the tangent space at the origin."""
    return expmap0(logmap0(x, kappa) * logmap0(y, kappa), kappa)


def mobius_scale_ew(gate, x, kappa=-1.0):
    """Scale a ball point coordinate-wise by a Euclidean gate vector."""
    return expmap0(gate * logmap0(x, kappa), kappa)


def distance(x, y, kappa=-1.0):
    """Geodesic distance 2/sqrt(c) * atanh(sqrt(c) * ||(-x) + y||).

    Uses the expanded form ||x - y|| / sqrt(1 - 2c<x,y> + c^2|x|^2|y|^2)
    for the gyro-difference norm: it is exactly symmetric and exactly zero
    at coincident points, which the direct composition is not.
    """
    c = _absk(kappa)
    sc = ad.sqrt(c)
    num = ad.sqrt(ad.clip(_sqnorm(x - y, keepdims=False), 0.0, None))
    den = ad.sqrt(
        ad.clip(1.0 - 2.0 * c * _dot(x, y, keepdims=False) + (c * c) * _sqnorm(x, keepdims=False) * _sqnorm(y, keepdims=False), NORM_FLOOR, None)
    )
    return 2.0 / sc * _atanh_safe(sc * num / den)


def tangent_activation(x, fn, kappa_in=-1.0, kappa_out=-1.0):
    """Apply a Euclidean nonlinearity between two curvature regimes."""
    return expmap0(fn(logmap0(x, kappa_in)), kappa_out)


# -- model conversions ---------------------------------------------------------


def to_klein(x, kappa=-1.0):
    c = _absk(kappa)
    return 2.0 * x / (1.0 + c * _sqnorm(x))


def from_klein(k, kappa=-1.0, project: bool = True):
    c = _absk(kappa)
    root = ad.sqrt(ad.clip(1.0 - c * _sqnorm(k), 0.0, None))
    out = k / (1.0 + root)
    return project_to_ball(out, kappa) if project else out


def to_lorentz(x, kappa=-1.0):
    """Ball point to hyperboloid point (time coordinate first)."""
    c = _absk(kappa)
    sc = ad.sqrt(c)
    den = ad.clip(1.0 - c * _sqnorm(x), NORM_FLOOR, None)
    time = (1.0 + c * _sqnorm(x)) / (sc * den)
    space = 2.0 * x / den
    return ad.concat([time, space], axis=-1)


def from_lorentz(xl, kappa=-1.0, project: bool = True):
    c = _absk(kappa)
    sc = ad.sqrt(c)
    out = xl[..., 1:] / (1.0 + sc * xl[..., :1])
    return project_to_ball(out, kappa) if project else out


def minkowski_inner(a, b):
    """Signature (-, +, ..., +) inner product, time coordinate first."""
    return ad.sum(a[..., 1:] * b[..., 1:], axis=-1, keepdims=True) - a[..., :1] * b[..., :1]


def lorentz_distance(a, b, kappa=-1.0):
    """Geodesic distance between hyperboloid points."""
    c = _absk(kappa)
    arg = ad.clip(-1.0 * minkowski_inner(a, b) * c, 1.0 + 1e-15, None)
    return _acosh(arg)[..., 0] / ad.sqrt(c)


def klein_distance(a, b, kappa=-1.0):
    """Geodesic distance between Klein-model points."""
    c = _absk(kappa)
    num = 1.0 - c * _dot(a, b)
    den = ad.sqrt(ad.clip((1.0 - c * _sqnorm(a)) * (1.0 - c * _sqnorm(b)), NORM_FLOOR, None))
    arg = ad.clip(num / den, 1.0 + 1e-15, None)
    return _acosh(arg)[..., 0] / ad.sqrt(c)


# -- aggregation ---------------------------------------------------------------


def einstein_midpoint(points, weights, kappa=-1.0):
    """Lorentz-factor-weighted mean of Klein points.

    ``points`` has shape (..., K, D) and ``weights`` (..., K). Weight rows
    summing to zero yield the Klein origin, which lets callers express
    "no members" with an all-zero mask row.
    """
    c = _absk(kappa)
    gamma = 1.0 / ad.sqrt(ad.clip(1.0 - c * _sqnorm(points), NORM_FLOOR, None))
    w = ad.reshape(weights, value_of(weights).shape + (1,)) * gamma
    total = ad.clip(ad.sum(w, axis=-2, keepdims=True), NORM_FLOOR, None)
    return ad.sum(w / total * points, axis=-2)


def poincare_midpoint(points, weights, kappa=-1.0):
    """Einstein midpoint of ball points, round-tripped through Klein."""
    return from_klein(einstein_midpoint(to_klein(points, kappa), weights, kappa), kappa)


def frechet_mean(points, weights, kappa=-1.0, tol: float = 1e-6, max_iter: int = 100):
    """Weighted Frechet mean of ball points via Karcher flow.

    Iterates "average the log maps at the current estimate, step along the
    exponential map" until the step norm drops below ``tol`` everywhere or
    ``max_iter`` is hit. Returns ``(mean, converged)`` where ``converged``
    is a boolean array over the leading axes; non-converged rows fall back
    to the tangent-space mean at the origin.

    ``points``: (..., K, D); ``weights``: (..., K), row sums must be > 0.
    """
    w = ad.reshape(weights, value_of(weights).shape + (1,))
    wn = w / ad.clip(ad.sum(w, axis=-2, keepdims=True), NORM_FLOOR, None)

    fallback = expmap0(ad.sum(wn * logmap0(points, kappa), axis=-2), kappa)
    mean = fallback
    converged = np.zeros(value_of(mean).shape[:-1], dtype=bool)
    for _ in range(max_iter):
        shape = value_of(mean).shape
        base = ad.reshape(mean, shape[:-1] + (1,) + shape[-1:])
        step = ad.sum(wn * logmap(base, points, kappa), axis=-2)
        mean = expmap(mean, step, kappa)
        converged = np.linalg.norm(value_of(step), axis=-1) < tol
        if converged.all():
            break
    if not converged.all():
        mask = converged.astype(np.float64)[..., None]
        mean = mean * mask + fallback * (1.0 - mask)
    return mean, converged

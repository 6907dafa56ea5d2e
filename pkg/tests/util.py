"""Shared test oracles: central finite differences and random sampling."""

from __future__ import annotations

import numpy as np

from hypersyn.autodiff import Tensor


def finite_difference_grad(fn, values: list[np.ndarray], step: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of scalar ``fn(*values)`` per input."""
    grads = []
    for i, v in enumerate(values):
        g = np.zeros_like(v, dtype=np.float64)
        flat = g.reshape(-1)
        vflat = v.reshape(-1)
        for j in range(vflat.size):
            orig = vflat[j]
            vflat[j] = orig + step
            up = float(fn(*values))
            vflat[j] = orig - step
            down = float(fn(*values))
            vflat[j] = orig
            flat[j] = (up - down) / (2.0 * step)
        grads.append(g)
    return grads


def check_gradients(build_loss, values: list[np.ndarray], rtol: float = 1e-4, step: float = 1e-5) -> float:
    """Compare reverse-mode gradients of ``build_loss`` against central
    finite differences.

    ``build_loss`` maps a list of Tensors to a scalar Tensor; ``values``
    are the leaf values. Returns the worst relative error and asserts it
    is below ``rtol``. The error is normalized by max(1, |a| + |n|) so
    tiny gradients are compared absolutely.
    """
    leaves = [Tensor(v.copy(), requires_grad=True) for v in values]
    loss = build_loss(*leaves)
    loss.backward()
    analytic = [leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data) for leaf in leaves]

    def fn(*vals):
        return build_loss(*[Tensor(v) for v in vals]).data

    numeric = finite_difference_grad(fn, [v.copy() for v in values], step=step)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(1.0, np.abs(a) + np.abs(n))
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    assert worst < rtol, f"gradient mismatch: relative error {worst:.3e} >= {rtol:.1e}"
    return worst


def random_ball_points(rng: np.random.Generator, n: int, dim: int, max_norm: float = 0.8, c: float = 1.0) -> np.ndarray:
    """Uniform directions with radii up to ``max_norm / sqrt(c)``."""
    v = rng.normal(size=(n, dim))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    r = rng.uniform(0.0, max_norm / np.sqrt(c), size=(n, 1))
    return v * r

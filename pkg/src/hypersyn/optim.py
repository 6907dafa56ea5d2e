"""Adam optimizer with decoupled weight decay over named parameter dicts."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor


class NumericalAbort(RuntimeError):
    """Raised when gradients or the loss stop being finite."""


class Adam:
    """Decoupled-weight-decay Adam over a ``name -> Tensor`` parameter map.

    Moments are keyed by parameter name, so the update is deterministic
    given identical parameter values, gradients, and step count.
    """

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self._v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        """Apply one update to all parameters with populated gradients."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name in sorted(self.params):
            p = self.params[name]
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise NumericalAbort(f"non-finite gradient in parameter {name!r}")
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.data
            p.data = p.data - self.lr * update


def adam_step(
    params: dict[str, Tensor],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
    state: Adam | None = None,
) -> Adam:
    """Single functional Adam step; returns the carried optimizer state."""
    if state is None:
        state = Adam(params, lr, beta1, beta2, eps, weight_decay)
    state.lr = lr
    state.weight_decay = weight_decay
    state.step()
    return state

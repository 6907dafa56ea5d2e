"""Geometry backends the model layers are written against.

``PoincareBackend`` routes everything through the curved operations;
``EuclideanBackend`` replaces gyrovector addition with +, Mobius matrix
action with a plain matmul, pointwise Mobius products with elementwise
multiplication, and both maps with the identity. Swapping the backend is
how the flat-space ablation turns the whole network into its standard
Euclidean counterpart without touching the layer code.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import value_of
from . import ops


class PoincareBackend:
    name = "poincare"
    hyperbolic = True

    def __init__(self, kappa: float = -1.0):
        self.kappa = kappa

    def expmap0(self, v, kappa=None):
        return ops.expmap0(v, self.kappa if kappa is None else kappa)

    def logmap0(self, x, kappa=None):
        return ops.logmap0(x, self.kappa if kappa is None else kappa)

    def add(self, x, y, kappa=None):
        return ops.mobius_add(x, y, self.kappa if kappa is None else kappa)

    def matvec(self, w, x, kappa=None):
        return ops.mobius_matvec(w, x, self.kappa if kappa is None else kappa)

    def pointwise(self, x, y, kappa=None):
        return ops.mobius_pointwise(x, y, self.kappa if kappa is None else kappa)

    def scale_ew(self, gate, x, kappa=None):
        return ops.mobius_scale_ew(gate, x, self.kappa if kappa is None else kappa)

    def activation(self, x, fn, kappa_in=None, kappa_out=None):
        return ops.tangent_activation(
            x, fn, self.kappa if kappa_in is None else kappa_in, self.kappa if kappa_out is None else kappa_out
        )

    def midpoint(self, points, weights, kappa=None):
        """Einstein midpoint of ball points (weights may be a 0/1 mask)."""
        k = self.kappa if kappa is None else kappa
        return ops.poincare_midpoint(points, weights, k)

    def frechet(self, points, weights, kappa=None, tol: float = 1e-6, max_iter: int = 100):
        mean, _ = ops.frechet_mean(points, weights, self.kappa if kappa is None else kappa, tol=tol, max_iter=max_iter)
        return mean

    def attention_distance(self, centroid_tangent, points, kappa=None):
        """Geodesic distance between a tangent-parameterized centroid and
        ball points, computed in the Lorentz model."""
        k = self.kappa if kappa is None else kappa
        centroid = ops.to_lorentz(ops.expmap0(centroid_tangent, k), k)
        return ops.lorentz_distance(centroid, ops.to_lorentz(points, k), k)

    def contains(self, x, kappa=None) -> bool:
        k = self.kappa if kappa is None else kappa
        nrm = np.linalg.norm(value_of(x), axis=-1)
        return bool(np.all(nrm * np.sqrt(-k) < 1.0))


class EuclideanBackend:
    name = "euclidean"
    hyperbolic = False

    def __init__(self, kappa: float = -1.0):
        self.kappa = kappa  # kept for interface parity; unused

    @staticmethod
    def expmap0(v, kappa=None):
        return v

    @staticmethod
    def logmap0(x, kappa=None):
        return x

    @staticmethod
    def add(x, y, kappa=None):
        return x + y

    @staticmethod
    def matvec(w, x, kappa=None):
        return ad.matmul(x, ad.transpose(w))

    @staticmethod
    def pointwise(x, y, kappa=None):
        return x * y

    @staticmethod
    def scale_ew(gate, x, kappa=None):
        return gate * x

    @staticmethod
    def activation(x, fn, kappa_in=None, kappa_out=None):
        return fn(x)

    @staticmethod
    def midpoint(points, weights, kappa=None):
        w = ad.reshape(weights, value_of(weights).shape + (1,))
        total = ad.clip(ad.sum(w, axis=-2, keepdims=True), ops.NORM_FLOOR, None)
        return ad.sum(w / total * points, axis=-2)

    @staticmethod
    def frechet(points, weights, kappa=None, tol: float = 1e-6, max_iter: int = 100):
        return EuclideanBackend.midpoint(points, weights)

    @staticmethod
    def attention_distance(centroid_tangent, points, kappa=None):
        diff = points - centroid_tangent
        return ad.sqrt(ad.clip(ad.sum(diff * diff, axis=-1), ops.NORM_FLOOR**2, None))

    @staticmethod
    def contains(x, kappa=None) -> bool:
        return True


def make_backend(name: str, kappa: float = -1.0):
    if name == "poincare":
        return PoincareBackend(kappa)
    if name == "euclidean":
        return EuclideanBackend(kappa)
    raise ValueError(f"unknown geometry backend {name!r}")

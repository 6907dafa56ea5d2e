"""Poincare-ball geometry: array-level ops, typed points, model backends."""

from . import ops
from .backend import EuclideanBackend, PoincareBackend, make_backend
from .points import (
    Curvature,
    GeometryError,
    KleinVector,
    LorentzVector,
    PoincareVector,
    einstein_midpoint,
    exp_map,
    exp_map0,
    frechet_mean,
    from_klein,
    from_lorentz,
    hyp_distance,
    klein_distance,
    log_map,
    log_map0,
    lorentz_distance,
    mobius_add,
    mobius_matmul,
    mobius_pointwise,
    to_klein,
    to_lorentz,
)

__all__ = [
    "Curvature",
    "EuclideanBackend",
    "GeometryError",
    "KleinVector",
    "LorentzVector",
    "PoincareBackend",
    "PoincareVector",
    "einstein_midpoint",
    "exp_map",
    "exp_map0",
    "frechet_mean",
    "from_klein",
    "from_lorentz",
    "hyp_distance",
    "klein_distance",
    "log_map",
    "log_map0",
    "lorentz_distance",
    "make_backend",
    "mobius_add",
    "mobius_matmul",
    "mobius_pointwise",
    "ops",
    "to_klein",
    "to_lorentz",
]

"""Typed wrappers over the array-level geometry: curvature-tagged points in
the Poincare, Klein, and Lorentz models, with contract checks on every
public operation (dimension and curvature agreement, ball containment)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import ops


class GeometryError(ValueError):
    """Contract violation in a geometry operation (shape/curvature mismatch)."""


@dataclass(frozen=True)
class Curvature:
    """Strictly negative sectional curvature of a constant-curvature space."""

    kappa: float = -1.0

    def __post_init__(self):
        if not self.kappa < 0:
            raise GeometryError(f"curvature must be strictly negative, got {self.kappa}")

    @property
    def c(self) -> float:
        return -self.kappa

    @property
    def radius(self) -> float:
        return 1.0 / np.sqrt(self.c)


@dataclass(frozen=True)
class PoincareVector:
    """A point strictly inside the Poincare ball of the given curvature."""

    coords: np.ndarray
    curvature: Curvature = field(default_factory=Curvature)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", ops.project_to_ball(coords, self.curvature.kappa))

    @property
    def dim(self) -> int:
        return self.coords.shape[-1]

    @classmethod
    def origin(cls, dim: int, curvature: Curvature | None = None) -> "PoincareVector":
        return cls(np.zeros(dim), curvature or Curvature())


@dataclass(frozen=True)
class KleinVector:
    coords: np.ndarray
    curvature: Curvature = field(default_factory=Curvature)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        limit = self.curvature.radius
        nrm = np.linalg.norm(coords, axis=-1, keepdims=True)
        if (nrm >= limit).any():
            coords = coords * np.minimum(1.0, (1.0 - ops.BALL_EPS) * limit / np.maximum(nrm, ops.NORM_FLOOR))
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return self.coords.shape[-1]


@dataclass(frozen=True)
class LorentzVector:
    """Point on the upper hyperboloid sheet; time coordinate first."""

    coords: np.ndarray
    curvature: Curvature = field(default_factory=Curvature)

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.coords.shape[-1] - 1


def _check_pair(x: PoincareVector, y: PoincareVector) -> None:
    if x.dim != y.dim:
        raise GeometryError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if x.curvature != y.curvature:
        raise GeometryError(f"curvature mismatch: {x.curvature.kappa} vs {y.curvature.kappa}")


def mobius_add(x: PoincareVector, y: PoincareVector) -> PoincareVector:
    _check_pair(x, y)
    return PoincareVector(ops.mobius_add(x.coords, y.coords, x.curvature.kappa), x.curvature)


def mobius_matmul(w: np.ndarray, x: PoincareVector) -> PoincareVector:
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != x.dim:
        raise GeometryError(f"matrix columns {w.shape[-1]} != point dimension {x.dim}")
    return PoincareVector(ops.mobius_matvec(w, x.coords, x.curvature.kappa), x.curvature)


def mobius_pointwise(x: PoincareVector, y: PoincareVector) -> PoincareVector:
    _check_pair(x, y)
    return PoincareVector(ops.mobius_pointwise(x.coords, y.coords, x.curvature.kappa), x.curvature)


def exp_map(base: PoincareVector, v: np.ndarray) -> PoincareVector:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != base.dim:
        raise GeometryError(f"tangent dimension {v.shape[-1]} != point dimension {base.dim}")
    return PoincareVector(ops.expmap(base.coords, v, base.curvature.kappa), base.curvature)


def log_map(base: PoincareVector, y: PoincareVector) -> np.ndarray:
    _check_pair(base, y)
    return ops.logmap(base.coords, y.coords, base.curvature.kappa)


def exp_map0(v: np.ndarray, curvature: Curvature | None = None) -> PoincareVector:
    curvature = curvature or Curvature()
    return PoincareVector(ops.expmap0(np.asarray(v, dtype=np.float64), curvature.kappa), curvature)


def log_map0(y: PoincareVector) -> np.ndarray:
    return ops.logmap0(y.coords, y.curvature.kappa)


def hyp_distance(x: PoincareVector, y: PoincareVector) -> float | np.ndarray:
    _check_pair(x, y)
    d = ops.distance(x.coords, y.coords, x.curvature.kappa)
    return float(d) if np.ndim(d) == 0 else d


def to_klein(x: PoincareVector) -> KleinVector:
    return KleinVector(ops.to_klein(x.coords, x.curvature.kappa), x.curvature)


def from_klein(k: KleinVector) -> PoincareVector:
    return PoincareVector(ops.from_klein(k.coords, k.curvature.kappa), k.curvature)


def to_lorentz(x: PoincareVector) -> LorentzVector:
    return LorentzVector(ops.to_lorentz(x.coords, x.curvature.kappa), x.curvature)


def from_lorentz(xl: LorentzVector) -> PoincareVector:
    return PoincareVector(ops.from_lorentz(xl.coords, xl.curvature.kappa), xl.curvature)


def lorentz_distance(a: LorentzVector, b: LorentzVector) -> float:
    return float(ops.lorentz_distance(a.coords, b.coords, a.curvature.kappa))


def klein_distance(a: KleinVector, b: KleinVector) -> float:
    return float(ops.klein_distance(a.coords, b.coords, a.curvature.kappa))


def einstein_midpoint(points: list[KleinVector], weights) -> KleinVector:
    if not points:
        raise GeometryError("einstein_midpoint requires at least one point")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(points),):
        raise GeometryError(f"expected {len(points)} weights, got shape {weights.shape}")
    if (weights < 0).any():
        raise GeometryError("weights must be nonnegative")
    if not weights.sum() > 0:
        raise GeometryError("weights must not all be zero")
    curvature = points[0].curvature
    stacked = np.stack([p.coords for p in points])
    return KleinVector(ops.einstein_midpoint(stacked, weights, curvature.kappa), curvature)


def frechet_mean(
    points: list[PoincareVector],
    weights=None,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> PoincareVector:
    """Weighted Frechet mean; warns and falls back to the tangent-space
    mean at the origin if the Karcher flow does not converge."""
    if not points:
        raise GeometryError("frechet_mean requires at least one point")
    if weights is None:
        weights = np.ones(len(points))
    weights = np.asarray(weights, dtype=np.float64)
    curvature = points[0].curvature
    stacked = np.stack([p.coords for p in points])
    mean, converged = ops.frechet_mean(stacked, weights, curvature.kappa, tol=tol, max_iter=max_iter)
    if not np.all(converged):
        warnings.warn("Karcher flow did not converge; using tangent-space mean at the origin", RuntimeWarning)
    return PoincareVector(mean, curvature)

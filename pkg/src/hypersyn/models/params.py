"""Model configuration, parameter containers, initialization, checkpoints."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor

CHECKPOINT_VERSION = 1

VARIANTS = (
    "full",
    "no-dft",
    "no-hfan",
    "no-hgcn",
    "no-hfan-no-hgcn",
    "no-user-context",
    "unidirectional",
    "euclidean",
)


@dataclass(frozen=True)
class ModelConfig:
    """Structural description of one model instance."""

    d: int
    l: int = 16
    g: int = 16
    h: int = 32
    mlp_hidden: int = 32
    hgcn_layers: int = 2
    kappa: float = -1.0
    geometry: str = "poincare"
    use_dft: bool = True
    use_gru: bool = True
    use_hfan: bool = True
    use_hgcn: bool = True
    use_user_context: bool = True
    bidirectional: bool = True
    trainable_curvature: bool = False
    dropout: float = 0.41

    @property
    def user_input_dim(self) -> int:
        """Dimension entering the user-context stack (HGCN or projection)."""
        return self.l if self.use_hfan else self.d

    def for_variant(self, variant: str) -> "ModelConfig":
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        overrides = {
            "full": {},
            "no-dft": {"use_dft": False},
            "no-hfan": {"use_hfan": False},
            "no-hgcn": {"use_hgcn": False},
            "no-hfan-no-hgcn": {"use_hfan": False, "use_hgcn": False},
            "no-user-context": {"use_user_context": False},
            "unidirectional": {"bidirectional": False},
            "euclidean": {"geometry": "euclidean"},
        }[variant]
        return replace(self, **overrides)


@dataclass
class GruParams:
    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor


@dataclass
class HfanParams:
    w_in: Tensor  # (l, d) tangent projection of the mixed history rows
    gru: GruParams
    centroid: Tensor  # (l,) tangent parameterization of the attention centroid
    beta_raw: Tensor  # scalar; beta = softplus(beta_raw) > 0
    offset: Tensor  # scalar additive score offset


@dataclass
class HgcnParams:
    weights: list[Tensor]  # weights[i]: (dims[i+1], dims[i])
    kappa_raw: list[Tensor]  # per-boundary curvature parameters, len layers + 1

    def kappas(self, trainable: bool):
        """Strictly negative curvatures; -softplus keeps the sign under training."""
        out = []
        for raw in self.kappa_raw:
            if trainable:
                out.append(-1.0 * ad.log(1.0 + ad.exp(raw)))
            else:
                out.append(float(-np.log1p(np.exp(raw.data))))
        return out


@dataclass
class CshtGate:
    w: Tensor  # acts on the gate's own input (utterance or user vector)
    u: Tensor  # acts on the aggregated child hidden state
    b: Tensor


@dataclass
class CshtDirectionParams:
    w_fx: Tensor  # (h, d)
    w_fg: Tensor | None  # (h, g); absent without user context
    u_f: Tensor  # (h, h)
    b_f: Tensor
    gate_i: CshtGate
    gate_u: CshtGate
    gate_m: CshtGate | None
    gate_s: CshtGate | None
    gate_o: CshtGate


@dataclass
class CshtParams:
    up: CshtDirectionParams
    down: CshtDirectionParams


@dataclass
class ClassifierParams:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor


@dataclass
class ModelParams:
    config: ModelConfig
    hfan: HfanParams | None
    hgcn: HgcnParams | None
    user_proj: Tensor | None  # (g, user_input_dim) when the HGCN is bypassed
    csht: CshtParams
    classifier: ClassifierParams

    def named(self) -> dict[str, Tensor]:
        """Flat name -> Tensor map over every parameter present."""
        out: dict[str, Tensor] = {}

        def walk(prefix: str, obj) -> None:
            if obj is None:
                return
            if isinstance(obj, Tensor):
                out[prefix] = obj
                return
            if isinstance(obj, list):
                for i, item in enumerate(obj):
                    walk(f"{prefix}.{i}", item)
                return
            for f in fields(obj):
                if f.name == "config":
                    continue
                walk(f"{prefix}.{f.name}" if prefix else f.name, getattr(obj, f.name))

        walk("", self)
        return out

    def trainable(self) -> dict[str, Tensor]:
        named = self.named()
        if self.hgcn is not None and not self.config.trainable_curvature:
            named = {k: v for k, v in named.items() if ".kappa_raw." not in k}
        return named


def _linear(rng: np.random.Generator, out_dim: int, in_dim: int) -> Tensor:
    scale = 1.0 / np.sqrt(in_dim)
    return Tensor(rng.normal(0.0, scale, size=(out_dim, in_dim)), requires_grad=True)


def _bias(dim: int) -> Tensor:
    return Tensor(np.zeros(dim), requires_grad=True)


def _gru(rng: np.random.Generator, hidden: int) -> GruParams:
    return GruParams(
        w_z=_linear(rng, hidden, hidden), u_z=_linear(rng, hidden, hidden), b_z=_bias(hidden),
        w_r=_linear(rng, hidden, hidden), u_r=_linear(rng, hidden, hidden), b_r=_bias(hidden),
        w_h=_linear(rng, hidden, hidden), u_h=_linear(rng, hidden, hidden), b_h=_bias(hidden),
    )


def _csht_gate(rng: np.random.Generator, h: int, in_dim: int) -> CshtGate:
    return CshtGate(w=_linear(rng, h, in_dim), u=_linear(rng, h, h), b=_bias(h))


def _csht_direction(rng: np.random.Generator, cfg: ModelConfig) -> CshtDirectionParams:
    with_user = cfg.use_user_context
    return CshtDirectionParams(
        w_fx=_linear(rng, cfg.h, cfg.d),
        w_fg=_linear(rng, cfg.h, cfg.g) if with_user else None,
        u_f=_linear(rng, cfg.h, cfg.h),
        b_f=_bias(cfg.h),
        gate_i=_csht_gate(rng, cfg.h, cfg.d),
        gate_u=_csht_gate(rng, cfg.h, cfg.d),
        gate_m=_csht_gate(rng, cfg.h, cfg.g) if with_user else None,
        gate_s=_csht_gate(rng, cfg.h, cfg.g) if with_user else None,
        gate_o=_csht_gate(rng, cfg.h, cfg.g if with_user else cfg.d),
    )


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Fresh parameters for the given configuration; draws are consumed in a
    fixed order so identical (config, seed) yields identical values."""
    hfan = None
    hgcn = None
    user_proj = None
    if cfg.use_user_context:
        if cfg.use_hfan:
            hfan = HfanParams(
                w_in=_linear(rng, cfg.l, cfg.d),
                gru=_gru(rng, cfg.l),
                centroid=Tensor(rng.normal(0.0, 0.1, size=cfg.l), requires_grad=True),
                beta_raw=Tensor(np.log(np.e - 1.0), requires_grad=True),  # softplus -> 1
                offset=Tensor(0.0, requires_grad=True),
            )
        if cfg.use_hgcn:
            dims = [cfg.user_input_dim] + [cfg.g] * cfg.hgcn_layers
            kappa_raw_init = np.log(np.expm1(-cfg.kappa))  # softplus inverse
            hgcn = HgcnParams(
                weights=[_linear(rng, dims[i + 1], dims[i]) for i in range(cfg.hgcn_layers)],
                kappa_raw=[
                    Tensor(kappa_raw_init, requires_grad=cfg.trainable_curvature)
                    for _ in range(cfg.hgcn_layers + 1)
                ],
            )
        else:
            user_proj = _linear(rng, cfg.g, cfg.user_input_dim)

    csht = CshtParams(up=_csht_direction(rng, cfg), down=_csht_direction(rng, cfg))
    feat_dim = 2 * cfg.h + cfg.d
    classifier = ClassifierParams(
        w1=_linear(rng, cfg.mlp_hidden, feat_dim),
        b1=_bias(cfg.mlp_hidden),
        w2=_linear(rng, 2, cfg.mlp_hidden),
        b2=_bias(2),
    )
    return ModelParams(config=cfg, hfan=hfan, hgcn=hgcn, user_proj=user_proj, csht=csht, classifier=classifier)


def save_checkpoint(params: ModelParams, path: str) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": {f.name: getattr(params.config, f.name) for f in fields(ModelConfig)},
        "params": {
            name: {"shape": list(t.data.shape), "values": t.data.reshape(-1).tolist()}
            for name, t in sorted(params.named().items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path: str) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    cfg = ModelConfig(**payload["config"])
    params = init_params(cfg, np.random.default_rng(0))
    named = params.named()
    stored = payload["params"]
    if set(named) != set(stored):
        missing = set(named) ^ set(stored)
        raise ValueError(f"checkpoint parameter names do not match the config: {sorted(missing)[:5]}")
    for name, tensor in named.items():
        entry = stored[name]
        tensor.data = np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
    return params

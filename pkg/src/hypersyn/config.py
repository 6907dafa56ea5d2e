"""Run configuration with layered resolution: CLI flags override config-file
values, which override defaults; HYPERSYN_SEED is a last-resort seed source
consulted only when neither a flag nor the file provides one.

Defaults carry the reference hyperparameters (batch 32, context dim 512,
tree hidden 768, latent 100, lr 1.3e-2, weight decay 3.2e-4, dropout 0.41);
the ``desk`` profile shrinks the dimensions to laptop scale.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields

from .models import ModelConfig

ENV_SEED = "HYPERSYN_SEED"

DESK_OVERRIDES = {"hgcn_dim": 16, "csht_hidden": 32, "hfan_latent": 16, "mlp_hidden": 32}


@dataclass
class RunConfig:
    seed: int = 0
    corpus_dir: str = "corpus"
    out_dir: str = "run"
    variant: str = "full"
    profile: str = "reference"
    batch_trees: int = 32
    hgcn_dim: int = 512
    csht_hidden: int = 768
    hfan_latent: int = 100
    mlp_hidden: int = 64
    lr: float = 1.3e-2
    weight_decay: float = 3.2e-4
    dropout: float = 0.41
    max_epochs: int = 50
    patience: int = 10
    kappa: float = -1.0
    trainable_curvature: bool = False
    freeze_user_context: bool = False
    threshold: float = 0.5

    def to_dict(self) -> dict:
        return asdict(self)

    def model_config(self, d: int) -> ModelConfig:
        return ModelConfig(
            d=d,
            l=self.hfan_latent,
            g=self.hgcn_dim,
            h=self.csht_hidden,
            mlp_hidden=self.mlp_hidden,
            kappa=self.kappa,
            trainable_curvature=self.trainable_curvature,
            dropout=self.dropout,
        ).for_variant(self.variant)


def resolve_config(flags: dict | None = None, config_file: str | None = None) -> RunConfig:
    """Merge defaults, config-file entries, flags, and the env seed."""
    merged: dict = {}
    if config_file:
        with open(config_file, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(file_values) - known
        if unknown:
            raise ValueError(f"unknown config keys in {config_file}: {sorted(unknown)}")
        merged.update(file_values)
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    merged.update(flags)
    if "seed" not in merged and ENV_SEED in os.environ:
        merged["seed"] = int(os.environ[ENV_SEED])

    cfg = RunConfig(**merged)
    if cfg.profile == "desk":
        for key, value in DESK_OVERRIDES.items():
            if key not in merged:  # explicit settings beat the profile
                setattr(cfg, key, value)
    elif cfg.profile != "reference":
        raise ValueError(f"unknown profile {cfg.profile!r}; expected 'reference' or 'desk'")
    return cfg


def write_resolved_config(cfg: RunConfig, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "config.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path

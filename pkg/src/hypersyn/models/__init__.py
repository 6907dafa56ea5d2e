"""Model layers: Fourier-attention user encoder, graph convolution,
tree recursion, prediction head, parameters, checkpoints."""

from .classifier import bce_loss, classify, hate_probability
from .csht import TreeBatch, build_batch, csht_cell, csht_forward
from .hfan import attention_pool, encode_histories, gru_step, mean_history_vectors
from .hgcn import hgcn_forward, neighbor_table, normalize_adjacency, project_user_vectors
from .model import CorpusView, backend_for, forward_batch, predict_node, predict_tree, user_context
from .params import (
    VARIANTS,
    ModelConfig,
    ModelParams,
    init_params,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "CorpusView",
    "ModelConfig",
    "ModelParams",
    "TreeBatch",
    "VARIANTS",
    "attention_pool",
    "backend_for",
    "bce_loss",
    "build_batch",
    "classify",
    "csht_cell",
    "csht_forward",
    "encode_histories",
    "forward_batch",
    "gru_step",
    "hate_probability",
    "hgcn_forward",
    "init_params",
    "load_checkpoint",
    "mean_history_vectors",
    "neighbor_table",
    "normalize_adjacency",
    "predict_node",
    "predict_tree",
    "project_user_vectors",
    "save_checkpoint",
    "user_context",
]

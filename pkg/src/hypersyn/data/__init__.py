"""Corpus schema, IO, and synthetic generation."""

from .io import load_corpus, save_corpus
from .schema import (
    ConversationTree,
    Corpus,
    CorpusError,
    SocialGraph,
    UserRecord,
    Utterance,
)
from .synthetic import GeneratorConfig, barabasi_albert, generate_synthetic

__all__ = [
    "ConversationTree",
    "Corpus",
    "CorpusError",
    "GeneratorConfig",
    "SocialGraph",
    "UserRecord",
    "Utterance",
    "barabasi_albert",
    "generate_synthetic",
    "load_corpus",
    "save_corpus",
]

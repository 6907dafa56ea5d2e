"""Training and evaluation: loss over whole-tree batches, early stopping on
validation F1, checkpointed best parameters, subset metrics, and the
ablation harness that reruns the pipeline with one component switched."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, value_of
from .data.schema import Corpus
from .models import (
    CorpusView,
    ModelConfig,
    ModelParams,
    VARIANTS,
    backend_for,
    bce_loss,
    forward_batch,
    init_params,
    user_context,
)
from .optim import Adam, NumericalAbort


@dataclass
class MetricsReport:
    """Hate-class precision/recall/F1 overall, on the implicit pool, and on
    its comment (depth 1) and reply (depth >= 2) slices."""

    overall_f1: float
    overall_p: float
    overall_r: float
    implicit_f1: float
    implicit_p: float
    implicit_r: float
    comment_f1: float
    reply_f1: float
    n_nodes: int
    n_implicit_pool: int

    def to_dict(self) -> dict:
        return asdict(self)

    def row(self) -> list[float]:
        """Values in report column order."""
        return [
            self.overall_f1, self.overall_p, self.overall_r,
            self.implicit_f1, self.implicit_p, self.implicit_r,
            self.comment_f1, self.reply_f1,
        ]


METRIC_COLUMNS = [
    "overall_f1", "overall_p", "overall_r",
    "implicit_f1", "implicit_p", "implicit_r",
    "comment_f1", "reply_f1",
]


def precision_recall_f1(labels: np.ndarray, predicted: np.ndarray) -> tuple[float, float, float]:
    tp = float(np.sum((labels == 1) & (predicted == 1)))
    fp = float(np.sum((labels == 0) & (predicted == 1)))
    fn = float(np.sum((labels == 1) & (predicted == 0)))
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def compute_metrics(
    labels: np.ndarray,
    implicit: np.ndarray,
    depths: np.ndarray,
    probs: np.ndarray,
    threshold: float = 0.5,
) -> MetricsReport:
    """Metrics are pure in (labels, implicit, depths, probs); evaluation
    order cannot affect them.

    The implicit pool holds implicit-hate positives plus every non-hate
    node, so precision and recall stay well defined on the subset.
    """
    predicted = (probs >= threshold).astype(np.int64)
    op, orr, of1 = precision_recall_f1(labels, predicted)

    pool = (labels == 0) | ((labels == 1) & (implicit == 1))
    ip, ir, if1 = precision_recall_f1(labels[pool], predicted[pool])
    comment = pool & (depths == 1)
    reply = pool & (depths >= 2)
    _, _, cf1 = precision_recall_f1(labels[comment], predicted[comment])
    _, _, rf1 = precision_recall_f1(labels[reply], predicted[reply])
    return MetricsReport(
        overall_f1=of1, overall_p=op, overall_r=orr,
        implicit_f1=if1, implicit_p=ip, implicit_r=ir,
        comment_f1=cf1, reply_f1=rf1,
        n_nodes=int(labels.size), n_implicit_pool=int(pool.sum()),
    )


@dataclass
class TrainSettings:
    """Trainer-facing knobs (model dims live in ModelConfig)."""

    seed: int = 0
    lr: float = 1.3e-2
    weight_decay: float = 3.2e-4
    batch_trees: int = 32
    max_epochs: int = 50
    patience: int = 10
    threshold: float = 0.5
    freeze_user_context: bool = False


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val: MetricsReport

    def to_dict(self) -> dict:
        return {"epoch": self.epoch, "train_loss": self.train_loss, "val": self.val.to_dict()}


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochRecord]
    best_epoch: int
    diverged: bool = False
    flags: list[str] = None

    def __post_init__(self):
        if self.flags is None:
            self.flags = []


def _snapshot(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in params.named().items()}


def _restore(params: ModelParams, snapshot: dict[str, np.ndarray]) -> None:
    for name, t in params.named().items():
        t.data = snapshot[name].copy()


def _split_probs(corpus: Corpus, view: CorpusView, params: ModelParams, split: str, chunk: int = 64):
    """Evaluation-mode probabilities for all nodes of a split, plus the
    label/implicit/depth arrays needed for metrics."""
    backend = backend_for(params.config)
    users = user_context(view, params, backend)
    labels, implicit, depths, probs = [], [], [], []
    tree_ids = [t.id for t in corpus.trees]
    for start in range(0, len(tree_ids), chunk):
        batch = view.merged_batch(corpus, tree_ids[start : start + chunk])
        logits = forward_batch(batch, users, view, params, backend)
        p = value_of(ad.softmax(logits, axis=-1))[:, 0]
        keep = np.asarray([s == split for s in batch.splits])
        labels.append(batch.labels[keep])
        implicit.append(batch.implicit[keep])
        depths.append(batch.depths[keep])
        probs.append(p[keep])
    return (
        np.concatenate(labels),
        np.concatenate(implicit),
        np.concatenate(depths),
        np.concatenate(probs),
    )


def evaluate(corpus: Corpus, params: ModelParams, split: str = "test",
             threshold: float = 0.5, view: CorpusView | None = None) -> MetricsReport:
    """Metrics of a checkpoint on one split at the given threshold."""
    view = view or CorpusView.build(corpus)
    labels, implicit, depths, probs = _split_probs(corpus, view, params, split)
    if labels.size == 0:
        raise ValueError(f"corpus has no nodes in split {split!r}")
    return compute_metrics(labels, implicit, depths, probs, threshold)


def train(
    corpus: Corpus,
    model_cfg: ModelConfig,
    settings: TrainSettings,
    log=None,
    view: CorpusView | None = None,
) -> TrainResult:
    """Train with whole-tree batches and early stopping on validation F1.

    Deterministic given (corpus, model_cfg, settings): initialization,
    shuffling, and dropout all derive from ``settings.seed``. On numerical
    divergence the last finished epoch's parameters are restored and the
    result is flagged.
    """
    seeds = np.random.SeedSequence(settings.seed).spawn(2)
    rng_init = np.random.default_rng(seeds[0])
    rng_train = np.random.default_rng(seeds[1])

    params = init_params(model_cfg, rng_init)
    backend = backend_for(model_cfg)
    view = view or CorpusView.build(corpus)
    optimizer = Adam(params.trainable(), lr=settings.lr, weight_decay=settings.weight_decay)

    train_ids = [
        t.id for t in corpus.trees if any(n.split == "train" for n in t.nodes.values())
    ]
    if not train_ids:
        raise ValueError("corpus has no training trees")

    frozen_users = None
    if settings.freeze_user_context and model_cfg.use_user_context:
        frozen_users = Tensor(value_of(user_context(view, params, backend)))

    history: list[EpochRecord] = []
    best_f1 = -np.inf
    best_epoch = -1
    best_snap = _snapshot(params)
    last_good = _snapshot(params)
    patience_left = settings.patience
    diverged = False

    for epoch in range(settings.max_epochs):
        order = rng_train.permutation(train_ids)
        losses: list[float] = []
        counts: list[float] = []
        try:
            for start in range(0, len(order), settings.batch_trees):
                batch_ids = list(order[start : start + settings.batch_trees])
                if frozen_users is not None:
                    users = frozen_users
                else:
                    users = user_context(view, params, backend, rng_train, training=True)
                batch = view.merged_batch(corpus, batch_ids)
                mask = np.asarray([s == "train" for s in batch.splits], dtype=np.float64)
                if mask.sum() == 0:
                    continue
                logits = forward_batch(batch, users, view, params, backend, rng_train, training=True)
                loss = bce_loss(logits, batch.labels, mask)
                if not np.isfinite(loss.data):
                    raise NumericalAbort(f"non-finite loss at epoch {epoch}")
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                losses.append(float(loss.data))
                counts.append(float(mask.sum()))
        except NumericalAbort as exc:
            _restore(params, last_good)
            diverged = True
            if log is not None:
                log({"event": "abort", "epoch": epoch, "reason": str(exc)})
            break

        train_loss = float(np.average(losses, weights=counts)) if losses else float("nan")
        val = evaluate(corpus, params, "val", settings.threshold, view)
        history.append(EpochRecord(epoch, train_loss, val))
        if log is not None:
            log({"event": "epoch", "epoch": epoch, "train_loss": train_loss, "val": val.to_dict()})

        last_good = _snapshot(params)
        if val.overall_f1 > best_f1:
            best_f1 = val.overall_f1
            best_epoch = epoch
            best_snap = _snapshot(params)
            patience_left = settings.patience
        else:
            patience_left -= 1
            if patience_left <= 0:
                break

    flags = []
    if len(history) >= 5 and not history[4].train_loss < history[0].train_loss:
        flags.append("loss-not-decreasing")
        if log is not None:
            log({"event": "flag", "flag": "loss-not-decreasing",
                 "first": history[0].train_loss, "fifth": history[4].train_loss})
    if not diverged:
        _restore(params, best_snap)
    return TrainResult(params=params, history=history, best_epoch=best_epoch, diverged=diverged, flags=flags)


def run_ablation(
    corpus: Corpus,
    base_cfg: ModelConfig,
    settings: TrainSettings,
    variant: str,
    log=None,
    view: CorpusView | None = None,
) -> tuple[MetricsReport, TrainResult]:
    """Train and evaluate one configuration with a single component
    switched; everything else (seed, data, budget) stays identical."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    cfg = base_cfg.for_variant(variant)
    result = train(corpus, cfg, settings, log=log, view=view)
    report = evaluate(corpus, result.params, "test", settings.threshold, view)
    return report, result

"""Command-line entry point.

Subcommands: generate, train, evaluate, ablate, analyze-graph. Every run
writes its resolved configuration and a structured JSONL log next to its
outputs, so any artifact is reproducible from config.json plus the seed.

Exit codes: 0 success, 1 usage error, 2 data validation error,
3 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .config import ENV_SEED, RunConfig, resolve_config, write_resolved_config
from .data import CorpusError, GeneratorConfig, generate_synthetic, load_corpus, save_corpus
from .graphstats import GraphAnalysisError, analyze_graph
from .models import CorpusView, load_checkpoint, save_checkpoint
from .optim import NumericalAbort
from .reporting import (
    RunLogger,
    plot_degree_distribution,
    plot_metric_bars,
    plot_training_curves,
    write_metrics,
)
from .training import TrainSettings, evaluate, run_ablation, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

ABLATION_ORDER = [
    ("full", "full"),
    ("no-dft", "- DFT"),
    ("no-hfan", "- HFAN"),
    ("no-hgcn", "- HGCN"),
    ("no-hfan-no-hgcn", "- HFAN - HGCN"),
    ("no-user-context", "- user context"),
    ("unidirectional", "bi -> uni"),
    ("euclidean", "hyperbolic -> euclidean"),
]


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; the contract wants 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", choices=["reference", "desk"])
    p.add_argument("--variant")
    p.add_argument("--batch-trees", type=int, dest="batch_trees")
    p.add_argument("--hgcn-dim", type=int, dest="hgcn_dim")
    p.add_argument("--csht-hidden", type=int, dest="csht_hidden")
    p.add_argument("--hfan-latent", type=int, dest="hfan_latent")
    p.add_argument("--mlp-hidden", type=int, dest="mlp_hidden")
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float, dest="weight_decay")
    p.add_argument("--dropout", type=float)
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--patience", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--trainable-curvature", action="store_const", const=True, dest="trainable_curvature")
    p.add_argument("--freeze-user-context", action="store_const", const=True, dest="freeze_user_context")
    p.add_argument("--threshold", type=float)


def build_parser() -> _Parser:
    parser = _Parser(prog="hypersyn", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    gen = sub.add_parser("generate", help="write a synthetic corpus")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--n-users", type=int, default=300)
    gen.add_argument("--n-trees", type=int, default=500)
    gen.add_argument("--d", type=int, default=16)
    gen.add_argument("--hateful-fraction", type=float, default=0.5)
    gen.add_argument("--homophily", type=float, default=0.7)
    gen.add_argument("--context-sensitivity", type=float, default=1.0)
    gen.add_argument("--tree-size-mean", type=float, default=6.0)

    tr = sub.add_parser("train", help="train on a corpus directory")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--out", required=True)
    _add_run_flags(tr)

    ev = sub.add_parser("evaluate", help="evaluate a checkpoint")
    ev.add_argument("--corpus", required=True)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--split", default="test", choices=["train", "val", "test"])
    ev.add_argument("--threshold", type=float, default=0.5)

    ab = sub.add_parser("ablate", help="run the ablation battery")
    ab.add_argument("--corpus", required=True)
    ab.add_argument("--out", required=True)
    ab.add_argument("--ablation-variant", dest="ablation_variant", default="all",
                    help="'all' or one variant name")
    _add_run_flags(ab)

    an = sub.add_parser("analyze-graph", help="power-law fit and hyperbolicity")
    an.add_argument("--input", required=True,
                    help="a social_edges.jsonl path, or a tree id resolved against --corpus")
    an.add_argument("--corpus", help="corpus directory used to resolve a tree id")
    an.add_argument("--report", required=True, help="output JSON path")
    an.add_argument("--seed", type=int, default=0)
    return parser


def _flag_dict(args: argparse.Namespace) -> dict:
    keys = [
        "seed", "profile", "variant", "batch_trees", "hgcn_dim", "csht_hidden",
        "hfan_latent", "mlp_hidden", "lr", "weight_decay", "dropout", "max_epochs",
        "patience", "kappa", "trainable_curvature", "freeze_user_context", "threshold",
    ]
    return {k: getattr(args, k, None) for k in keys}


def _settings(cfg: RunConfig) -> TrainSettings:
    return TrainSettings(
        seed=cfg.seed,
        lr=cfg.lr,
        weight_decay=cfg.weight_decay,
        batch_trees=cfg.batch_trees,
        max_epochs=cfg.max_epochs,
        patience=cfg.patience,
        threshold=cfg.threshold,
        freeze_user_context=cfg.freeze_user_context,
    )


def cmd_generate(args) -> int:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get(ENV_SEED, "0"))
    cfg = GeneratorConfig(
        n_users=args.n_users,
        n_trees=args.n_trees,
        d=args.d,
        seed=seed,
        hateful_fraction=args.hateful_fraction,
        homophily=args.homophily,
        context_sensitivity=args.context_sensitivity,
        tree_size_mean=args.tree_size_mean,
    )
    corpus = generate_synthetic(cfg)
    save_corpus(corpus, args.out)
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump({"generator": cfg.__dict__ | {"split_fractions": list(cfg.split_fractions)}},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote corpus ({len(corpus.trees)} trees, {len(corpus.users)} users) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(_flag_dict(args), args.config)
    cfg.corpus_dir = args.corpus
    cfg.out_dir = args.out
    corpus = load_corpus(args.corpus)
    write_resolved_config(cfg, args.out)
    log = RunLogger(os.path.join(args.out, "run_log.jsonl"))
    log({"event": "start", "command": "train", "variant": cfg.variant, "seed": cfg.seed})

    result = train(corpus, cfg.model_config(corpus.dim), _settings(cfg), log=log)
    checkpoint_path = os.path.join(args.out, "checkpoint.json")
    save_checkpoint(result.params, checkpoint_path)
    report = evaluate(corpus, result.params, "test", cfg.threshold)
    write_metrics([(cfg.variant, report)], args.out)
    if result.history:
        plot_training_curves(result.history, os.path.join(args.out, "figures"))
    log({"event": "done", "best_epoch": result.best_epoch, "diverged": result.diverged,
         "test": report.to_dict()})
    log.close()
    print(f"best epoch {result.best_epoch}; test overall F1 {report.overall_f1:.4f}; "
          f"checkpoint at {checkpoint_path}")
    if result.diverged:
        print("training aborted on non-finite loss; kept last good checkpoint", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_evaluate(args) -> int:
    corpus = load_corpus(args.corpus)
    params = load_checkpoint(args.checkpoint)
    report = evaluate(corpus, params, args.split, args.threshold)
    paths = write_metrics([(args.split, report)], args.out)
    plot_metric_bars([(args.split, report)], os.path.join(args.out, "figures"), stem="evaluation")
    print(open(paths["txt"], encoding="utf-8").read(), end="")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = resolve_config(_flag_dict(args), args.config)
    cfg.corpus_dir = args.corpus
    cfg.out_dir = args.out
    corpus = load_corpus(args.corpus)
    write_resolved_config(cfg, args.out)
    view = CorpusView.build(corpus)

    if args.ablation_variant == "all":
        chosen = ABLATION_ORDER
    else:
        labels = dict(ABLATION_ORDER)
        if args.ablation_variant not in labels:
            raise SystemExit(EXIT_USAGE)
        chosen = [(args.ablation_variant, labels[args.ablation_variant])]

    rows = []
    base = cfg.model_config(corpus.dim)
    for variant, label in chosen:
        log = RunLogger(os.path.join(args.out, f"run_log_{variant}.jsonl"))
        log({"event": "start", "command": "ablate", "variant": variant, "seed": cfg.seed})
        report, result = run_ablation(corpus, base, _settings(cfg), variant, log=log, view=view)
        save_checkpoint(result.params, os.path.join(args.out, f"checkpoint_{variant}.json"))
        log({"event": "done", "variant": variant, "test": report.to_dict(),
             "ball_containment_checked": variant != "euclidean"})
        log.close()
        rows.append((label, report))

    paths = write_metrics(rows, args.out, stem="ablation")
    plot_metric_bars(rows, os.path.join(args.out, "figures"))
    print(open(paths["txt"], encoding="utf-8").read(), end="")
    return EXIT_OK


def cmd_analyze_graph(args) -> int:
    if os.path.exists(args.input):
        edges = []
        with open(args.input, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    edges.append((str(rec["src"]), str(rec["dst"])))
                except (json.JSONDecodeError, KeyError) as exc:
                    raise CorpusError(f"bad edge record: {exc}", file=args.input, line=line_no)
    else:
        if not args.corpus:
            raise SystemExit(EXIT_USAGE)
        corpus = load_corpus(args.corpus)
        match = [t for t in corpus.trees if t.id == args.input]
        if not match:
            raise CorpusError(f"tree id {args.input!r} not found in {args.corpus}")
        edges = [(p, c) for p, c, _ in match[0].edges()]

    report = analyze_graph(edges, seed=args.seed)
    out_dir = os.path.dirname(args.report) or "."
    os.makedirs(out_dir, exist_ok=True)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    degree: dict[str, int] = {}
    for u, v in edges:
        if u != v:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
    degrees = sorted(degree.values())
    with open(os.path.join(out_dir, "degrees.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["degree", "count"])
        for value, count in zip(*np.unique(np.asarray(degrees), return_counts=True)):
            writer.writerow([int(value), int(count)])
    plot_degree_distribution(degrees, report, out_dir)
    gamma_txt = f"{report.gamma:.3f}" if report.gamma is not None else f"n/a ({report.fit_error})"
    print(f"gamma={gamma_txt} xmin={report.xmin} delta={report.delta:g} "
          f"({'exact' if report.delta_exact else 'sampled lower bound'})")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    handlers = {
        "generate": cmd_generate,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "ablate": cmd_ablate,
        "analyze-graph": cmd_analyze_graph,
    }
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    except (CorpusError, GraphAnalysisError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

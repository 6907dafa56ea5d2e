"""Report rendering: metric tables (aligned text + CSV + JSON) and the
figures that accompany them (training curves, ablation bars, degree
distributions with the fitted power law).

Figures render through the Agg backend straight to files; nothing opens a
display. Every writer returns the path it wrote.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graphstats import ScaleFreeReport
from .training import METRIC_COLUMNS, EpochRecord, MetricsReport

TABLE_HEADER = ["F1", "P", "R", "F1", "P", "R", "Comment F1", "Reply F1"]


def metrics_table(rows: list[tuple[str, MetricsReport]]) -> str:
    """Aligned text table: overall block, then the implicit block."""
    label_width = max(len("Model"), max(len(name) for name, _ in rows))
    widths = [max(len(h), 7) for h in TABLE_HEADER]
    group = f"{'':{label_width}}  {'Overall':^{widths[0] + widths[1] + widths[2] + 4}}  {'Implicit':^{sum(widths[3:]) + 2 * 4 + 2}}"
    header = f"{'Model':{label_width}}  " + "  ".join(h.rjust(w) for h, w in zip(TABLE_HEADER, widths))
    lines = [group, header, "-" * len(header)]
    for name, report in rows:
        cells = "  ".join(f"{v:{w}.4f}" for v, w in zip(report.row(), widths))
        lines.append(f"{name:{label_width}}  {cells}")
    return "\n".join(lines) + "\n"


def write_metrics(rows: list[tuple[str, MetricsReport]], out_dir: str, stem: str = "metrics") -> dict[str, str]:
    """Write the same rows as JSON, CSV, and aligned text."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({name: report.to_dict() for name, report in rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["json"] = json_path

    csv_path = os.path.join(out_dir, f"{stem}.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model"] + METRIC_COLUMNS)
        for name, report in rows:
            writer.writerow([name] + [f"{v:.6f}" for v in report.row()])
    paths["csv"] = csv_path

    txt_path = os.path.join(out_dir, f"{stem}.txt")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(metrics_table(rows))
    paths["txt"] = txt_path
    return paths


def plot_training_curves(history: list[EpochRecord], out_dir: str, stem: str = "training") -> str:
    os.makedirs(out_dir, exist_ok=True)
    epochs = [rec.epoch for rec in history]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(epochs, [rec.train_loss for rec in history], marker="o", ms=3)
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train BCE")
    ax2.plot(epochs, [rec.val.overall_f1 for rec in history], marker="o", ms=3, label="overall")
    ax2.plot(epochs, [rec.val.implicit_f1 for rec in history], marker="s", ms=3, label="implicit")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("val F1 (hate)")
    ax2.set_ylim(-0.02, 1.02)
    ax2.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_metric_bars(rows: list[tuple[str, MetricsReport]], out_dir: str, stem: str = "ablation") -> str:
    os.makedirs(out_dir, exist_ok=True)
    names = [name for name, _ in rows]
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(names)), 3.6))
    ax.bar(x - 0.2, [r.overall_f1 for _, r in rows], width=0.4, label="overall F1")
    ax.bar(x + 0.2, [r.implicit_f1 for _, r in rows], width=0.4, label="implicit F1")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_degree_distribution(degrees: list[int], report: ScaleFreeReport, out_dir: str,
                             stem: str = "degrees") -> str:
    """Log-log degree frequencies with the fitted power-law slope overlaid
    and the hyperbolicity annotated."""
    os.makedirs(out_dir, exist_ok=True)
    values, counts = np.unique(np.asarray(degrees), return_counts=True)
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    ax.loglog(values, counts, "o", ms=4, alpha=0.7, label="degrees")
    if report.gamma is not None:
        tail = values[values >= report.xmin].astype(np.float64)
        if tail.size:
            match = counts[np.searchsorted(values, report.xmin)]
            ax.loglog(tail, match * (tail / report.xmin) ** (-report.gamma), "--",
                      label=f"fit gamma={report.gamma:.2f}")
    flag = "" if report.delta_exact else " (sampled lower bound)"
    ax.set_title(f"delta = {report.delta:g}{flag}", fontsize=9)
    ax.set_xlabel("degree")
    ax.set_ylabel("frequency")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


class RunLogger:
    """Structured JSONL event log, one object per line."""

    def __init__(self, path: str):
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        self.path = path
        self._fh = open(path, "w", encoding="utf-8")

    def __call__(self, event: dict) -> None:
        self._fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

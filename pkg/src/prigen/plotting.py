"""Report figures: training loss curves and per-LOC-bucket scores."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed metadata keeps PNG bytes stable across runs
_PNG_META = {"Software": None}

STYLE = {
    "figure.figsize": (5.0, 3.2),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_PNG_META)
    plt.close(fig)


def plot_losses(losses, path, val_losses=None, title="Training loss"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        epochs = range(1, len(losses) + 1)
        ax.plot(epochs, losses, marker="o", markersize=3, label="train")
        if val_losses:
            ax.plot(range(1, len(val_losses) + 1), val_losses, marker="s", markersize=3,
                    label="validation")
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean token cross-entropy")
        ax.set_title(title)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_loc_buckets(reports: dict, path, title="Scores by lines of code"):
    """Grouped bars of BLEU-4 and ROUGE-F1 (x100) for each LOC bucket."""
    labels = list(reports)
    bleu = [100 * reports[k].bleu4 for k in labels]
    rouge = [100 * reports[k].rouge_f1 for k in labels]
    xs = range(len(labels))
    w = 0.38
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar([x - w / 2 for x in xs], bleu, w, label="BLEU-4")
        ax.bar([x + w / 2 for x in xs], rouge, w, label="ROUGE-L F1")
        ax.set_xticks(list(xs))
        ax.set_xticklabels([f"{k}\n(n={reports[k].pair_count})" for k in labels])
        ax.set_xlabel("lines of code")
        ax.set_ylabel("score (x100)")
        ax.set_ylim(0, 100)
        ax.set_title(title)
        ax.legend(frameon=False)
        _save(fig, path)

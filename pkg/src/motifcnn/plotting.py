"""Figures written next to the text reports (headless, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .training import TrainReport  # noqa: E402

_STYLE = {
    "figure.figsize": (5.0, 3.2),
    "figure.dpi": 120,
    "axes.linewidth": 0.6,
    "font.size": 9,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no software/version stamp, so reruns give the same bytes
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_loss_curve(report: TrainReport, path, title: str | None = None) -> Path:
    """Train and validation loss per epoch, with the restored epoch marked."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(report.epochs, report.train_loss, lw=1.0, label="train")
        ax.plot(report.epochs, report.val_loss, lw=1.0, label="validation")
        if report.chosen_epoch:
            ax.axvline(report.chosen_epoch, color="0.5", lw=0.6, ls="--", label=f"best epoch {report.chosen_epoch}")
        ax.set_xlabel("epoch")
        ax.set_ylabel("summed loss")
        if report.train_loss and min(report.train_loss + report.val_loss) > 0:
            ax.set_yscale("log")
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_instance_histogram(counts: np.ndarray, path, title: str | None = None) -> Path:
    """Distribution of per-node instance counts for one motif."""
    counts = np.asarray(counts)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        top = int(counts.max()) if len(counts) else 0
        ax.hist(counts, bins=np.arange(top + 2) - 0.5 if top < 60 else 60, color="0.35")
        ax.set_xlabel("instances per node")
        ax.set_ylabel("nodes")
        if title:
            ax.set_title(title)
        return _save(fig, path)

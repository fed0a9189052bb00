"""Figure rendering for the CLI report paths.

Every figure is written straight to a file with fixed metadata so repeated
runs produce identical bytes. Matplotlib runs on the Agg backend; nothing
here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": None}  # strip the version banner for reproducible bytes


def _save(fig, path) -> None:
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def plot_label_distribution(rows: list[tuple[str, int, float]], path, title: str = "Label distribution") -> None:
    """Bar chart of per-role sentence counts from corpus_stats rows."""
    names = [r[0] for r in rows]
    counts = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(names, counts, color="#4878a8")
    ax.set_ylabel("sentences")
    ax.set_title(title)
    for i, c in enumerate(counts):
        ax.text(i, c, f"{c}", ha="center", va="bottom", fontsize=8)
    _save(fig, path)


def plot_loss_curve(curve: list[float], path, title: str = "Training loss") -> None:
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(range(1, len(curve) + 1), curve, marker="." if len(curve) <= 50 else None)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean per-document loss")
    ax.set_title(title)
    _save(fig, path)


def plot_confusion(confusion: np.ndarray, labels: list[str], path,
                   title: str = "Confusion matrix") -> None:
    """Heatmap of gold (rows) vs predicted (columns) counts."""
    fig, ax = plt.subplots(figsize=(5.4, 4.8))
    im = ax.imshow(confusion, cmap="Blues")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(title)
    threshold = confusion.max() / 2 if confusion.max() > 0 else 0.5
    for i in range(confusion.shape[0]):
        for j in range(confusion.shape[1]):
            ax.text(j, i, str(int(confusion[i, j])), ha="center", va="center", fontsize=7,
                    color="white" if confusion[i, j] > threshold else "black")
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, path)


def plot_fold_scores(scores: list[float], path, title: str = "Macro-F1 by fold") -> None:
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    ax.bar([f"fold {i}" for i in range(len(scores))], scores, color="#6a9a58")
    ax.axhline(float(np.mean(scores)), linestyle="--", color="#444444", linewidth=1,
               label=f"mean {np.mean(scores):.3f}")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("macro-F1")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_pair_agreement(per_pair: dict, path, title: str = "Inter-annotator agreement") -> None:
    """Grouped bars of per-pair precision/recall/F."""
    pairs = sorted(per_pair)
    x = np.arange(len(pairs))
    width = 0.25
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for offset, (idx, label) in zip((-width, 0.0, width),
                                    enumerate(("precision", "recall", "f_score"))):
        ax.bar(x + offset, [per_pair[p][idx] for p in pairs], width, label=label)
    ax.set_xticks(x, [f"{a}-{b}" for a, b in pairs])
    ax.set_ylim(0.0, 1.05)
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, path)

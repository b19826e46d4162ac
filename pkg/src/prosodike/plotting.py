"""Figure rendering for CLI reports (files only, non-interactive backend)."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .control import DELTA_STREAMS, DeltaReport  # noqa: E402

UNITS = {"pitch": "Hz", "energy": "dB", "duration": "frames"}


def plot_deltas(reports: Sequence[DeltaReport], path, title: str = "") -> None:
    """Change of mean (top) and std (bottom) per stream against the bias."""
    biases = [r.bias for r in reports]
    fig, axes = plt.subplots(2, 3, figsize=(10, 5.5), sharex=True)
    for j, s in enumerate(DELTA_STREAMS):
        dm = [r.row(s).delta_mean for r in reports]
        ds = [r.row(s).delta_std for r in reports]
        for ax, ys, label in ((axes[0, j], dm, "Δ mean"), (axes[1, j], ds, "Δ std")):
            ax.axhline(0.0, color="0.7", lw=0.8)
            ax.plot(biases, ys, marker="o")
            ax.set_ylabel(f"{label} ({UNITS[s]})")
        axes[0, j].set_title(s)
        axes[1, j].set_xlabel("bias")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_scaleogram(coefficients: np.ndarray, scales: np.ndarray, path, signal: np.ndarray | None = None) -> None:
    rows = 2 if signal is not None else 1
    fig, axes = plt.subplots(rows, 1, figsize=(9, 2.5 + 2 * rows), squeeze=False, sharex=True)
    if signal is not None:
        axes[0, 0].plot(signal, lw=1)
        axes[0, 0].set_ylabel("composite")
    ax = axes[-1, 0]
    lim = float(np.abs(coefficients).max()) or 1.0
    ax.imshow(coefficients, aspect="auto", origin="lower", cmap="RdBu_r", vmin=-lim, vmax=lim,
              interpolation="nearest")
    ax.set_yticks(range(len(scales)))
    ax.set_yticklabels([f"{s:.1f}" for s in scales])
    ax.set_ylabel("scale (frames)")
    ax.set_xlabel("frame")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_loss(history: Sequence[dict[str, float]], path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    steps = [h["step"] for h in history]
    for key in ("total", "emphasis", "duration", "pitch", "energy"):
        ax.plot(steps, [h[key] for h in history], lw=1, label=key)
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)

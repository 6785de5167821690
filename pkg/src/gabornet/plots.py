"""Figure rendering for the CLI report paths.

Each dump that writes delimited text also gets a rendered figure next to it:
training curves for the history CSV, squared-magnitude curves for the
frequency dump, and an initial-vs-learned frequency scatter for the filter
records.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_history_plot(history, path) -> None:
    """Loss and training accuracy against the epoch index."""
    epochs = [h.epoch for h in history]
    fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax_acc.plot(epochs, [h.train_acc for h in history], color="tab:red")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("training accuracy")
    ax_acc.set_ylim(0, 1.02)
    ax_loss.plot(epochs, [h.loss for h in history], color="tab:blue")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    for ax in (ax_acc, ax_loss):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_freq_response_plot(omega, sq_cos, sq_sin, omega0, sigma, phase, path) -> None:
    """Squared frequency magnitudes of the enveloped cosine and sine harmonics."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(omega, sq_cos, label="cosine harmonic", color="tab:blue")
    ax.plot(omega, sq_sin, label="sine harmonic", color="tab:orange", ls="--")
    ax.set_xlabel("frequency (rad/pixel)")
    ax.set_ylabel("squared magnitude")
    ax.set_title(f"omega0={omega0:.4g}, sigma={sigma:.4g}, P={phase:.4g}")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_frequency_scatter(records, path) -> None:
    """Initial vs learned kernel frequencies in the (omega*cos(theta),
    omega*sin(theta)) plane, with reference circles at the init magnitudes."""
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    init_x = [r.omega0 * np.cos(r.theta0) for r in records]
    init_y = [r.omega0 * np.sin(r.theta0) for r in records]
    learned_x = [r.omega * np.cos(r.theta) for r in records]
    learned_y = [r.omega * np.sin(r.theta) for r in records]
    for radius in sorted({r.omega0 for r in records}):
        circle = plt.Circle((0, 0), radius, fill=False, color="0.8", lw=0.8)
        ax.add_patch(circle)
    ax.scatter(learned_x, learned_y, s=12, color="tab:blue", label="learned", zorder=3)
    ax.scatter(init_x, init_y, s=28, facecolors="none", edgecolors="tab:red",
               label="initial", zorder=4)
    coords = np.abs(np.asarray(init_x + init_y + learned_x + learned_y, dtype=float))
    lim = 1.1 * max(coords.max() if coords.size else 1.0, 1e-3)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel("omega_x (rad/pixel)")
    ax.set_ylabel("omega_y (rad/pixel)")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)

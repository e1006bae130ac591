"""Figures written next to the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def spectrum_figure(values, radius: float, path, informative=()) -> None:
    """Eigenvalues in the complex plane with the bulk circle."""
    values = np.asarray(values, dtype=complex)
    fig, ax = plt.subplots(figsize=(5, 5))
    t = np.linspace(0, 2 * np.pi, 400)
    ax.plot(radius * np.cos(t), radius * np.sin(t), "k--", lw=0.8, label="bulk radius")
    mask = np.zeros(len(values), dtype=bool)
    mask[list(informative)] = True
    ax.scatter(values[~mask].real, values[~mask].imag, s=8, c="tab:blue", label="bulk")
    if mask.any():
        ax.scatter(values[mask].real, values[mask].imag, s=24, c="tab:red", label="outliers")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def phase_figure(ratio, mean, stderr, path) -> None:
    """Mean overlap against the ratio (q-1) mu^2 / d, with the threshold at 1."""
    ratio = np.asarray(ratio, dtype=float)
    mean = np.asarray(mean, dtype=float)
    err = np.nan_to_num(np.asarray(stderr, dtype=float))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ratio, mean, yerr=err, marker="o", capsize=3)
    ax.axvline(1.0, color="k", ls="--", lw=0.8, label="threshold")
    ax.set_xlabel("(q-1) mu^2 / d")
    ax.set_ylabel("overlap")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def embedding_figure(X, labels, path) -> None:
    """First two embedding coordinates coloured by partition."""
    X = np.asarray(X)
    fig, ax = plt.subplots(figsize=(5, 5))
    if X.shape[1] >= 2:
        ax.scatter(X[:, 0], X[:, 1], s=4, c=labels, cmap="tab10")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    elif X.shape[1] == 1:
        ax.scatter(np.arange(len(X)), X[:, 0], s=4, c=labels, cmap="tab10")
        ax.set_xlabel("vertex")
        ax.set_ylabel("x1")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

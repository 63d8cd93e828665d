"""Static vector plots of the emitted CSV data.

Purely presentational; no numeric results originate here.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, ax, path, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_time_sweep(path, t_e, p_g, title, overlay=None):
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(np.asarray(t_e) * 1e6, p_g, lw=0.8, color="crimson")
    if overlay is not None:
        ax.plot(np.asarray(overlay[0]) * 1e6, overlay[1], lw=0.8, color="gray", alpha=0.7)
    ax.set_ylim(0, 1)
    _finish(fig, ax, path, "effective interaction time (us)", "P_g", title)


def plot_alpha_sweep(path, alpha, p_g, title):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(alpha, p_g, "o-", ms=2.5, lw=0.8, color="navy")
    _finish(fig, ax, path, "displacement amplitude", "P_g", title)


def plot_spectrum(path, freq_hz, magnitude, title, markers=None):
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(np.asarray(freq_hz) / 1e3, magnitude, lw=0.8, color="black")
    if markers is not None:
        for f in markers:
            ax.axvline(f / 1e3, color="steelblue", ls=":", lw=0.6)
    ax.set_xlim(0, 300)
    _finish(fig, ax, path, "frequency (kHz)", "magnitude", title)


def plot_distribution(path, p, title, reference=None, reference_label="reference"):
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    n = np.arange(len(p))
    ax.bar(n, p, color="seagreen", alpha=0.8, label="extracted")
    if reference is not None:
        ax.plot(np.arange(len(reference)), reference, "k.-", lw=0.8, label=reference_label)
        ax.legend(frameon=False)
    _finish(fig, ax, path, "photon number n", "p(n)", title)


def plot_decoherence(path, groups, title):
    """groups: list of (label, t_e, p_g)."""
    fig, axes = plt.subplots(len(groups), 1, figsize=(6.5, 2.0 * len(groups)), sharex=True)
    if len(groups) == 1:
        axes = [axes]
    for ax, (label, t_e, p_g) in zip(axes, groups):
        ax.plot(np.asarray(t_e) * 1e6, p_g, lw=0.8, color="crimson")
        ax.set_ylabel("P_g")
        ax.text(0.02, 0.85, label, transform=ax.transAxes, fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("effective interaction time (us)")
    axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_fit(path, t_i, data, model, title):
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(np.asarray(t_i) * 1e6, data, ".", ms=2, color="black", label="data")
    ax.plot(np.asarray(t_i) * 1e6, model, lw=1.0, color="crimson", label="fit")
    ax.legend(frameon=False)
    _finish(fig, ax, path, "interaction time (us)", "P_g", title)

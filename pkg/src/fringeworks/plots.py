"""Figure rendering for the CLI report path.

Every report command can drop a PNG next to its delimited output; the PNG
metadata is pinned so identical runs stay byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import VisibilityTrace
from .dynamics import Trajectory
from .pattern import IntensityProfile

_SAVE_KW = dict(dpi=150, metadata={"Software": "fringeworks"})


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_trajectory(path: Path, traj: Trajectory, overlap_times, gamma_ansatz, gamma_model) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(traj.ts, traj.ys[:, 0], label="A")
    ax1.plot(traj.ts, traj.ys[:, 1], label="B")
    ax1.plot(traj.ts, traj.ys[:, 2], label="C")
    ax1.set_xlabel("t")
    ax1.set_ylabel("coefficient")
    ax1.legend()
    ax1.set_title("ansatz coefficients")

    ax2.plot(overlap_times, gamma_ansatz, label=r"$\Gamma$ (ansatz)")
    ax2.plot(overlap_times, gamma_model, "--", label=r"$\Gamma$ (model)")
    ax2.axhline(np.exp(-1.0), color="grey", lw=0.8, label="1/e")
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"$\Gamma(t)$")
    ax2.set_ylim(0.0, 1.05)
    ax2.legend()
    ax2.set_title("overlap factor")
    fig.tight_layout()
    return _save(fig, path)


def plot_profile(path: Path, profile: IntensityProfile, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(profile.xs, profile.values, lw=1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("P(x)")
    ax.set_title(title or f"t = {profile.t:g}, {profile.model_tag}, gamma = {profile.gamma_used:.4g}")
    fig.tight_layout()
    return _save(fig, path)


def plot_visibility(path: Path, trace: VisibilityTrace) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(trace.times, trace.nu_values, marker=".", ms=3, lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\nu$")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"visibility, fringe {trace.feature} ({trace.model_tag})")
    fig.tight_layout()
    return _save(fig, path)


def plot_fit(path: Path, xs, counts, model, residual, param_name: str, best: float) -> Path:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True,
                                   gridspec_kw={"height_ratios": [3, 1]})
    ax1.plot(xs, counts, ".", ms=3, label="data")
    ax1.plot(xs, model, lw=1.2, label="fit")
    ax1.set_ylabel("counts")
    ax1.legend()
    ax1.set_title(f"{param_name} = {best:.6g}")
    ax2.plot(xs, residual, ".", ms=3)
    ax2.axhline(0.0, color="grey", lw=0.8)
    ax2.set_xlabel("x")
    ax2.set_ylabel("residual")
    fig.tight_layout()
    return _save(fig, path)

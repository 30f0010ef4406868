"""Report figures rendered from run-directory artifacts.

Everything here consumes the plain-text artifacts (snapshots, probe series,
crack log), never live solver state, so figures can be regenerated at any
time from a finished run directory.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first
import numpy as np  # noqa: E402

from .damage import CrackEvent  # noqa: E402

_MM = 1e3


def fig_particle_field(snapshot: dict, field: str, path: str,
                       title: str | None = None) -> str:
    """Scatter of current positions coloured by one snapshot column."""
    fig, ax = plt.subplots(figsize=(8, 5))
    sc = ax.scatter(snapshot["x0"] * _MM, snapshot["x1"] * _MM, s=4,
                    c=snapshot[field], cmap="viridis", linewidths=0)
    fig.colorbar(sc, ax=ax, label=field)
    ax.set_aspect("equal")
    ax.set_xlabel("x [mm]")
    ax.set_ylabel("y [mm]")
    ax.set_title(title or f"{field} at t = {snapshot['time'] * 1e3:.3f} ms")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_crack_path(snapshot: dict, events: list[CrackEvent], path: str) -> str:
    """Particle outline with broken-link midpoints overlaid in break order."""
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.scatter(snapshot["x0"] * _MM, snapshot["x1"] * _MM, s=3,
               c=snapshot["damage"], cmap="Greys", vmin=0.0, vmax=1.0,
               linewidths=0)
    if events:
        mids = np.array([ev.midpoint for ev in events])
        times = np.array([ev.time for ev in events])
        sc = ax.scatter(mids[:, 0] * _MM, mids[:, 1] * _MM, s=10,
                        c=times * 1e6, cmap="plasma", linewidths=0)
        fig.colorbar(sc, ax=ax, label="break time [us]")
    ax.set_aspect("equal")
    ax.set_xlabel("x [mm]")
    ax.set_ylabel("y [mm]")
    ax.set_title(f"crack path ({len(events)} broken links)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_probe_history(probe_csv: str, path: str) -> str:
    """Vertical probe displacement against time for every probe column."""
    with open(probe_csv, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    fig, ax = plt.subplots(figsize=(7, 4))
    t = data[:, 0] * 1e3
    for c, name in enumerate(header):
        if name.endswith("_uy"):
            ax.plot(t, -data[:, c] * _MM, label=name[:-3])
    ax.set_xlabel("t [ms]")
    ax.set_ylabel("deflection [mm]")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report(run_dir: str) -> list[str]:
    """Render the standard figures next to a run's delimited output."""
    from .snapshots import read_crack_events, read_snapshot

    produced = []
    snaps = sorted(f for f in os.listdir(run_dir)
                   if f.startswith("snapshot_") and f.endswith(".csv"))
    if snaps:
        last = read_snapshot(os.path.join(run_dir, snaps[-1]))
        produced.append(fig_particle_field(
            last, "eps_pl_eq", os.path.join(run_dir, "plastic_strain.png")))
        produced.append(fig_particle_field(
            last, "damage", os.path.join(run_dir, "damage.png")))
        crack_log = os.path.join(run_dir, "crack_events.csv")
        if os.path.exists(crack_log):
            events = read_crack_events(crack_log)
            produced.append(fig_crack_path(
                last, events, os.path.join(run_dir, "crack_path.png")))
    probe_csv = os.path.join(run_dir, "probes.csv")
    if os.path.exists(probe_csv):
        produced.append(fig_probe_history(
            probe_csv, os.path.join(run_dir, "probes.png")))
    return produced

"""Run-directory artifacts: delimited snapshots, crack log, manifest.

One directory per run. Snapshots are plain-text comma-delimited tables with
a versioned header (schema v1 below); `crack_events.csv` accumulates broken
links; `manifest.json` records the scene (config text + hash), parameters
and code version. All numbers are written with repr-exact precision so a
deterministic solver produces byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import serialize_config
from .damage import CrackEvent, particle_damage
from .integrator import Simulation
from .scenes import SceneSpec

SCHEMA_VERSION = 1

# Column order is the schema; any change requires a version bump.
COLUMNS = ("id", "body_id", "X0", "X1", "x0", "x1", "v0", "v1", "rho", "p",
           "sig_xx", "sig_yy", "sig_xy", "s_zz", "eps_pl_eq", "damage")

CRACK_COLUMNS = ("step", "time", "i", "j", "mid_x", "mid_y", "criterion")


class IoError(OSError):
    pass


class NoCracks(RuntimeError):
    pass


def _g(value: float) -> str:
    return repr(float(value))


def snapshot_name(step: int) -> str:
    return f"snapshot_{step:08d}.csv"


def write_snapshot(sim: Simulation, path: str) -> None:
    """Write one particle-state table (schema v1)."""
    p = sim.particles
    sigma = p.sigma()
    dmg = particle_damage(p, sim.links)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# tlsph snapshot v{SCHEMA_VERSION}\n")
            fh.write(f"# step={sim.step_count} time={_g(sim.t)}\n")
            fh.write(",".join(COLUMNS) + "\n")
            for k in range(p.n):
                row = (str(k), str(int(p.body_id[k])),
                       _g(p.X[k, 0]), _g(p.X[k, 1]),
                       _g(p.x[k, 0]), _g(p.x[k, 1]),
                       _g(p.v[k, 0]), _g(p.v[k, 1]),
                       _g(p.rho[k]), _g(p.p[k]),
                       _g(sigma[k, 0]), _g(sigma[k, 1]), _g(sigma[k, 2]),
                       _g(p.s[k, 3]), _g(p.eps_pl_eq[k]), _g(dmg[k]))
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_snapshot(path: str) -> dict:
    """Read a snapshot back into a dict of arrays plus step/time metadata."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            version_line = fh.readline()
            meta_line = fh.readline()
            header = fh.readline().strip()
            body = fh.read()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if not version_line.startswith(f"# tlsph snapshot v{SCHEMA_VERSION}"):
        raise IoError(f"unsupported snapshot header: {version_line.strip()!r}")
    if tuple(header.split(",")) != COLUMNS:
        raise IoError("snapshot column mismatch")
    meta = dict(kv.split("=") for kv in meta_line[1:].split())
    rows = np.array([line.split(",") for line in body.splitlines()], dtype=object)
    out = {"step": int(meta["step"]), "time": float(meta["time"])}
    if len(rows) == 0:
        for c, name in enumerate(COLUMNS):
            out[name] = np.zeros(0, dtype=np.int64 if name in ("id", "body_id")
                                 else np.float64)
        return out
    for c, name in enumerate(COLUMNS):
        col = rows[:, c]
        if name in ("id", "body_id"):
            out[name] = col.astype(np.int64)
        else:
            out[name] = col.astype(np.float64)
    return out


def write_crack_events(events: list[CrackEvent], path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(CRACK_COLUMNS) + "\n")
            for ev in events:
                fh.write(f"{ev.step},{_g(ev.time)},{ev.i},{ev.j},"
                         f"{_g(ev.midpoint[0])},{_g(ev.midpoint[1])},"
                         f"{ev.criterion}\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_crack_events(path: str) -> list[CrackEvent]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if tuple(header.split(",")) != CRACK_COLUMNS:
        raise IoError("crack log column mismatch")
    events = []
    for line in lines:
        step, time, i, j, mx, my, crit = line.split(",")
        events.append(CrackEvent(int(step), float(time), int(i), int(j),
                                 (float(mx), float(my)), crit))
    return events


def scene_hash(spec: SceneSpec) -> str:
    return hashlib.sha256(serialize_config(spec).encode()).hexdigest()


def write_manifest(spec: SceneSpec, out_dir: str,
                   extra: dict | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "scene": spec.name,
        "scene_hash": scene_hash(spec),
        "t_end": spec.t_end,
        "dp": spec.params.dp,
    }
    if extra:
        doc.update(extra)
    try:
        with open(os.path.join(out_dir, "manifest.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_manifest(run_dir: str) -> dict:
    try:
        with open(os.path.join(run_dir, "manifest.json"), "r",
                  encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc


@dataclass
class RunWriter:
    """Single writer for one run directory."""

    spec: SceneSpec
    out_dir: str

    def __post_init__(self):
        os.makedirs(self.out_dir, exist_ok=True)
        write_manifest(self.spec, self.out_dir)
        with open(os.path.join(self.out_dir, "config.toml"), "w",
                  encoding="utf-8") as fh:
            fh.write(serialize_config(self.spec))
        self._probe_rows: list[str] = []

    def snapshot(self, sim: Simulation) -> str:
        path = os.path.join(self.out_dir, snapshot_name(sim.step_count))
        write_snapshot(sim, path)
        return path

    def probe_sample(self, sim: Simulation, probes: dict) -> None:
        p = sim.particles
        if not self._probe_rows:
            cols = ["time"]
            for name in probes:
                cols += [f"{name}_x", f"{name}_y", f"{name}_ux", f"{name}_uy"]
            self._probe_rows.append(",".join(cols))
        row = [_g(sim.t)]
        for idx in probes.values():
            row += [_g(p.x[idx, 0]), _g(p.x[idx, 1]),
                    _g(p.x[idx, 0] - p.X[idx, 0]),
                    _g(p.x[idx, 1] - p.X[idx, 1])]
        self._probe_rows.append(",".join(row))

    def finish(self, sim: Simulation) -> None:
        write_crack_events(sim.events,
                           os.path.join(self.out_dir, "crack_events.csv"))
        if self._probe_rows:
            with open(os.path.join(self.out_dir, "probes.csv"), "w",
                      encoding="utf-8") as fh:
                fh.write("\n".join(self._probe_rows) + "\n")

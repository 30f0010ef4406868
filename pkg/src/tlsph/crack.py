"""Crack-path extraction from the broken-link log.

A crack is the set of midpoints of broken links. Links sharing a particle
belong to the same crack component; each component is ordered by graph
distance from its earliest break. The overall crack angle is the
total-least-squares line direction of the dominant component, measured
against a scene-defined reference axis, so it is a pure function of the
log and re-running it is idempotent.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import LinkSet, ParticleSet
from .damage import CrackEvent
from .snapshots import NoCracks

# Outcome classes of the notched-beam runs: local necking only, crack
# initiated but the body still hangs together, or broken clean through.
OUTCOME_LN = "LN"
OUTCOME_CI = "CI"
OUTCOME_B = "B"


@dataclass(frozen=True)
class CrackPath:
    """One connected crack component, ordered from its earliest break."""

    midpoints: np.ndarray        # (n, 2) ordered polyline
    events: tuple[CrackEvent, ...]

    @property
    def n(self) -> int:
        return len(self.midpoints)


def crack_components(events: list[CrackEvent]) -> list[list[int]]:
    """Indices into `events` grouped into link-connected components.

    Two broken links are connected when they share a particle. Components
    come back largest first; ties resolve by earliest break.
    """
    if not events:
        raise NoCracks("no broken links")
    parent = list(range(len(events)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    by_particle: dict[int, int] = {}
    for k, ev in enumerate(events):
        for node in (ev.i, ev.j):
            if node in by_particle:
                ra, rb = find(by_particle[node]), find(k)
                if ra != rb:
                    parent[rb] = ra
            else:
                by_particle[node] = k
    groups: dict[int, list[int]] = {}
    for k in range(len(events)):
        groups.setdefault(find(k), []).append(k)
    return sorted(groups.values(),
                  key=lambda g: (-len(g), min(events[k].step for k in g)))


def _order_component(events: list[CrackEvent], members: list[int]) -> list[int]:
    """Order a component by BFS distance from its earliest break."""
    start = min(members, key=lambda k: (events[k].step, k))
    adjacency: dict[int, list[int]] = {k: [] for k in members}
    by_particle: dict[int, list[int]] = {}
    for k in members:
        for node in (events[k].i, events[k].j):
            by_particle.setdefault(node, []).append(k)
    for peers in by_particle.values():
        for a in peers:
            for b in peers:
                if a != b:
                    adjacency[a].append(b)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        for b in adjacency[a]:
            if b not in dist:
                dist[b] = dist[a] + 1
                queue.append(b)
    far = 2 * len(members)
    return sorted(members, key=lambda k: (dist.get(k, far), events[k].step, k))


def extract_crack_path(events: list[CrackEvent]) -> list[CrackPath]:
    """All crack components as ordered polylines, dominant first."""
    paths = []
    for members in crack_components(events):
        ordered = _order_component(events, members)
        mids = np.array([events[k].midpoint for k in ordered])
        paths.append(CrackPath(mids, tuple(events[k] for k in ordered)))
    return paths


def fit_angle(midpoints: np.ndarray,
              axis: tuple[float, float] = (1.0, 0.0)) -> float:
    """Angle [deg] between the total-least-squares crack line and `axis`.

    Returns the acute angle in [0, 90]. A single midpoint cannot define a
    line: the result is NaN with a warning.
    """
    pts = np.asarray(midpoints, dtype=float)
    if len(pts) < 2:
        warnings.warn("crack angle undefined for fewer than two midpoints")
        return float("nan")
    centered = pts - pts.mean(axis=0)
    # Dominant right-singular vector = total-least-squares direction.
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    d = vt[0]
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    cosang = abs(float(d @ a)) / float(np.linalg.norm(d))
    return math.degrees(math.acos(min(cosang, 1.0)))


def crack_angle(events: list[CrackEvent],
                axis: tuple[float, float] = (1.0, 0.0)) -> float:
    """Fitted angle of the dominant crack component against `axis` [deg]."""
    return fit_angle(extract_crack_path(events)[0].midpoints, axis)


def body_components(particles: ParticleSet, links: LinkSet,
                    body_id: int = 0) -> np.ndarray:
    """Connected-component label per particle of one body via intact links."""
    members = np.nonzero(particles.body_id == body_id)[0]
    local = -np.ones(particles.n, dtype=np.int64)
    local[members] = np.arange(len(members))
    intact = links.f > 0.0
    li, lj = links.i[intact], links.j[intact]
    keep = (local[li] >= 0) & (local[lj] >= 0)
    li, lj = local[li[keep]], local[lj[keep]]
    n = len(members)
    graph = csr_matrix((np.ones(len(li)), (li, lj)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


def classify_outcome(particles: ParticleSet, links: LinkSet,
                     body_id: int = 0, min_fragment: int = 4) -> str:
    """LN (no broken links), CI (cracked, still one piece) or B (severed).

    Fragments below `min_fragment` particles are ignored so a few chipped
    corner particles do not count as a full break.
    """
    on_body = ((particles.body_id[links.i] == body_id)
               & (particles.body_id[links.j] == body_id))
    if not np.any(links.f[on_body] == 0.0):
        return OUTCOME_LN
    labels = body_components(particles, links, body_id)
    counts = np.bincount(labels)
    if np.count_nonzero(counts >= min_fragment) >= 2:
        return OUTCOME_B
    return OUTCOME_CI

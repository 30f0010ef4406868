"""Explicit time stepping and per-step orchestration.

Step sequence: (1) refresh f-weighted correction matrices when the link
network changed; (2) deformation gradient and rate; (3)-(4) constitutive
update (density, Jaumann trial, return mapping, EOS, Cauchy and PK1
stress); (5) link damage; (6) internal + viscous + contact accelerations;
(7) kick-drift update; (8) boundary conditions; (9) internal-energy
integration. Everything is deterministic: fixed link order, serial
reductions.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import assembly, contact, damage, kernel, mechanics
from .core import (BC, DAMAGE_NONE, ContactParams, LinkSet, MaterialTable,
                   NumericalParams, ParticleSet)


def stable_dt(particles: ParticleSet, table: MaterialTable,
              params: NumericalParams) -> float:
    """CFL-limited step: cfl * min(h / (c_i + |v_i|)), capped by dt_max."""
    c = table.c_sound[particles.mat_id]
    speed = np.linalg.norm(particles.v, axis=1)
    dt = params.cfl * np.min(params.h / (c + speed))
    return min(dt, params.dt_max)


def apply_bcs(particles: ParticleSet, t: float = math.inf) -> None:
    """Enforce velocity-level boundary conditions in place.

    Prescribed velocities with a nonzero rise time ramp linearly from zero
    to the scene value over that time; a zero rise time is a step. The
    ramp removes the dispersive shock ringing a velocity step excites in
    the lattice (particle-scale stretch oscillations that can spuriously
    trip a brittle link criterion near the loaded edge).
    """
    fixed = particles.bc == BC.FIXED
    particles.v[fixed] = 0.0
    sym = particles.bc == BC.SYMMETRY_Y
    particles.v[sym, 1] = 0.0
    presc = particles.bc == BC.PRESCRIBED_VELOCITY
    rise = particles.bc_rise[presc]
    scale = np.where(rise > 0.0, np.minimum(t / np.where(rise > 0.0, rise, 1.0), 1.0), 1.0)
    particles.v[presc] = particles.bc_value[presc] * scale[:, None]


def pin_fixed(particles: ParticleSet) -> None:
    fixed = particles.bc == BC.FIXED
    particles.x[fixed] = particles.X[fixed]


ProgressCallback = Callable[[int, float, float, int], None]


class Simulation:
    """Owns the mutable solver state and advances it step by step."""

    def __init__(self, particles: ParticleSet, links: LinkSet,
                 table: MaterialTable, params: NumericalParams,
                 cparams: ContactParams | None = None,
                 one_sided_correction: bool = False,
                 freeze_correction: bool = False,
                 scheme: str = "euler"):
        if scheme not in ("euler", "leapfrog"):
            raise ValueError(f"unknown integration scheme {scheme!r}")
        self.particles = particles
        self.links = links
        self.table = table
        self.params = params
        self.cparams = cparams if cparams is not None else ContactParams()
        self.one_sided = one_sided_correction
        self.freeze_correction = freeze_correction
        self.scheme = scheme
        self.t = 0.0
        self.step_count = 0
        self.events: list[damage.CrackEvent] = []
        self.has_contact = len(np.unique(particles.body_id)) > 1
        self.damage_enabled = bool(np.any(
            table.damage_kind[np.unique(particles.mat_id)] != DAMAGE_NONE))
        self._correction_stale = True
        self._a_prev: np.ndarray | None = None
        self.K = np.tile(np.eye(2), (particles.n, 1, 1))
        # Particles whose intact-link neighbourhood is rank-deficient (debris
        # cut loose by a crack): no deformation gradient exists for them, so
        # they fly ballistically with zero stress.
        self.degenerate = np.zeros(particles.n, dtype=bool)

    def _refresh_correction(self) -> None:
        # Degenerate (debris) particles are handled explicitly in step(), so
        # no warning per refresh.
        self.K, self.degenerate = kernel.correction_matrices(
            self.particles, self.links, on_singular="ignore",
            return_singular=True)
        self.particles.K_corr = self.K
        kernel.refresh_corrected_gradients(self.particles, self.links, self.K)
        self.links.cache = None
        self._correction_stale = False

    def _ensure_pair_cache(self) -> None:
        if self.links.cache is None:
            self.links.cache = assembly.build_pair_cache(
                self.particles, self.links, self.params, self.table)

    def broken_link_count(self) -> int:
        return int(np.count_nonzero(self.links.f == 0.0))

    def step(self, dt: float | None = None) -> float:
        """Advance one step; returns the dt actually taken."""
        p = self.particles
        if dt is None:
            dt = stable_dt(p, self.table, self.params)

        if self._correction_stale:
            self._refresh_correction()
        self._ensure_pair_cache()

        scratch = assembly.PairScratch(p, self.links)
        mechanics.compute_deformation(p, self.links, scratch=scratch)
        if np.any(self.degenerate):
            d = self.degenerate
            p.F[d] = np.eye(2)
            p.Fdot[d] = 0.0
        mechanics.constitutive_update(p, self.table, dt)
        if np.any(self.degenerate):
            d = self.degenerate
            p.s[d] = 0.0
            p.p[d] = 0.0
            p.P[d] = 0.0
            p.rho[d] = p.rho0[d]

        if self.damage_enabled:
            n_broke = damage.update_link_damage(
                self.links, p, self.table, self.step_count, self.t, self.events,
                scratch=scratch)
            if n_broke and not self.freeze_correction:
                self._correction_stale = True
            # Breaking links dropped the pair cache; this step's forces still
            # ride the old corrected gradients with the new f, exactly as the
            # refresh-next-step sequencing implies.
            self._ensure_pair_cache()

        a = assembly.accelerations(p, self.links, self.params, self.table,
                                   one_sided=self.one_sided, scratch=scratch)
        if self.has_contact:
            a += contact.contact_accelerations(p, self.params, self.cparams,
                                               self.table, dt)

        if self.scheme == "leapfrog" and self._a_prev is not None:
            p.v += 0.5 * (self._a_prev + a) * dt
        else:
            p.v += a * dt
        self._a_prev = a

        apply_bcs(p, self.t + dt)
        p.x += p.v * dt
        pin_fixed(p)

        p.e += assembly.energy_rates(p, self.links) * dt
        self.t += dt
        self.step_count += 1
        return dt

    def run(self, t_end: float, snapshot_every: int = 0,
            on_snapshot: Callable[["Simulation"], None] | None = None,
            progress: ProgressCallback | None = None,
            progress_every: int = 200) -> None:
        """Step until t >= t_end, emitting snapshots every N steps."""
        if on_snapshot is not None:
            on_snapshot(self)
        while self.t < t_end:
            self.step()
            if snapshot_every and self.step_count % snapshot_every == 0:
                if on_snapshot is not None:
                    on_snapshot(self)
            if progress is not None and self.step_count % progress_every == 0:
                vmax = float(np.max(np.linalg.norm(self.particles.v, axis=1)))
                progress(self.step_count, self.t, vmax, self.broken_link_count())
        if on_snapshot is not None and (not snapshot_every
                                        or self.step_count % snapshot_every != 0):
            on_snapshot(self)

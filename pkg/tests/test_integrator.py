"""Time stepping, boundary conditions and long-run invariants."""

import math

import numpy as np
import pytest

from conftest import STEEL, lattice_system
from tlsph.core import (BC, ContactParams, MaterialTable, NumericalParams,
                        ParticleSet, make_material)
from tlsph.integrator import Simulation, apply_bcs, pin_fixed, stable_dt
from tlsph.scenes import Rect, build_lattice


class TestStableDt:
    def test_resting_lattice_value(self, steel):
        particles, links, table, params, _ = lattice_system()
        # cfl * h / c with c = sqrt(E / rho0).
        want = 0.3 * 1.3e-3 / math.sqrt(200e9 / 7850.0)
        assert stable_dt(particles, table, params) == pytest.approx(want)

    def test_fast_particles_shrink_the_step(self):
        particles, links, table, params, _ = lattice_system()
        dt0 = stable_dt(particles, table, params)
        particles.v[0] = [3000.0, 0.0]
        assert stable_dt(particles, table, params) < dt0

    def test_dt_max_caps_the_step(self):
        particles, links, table, _, _ = lattice_system()
        params = NumericalParams(dp=1e-3, dt_max=1e-12)
        assert stable_dt(particles, table, params) == 1e-12


class TestBoundaryConditions:
    def test_fixed_particles_lose_velocity_and_stay_put(self):
        ps = ParticleSet(3)
        ps.v[:] = [1.0, 2.0]
        ps.x[:] = 5.0
        ps.bc[1] = BC.FIXED
        apply_bcs(ps)
        assert np.all(ps.v[1] == 0.0)
        assert np.all(ps.v[0] == [1.0, 2.0])
        pin_fixed(ps)
        assert np.all(ps.x[1] == ps.X[1])
        assert np.all(ps.x[0] == 5.0)

    def test_symmetry_plane_kills_normal_velocity(self):
        ps = ParticleSet(2)
        ps.v[:] = [3.0, -4.0]
        ps.bc[0] = BC.SYMMETRY_Y
        apply_bcs(ps)
        assert ps.v[0, 0] == 3.0 and ps.v[0, 1] == 0.0
        assert ps.v[1, 1] == -4.0

    def test_prescribed_velocity_enforced(self):
        ps = ParticleSet(1)
        ps.bc[0] = BC.PRESCRIBED_VELOCITY
        ps.bc_value[0] = [16.5, 0.0]
        apply_bcs(ps)
        assert np.all(ps.v[0] == [16.5, 0.0])


class TestSimulation:
    def test_unknown_scheme_rejected(self):
        particles, links, table, params, _ = lattice_system(nx=4, ny=4)
        with pytest.raises(ValueError):
            Simulation(particles, links, table, params, scheme="rk4")

    def test_rigid_translation_is_exact(self):
        particles, links, table, params, _ = lattice_system(nx=6, ny=6)
        particles.v[:] = [10.0, -5.0]
        sim = Simulation(particles, links, table, params)
        x0 = particles.x.copy()
        t = 0.0
        for _ in range(50):
            t += sim.step()
        assert np.allclose(particles.v, [10.0, -5.0])
        assert np.allclose(particles.x, x0 + np.array([10.0, -5.0]) * t)
        assert np.all(particles.eps_pl_eq == 0.0)

    def test_free_body_conserves_momentum_and_energy(self):
        particles, links, table, _, _ = lattice_system(nx=8, ny=8)
        params = NumericalParams(dp=1e-3)
        particles.v[:] = [12.0, 3.0]
        sim = Simulation(particles, links, table, params)
        p0 = (particles.m[:, None] * particles.v).sum(axis=0)
        e0 = 0.5 * (particles.m * (particles.v ** 2).sum(axis=1)).sum()
        for _ in range(500):
            sim.step()
        p1 = (particles.m[:, None] * particles.v).sum(axis=0)
        e1 = (0.5 * (particles.m * (particles.v ** 2).sum(axis=1)).sum()
              + (particles.m * particles.e).sum())
        assert np.all(np.abs(p1 - p0) <= 1e-10 * np.linalg.norm(p0))
        assert abs(e1 - e0) <= 0.01 * e0

    def test_run_emits_snapshots_and_progress(self):
        particles, links, table, params, _ = lattice_system(nx=4, ny=4)
        sim = Simulation(particles, links, table, params)
        snaps, progress = [], []
        dt = stable_dt(particles, table, params)
        sim.run(10.5 * dt, snapshot_every=5,
                on_snapshot=lambda s: snaps.append(s.step_count),
                progress=lambda *args: progress.append(args),
                progress_every=4)
        assert snaps[0] == 0
        assert sim.step_count >= 11
        assert all(b - a >= 1 for a, b in zip(snaps, snaps[1:]))
        assert snaps[-1] == sim.step_count
        assert len(progress) >= 2

    def test_step_accepts_explicit_dt(self):
        particles, links, table, params, _ = lattice_system(nx=4, ny=4)
        sim = Simulation(particles, links, table, params)
        assert sim.step(1e-9) == 1e-9
        assert sim.t == 1e-9

    def test_bar_longitudinal_frequency(self, steel):
        # Free-free steel bar, fundamental f = c/(2L) with the uniaxial
        # in-plane modulus E/(1-nu^2) (lateral surfaces free, plane strain).
        dp = 1e-3
        nx, ny = 30, 4
        bar = build_lattice(Rect(0, 0, nx * dp, ny * dp), dp, steel, 0)
        params = NumericalParams(dp=dp, beta1=0.0, beta2=0.0)
        from tlsph.kernel import find_immediate_neighbors
        links = find_immediate_neighbors(bar, params)
        table = MaterialTable([steel])
        # Seed the fundamental: velocity ~ sin(pi x / L) along the axis.
        L = nx * dp
        bar.v[:, 0] = 0.5 * np.sin(math.pi * (bar.X[:, 0] / L - 0.5))
        sim = Simulation(bar, links, table, params)
        left = bar.X[:, 0] < dp
        right = bar.X[:, 0] > L - dp
        ts, lengths = [], []
        for _ in range(2200):
            sim.step()
            ts.append(sim.t)
            lengths.append(bar.x[right, 0].mean() - bar.x[left, 0].mean())
        sig = np.asarray(lengths) - np.mean(lengths)
        dt = ts[1] - ts[0]
        spectrum = np.abs(np.fft.rfft(sig * np.hanning(len(sig))))
        freqs = np.fft.rfftfreq(len(sig), dt)
        f_peak = freqs[np.argmax(spectrum)]
        c = math.sqrt(steel.E / (1 - steel.nu ** 2) / steel.rho0)
        assert f_peak == pytest.approx(c / (2 * L), rel=0.05)

"""Benchmark scene construction and the analytic deflection oracle."""

import math

import numpy as np
import pytest

from tlsph.core import BC, DAMAGE_DUCTILE, DAMAGE_RANKINE, make_material
from tlsph.scenes import (ALUMINIUM, BEAM_DEPTH, BEAM_SPAN, EmptyRegion,
                          NotchSpec, PRESETS, PROJECTILE_DIAMETER, Rect,
                          analytical_deflection, build_lattice, build_scene,
                          lattice_positions, make_simulation,
                          projectile_mass_per_thickness, scene_deep_beam,
                          scene_kalthoff, scene_notched_beam,
                          scene_perfect_beam)


class TestLattice:
    def test_cell_centred_count_and_mass(self):
        mat = make_material(**ALUMINIUM)
        ps = build_lattice(Rect(0, 0, 10e-3, 4e-3), 1e-3, mat, 0)
        assert ps.n == 40
        assert np.allclose(ps.m, 2680.0 * 1e-6)
        assert ps.X[:, 0].min() == pytest.approx(0.5e-3)
        assert ps.X[:, 1].max() == pytest.approx(3.5e-3)

    def test_subspacing_region_rejected(self):
        with pytest.raises(EmptyRegion):
            lattice_positions(Rect(0, 0, 0.2e-3, 4e-3), 1e-3)
        with pytest.raises(EmptyRegion):
            lattice_positions(Rect(0, 0, 10e-3, 0.3e-3), 1e-3)

    def test_disc_shape_keeps_inscribed_circle(self):
        mat = make_material(**ALUMINIUM)
        ps = build_lattice(Rect(0, 0, 10e-3, 10e-3), 1e-3, mat, 0, shape="disc")
        center = np.array([5e-3, 5e-3])
        r = np.linalg.norm(ps.X - center, axis=1)
        assert np.all(r <= 5e-3 + 1e-12)
        # Area ratio approaches pi/4.
        assert ps.n / 100 == pytest.approx(math.pi / 4, abs=0.06)

    def test_unknown_shape_rejected(self):
        mat = make_material(**ALUMINIUM)
        with pytest.raises(ValueError):
            build_lattice(Rect(0, 0, 4e-3, 4e-3), 1e-3, mat, 0, shape="hex")

    def test_notch_removes_exact_cell_count(self):
        mat = make_material(**ALUMINIUM)
        plain = build_lattice(Rect(0, 0, 20e-3, 6e-3), 1e-3, mat, 0)
        notch = NotchSpec(center=10e-3, width=1.2e-3, depth=2.4e-3, edge="bottom")
        carved = build_lattice(Rect(0, 0, 20e-3, 6e-3), 1e-3, mat, 0, (notch,))
        # The notch rectangle spans x in [9.4, 10.6] mm (columns 9.5, 10.5)
        # and y < 2.4 mm (rows 0.5, 1.5): exactly 4 cells removed.
        assert plain.n - carved.n == 4
        for col in (9.5e-3, 10.5e-3):
            in_col = np.abs(carved.X[:, 0] - col) < 1e-6
            assert carved.X[in_col, 1].min() > 2.0e-3


class TestPerfectBeam:
    def test_geometry_and_bodies(self):
        spec = scene_perfect_beam(v0=20.0, dp=0.846e-3)
        particles, table, probes = build_scene(spec)
        beam = particles.body_id == 0
        proj = particles.body_id == 1
        assert np.any(beam) and np.any(proj)
        # Free span between the clamps.
        free = beam & (particles.bc == BC.FREE)
        assert particles.X[free, 0].min() > 0.0
        assert particles.X[free, 0].max() < BEAM_SPAN
        # Clamped columns exist on both sides.
        fixed = beam & (particles.bc == BC.FIXED)
        assert np.any(particles.X[fixed, 0] < 0.0)
        assert np.any(particles.X[fixed, 0] > BEAM_SPAN)

    def test_projectile_mass_audit(self):
        spec = scene_perfect_beam(dp=0.846e-3)
        particles, _, _ = build_scene(spec)
        proj = particles.body_id == 1
        want = projectile_mass_per_thickness()
        assert particles.m[proj].sum() == pytest.approx(want, rel=0.02)
        assert want == pytest.approx(10.55, rel=0.01)

    def test_projectile_is_a_disc_above_midspan(self):
        spec = scene_perfect_beam(dp=0.846e-3)
        particles, _, _ = build_scene(spec)
        proj = particles.X[particles.body_id == 1]
        dp = 0.846e-3
        center = np.array([BEAM_SPAN / 2.0,
                           BEAM_DEPTH + dp + 0.5 * PROJECTILE_DIAMETER])
        r = np.linalg.norm(proj - center, axis=1)
        assert r.max() <= 0.5 * PROJECTILE_DIAMETER + 1e-9
        assert proj.mean(axis=0)[0] == pytest.approx(BEAM_SPAN / 2.0, abs=1e-3)
        assert proj[:, 1].min() > BEAM_DEPTH
        assert np.all(particles.v[particles.body_id == 1, 1] == -20.0)

    def test_probe_sits_at_midspan(self):
        spec = scene_perfect_beam(dp=0.846e-3)
        particles, _, probes = build_scene(spec)
        i = probes["midpoint"]
        assert particles.X[i, 0] == pytest.approx(BEAM_SPAN / 2.0, abs=1e-3)
        assert particles.body_id[i] == 0

    def test_reproducible_particle_sets(self):
        a, _, _ = build_scene(scene_perfect_beam(dp=0.846e-3))
        b, _, _ = build_scene(scene_perfect_beam(dp=0.846e-3))
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.v, b.v)


class TestNotchedBeam:
    def test_mid_notch_on_bottom_face(self):
        spec = scene_notched_beam("I", "mid", dp=0.423e-3)
        body = spec.bodies[0]
        assert len(body.notches) == 1
        n = body.notches[0]
        assert n.edge == "bottom"
        assert n.center == pytest.approx(BEAM_SPAN / 2.0)
        assert body.material.damage_law.kind == DAMAGE_DUCTILE
        assert body.material.damage_law.threshold == 0.17

    def test_support_notches_on_top_face(self):
        spec = scene_notched_beam("II", "supports", dp=0.423e-3)
        edges = [n.edge for n in spec.bodies[0].notches]
        centers = sorted(n.center for n in spec.bodies[0].notches)
        assert edges == ["top", "top"]
        assert centers == pytest.approx([0.0, BEAM_SPAN])

    def test_notch_carves_particles(self):
        plain, _, _ = build_scene(scene_perfect_beam(dp=0.846e-3))
        notched, _, _ = build_scene(scene_notched_beam("I", "mid", dp=0.846e-3))
        assert notched.n < plain.n

    def test_unknown_type_or_location_rejected(self):
        with pytest.raises(ValueError):
            scene_notched_beam("IV", "mid")
        with pytest.raises(ValueError):
            scene_notched_beam("I", "quarter")


class TestKalthoff:
    def test_half_plate_with_symmetry_plane(self):
        spec = scene_kalthoff(dp=1.0e-3)  # coarse build for speed
        particles, table, probes = build_scene(spec)
        assert np.any(particles.bc == BC.SYMMETRY_Y)
        loaded = particles.bc == BC.PRESCRIBED_VELOCITY
        assert np.any(loaded)
        assert np.all(particles.bc_value[loaded] == [16.5, 0.0])
        # Impact segment lies between the symmetry plane and the notch.
        assert particles.X[loaded, 1].max() < 25e-3
        assert particles.X[loaded, 0].max() < 2e-3

    def test_notch_is_one_particle_row_deep_from_left(self):
        spec = scene_kalthoff(dp=1.0e-3)
        particles, _, _ = build_scene(spec)
        x, y = particles.X[:, 0], particles.X[:, 1]
        row = spec.bodies[0].notches[0].center
        in_row = np.abs(y - row) < 1e-6
        # The notch row is empty for the first 50 mm.
        assert not np.any(in_row & (x < 50e-3))
        assert np.any(in_row & (x > 50e-3))

    def test_material_is_effectively_elastic_rankine(self):
        spec = scene_kalthoff()
        mat = spec.bodies[0].material
        assert mat.damage_law.kind == DAMAGE_RANKINE
        assert mat.damage_law.threshold == 0.0044
        assert mat.sigma_y >= 1e14
        assert spec.params.beta1 == 0.5 and spec.params.beta2 == 0.5


class TestDeepBeam:
    def test_mid_and_offset_notch_positions(self):
        mid = scene_deep_beam("mid", dp=2e-3)
        off = scene_deep_beam("offset75mm", dp=2e-3)
        assert mid.bodies[0].notches[0].center == pytest.approx(154e-3)
        assert off.bodies[0].notches[0].center == pytest.approx(79e-3)
        assert mid.params.beta1 == 2.0
        with pytest.raises(ValueError):
            scene_deep_beam("right")

    def test_supports_fixed_and_projectile_above(self):
        spec = scene_deep_beam("mid", dp=2e-3)
        particles, _, _ = build_scene(spec)
        fixed = particles.bc == BC.FIXED
        assert np.any(fixed)
        assert particles.X[fixed, 1].max() < 5e-3
        proj = particles.body_id == 1
        assert particles.X[proj, 1].min() > 76e-3
        assert np.all(particles.v[proj, 1] == -20.0)


class TestAnalyticalDeflection:
    ARGS = dict(G=10.55, L=0.07112, H=0.00635, B=1.0, sigma_y=277.8e6)

    def test_zero_velocity_zero_deflection(self):
        assert analytical_deflection(v0=0.0, **self.ARGS) == 0.0

    def test_reference_value_at_20(self):
        # Independent evaluation: M_p = 0.25*277.8e6*0.00635^2 = 2800.64,
        # arg = 10.55*400*0.07112/(2800.64*0.00635*2) = 8.4379,
        # w = 0.00635*0.5*(sqrt(9.4379)-1) = 6.578e-3.
        M_p = 0.25 * 277.8e6 * 0.00635 ** 2
        arg = 10.55 * 400.0 * 0.07112 / (M_p * 0.00635 * 2.0)
        want = 0.00635 * 0.5 * (math.sqrt(1.0 + arg) - 1.0)
        got = analytical_deflection(v0=20.0, **self.ARGS)
        assert got == pytest.approx(want, rel=1e-12)
        assert got == pytest.approx(6.578e-3, rel=1e-3)

    def test_monotone_in_velocity_and_mass(self):
        vs = [analytical_deflection(v0=v, **self.ARGS) for v in (5, 10, 15, 20, 25)]
        assert all(b > a for a, b in zip(vs, vs[1:]))
        heavier = dict(self.ARGS, G=2 * self.ARGS["G"])
        assert analytical_deflection(v0=20.0, **heavier) \
            > analytical_deflection(v0=20.0, **self.ARGS)

    def test_asymptotically_linear_in_velocity(self):
        w1 = analytical_deflection(v0=100.0, **self.ARGS)
        w2 = analytical_deflection(v0=200.0, **self.ARGS)
        assert w2 / w1 == pytest.approx(2.0, rel=0.05)
        assert w2 > 2.0 * w1  # sqrt growth: doubling v0 more than doubles w


class TestPresets:
    def test_all_presets_build(self):
        assert set(PRESETS) == {"perfect_beam", "notched_beam", "kalthoff",
                                "deep_beam"}
        sim, probes = make_simulation(scene_perfect_beam(dp=1.69e-3))
        assert sim.particles.n > 0
        assert "midpoint" in probes
        assert sim.has_contact

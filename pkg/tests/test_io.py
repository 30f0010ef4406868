"""Config round trips, run artifacts, crack analysis and the CLI."""

import math
import os

import numpy as np
import pytest

from tlsph.cli import main as cli_main
from tlsph.config import (ParseError, ValidationError, parse_config,
                          parse_config_text, serialize_config)
from tlsph.crack import (OUTCOME_B, OUTCOME_CI, OUTCOME_LN, classify_outcome,
                         crack_angle, extract_crack_path, fit_angle)
from tlsph.damage import CrackEvent
from tlsph.scenes import (make_simulation, scene_deep_beam, scene_kalthoff,
                          scene_notched_beam, scene_perfect_beam)
from tlsph.snapshots import (RunWriter, read_crack_events, read_manifest,
                             read_snapshot, scene_hash, snapshot_name,
                             write_crack_events, write_snapshot)


ALL_SCENES = [
    scene_perfect_beam(dp=1.69e-3),
    scene_notched_beam("I", "mid", dp=0.846e-3),
    scene_kalthoff(dp=1.0e-3),
    scene_deep_beam("offset75mm", dp=2.0e-3),
]


class TestConfigRoundTrip:
    @pytest.mark.parametrize("spec", ALL_SCENES, ids=lambda s: s.name)
    def test_si_round_trip_is_exact(self, spec):
        text = serialize_config(spec, units="SI")
        back = parse_config_text(text)
        assert back == spec
        assert serialize_config(back) == text

    def test_mm_mpa_units_accepted(self):
        spec = scene_perfect_beam(dp=1.69e-3)
        text = serialize_config(spec, units="mm-MPa")
        back = parse_config_text(text)
        assert back.params.dp == pytest.approx(1.69e-3)
        assert back.bodies[0].material.E == pytest.approx(68.95e9)

    def test_preset_form_with_overrides(self):
        spec = parse_config_text(
            'preset = "kalthoff"\n'
            "[preset_args]\nv0 = 10.0\ndp = 1.0e-3\n"
            "[params]\nbeta1 = 0.7\n")
        assert spec.name == "kalthoff"
        assert spec.params.beta1 == 0.7
        assert spec.params.dp == 1.0e-3
        loaded = [b for b in spec.bc_regions if b.kind == "prescribed"]
        assert loaded[0].value == (10.0, 0.0)

    def test_unknown_keys_rejected_everywhere(self):
        with pytest.raises(ParseError):
            parse_config_text('preset = "kalthoff"\nturbo = true\n')
        with pytest.raises(ParseError):
            parse_config_text('preset = "kalthoff"\n[params]\nwarp = 9\n')

    def test_unknown_preset_rejected(self):
        with pytest.raises((ParseError, ValidationError)):
            parse_config_text('preset = "warp_core"\n')

    def test_bad_toml_rejected(self):
        with pytest.raises(ParseError):
            parse_config_text("this is = not [toml")

    def test_scene_hash_tracks_content(self):
        a = scene_hash(scene_perfect_beam(dp=1.69e-3))
        b = scene_hash(scene_perfect_beam(dp=1.69e-3))
        c = scene_hash(scene_perfect_beam(dp=0.846e-3))
        assert a == b
        assert a != c


class TestSnapshots:
    def _short_sim(self):
        sim, probes = make_simulation(scene_perfect_beam(dp=1.69e-3))
        for _ in range(3):
            sim.step()
        return sim, probes

    def test_round_trip_is_exact(self, tmp_path):
        sim, _ = self._short_sim()
        path = str(tmp_path / snapshot_name(sim.step_count))
        write_snapshot(sim, path)
        snap = read_snapshot(path)
        assert snap["step"] == sim.step_count
        assert snap["time"] == sim.t
        assert np.array_equal(snap["x0"], sim.particles.x[:, 0])
        assert np.array_equal(snap["v1"], sim.particles.v[:, 1])
        assert np.array_equal(snap["body_id"], sim.particles.body_id)

    def test_rejects_foreign_file(self, tmp_path):
        from tlsph.snapshots import IoError
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(IoError):
            read_snapshot(str(path))

    def test_crack_log_round_trip(self, tmp_path):
        events = [CrackEvent(3, 1.5e-6, 10, 11, (0.05, 0.002), "ductile"),
                  CrackEvent(9, 4.5e-6, 11, 40, (0.0505, 0.0025), "rankine")]
        path = str(tmp_path / "crack_events.csv")
        write_crack_events(events, path)
        assert read_crack_events(path) == events

    def test_run_writer_produces_all_artifacts(self, tmp_path):
        sim, probes = self._short_sim()
        spec = scene_perfect_beam(dp=1.69e-3)
        writer = RunWriter(spec, str(tmp_path / "run"))
        writer.probe_sample(sim, probes)
        writer.snapshot(sim)
        writer.finish(sim)
        run = tmp_path / "run"
        assert (run / "manifest.json").exists()
        assert (run / "config.toml").exists()
        assert (run / "crack_events.csv").exists()
        assert (run / "probes.csv").exists()
        assert (run / snapshot_name(sim.step_count)).exists()
        manifest = read_manifest(str(run))
        assert manifest["scene"] == "perfect_beam"
        assert manifest["scene_hash"] == scene_hash(spec)


class TestCrackAnalysis:
    @staticmethod
    def _chain(points, criterion="rankine"):
        # Consecutive broken links sharing particles along a polyline.
        return [CrackEvent(k, k * 1e-6, k, k + 1, tuple(p), criterion)
                for k, p in enumerate(points)]

    def test_diagonal_line_angle(self):
        theta = math.radians(45.0)
        pts = [(t * math.cos(theta), t * math.sin(theta)) for t in
               np.linspace(0, 0.01, 12)]
        events = self._chain(pts)
        assert crack_angle(events, axis=(1.0, 0.0)) == pytest.approx(45.0, abs=0.5)
        assert crack_angle(events, axis=(0.0, 1.0)) == pytest.approx(45.0, abs=0.5)

    def test_fit_angle_is_acute_and_orientation_free(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.2], [2.0, 0.4]])
        a = fit_angle(pts, (1.0, 0.0))
        b = fit_angle(pts[::-1], (1.0, 0.0))
        assert a == pytest.approx(b)
        assert 0.0 <= a <= 90.0
        assert a == pytest.approx(math.degrees(math.atan2(0.2, 1.0)), abs=1e-6)

    def test_single_midpoint_warns_nan(self):
        with pytest.warns(UserWarning):
            assert math.isnan(fit_angle(np.array([[0.0, 0.0]])))

    def test_components_split_and_dominant_first(self):
        main = self._chain([(x, 0.0) for x in np.linspace(0, 5e-3, 8)])
        stray = [CrackEvent(50, 5e-5, 100, 101, (0.02, 0.01), "rankine"),
                 CrackEvent(51, 5.1e-5, 101, 102, (0.021, 0.01), "rankine")]
        paths = extract_crack_path(main + stray)
        assert len(paths) == 2
        assert paths[0].n == 8 and paths[1].n == 2

    def test_path_ordered_from_earliest_break(self):
        pts = [(x, 0.0) for x in np.linspace(0, 5e-3, 6)]
        events = self._chain(pts)
        scrambled = [events[i] for i in (3, 0, 5, 1, 4, 2)]
        path = extract_crack_path(scrambled)[0]
        started = path.events[0]
        assert started.step == min(e.step for e in events)

    def test_outcome_classes(self):
        from conftest import lattice_system
        particles, links, _, _, _ = lattice_system(nx=8, ny=4)
        assert classify_outcome(particles, links) == OUTCOME_LN
        # Crack part-way through one column: still one piece.
        cut = (np.abs(0.5 * (particles.X[links.i, 0] + particles.X[links.j, 0])
                      - 4e-3) < 0.6e-3)
        upper = (particles.X[links.i, 1] > 2e-3) & (particles.X[links.j, 1] > 2e-3)
        links.f[cut & upper] = 0.0
        assert classify_outcome(particles, links) == OUTCOME_CI
        links.f[cut] = 0.0
        assert classify_outcome(particles, links) == OUTCOME_B


class TestCli:
    def test_run_and_inspect_round_trip(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        code = cli_main(["run", "perfect_beam", "--dp", "1.69",
                         "--t-end", "2e-6", "--out", out])
        assert code == 0
        run_dir = os.path.join(out, "perfect_beam")
        assert os.path.isdir(run_dir)
        assert cli_main(["probe", run_dir, "--name", "midpoint"]) == 0
        text = capsys.readouterr().out
        assert "midpoint_uy" in text
        assert cli_main(["report", run_dir]) == 0
        produced = capsys.readouterr().out.split()
        assert produced
        assert all(p.endswith(".png") for p in produced)
        assert all(os.path.exists(p) for p in produced)

    def test_crack_command_without_cracks_fails_cleanly(self, tmp_path):
        out = str(tmp_path / "out")
        assert cli_main(["run", "perfect_beam", "--dp", "1.69",
                         "--t-end", "2e-6", "--out", out]) == 0
        code = cli_main(["crack", os.path.join(out, "perfect_beam")])
        assert code == 1

    def test_run_config_file(self, tmp_path, capsys):
        cfg_path = tmp_path / "scene.toml"
        spec = scene_perfect_beam(dp=1.69e-3)
        cfg_path.write_text(serialize_config(spec))
        out = str(tmp_path / "out")
        assert cli_main(["run", str(cfg_path), "--t-end", "2e-6",
                         "--out", out]) == 0
        assert os.path.isdir(os.path.join(out, "perfect_beam"))

    def test_unknown_preset_is_usage_error(self, tmp_path, capsys):
        assert cli_main(["run", "no_such_scene", "--out",
                         str(tmp_path)]) == 2

    def test_bad_config_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("version = 99\n")
        assert cli_main(["run", str(bad), "--out", str(tmp_path)]) == 2

    def test_missing_run_dir_is_runtime_error(self, tmp_path):
        assert cli_main(["crack", str(tmp_path / "nope")]) == 1
        assert cli_main(["probe", str(tmp_path / "nope")]) == 1

    def test_v0_rejected_for_config_files(self, tmp_path):
        cfg_path = tmp_path / "scene.toml"
        cfg_path.write_text(serialize_config(scene_perfect_beam(dp=1.69e-3)))
        assert cli_main(["run", str(cfg_path), "--v0", "10",
                         "--out", str(tmp_path)]) == 2

"""Benchmark builders, config files, the run driver, and the CLI."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

import delam.scenarios as scenarios
from delam.cli import main as cli_main
from delam.core import AprimLaw, validate_scenario
from delam.lebim import StepError
from delam.scenarios import (
    build_mmf,
    build_pullpush,
    build_single_segment,
    load_config,
    run,
)

KT, AI = 75e9, 187.5


class TestPullPushBuilder:
    def test_default_segmentation(self):
        sc = build_pullpush()
        lengths = np.array([s.length for s in sc.mesh.segments])
        assert len(lengths) == 54
        assert lengths == pytest.approx(0.225 / 54)
        assert sum(lengths) == pytest.approx(0.225)

    def test_coarse_variant_keeps_glued_length(self):
        sc = build_pullpush(n=4)
        lengths = [s.length for s in sc.mesh.segments]
        assert sum(lengths) == pytest.approx(0.225)

    def test_halving_step_count(self):
        a = build_pullpush(tau=5e-3, horizon=1.5)
        b = build_pullpush(tau=10e-3, horizon=1.5)
        assert a.load.n_steps == 2 * b.load.n_steps

    def test_paper_parameters(self):
        sc = build_pullpush()
        assert sc.bulk.youngs_modulus == 70e9
        assert sc.bulk.poisson_ratio == 0.35
        assert sc.bulk.relaxation_time == 0.001
        law = sc.interface
        assert law.kappa_n == 150e9 and law.kappa_t == 75e9
        assert law.toughness.sigma_t_yield == pytest.approx(
            0.79 * math.sqrt(2 * KT * AI))
        assert law.toughness.kappa_h == pytest.approx(KT / 9)

    def test_aprim_variant_is_inviscid(self):
        sc = build_pullpush(model="aprim")
        assert sc.bulk.relaxation_time == 0.0
        assert isinstance(sc.interface, AprimLaw)
        assert validate_scenario(sc).ok

    def test_load_direction_normalized(self):
        sc = build_pullpush()
        ramp = sc.load.dirichlet[0]
        assert math.hypot(*ramp.direction) == pytest.approx(1.0)
        assert ramp.speed == pytest.approx(0.3e-3)
        assert ramp.direction[0] / ramp.direction[1] == pytest.approx(1 / 0.6)

    def test_validates_clean(self):
        assert validate_scenario(build_pullpush()).ok


class TestMmfBuilder:
    def test_geometry_and_pairing(self):
        sc = build_mmf(n=60, tau=0.02, horizon=0.4)
        mesh = sc.mesh
        assert len(mesh.segments) == 60
        for seg in mesh.segments:
            assert seg.minus_nodes is not None
            assert seg.normal == pytest.approx([0.0, -1.0])
        # pre-crack strip is contact-only: damage starts at zero there
        pitch = 0.120 / 60
        i_crack = round(0.037 / pitch)
        assert np.all(sc.initial_damage[:i_crack] == 0.0)
        assert np.all(sc.initial_damage[i_crack:] == 1.0)

    def test_yield_fraction_in_window(self):
        sc = build_mmf(n=60)
        assert validate_scenario(sc).ok
        tough = sc.interface.toughness
        assert tough.sigma_t_yield == pytest.approx(
            0.56 * math.sqrt(2 * KT * AI))

    def test_imposed_displacement_reaches_paper_value(self):
        sc = build_mmf()
        ramp = next(r for r in sc.load.dirichlet if r.tag == "load")
        assert abs(ramp.value(500 * sc.load.step)[1]) == pytest.approx(2.5e-3)

    def test_short_run_executes(self, tmp_path):
        sc = build_mmf(n=24, tau=0.05, horizon=0.3)
        art = run(sc, tmp_path / "mmf")
        assert art.completed
        # flexure pushes the pre-crack faces together: contact must hold
        ops_gap = art.final_state.displacement
        from delam.fem import build_operators

        ops = build_operators(sc)
        gaps = ops.iface.jump_n_nodes @ ops_gap
        assert gaps.min() >= -1e-12


class TestRunDriver:
    def test_zero_velocity_keeps_everything_flat(self, tmp_path):
        sc = build_single_segment(direction=(0, 1), speed=0.0, tau=0.05,
                                  horizon=0.5)
        art = run(sc, tmp_path / "flat")
        assert art.completed
        assert np.all(art.final_state.damage == 1.0)
        forces = (tmp_path / "flat" / "forces.csv").read_text().splitlines()
        for line in forces[1:]:
            _, _, fx, fy = line.split(",")
            assert float(fx) == 0.0 and float(fy) == 0.0

    def test_rerun_is_byte_identical(self, tmp_path):
        for sub in ("a", "b"):
            sc = build_pullpush(n=9, tau=0.04, horizon=0.8)
            run(sc, tmp_path / sub)
        for name in ("energies.csv", "forces.csv", "mixity.csv",
                     "gc_curve.csv", "mesh.json", "MANIFEST.json"):
            assert (tmp_path / "a" / name).read_bytes() \
                == (tmp_path / "b" / name).read_bytes(), name
        snaps_a = sorted((tmp_path / "a" / "snapshots").iterdir())
        snaps_b = sorted((tmp_path / "b" / "snapshots").iterdir())
        assert [p.name for p in snaps_a] == [p.name for p in snaps_b]
        for pa, pb in zip(snaps_a, snaps_b):
            assert pa.read_bytes() == pb.read_bytes()

    def test_mm_units_scale_snapshots(self, tmp_path):
        sc = build_single_segment(speed=1e-5, tau=0.1, horizon=0.2)
        run(sc, tmp_path / "si", units="si")
        sc2 = build_single_segment(speed=1e-5, tau=0.1, horizon=0.2)
        run(sc2, tmp_path / "mm", units="mm-mpa")
        f_si = sorted((tmp_path / "si" / "snapshots").iterdir())[0]
        f_mm = sorted((tmp_path / "mm" / "snapshots").iterdir())[0]
        row_si = f_si.read_text().splitlines()[2].split(",")
        row_mm = f_mm.read_text().splitlines()[2].split(",")
        assert float(row_mm[1]) == pytest.approx(1e3 * float(row_si[1]))

    def test_manifest_contents(self, tmp_path):
        sc = build_pullpush(n=9, tau=0.04, horizon=0.2, model="aprim")
        run(sc, tmp_path / "m")
        manifest = json.loads((tmp_path / "m" / "MANIFEST.json").read_text())
        assert manifest["completed"] is True
        assert manifest["failed_step"] is None
        assert manifest["parameters"]["model"] == "aprim"
        derived = manifest["parameters"]["interface"]["derived"]
        assert derived["ratio"] == pytest.approx(4.3831)
        assert len(manifest["config_hash"]) == 64

    def test_failed_step_flushes_manifest(self, tmp_path, monkeypatch):
        sc = build_pullpush(n=9, tau=0.04, horizon=0.8)

        real = scenarios.step_lebim

        def boom(state, scn, k, **kw):
            if k == 3:
                raise StepError(k, "synthetic failure")
            return real(state, scn, k, **kw)

        monkeypatch.setattr(scenarios, "step_lebim", boom)
        with pytest.raises(StepError):
            run(sc, tmp_path / "fail")
        manifest = json.loads((tmp_path / "fail" / "MANIFEST.json").read_text())
        assert manifest["completed"] is False
        assert manifest["failed_step"] == 3
        assert (tmp_path / "fail" / "energies.csv").exists()

    def test_invalid_scenario_rejected(self, tmp_path):
        sc = build_pullpush(n=9)
        sc.model = "aprim"  # law/model mismatch
        with pytest.raises(ValueError, match="not runnable"):
            run(sc, tmp_path / "bad")


class TestConfig:
    def test_builder_reference_with_units(self, tmp_path):
        cfg = {"scenario": "pullpush", "n": 9, "tau": [40, "ms"],
               "horizon": [0.8, "s"], "model": "lebim", "fit_scenario": 2}
        sc = load_config(cfg)
        assert sc.load.step == pytest.approx(0.04)
        assert sc.interface.kappa_t == pytest.approx(3.935926293985943e10)

    def test_fit_none_keeps_plain_law(self):
        sc = load_config({"scenario": "pullpush", "fit_scenario": "none"})
        # unfitted brittle law still derives from the plasticity parameters
        assert sc.fit_scenario == 1

    def test_unknown_unit_rejected(self):
        with pytest.raises(ValueError, match="unknown unit"):
            load_config({"scenario": "pullpush", "tau": [1, "fortnight"]})

    def test_custom_inline_mesh_runs(self, tmp_path):
        cfg = {
            "scenario": "custom",
            "name": "mini",
            "model": "lebim",
            "mesh": {
                "nodes": [[0, 0], [1e-3, 0], [1e-3, 5e-4], [0, 5e-4]],
                "triangles": [[0, 1, 2], [0, 2, 3]],
                "interface": {"plus_chain": [0, 1]},
                "dirichlet_edges": {"load": [[3, 2]]},
            },
            "bulk": {"youngs_modulus": [70, "GPa"], "poisson_ratio": 0.35,
                     "relaxation_time": [1, "ms"]},
            "interface": {"kappa_n": [150, "GPa/m"], "kappa_t": [75, "GPa/m"],
                          "yield_fraction": 0.79},
            "load": {
                "dirichlet": [{"tag": "load", "direction": [0, 1],
                               "speed": [0.02, "mm/s"]}],
                "horizon": 0.5, "step": 0.05,
            },
        }
        path = tmp_path / "mini.json"
        path.write_text(json.dumps(cfg))
        sc = load_config(path)
        assert validate_scenario(sc).ok
        art = run(sc, tmp_path / "mini-run")
        assert art.completed

    def test_bare_builder_name(self):
        sc = load_config("single-segment")
        assert sc.name == "single-segment"


class TestCli:
    def test_validate_builtin(self, capsys):
        assert cli_main(["validate", "pullpush"]) == 0
        assert "ok" in capsys.readouterr().out

    def test_run_and_overrides(self, tmp_path, capsys):
        out = tmp_path / "cli-run"
        code = cli_main(["run", "single-segment", "--tau", "0.1",
                         "--horizon", "0.3", "--out", str(out)])
        assert code == 0
        assert (out / "MANIFEST.json").exists()
        assert "run complete" in capsys.readouterr().out

    def test_gc_curve_files(self, tmp_path):
        out = tmp_path / "gc"
        assert cli_main(["gc-curve", "--law", "plasticity",
                         "--yield-fraction", "0.79", "--out", str(out)]) == 0
        rows = (out / "gc_curve.csv").read_text().splitlines()
        assert rows[0] == "psi_g_deg,alpha_over_ai"
        last = rows[-1].split(",")
        assert float(last[0]) == pytest.approx(90.0)
        assert float(last[1]) == pytest.approx(4.3831)
        manifest = json.loads((out / "MANIFEST.json").read_text())
        ratio = manifest["parameters"]["interface"]["gc_asymptote_ratio"]
        assert ratio == pytest.approx(4.3831)

    def test_gc_curve_window_violation_exits_2(self, tmp_path, capsys):
        code = cli_main(["gc-curve", "--yield-fraction", "0.3",
                         "--out", str(tmp_path / "x")])
        assert code == 2

    def test_run_rejects_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({
            "scenario": "pullpush", "model": "aprim",
            "relaxation_time": 0.001,
        }))
        assert cli_main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2

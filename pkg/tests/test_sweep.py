"""Sweep engine, serialization, parallelization verifier, and CLI."""

import json

import numpy as np
import pytest

from qgame.cli import main
from qgame.equilibrium import DELTA_SHOTS
from qgame.game import profile_from_names
from qgame.noise import NoiseModel
from qgame.parallel import Variant, branch_map
from qgame.sweep import (
    DEFAULT_CHI_GRID_PI,
    DEFAULT_P_GRID,
    CellResult,
    ConfigError,
    ExperimentConfig,
    SweepResult,
    emit_report,
    load_result,
    result_rows,
    rmsd_analysis,
    run_sweep,
    threshold_rows,
    verify_parallelization,
)

from oracles import bayes_tensor_dense, brute_force_equilibria


def analytic_config(**kw) -> ExperimentConfig:
    return ExperimentConfig(mode="analytic", **kw)


def shot_config(**kw) -> ExperimentConfig:
    kw.setdefault("noise", NoiseModel())
    return ExperimentConfig(mode="shots", **kw)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.chi_grid_pi == DEFAULT_CHI_GRID_PI
        assert cfg.p_grid == DEFAULT_P_GRID
        assert len(cfg.chi_grid_pi) == 11
        assert len(cfg.p_grid) == 101
        assert cfg.effective_delta == 0.0
        assert shot_config().effective_delta == DELTA_SHOTS

    def test_explicit_delta_wins(self):
        assert shot_config(delta=0.03).effective_delta == 0.03

    def test_json_round_trip(self, tmp_path):
        cfg = shot_config(seed=11, noise=NoiseModel.default_profile(seed=11), delta=0.2)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.from_json(path) == cfg

    def test_validation_failures(self):
        with pytest.raises(ConfigError, match="mode"):
            ExperimentConfig(mode="exact")
        with pytest.raises(ConfigError, match="ascending"):
            ExperimentConfig(chi_grid_pi=(0.1, 0.05))
        with pytest.raises(ConfigError, match="outside"):
            ExperimentConfig(chi_grid_pi=(0.3,))
        with pytest.raises(ConfigError, match="nonempty"):
            ExperimentConfig(p_grid=())
        with pytest.raises(ConfigError, match="positive"):
            ExperimentConfig(shots=0)
        with pytest.raises(ConfigError, match="delta"):
            ExperimentConfig(delta=-0.1)
        with pytest.raises(ConfigError):
            ExperimentConfig(tracked_profile="ABC")
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_dict({"mode": "analytic", "bogus": 1})
        with pytest.raises(ConfigError, match="noise"):
            ExperimentConfig.from_dict({"noise": {"single_qubit_depol": 0.9}})

    def test_overrides_revalidate(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(mode="nope")
        assert ExperimentConfig().with_overrides(seed=5).seed == 5


class TestAnalyticSweep:
    def test_classical_cell_has_both_reference_equilibria(self):
        cfg = analytic_config(chi_grid_pi=(0.0,), p_grid=(0.0,))
        cell = run_sweep(cfg).cells[0]
        report = cell.report
        assert report.contains(profile_from_names("IXI"))
        assert report.contains(profile_from_names("ZYZ"))
        for payoffs in report.payoffs:
            assert payoffs == (11.0, 10.0, 9.0)
        assert cell.rmsd == 0.0
        assert cell.chi_measured_pi == cell.chi_nominal_pi

    def test_strong_entanglement_empties_the_midpoint(self):
        cfg = analytic_config(p_grid=(0.5,))
        result = run_sweep(cfg)
        by_chi = {c.chi_nominal_pi: c for c in result.cells}
        for chi_pi in (0.2, 0.225, 0.25):
            assert by_chi[chi_pi].report.empty
            assert by_chi[chi_pi].rmsd is None
        assert not by_chi[0.0].report.empty

    def test_transition_column_matches_reference_point(self):
        cfg = analytic_config(chi_grid_pi=(0.05,))
        result = run_sweep(cfg)
        chi_pi, transition = result.transitions[0]
        assert chi_pi == 0.05
        assert transition.thresholds == (0.17,)
        assert abs(transition.thresholds[0] - 0.16) <= 0.01 + 1e-12
        mid = [c for c in result.cells if c.p == 0.5][0]
        assert mid.report.empty

    def test_analytic_ignores_noise_and_shots(self):
        base = analytic_config(chi_grid_pi=(0.1,), p_grid=(0.0, 0.3, 0.9))
        noisy = analytic_config(
            chi_grid_pi=(0.1,),
            p_grid=(0.0, 0.3, 0.9),
            shots=17,
            noise=NoiseModel.default_profile(seed=3),
            seed=99,
        )
        cells_a = run_sweep(base).cells
        cells_b = run_sweep(noisy).cells
        for a, b in zip(cells_a, cells_b):
            assert a.report == b.report
            assert a.rmsd == b.rmsd

    def test_cells_match_brute_force_oracle(self):
        chi_pi, p = 0.075, 0.4
        cfg = analytic_config(chi_grid_pi=(chi_pi,), p_grid=(p,))
        report = run_sweep(cfg).cells[0].report
        rows_b1 = [[[11, 9], [1, 10]], [[10, 1], [6, 6]]]
        rows_b2 = [[[11, 9], [1, 6]], [[10, 1], [6, 0]]]
        a, b1, b2 = bayes_tensor_dense(chi_pi * np.pi, rows_b1, rows_b2, p)
        expected = brute_force_equilibria(a, b1, b2, 0.0)
        assert [tuple(int(s) for s in pr) for pr in report.profiles] == expected


class TestShotSweep:
    def test_zero_noise_classical_cell_matches_analytic(self):
        shot = shot_config(chi_grid_pi=(0.0,), p_grid=(0.0,), shots=20_000, seed=5)
        analytic = analytic_config(chi_grid_pi=(0.0,), p_grid=(0.0,), delta=DELTA_SHOTS)
        shot_report = run_sweep(shot).cells[0].report
        ref_report = run_sweep(analytic).cells[0].report
        assert shot_report.profiles == ref_report.profiles
        for got, want in zip(shot_report.payoffs, ref_report.payoffs):
            assert np.abs(np.array(got) - np.array(want)).max() < 0.1

    def test_degenerate_p_uses_full_dataset_for_empty_pool(self):
        result = run_sweep(shot_config(chi_grid_pi=(0.1,), p_grid=(0.0, 1.0), shots=8_000, seed=2))
        for cell in result.cells:
            assert cell.error is None
            assert not cell.report.empty
            # all three payoff components populated despite one empty pool
            assert all(len(pay) == 3 for pay in cell.report.payoffs)

    def test_zero_noise_rmsd_is_small(self):
        # reference payoffs sit at the measured angle, so the calibration
        # run must be deep enough not to dominate the comparison
        cfg = shot_config(
            chi_grid_pi=(0.1,), p_grid=(0.2,), shots=30_000, calibration_shots=400_000, seed=8
        )
        cell = run_sweep(cfg).cells[0]
        assert cell.error is None
        assert cell.rmsd is not None and cell.rmsd < 0.1

    def test_measured_angle_recorded(self):
        result = run_sweep(shot_config(chi_grid_pi=(0.125,), p_grid=(0.5,), shots=10_000, seed=1))
        (chi_pi, estimate), = result.chi_measurements
        assert chi_pi == 0.125
        assert abs(estimate.value - 0.125 * np.pi) < 5 * estimate.sigma
        assert result.cells[0].chi_measured_pi == pytest.approx(estimate.value / np.pi)

    def test_starved_shots_record_cell_errors(self):
        cfg = shot_config(chi_grid_pi=(0.25,), p_grid=(0.5,), shots=40, seed=0)
        result = run_sweep(cfg)
        cell = result.cells[0]
        assert cell.error is not None and "branch" in cell.error
        assert cell.report is None and cell.rmsd is None
        # the transition scan has nothing to work with at this angle
        assert result.transitions[0][1] is None

    def test_same_seed_same_result(self):
        cfg = shot_config(chi_grid_pi=(0.075,), p_grid=(0.3, 0.7), shots=5_000, seed=13,
                          noise=NoiseModel.default_profile(seed=13))
        assert run_sweep(cfg) == run_sweep(cfg)


class TestSerialization:
    def test_csv_layout_and_determinism(self, tmp_path):
        cfg = shot_config(chi_grid_pi=(0.0, 0.05), p_grid=(0.0, 0.5), shots=4_000, seed=21)
        result = run_sweep(cfg)
        paths_a = emit_report(result, tmp_path / "a")
        paths_b = emit_report(run_sweep(cfg), tmp_path / "b")
        with open(paths_a["csv"], "rb") as fa, open(paths_b["csv"], "rb") as fb:
            assert fa.read() == fb.read()
        with open(paths_a["json"], "rb") as fa, open(paths_b["json"], "rb") as fb:
            assert fa.read() == fb.read()
        with open(paths_a["csv"]) as handle:
            header = handle.readline().strip()
        assert header == (
            "chi_nominal_pi,chi_measured_pi,p,n_equilibria,profile,"
            "payoff_A,payoff_B1,payoff_B2,rmsd,delta,mode,seed"
        )

    def test_multi_equilibrium_cell_spans_rows(self):
        cfg = analytic_config(chi_grid_pi=(0.0,), p_grid=(0.0,))
        rows = result_rows(run_sweep(cfg))
        assert len(rows) == 8
        assert {r["n_equilibria"] for r in rows} == {8}
        assert all((r["chi_nominal_pi"], r["p"]) == (0.0, 0.0) for r in rows)

    def test_empty_cell_row(self):
        cfg = analytic_config(chi_grid_pi=(0.25,), p_grid=(0.5,))
        rows = result_rows(run_sweep(cfg))
        assert len(rows) == 1
        assert rows[0]["n_equilibria"] == 0
        assert rows[0]["profile"] == ""
        assert rows[0]["payoff_A"] is None

    def test_failed_cell_row_blanks_equilibrium_fields(self):
        cfg = analytic_config(chi_grid_pi=(0.1,), p_grid=(0.5,))
        base = run_sweep(cfg)
        failed = SweepResult(
            config=base.config,
            cells=(CellResult(0.1, 0.1, 0.5, None, None, error="boom"),),
            transitions=((0.1, None),),
            chi_measurements=base.chi_measurements,
        )
        row = result_rows(failed)[0]
        assert row["n_equilibria"] is None
        assert row["profile"] == ""

    def test_json_round_trip_exact(self, tmp_path):
        cfg = shot_config(
            chi_grid_pi=(0.0, 0.125),
            p_grid=(0.0, 0.4, 1.0),
            shots=6_000,
            seed=34,
            noise=NoiseModel.default_profile(seed=34),
        )
        result = run_sweep(cfg)
        paths = emit_report(result, tmp_path, formats=("json",))
        assert load_result(paths["json"]) == result

    def test_round_trip_preserves_error_cells(self, tmp_path):
        cfg = shot_config(chi_grid_pi=(0.25,), p_grid=(0.5,), shots=40, seed=0)
        result = run_sweep(cfg)
        assert result.cells[0].error is not None
        paths = emit_report(result, tmp_path, formats=("json",))
        assert load_result(paths["json"]) == result

    def test_schema_version_checked(self, tmp_path):
        cfg = analytic_config(chi_grid_pi=(0.0,), p_grid=(0.0,))
        paths = emit_report(run_sweep(cfg), tmp_path, formats=("json",))
        data = json.loads(open(paths["json"]).read())
        data["schema_version"] = 99
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="schema_version"):
            load_result(bad)


class TestAnalyses:
    def test_rmsd_analysis_zero_for_analytic(self):
        cfg = analytic_config(chi_grid_pi=(0.0, 0.05), p_grid=(0.0, 0.1))
        rows = rmsd_analysis(run_sweep(cfg))
        assert [r["chi_nominal_pi"] for r in rows] == [0.0, 0.05]
        assert all(r["mean_rmsd"] == 0.0 for r in rows)
        assert all(r["n_cells"] == 2 for r in rows)

    def test_threshold_rows_shape(self):
        cfg = analytic_config(chi_grid_pi=(0.05,))
        rows = threshold_rows(run_sweep(cfg))
        assert rows == [{"chi_pi": 0.05, "profile": "IXI", "thresholds": [0.17], "window": 3}]


class TestVerifyParallelization:
    def test_default_grid_passes(self):
        rows = verify_parallelization()
        assert len(rows) == 22  # 11 angles x 2 variants
        assert all(r["passed"] for r in rows)
        assert max(r["max_linf"] for r in rows) < 1e-10
        assert max(r["aux_marginal_dev"] for r in rows) < 1e-12

    def test_corrupted_branch_map_is_caught(self):
        mapping = dict(branch_map(Variant.I_CIRCUIT))
        keys = sorted(mapping)
        mapping[keys[0]], mapping[keys[1]] = mapping[keys[1]], mapping[keys[0]]
        rows = verify_parallelization((0.1,), branch_maps={Variant.I_CIRCUIT: mapping})
        bad = [r for r in rows if r["variant"] == "I"][0]
        good = [r for r in rows if r["variant"] == "X"][0]
        assert not bad["passed"]
        assert bad["worst_branch"] != ""
        assert good["passed"]


class TestCli:
    def test_sweep_writes_outputs(self, tmp_path, capsys):
        code = main(["sweep", "--mode", "analytic", "--out", str(tmp_path), "--seed", "4"])
        assert code == 0
        assert (tmp_path / "sweep.csv").exists()
        assert (tmp_path / "sweep.json").exists()
        assert "cells evaluated" in capsys.readouterr().out

    def test_seed_override_lands_in_output(self, tmp_path):
        main(["sweep", "--mode", "analytic", "--out", str(tmp_path), "--seed", "77"])
        result = load_result(tmp_path / "sweep.json")
        assert result.config.seed == 77

    def test_verify_passes_on_default_grid(self, capsys):
        assert main(["verify", "--chi-grid", "0,0.125,0.25"]) == 0
        out = capsys.readouterr().out
        assert "pass" in out and "FAIL" not in out

    def test_bad_chi_grid_is_config_error(self, capsys):
        assert main(["verify", "--chi-grid", "0.4"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["sweep", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_cell_failures_exit_code(self, tmp_path, capsys):
        cfg = shot_config(chi_grid_pi=(0.25,), p_grid=(0.5,), shots=40, seed=0)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        code = main(["sweep", "--config", str(path), "--out", str(tmp_path)])
        assert code == 3
        assert "failed" in capsys.readouterr().err

    def test_thresholds_command(self, tmp_path, capsys):
        cfg = analytic_config(chi_grid_pi=(0.05,))
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert main(["thresholds", "--config", str(path), "--out", str(tmp_path)]) == 0
        assert "0.17" in capsys.readouterr().out
        assert (tmp_path / "thresholds.csv").exists()

    def test_rmsd_command(self, tmp_path, capsys):
        cfg = shot_config(chi_grid_pi=(0.05,), p_grid=(0.0, 0.5), shots=4_000, seed=6)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert main(["rmsd", "--config", str(path), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "rmsd.csv").exists()
        assert "mean_rmsd" in (tmp_path / "rmsd.csv").read_text()

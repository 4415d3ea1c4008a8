import json

import numpy as np
import pytest
from click.testing import CliRunner

from pensynth import PanelData, save_panel
from pensynth.cli import main
from oracles import grid_search_2donor


@pytest.fixture
def runner():
    return CliRunner()


def write_panel(tmp_path, outcomes, n_treated, n_pre, name="panel.csv"):
    panel = PanelData(outcomes=np.asarray(outcomes, float), n_treated=n_treated, n_pre=n_pre)
    path = tmp_path / name
    save_panel(panel, path)
    return path, panel


SIM_CONFIG = """\
t_pre = 8
n_treated = 2
n_donors = 4
gamma = 0.2
alpha_grid = 0
n_reps = 4
n_permutations = 9
tau = 0.05
seed = 321
burn_in = 20
"""


class TestEstimate:
    def test_single_donor_weight_is_one(self, runner, tmp_path):
        path, _ = write_panel(tmp_path, [[1.0, 2.0, 9.0], [3.0, 1.0, 2.0]], 1, 2)
        result = runner.invoke(
            main,
            ["estimate", "--data", str(path), "--n-treated", "1", "--n-pre", "2",
             "--out-dir", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        weights = (tmp_path / "weights.csv").read_text().strip().splitlines()
        assert weights[0] == "treated_unit,donor_unit,weight"
        assert weights[1].endswith("1.0")

    def test_twin_panel_att_zero(self, runner, tmp_path, twin_panel):
        path = tmp_path / "twin.csv"
        save_panel(twin_panel, path)
        result = runner.invoke(
            main,
            ["estimate", "--data", str(path), "--n-treated", "1", "--n-pre", "4",
             "--gamma", "0.2", "--out-dir", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert "ATT: 0.000000" in result.output
        assert (tmp_path / "errors.csv").exists()

    def test_weights_match_grid_oracle(self, runner, tmp_path, rng):
        y = rng.normal(size=(3, 6))
        path, panel = write_panel(tmp_path, y, 1, 5)
        result = runner.invoke(
            main,
            ["estimate", "--data", str(path), "--n-treated", "1", "--n-pre", "5",
             "--gamma", "0.3", "--out-dir", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        w_oracle, _ = grid_search_2donor(
            panel.treated[0, :5], panel.donors[:, :5].T, 0.3, step=1e-6
        )
        lines = (tmp_path / "weights.csv").read_text().strip().splitlines()[1:]
        weights = [float(line.split(",")[2]) for line in lines]
        assert weights == pytest.approx(list(w_oracle), abs=1e-4)

    def test_invalid_input_exits_one(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["estimate", "--data", str(tmp_path / "missing.csv"),
             "--n-treated", "1", "--n-pre", "2"],
        )
        assert result.exit_code == 1


class TestTest:
    def test_andrews_identical_periods_p_one(self, runner, tmp_path):
        # treated tracks donor with a constant offset in every period
        donor = np.array([1.0, 2.0, 3.0, 4.0])
        path, _ = write_panel(tmp_path, np.vstack([donor + 1.0, donor]), 1, 3)
        result = runner.invoke(
            main,
            ["test", "--data", str(path), "--n-treated", "1", "--n-pre", "3",
             "--method", "andrews", "--out-dir", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert "p_value: 1.0" in result.output
        payload = json.loads((tmp_path / "test_result.json").read_text())
        assert payload["method"] == "andrews"
        assert payload["reject"] is False
        sidecar = (tmp_path / "null_sample.csv").read_text().splitlines()
        assert sidecar[0] == "null_sample"
        assert len(sidecar) == 4

    def test_placebo_is_byte_reproducible(self, runner, tmp_path, rng):
        path, _ = write_panel(tmp_path, rng.normal(size=(5, 7)), 1, 6)
        args = ["test", "--data", str(path), "--n-treated", "1", "--n-pre", "6",
                "--method", "placebo", "--gamma", "0.2", "--permutations", "19",
                "--seed", "4", "--out-dir", str(tmp_path)]
        out1 = runner.invoke(main, args)
        blob1 = (tmp_path / "test_result.json").read_bytes(), (tmp_path / "null_sample.csv").read_bytes()
        out2 = runner.invoke(main, args)
        blob2 = (tmp_path / "test_result.json").read_bytes(), (tmp_path / "null_sample.csv").read_bytes()
        assert out1.exit_code == out2.exit_code == 0
        assert out1.output == out2.output
        assert blob1 == blob2

    def test_placebo_without_seed_exits_one(self, runner, tmp_path, rng):
        path, _ = write_panel(tmp_path, rng.normal(size=(4, 5)), 1, 4)
        result = runner.invoke(
            main,
            ["test", "--data", str(path), "--n-treated", "1", "--n-pre", "4",
             "--method", "placebo"],
        )
        assert result.exit_code == 1

    def test_true_statistic_is_least_extreme(self, runner, tmp_path, rng):
        # treated mirrors its donor pool in the post period, so the true
        # ratio is the largest and every enumerated draw counts: p = 1
        y = rng.normal(size=(4, 6))
        y[0] = y[1]  # exact twin: zero post error, infinite ratio
        path, panel = write_panel(tmp_path, y, 1, 5)
        result = runner.invoke(
            main,
            ["test", "--data", str(path), "--n-treated", "1", "--n-pre", "5",
             "--method", "placebo", "--permutations", "30", "--seed", "9",
             "--out-dir", str(tmp_path)],
        )
        assert result.exit_code == 0
        from pensynth import placebo_test

        enumerated = placebo_test(panel, 0.0, 1, 0.05, enumerate_assignments=True)
        payload = json.loads((tmp_path / "test_result.json").read_text())
        assert payload["p_value"] == enumerated.p_value == 1.0


class TestCv:
    def test_singleton_grid_echoed(self, runner, tmp_path, rng):
        path, _ = write_panel(tmp_path, rng.normal(size=(4, 7)), 1, 6)
        result = runner.invoke(
            main,
            ["cv", "--data", str(path), "--n-treated", "1", "--n-pre", "6",
             "--grid", "0.2"],
        )
        assert result.exit_code == 0, result.output
        assert "gamma_star: 0.2" in result.output

    def test_perfect_fit_returns_smallest_gamma(self, runner, tmp_path, twin_panel):
        path = tmp_path / "twin.csv"
        save_panel(twin_panel, path)
        result = runner.invoke(
            main,
            ["cv", "--data", str(path), "--n-treated", "1", "--n-pre", "4",
             "--grid", "0.5,0.1,2"],
        )
        assert result.exit_code == 0, result.output
        assert "gamma_star: 0.1" in result.output

    def test_table_matches_oracle(self, runner, tmp_path, rng):
        y = rng.normal(size=(3, 9))
        path, panel = write_panel(tmp_path, y, 1, 8)
        result = runner.invoke(
            main,
            ["cv", "--data", str(path), "--n-treated", "1", "--n-pre", "8",
             "--grid", "0,0.5", "--train-fraction", "0.5"],
        )
        assert result.exit_code == 0, result.output
        table = {}
        for line in result.output.strip().splitlines():
            parts = line.split(",")
            if len(parts) == 2 and parts[0] not in ("gamma",):
                table[float(parts[0])] = float(parts[1])
        train, valid = [0, 1, 2, 3], [4, 5, 6, 7]
        for gamma in (0.0, 0.5):
            w, _ = grid_search_2donor(
                panel.treated[0, train], panel.donors[:, train].T, gamma, step=1e-6
            )
            resid = panel.treated[0, valid] - w @ panel.donors[:, valid]
            assert table[gamma] == pytest.approx(float((resid**2).mean()), abs=1e-5)


class TestSimulate:
    def test_single_rep_rates_are_binary(self, runner, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(SIM_CONFIG.replace("n_reps = 4", "n_reps = 1"))
        out = tmp_path / "rates.csv"
        result = runner.invoke(
            main, ["simulate", "--config", str(config), "--out", str(out), "--no-figure"]
        )
        assert result.exit_code == 0, result.output
        import pandas as pd

        df = pd.read_csv(out)
        assert len(df) == 3
        assert set(df["rejection_rate"]).issubset({0.0, 1.0})
        manifest = (str(out) + ".manifest.txt")
        import os
        assert os.path.exists(manifest)

    def test_repeated_run_byte_identical(self, runner, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(SIM_CONFIG)
        out = tmp_path / "rates.csv"
        assert runner.invoke(
            main, ["simulate", "--config", str(config), "--out", str(out), "--no-figure"]
        ).exit_code == 0
        first = out.read_bytes(), (str(out) + ".manifest.txt")
        first_bytes = out.read_bytes()
        assert runner.invoke(
            main, ["simulate", "--config", str(config), "--out", str(out), "--no-figure"]
        ).exit_code == 0
        assert out.read_bytes() == first_bytes

    def test_figure_written_next_to_csv(self, runner, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(SIM_CONFIG.replace("n_reps = 4", "n_reps = 2"))
        out = tmp_path / "rates.csv"
        result = runner.invoke(
            main, ["simulate", "--config", str(config), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "rates.png").stat().st_size > 0

    def test_missing_seed_exits_one(self, runner, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(SIM_CONFIG.replace("seed = 321\n", ""))
        result = runner.invoke(
            main, ["simulate", "--config", str(config), "--out", str(tmp_path / "r.csv")]
        )
        assert result.exit_code == 1

    def test_unknown_key_exits_one(self, runner, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(SIM_CONFIG + "bogus = 1\n")
        result = runner.invoke(
            main, ["simulate", "--config", str(config), "--out", str(tmp_path / "r.csv")]
        )
        assert result.exit_code == 1


class TestPlot:
    def test_plot_from_table(self, runner, tmp_path):
        table = tmp_path / "rates.csv"
        table.write_text(
            "alpha,method,rejection_rate,mc_se\n"
            "0.0,placebo,0.05,0.01\n0.0,andrews_loo,0.06,0.01\n"
            "1.0,placebo,0.4,0.02\n1.0,andrews_loo,0.6,0.02\n"
        )
        out = tmp_path / "fig.png"
        result = runner.invoke(
            main, ["plot", "--table", str(table), "--out", str(out), "--level", "0.05"]
        )
        assert result.exit_code == 0, result.output
        assert out.stat().st_size > 0

    def test_missing_columns_exit_one(self, runner, tmp_path):
        table = tmp_path / "bad.csv"
        table.write_text("a,b\n1,2\n")
        result = runner.invoke(
            main, ["plot", "--table", str(table), "--out", str(tmp_path / "f.png")]
        )
        assert result.exit_code == 1

"""Tests for the command-line interface."""

import json

import pytest

from tailfx import bench, cli
from tailfx.errors import BenchAbortError
from tailfx.simgen import gen_simple_51


def run(argv):
    """Exit code of ``tailfx argv``, including argparse's own exits."""
    try:
        return cli.main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture(scope="module")
def simple_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "simple.csv"
    cli.write_csv_dataset(path, gen_simple_51(500, seed=7).data)
    return path


def read(path):
    return json.loads(path.read_text())


class TestCsv:
    def test_round_trip(self, tmp_path):
        data = gen_simple_51(50, seed=1).data
        cli.write_csv_dataset(tmp_path / "a.csv", data)
        back, names = cli.read_csv_dataset(tmp_path / "a.csv")
        assert names == ["x1"]
        assert (back.outcome == data.outcome).all()
        assert (back.treatment == data.treatment).all()

    def test_confounder_override(self, tmp_path):
        (tmp_path / "a.csv").write_text("t,a,y,b\n1,2,3,4\n5,6,7,8\n")
        data, names = cli.read_csv_dataset(tmp_path / "a.csv", ["b"])
        assert names == ["b"]
        assert data.confounders[:, 0].tolist() == [4.0, 8.0]
        assert data.outcome.tolist() == [3.0, 7.0]

    @pytest.mark.parametrize("text,message", [
        ("t,x\n1,2\n", "missing required column 'y'"),
        ("y,t\n1,2\n", "at least one confounder"),
        ("y,t,x,x\n1,2,3,4\n", "duplicate"),
        ("y,t,x\n1,2,3\n1,oops,3\n", "line 3: non-numeric"),
        ("y,t,x\n1,2,3\n1,nan,3\n", "line 3: non-finite"),
        ("y,t,x\n1,2,3\n1,2\n", "line 3: expected 3 fields"),
    ])
    def test_malformed(self, tmp_path, text, message):
        (tmp_path / "bad.csv").write_text(text)
        with pytest.raises(cli.InputError, match=message):
            cli.read_csv_dataset(tmp_path / "bad.csv")


class TestFit:
    def test_simple_scenario(self, simple_csv, tmp_path):
        out = tmp_path / "fit.json"
        assert run(["fit", "--input", simple_csv, "--q", 0.9, "--output", out]) == 0
        doc = read(out)
        assert doc["schema_version"] == cli.SCHEMA_VERSION
        assert 0.5 <= doc["omega_hat"] <= 2.0
        for key in ("threshold_coefficients", "scale_link_coefficients", "shape",
                    "alpha_coefficients", "beta_coefficients", "n_exceedances"):
            assert key in doc

    def test_missing_y_column(self, tmp_path, capsys):
        (tmp_path / "bad.csv").write_text("t,x\n1,2\n")
        assert run(["fit", "--input", tmp_path / "bad.csv"]) == 2
        assert "line 1" in capsys.readouterr().err

    @pytest.mark.parametrize("q", ["1.2", "0", "abc"])
    def test_invalid_level(self, simple_csv, q):
        assert run(["fit", "--input", simple_csv, "--q", q]) == 2

    def test_estimation_error(self, simple_csv, capsys):
        # 500 rows leave too few exceedances above the 99.9% threshold
        assert run(["fit", "--input", simple_csv, "--q", 0.999]) == 3
        assert "estimation failed" in capsys.readouterr().err

    def test_config_flags(self, simple_csv, tmp_path):
        out = tmp_path / "fit.json"
        args = ["fit", "--input", simple_csv, "--q", 0.9, "--theta-features", "tau",
                "--outcome-intercept", "--output", out]
        assert run(args) == 0
        cfg = read(out)["config"]
        assert cfg == {"theta_features": "tau", "covariate_scale": False, "outcome_intercept": True}


class TestEffect:
    def test_difference_is_linear_in_omega(self, simple_csv, tmp_path):
        out = tmp_path / "e.json"
        args = ["effect", "--input", simple_csv, "--q", 0.9, "--t", "359,400",
                "--x-star", "1", "--B", 0, "--output", out]
        assert run(args) == 0
        doc = read(out)
        (diff,) = doc["differences"]
        assert diff["estimate"] == pytest.approx(41 * doc["omega_hat"]["estimate"], abs=1e-9)
        (diff_at,) = doc["differences_at"]
        assert diff_at["estimate"] == pytest.approx(41 * doc["omega_hat_at"]["estimate"], abs=1e-9)

    def test_no_bootstrap_omits_intervals(self, simple_csv, tmp_path):
        out = tmp_path / "e.json"
        assert run(["effect", "--input", simple_csv, "--q", 0.9, "--t", "3", "--B", 0, "--output", out]) == 0
        doc = read(out)
        assert doc["bootstrap"] is None
        assert set(doc["omega_hat"]) == {"estimate"}
        assert set(doc["mu_hat"][0]) == {"t", "estimate"}

    def test_intervals(self, simple_csv, tmp_path):
        out = tmp_path / "e.json"
        args = ["effect", "--input", simple_csv, "--q", 0.9, "--t", "2,3,4", "--B", 100, "--output", out]
        assert run(args) == 0
        doc = read(out)
        omega = doc["omega_hat"]
        assert omega["lower"] <= omega["estimate"] <= omega["upper"]
        assert len(doc["mu_hat"]) == 3 and len(doc["differences"]) == 3

    def test_x_star_width_mismatch(self, simple_csv, capsys):
        args = ["effect", "--input", simple_csv, "--t", "1", "--x-star", "1,2", "--B", 0]
        assert run(args) == 2
        assert "x-star" in capsys.readouterr().err

    @pytest.mark.slow
    def test_interval_coverage_high_dimensional(self, tmp_path):
        hits = 0
        for seed in range(100):
            csv_path, out = tmp_path / "h.csv", tmp_path / "e.json"
            sim = ["simulate", "--scenario", "highdim_b1", "--d", 5, "--noise", "exponential",
                   "--n", 5000, "--seed", seed, "--output", csv_path]
            assert run(sim) == 0
            assert run(["effect", "--input", csv_path, "--t", "0,1", "--seed", seed, "--output", out]) == 0
            omega = read(out)["omega_hat"]
            hits += omega["lower"] <= -1.0 <= omega["upper"]
        assert hits >= 90


class TestSimulate:
    def test_extremal_sidecar(self, tmp_path):
        out = tmp_path / "b5.csv"
        args = ["simulate", "--scenario", "extremal_b5", "--nu", 2, "--c", 1, "--n", 1000,
                "--seed", 1, "--output", out]
        assert run(args) == 0
        side = read(tmp_path / "b5.json")
        assert round(side["true_omega"], 4) == -0.7979
        assert side["params"] == {"c": 1.0, "nu": 2.0}
        data, _ = cli.read_csv_dataset(out)
        assert data.n == 1000

    def test_infinite_nu_is_serialisable(self, tmp_path):
        args = ["simulate", "--scenario", "extremal_b5", "--nu", "inf", "--c", 1, "--n", 10,
                "--output", tmp_path / "a.csv"]
        assert run(args) == 0
        assert read(tmp_path / "a.json")["params"]["nu"] == "inf"

    def test_unknown_scenario(self, tmp_path, capsys):
        assert run(["simulate", "--scenario", "nope", "--n", 10, "--output", tmp_path / "a.csv"]) == 2
        err = capsys.readouterr().err
        assert "simple_51" in err and "extremal_b5" in err

    def test_zero_rows(self, tmp_path):
        assert run(["simulate", "--scenario", "simple_51", "--n", 0, "--output", tmp_path / "a.csv"]) == 2


class TestBench:
    def test_unknown_table(self, tmp_path):
        assert run(["bench", "--table", "T9", "--output", tmp_path]) == 2

    def test_abort_exit_code(self, tmp_path, monkeypatch, capsys):
        def abort(*args, **kwargs):
            raise BenchAbortError("3 of 4 replications failed", ["rep 0: boom"])

        monkeypatch.setattr(bench, "run_table", abort)
        assert run(["bench", "--table", "T6", "--output", tmp_path]) == 4
        assert "rep 0: boom" in capsys.readouterr().err

    def test_t6_small(self, tmp_path):
        assert run(["bench", "--table", "T6", "--scale", 0.02, "--output", tmp_path]) == 0
        lines = (tmp_path / "T6.csv").read_text().splitlines()
        assert len(lines) == 13
        assert len(read(tmp_path / "T6.json")["cells"]) == 12

    @pytest.mark.slow
    def test_t1_grid(self, tmp_path):
        assert run(["bench", "--table", "T1", "--scale", 0.2, "--output", tmp_path]) == 0
        lines = (tmp_path / "T1.csv").read_text().splitlines()
        assert len(lines) == 1 + 12

    @pytest.mark.slow
    def test_s51_cell(self, tmp_path):
        assert run(["bench", "--table", "S51", "--scale", 1, "--output", tmp_path]) == 0
        (cell,) = read(tmp_path / "S51.json")["cells"]
        assert cell["reps"] == 100
        for key in ("mean", "ci_lower", "ci_upper", "ci_halfwidth"):
            assert isinstance(cell[key], float)


def _snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestDeterminism:
    """Rerunning any command with identical flags reproduces its files byte for byte."""

    COMMANDS = {
        "simulate": ["simulate", "--scenario", "copula_b3", "--alpha", 1.5, "--omega", 1,
                     "--n", 300, "--seed", 3, "--output", "{dir}/s.csv"],
        "fit": ["fit", "--input", "{data}", "--q", 0.9, "--output", "{dir}/f.json"],
        "effect": ["effect", "--input", "{data}", "--q", 0.9, "--t", "2,4", "--x-star", "0",
                   "--B", 100, "--seed", 5, "--output", "{dir}/e.json"],
        "bench": ["bench", "--table", "T6", "--scale", 0.02, "--seed", 2,
                  "--output", "{dir}"],
    }

    @pytest.mark.parametrize("name", sorted(COMMANDS))
    def test_rerun_is_byte_identical(self, name, simple_csv, tmp_path):
        snaps = []
        for attempt in ("a", "b"):
            d = tmp_path / attempt
            d.mkdir()
            argv = [str(a).format(dir=d, data=simple_csv) for a in self.COMMANDS[name]]
            assert run(argv) == 0
            snaps.append(_snapshot(d))
        assert snaps[0] and snaps[0] == snaps[1]

"""Command-line surface: flags, exit codes, determinism, output files."""

import json

import pytest

from zetalab.cli import main
from zetalab.experiments import PNT_COLUMNS, RECORD_COLUMNS, SUMMARY_COLUMNS


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSieve:
    def test_prints_four_primes(self, capsys):
        code, out, _ = run_cli(capsys, "sieve", "--r", "-1", "--k", "1")
        assert code == 0
        assert "4 primes" in out
        assert "2 3 5 7" in out

    def test_large_band_prints_count_only(self, capsys):
        code, out, _ = run_cli(capsys, "sieve", "--r", "-1", "--k", "3")
        assert code == 0
        assert "429 primes" in out

    def test_writes_file_with_header(self, capsys, tmp_path):
        out_path = tmp_path / "band.csv"
        code, _, _ = run_cli(capsys, "sieve", "--r", "-1", "--k", "1",
                             "--out", str(out_path))
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert lines[0].startswith("# zetalab 0.1.0 | sieve |")
        assert lines[1] == "prime,log_prime"
        assert len(lines) == 6

    def test_invalid_band_exits_1(self, capsys):
        code, _, err = run_cli(capsys, "sieve", "--r", "3", "--k", "1")
        assert code == 1
        assert "r" in err


class TestFlagErrors:
    def test_unknown_flag_exits_1(self, capsys):
        code, _, err = run_cli(capsys, "sieve", "--bogus", "7")
        assert code == 1
        assert "--bogus" in err

    def test_unknown_subcommand_exits_1(self, capsys):
        code, _, err = run_cli(capsys, "frobnicate")
        assert code == 1

    def test_bad_model_names_flag(self, capsys):
        code, _, err = run_cli(capsys, "eval", "--model", "laplace", "--h", "0.5")
        assert code == 1
        assert "--model" in err


class TestEvalAndMax:
    def test_eval_prints_value(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "--r", "-1", "--k", "2", "--j", "0",
                               "--model", "circle", "--seed", "7", "--h", "0.37")
        assert code == 0
        assert out.startswith("X^(0)(0.37) = ")

    def test_eval_h_out_of_domain(self, capsys):
        code, _, err = run_cli(capsys, "eval", "--h", "1.5")
        assert code == 1

    def test_max_deterministic_stdout(self, capsys):
        argv = ("max", "--r", "-1", "--k", "3", "--j", "0", "--model", "circle",
                "--seed", "7", "--alpha", "0.5")
        code_a, out_a, _ = run_cli(capsys, *argv)
        code_b, out_b, _ = run_cli(capsys, *argv)
        assert code_a == code_b == 0
        assert out_a == out_b
        assert "max_cont=" in out_a and "max_grid=" in out_a and "discrepancy=" in out_a


class TestExperiment:
    def test_records_file_schema(self, capsys, tmp_path):
        out_path = tmp_path / "records.csv"
        code, out, _ = run_cli(capsys, "experiment", "--r", "-1", "--k", "2",
                               "--j", "0", "--alpha", "0.5", "--trials", "12",
                               "--seed", "3", "--K", "0.5", "--K", "1.0",
                               "--threads", "1", "--out", str(out_path))
        assert code == 0
        assert "P(discrepancy > 0.5)" in out
        lines = out_path.read_text().splitlines()
        assert lines[0].startswith("# zetalab 0.1.0 | experiment |")
        assert lines[1] == ",".join(RECORD_COLUMNS)
        assert len(lines) == 2 + 12

    def test_jsonl_records(self, capsys, tmp_path):
        out_path = tmp_path / "records.jsonl"
        code, _, _ = run_cli(capsys, "experiment", "--r", "-1", "--k", "2",
                             "--j", "0", "--alpha", "0.5", "--trials", "5",
                             "--threads", "1", "--format", "jsonl",
                             "--out", str(out_path))
        assert code == 0
        lines = out_path.read_text().splitlines()
        rows = [json.loads(line) for line in lines[1:]]
        assert len(rows) == 5
        assert set(rows[0]) == set(RECORD_COLUMNS)

    def test_threads_do_not_change_output(self, capsys, tmp_path):
        base = ("experiment", "--r", "-1", "--k", "2", "--j", "0", "--alpha", "0.5",
                "--trials", "10", "--seed", "11")
        path_1 = tmp_path / "t1.csv"
        path_4 = tmp_path / "t4.csv"
        code_1, out_1, _ = run_cli(capsys, *base, "--threads", "1", "--out", str(path_1))
        code_4, out_4, _ = run_cli(capsys, *base, "--threads", "4", "--out", str(path_4))
        assert code_1 == code_4 == 0
        assert out_1 == out_4
        assert path_1.read_bytes() == path_4.read_bytes()

    def test_config_file_with_flag_override(self, capsys, tmp_path):
        config = tmp_path / "exp.cfg"
        config.write_text("r = -1\nk = 2\nj = 0\nalpha = 0.5\ntrials = 6\nseed = 5\n"
                          "model = gaussian\n")
        code, out, _ = run_cli(capsys, "experiment", "--config", str(config),
                               "--threads", "1")
        assert code == 0
        assert "trials=6" in out and "model=gaussian" in out and "seed=5" in out
        code, out, _ = run_cli(capsys, "experiment", "--config", str(config),
                               "--trials", "4", "--model", "circle", "--threads", "1")
        assert code == 0
        assert "trials=4" in out and "model=circle" in out

    def test_config_file_band_flags_override(self, capsys, tmp_path):
        config = tmp_path / "exp.cfg"
        config.write_text("k = 1\nalpha = 0.5\ntrials = 3\n")
        code, out, _ = run_cli(capsys, "experiment", "--config", str(config),
                               "--k", "2", "--threads", "1")
        assert code == 0
        assert "k=2" in out


class TestSweep:
    def test_summary_file(self, capsys, tmp_path):
        out_path = tmp_path / "summary.csv"
        code, out, _ = run_cli(capsys, "sweep", "--r", "-1", "--k", "2", "--j", "0",
                               "--alpha", "0.5", "--alpha", "1.0", "--K", "1.0",
                               "--trials", "8", "--seed", "2", "--threads", "1",
                               "--format", "csv", "--out", str(out_path))
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert lines[0].startswith("# zetalab 0.1.0 | sweep |")
        assert lines[1] == ",".join(SUMMARY_COLUMNS)
        assert len(lines) == 4        # 2 alphas x 1 K
        assert out.count("p_hat=") == 2


class TestPntCheck:
    def test_assert_mode_passes(self, capsys):
        code, out, _ = run_cli(capsys, "pnt-check", "--j", "1", "--assert")
        assert code == 0
        assert "pnt-check: PASS" in out
        assert "max deviation" in out

    def test_writes_rows(self, capsys, tmp_path):
        out_path = tmp_path / "pnt.csv"
        code, _, _ = run_cli(capsys, "pnt-check", "--j", "2", "--out", str(out_path))
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert lines[1] == ",".join(PNT_COLUMNS)
        assert len(lines) == 2 + 10   # C(5, 2) checkpoint pairs

    def test_bad_order_exits_1(self, capsys):
        code, _, _ = run_cli(capsys, "pnt-check", "--j", "0")
        assert code == 1


class TestVarianceCheck:
    def test_passes_with_enough_trials(self, capsys):
        code, out, _ = run_cli(capsys, "variance-check", "--r", "-1", "--k", "2",
                               "--j", "0", "--trials", "1200", "--seed", "4",
                               "--assert")
        assert code == 0
        assert "PASS" in out

    def test_too_few_trials_is_validation_error(self, capsys):
        code, _, err = run_cli(capsys, "variance-check", "--trials", "100")
        assert code == 1
        assert "1000" in err

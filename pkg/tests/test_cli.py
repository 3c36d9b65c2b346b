"""Command-line client tests (in-process service)."""

import json

import pytest

from nlcnot import cli
from nlcnot.cli import EXIT_CONFIG, EXIT_OK, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestTable1:
    def test_csv(self, capsys):
        code, out, err = run_cli(capsys, "table1")
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "r_a,r_b,pauli_A,pauli_B"
        assert "v,h,Z,X" in lines

    def test_json(self, capsys):
        code, out, _ = run_cli(capsys, "table1", "--format", "json")
        assert code == EXIT_OK
        entries = json.loads(out)
        assert len(entries) == 4


class TestSimulate:
    def test_balanced_ideal(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--balanced", "--mode", "ideal",
            "--trials", "50", "--seed", "1",
        )
        assert code == EXIT_OK
        header, row = out.strip().splitlines()
        assert header.startswith("G_A,G_B,")
        cells = dict(zip(header.split(","), row.split(",")))
        assert cells["acceptance_rate"] == "1"
        assert float(cells["mean_fidelity"]) == pytest.approx(1.0, abs=1e-12)

    def test_json_format(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--G", "100", "--trials", "20", "--format", "json"
        )
        assert code == EXIT_OK
        row = json.loads(out)
        assert row["G_A"] == 100.0

    def test_explicit_amplitudes(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--alpha", "1,0", "--beta", "0,0",
            "--a", "0,0", "--b", "1,0", "--mode", "ideal", "--trials", "20",
        )
        assert code == EXIT_OK

    def test_g_from_rates(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--g", "10", "--gamma", "1", "--gamma-s", "1",
            "--trials", "10", "--format", "json",
        )
        assert code == EXIT_OK
        assert json.loads(out)["G_A"] == 100.0

    def test_incomplete_rates_config_error(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "--g", "10", "--trials", "5")
        assert code == EXIT_CONFIG
        assert err.startswith("error:")

    def test_bad_flag_value(self, capsys):
        code, _, _ = run_cli(capsys, "simulate", "--alpha", "spam")
        assert code == EXIT_CONFIG


class TestSweep:
    def test_flags_only(self, capsys, tmp_path):
        out_file = tmp_path / "rows.csv"
        code, _, _ = run_cli(
            capsys, "sweep", "--G", "10,100", "--pl", "0,0.1",
            "--trials", "20", "--seed", "2", "--out", str(out_file),
        )
        assert code == EXIT_OK
        lines = out_file.read_text().strip().splitlines()
        assert len(lines) == 5

    def test_config_file(self, capsys, tmp_path):
        ini = tmp_path / "sweep.ini"
        ini.write_text(
            "[inputs]\nbalanced = true\n"
            "[cavity]\nG = 50\nmode = ideal\n"
            "[noise]\np_l = 0, 0.5\n"
            "[run]\ntrials = 30\nseed = 8\n"
        )
        code, out, _ = run_cli(capsys, "sweep", "--config", str(ini))
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert len(lines) == 3
        assert ",8" in lines[1]  # seed from file

    def test_flag_overrides_config(self, capsys, tmp_path):
        ini = tmp_path / "sweep.ini"
        ini.write_text("[run]\ntrials = 30\nseed = 8\n")
        code, out, _ = run_cli(capsys, "sweep", "--config", str(ini), "--seed", "9")
        assert code == EXIT_OK
        assert out.strip().splitlines()[1].endswith(",9")

    def test_missing_config_file(self, capsys):
        code, _, err = run_cli(capsys, "sweep", "--config", "/does/not/exist.ini")
        assert code == EXIT_CONFIG
        assert err.startswith("error:")

    def test_json_output(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep", "--G", "100", "--trials", "10", "--format", "json"
        )
        assert code == EXIT_OK
        assert json.loads(out)[0]["trials"] == 10


class TestSpectrum:
    def test_points(self, capsys):
        code, out, _ = run_cli(
            capsys, "spectrum", "--g", "10", "--points", "5",
            "--omega-min", "-0.5", "--omega-max", "0.5",
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "omega,re,im,abs"
        assert len(lines) == 6

    def test_bad_params(self, capsys):
        code, _, err = run_cli(capsys, "spectrum", "--g", "-3")
        assert code == EXIT_CONFIG
        assert err.startswith("error:")


class TestFormulas:
    def test_key_values(self, capsys):
        code, out, _ = run_cli(capsys, "formulas", "--G", "100", "--balanced")
        assert code == EXIT_OK
        values = dict(line.split(" = ") for line in out.strip().splitlines())
        assert float(values["analytic_fidelity"]) == pytest.approx(0.995025, abs=1e-6)

    def test_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "formulas", "--G", "100", "--pl", "0.1", "--pdc", "0.01",
            "--format", "json",
        )
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["success_probability"] == pytest.approx(0.9 * 0.88)


class TestArgParsing:
    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == EXIT_CONFIG

    def test_help_exits_clean(self, capsys):
        assert main(["--help"]) == EXIT_OK

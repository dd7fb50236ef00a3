"""CLI behavior: output formats, exit codes, determinism, round-trips."""

from __future__ import annotations

import json

import pytest

from miplan import cli
from miplan.cli import main, read_table

from conftest import make_pilot_results
from test_fmi import REFERENCE_CELLS


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_two_row_csv(tmp_path):
    path = tmp_path / "pilot.csv"
    path.write_text("imputation,estimate,variance\n1,0,1\n2,2,1\n")
    return str(path)


class TestPool:
    def test_json_hand_example(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, ["pool", "--in", write_two_row_csv(tmp_path), "--level", "0.95"])
        assert code == 0
        payload = json.loads(out)
        assert payload["theta"] == 1
        assert payload["se"] == 2
        assert payload["gamma_hat"] == 0.75
        assert payload["m"] == 2
        assert payload["gamma_lower"] < 0.75 < payload["gamma_upper"]

    def test_text_format(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, ["pool", "--in", write_two_row_csv(tmp_path), "--format", "text"])
        assert code == 0
        assert "gamma_hat: 0.75" in out

    def test_malformed_csv_exits_one(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("imputation,estimate,variance\n1,zero,1\n")
        code, _, err = run_cli(capsys, ["pool", "--in", str(path)])
        assert code == 1
        assert err.startswith("error:")

    def test_missing_file_exits_one(self, capsys):
        code, _, err = run_cli(capsys, ["pool", "--in", "nope.csv"])
        assert code == 1
        assert err.startswith("error:")


class TestPlan:
    def pilot_path(self, pilot_csv_factory):
        return pilot_csv_factory(make_pilot_results(5, 0.39, 0.023))

    def test_worked_example(self, pilot_csv_factory, capsys):
        code, out, _ = run_cli(
            capsys, ["plan", "--pilot", self.pilot_path(pilot_csv_factory), "--target-sd", "0.001"]
        )
        assert code == 0
        payload = json.loads(out)
        assert list(payload) == [
            "m_required", "gamma_point", "gamma_upper", "cv_target", "df_implied",
            "pilot_m", "pilot_sufficient", "pilot_estimate", "pilot_se",
        ]
        assert 124 <= payload["m_required"] <= 128
        assert payload["gamma_upper"] == pytest.approx(0.69, abs=0.005)
        assert payload["pilot_m"] == 5
        assert payload["pilot_sufficient"] is False
        assert payload["pilot_se"] == pytest.approx(0.023, rel=1e-9)

    def test_target_kinds_accepted(self, pilot_csv_factory, capsys):
        path = self.pilot_path(pilot_csv_factory)
        for flag, value in (("--target-cv", "0.05"), ("--target-vcv", "0.1"), ("--target-df", "200")):
            code, out, _ = run_cli(capsys, ["plan", "--pilot", path, flag, value])
            assert code == 0
            assert json.loads(out)["m_required"] >= 2

    def test_multiple_targets_exit_two(self, pilot_csv_factory):
        path = self.pilot_path(pilot_csv_factory)
        with pytest.raises(SystemExit) as exc:
            main(["plan", "--pilot", path, "--target-sd", "0.001", "--target-cv", "0.05"])
        assert exc.value.code == 2

    def test_no_target_exit_two(self, pilot_csv_factory):
        path = self.pilot_path(pilot_csv_factory)
        with pytest.raises(SystemExit) as exc:
            main(["plan", "--pilot", path])
        assert exc.value.code == 2


class TestTable1:
    def test_csv_matches_reference(self, capsys):
        code, out, _ = run_cli(capsys, ["table1"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "gamma,m,lower,upper"
        assert len(lines) == 21
        for line in lines[1:]:
            g, m, lo, up = line.split(",")
            ref_lo, ref_up = REFERENCE_CELLS[(float(g), int(m))]
            assert abs(float(lo) - ref_lo) <= 0.005
            assert abs(float(up) - ref_up) <= 0.005

    def test_text_format(self, capsys):
        code, out, _ = run_cli(capsys, ["table1", "--format", "text", "--gammas", "0.3", "--ms", "5"])
        assert code == 0
        assert "(0.11, 0.60)" in out

    def test_out_file(self, tmp_path, capsys):
        dest = tmp_path / "t1.csv"
        code, out, _ = run_cli(capsys, ["table1", "--out", str(dest)])
        assert code == 0
        header, rows = read_table(str(dest))
        assert header == ["gamma", "m", "lower", "upper"]
        assert len(rows) == 20


class TestSimulate:
    def test_two_stage_records_and_summary(self, tmp_path, capsys):
        base = tmp_path / "ts"
        code, out, _ = run_cli(capsys, [
            "simulate", "--experiment", "two-stage", "--n", "400", "--missing", "0.5",
            "--pilot-m", "5", "--target-cv", "0.2", "--reps", "8", "--seed", "11",
            "--out", str(base),
        ])
        assert code == 0
        payload = json.loads(out)
        assert payload["experiment"] == "two-stage"
        assert payload["reps"] == 8
        assert payload["achieved_sd_of_se"] > 0
        header, rows = read_table(str(base) + ".csv")
        assert header[0] == "rep"
        assert len(rows) == 8
        # round-trip: every numeric cell re-parses as a float
        for row in rows:
            [float(cell) for cell in row]
        on_disk = json.loads((tmp_path / "ts.json").read_text())
        assert on_disk == payload

    def test_two_stage_needs_target(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--experiment", "two-stage", "--reps", "4"])
        assert exc.value.code == 2

    def test_cv_check_deterministic_bytes(self, tmp_path, capsys):
        argv = [
            "simulate", "--experiment", "cv-check", "--n", "300", "--m", "5",
            "--reps", "100", "--seed", "4242", "--workers", "2",
        ]
        outputs = []
        for name in ("a", "b"):
            base = tmp_path / name
            code, out, _ = run_cli(capsys, argv + ["--out", str(base)])
            assert code == 0
            outputs.append((
                (tmp_path / f"{name}.csv").read_bytes(),
                (tmp_path / f"{name}.json").read_bytes(),
                out,
            ))
        assert outputs[0] == outputs[1]

    def test_cv_check_workers_do_not_change_output(self, tmp_path, capsys):
        blobs = []
        for name, workers in (("w1", "1"), ("w3", "3")):
            base = tmp_path / name
            code, _, _ = run_cli(capsys, [
                "simulate", "--experiment", "cv-check", "--n", "300", "--m", "5",
                "--reps", "100", "--seed", "99", "--workers", workers, "--out", str(base),
            ])
            assert code == 0
            blobs.append((tmp_path / f"{name}.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_cv_check_rejects_small_reps(self, capsys):
        code, _, err = run_cli(capsys, [
            "simulate", "--experiment", "cv-check", "--n", "300", "--reps", "10",
        ])
        assert code == 1
        assert err.startswith("error:")

    def test_curve_stdout(self, capsys):
        code, out, _ = run_cli(capsys, ["simulate", "--experiment", "curve", "--gammas", "0.1,0.5,0.9"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "gamma,m_quadratic,m_linear,m_simulated"
        cells = [line.split(",") for line in lines[1:]]
        assert [c[1] for c in cells] == ["3", "51", "163"]
        assert [c[2] for c in cells] == ["10", "50", "90"]
        assert all(c[3] == "" for c in cells)

    def test_df_curve(self, capsys):
        code, out, _ = run_cli(capsys, [
            "simulate", "--experiment", "curve", "--df-curve", "--cvs", "0.05,0.1",
        ])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "cv,df"
        assert float(lines[1].split(",")[1]) == pytest.approx(200.0, rel=1e-12)
        assert float(lines[2].split(",")[1]) == pytest.approx(50.0, rel=1e-12)

    def test_df_reliability(self, tmp_path, capsys):
        base = tmp_path / "dfr"
        code, out, _ = run_cli(capsys, [
            "simulate", "--experiment", "df-reliability", "--n", "400", "--missing", "0.4",
            "--pilot-m", "5", "--reps", "100", "--seed", "21", "--df-threshold", "100",
            "--out", str(base),
        ])
        assert code == 0
        payload = json.loads(out)
        assert 0.0 <= payload["fraction_above_threshold"] <= 1.0
        header, rows = read_table(str(base) + ".csv")
        assert header == ["rep", "gamma_hat", "df_hat", "exceeds_threshold"]
        assert len(rows) == 100


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_render_json_floats():
    text = cli.render_json({"a": 0.75, "b": 2, "ok": True, "missing": None, "list": [1.5, 2]})
    parsed = json.loads(text)
    assert parsed == {"a": 0.75, "b": 2, "ok": True, "missing": None, "list": [1.5, 2]}
    assert '"a": 0.75' in text

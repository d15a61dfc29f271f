import json
import subprocess
import sys

import pytest

from nsfp1 import cli, export


def invoke(tmp_path, *args):
    return cli.run(["--out", str(tmp_path), *args])


class TestExitCodes:
    def test_success(self, tmp_path):
        code, results = invoke(tmp_path, "hurwitz", "--r", "1")
        assert code == 0 and all(r.passed for r in results)

    @pytest.mark.parametrize("args", [["nonsense"], ["hurwitz", "--r", "x"], ["semigroup", "--method", "pade"],
                                      ["fit"], ["decay-linear", "--window", "9:1"], ["simulate", "--dt", "100"]])
    def test_usage(self, tmp_path, args):
        assert invoke(tmp_path, *args)[0] == 1

    def test_missing_config(self, tmp_path):
        assert cli.run(["--config", str(tmp_path / "none.ini"), "hurwitz"])[0] == 1

    def test_failed_check(self, tmp_path):
        # the gap threshold check is known to fail at the diffusive end of the band
        code, results = invoke(tmp_path, "gap", "--n", "500")
        by_name = {r.name: r for r in results}
        assert code == 2
        assert by_name["c0_positive"].passed and not by_name["max_re_below_threshold"].passed

    def test_abort(self, tmp_path):
        code, _ = invoke(tmp_path, "simulate", "--dim", "1", "--n", "16", "--length", "20",
                         "--amplitude", "1e4", "--t-final", "0.1")
        assert code == 3


class TestOutputs:
    def test_hurwitz_values(self, tmp_path):
        invoke(tmp_path, "hurwitz", "--r", "1")
        payload = export.read_report_json(tmp_path / "hurwitz.json")
        values = {r["name"]: r["value"] for r in payload["results"]}
        for k in range(1, 6):
            assert values[f"A{k}"] == pytest.approx(payload["results"][k - 1]["tolerance"], rel=1e-9)
        assert (tmp_path / "hurwitz.txt").read_text().startswith("A1 = ")

    def test_spectrum_csv(self, tmp_path):
        invoke(tmp_path, "spectrum", "--r", "0.5,2")
        lines = (tmp_path / "spectrum.csv").read_text().splitlines()
        assert lines[0].startswith("r,") and len(lines) == 3

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--dim", "1", "--n", "16", "--length", "20", "--t-final", "0.5"]
        cli.run(["--out", str(a), "--seed", "3", *args])
        cli.run(["--out", str(b), "--seed", "3", *args])
        for name in ("simulate.json", "simulate_series.csv", "simulate_energy.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_threads_do_not_change_results(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["gap", "--n", "400"]
        cli.run(["--out", str(a), "--threads", "1", *args])
        cli.run(["--out", str(b), "--threads", "4", *args])
        ra = json.loads((a / "gap.json").read_text())["results"]
        rb = json.loads((b / "gap.json").read_text())["results"]
        assert ra == rb

    def test_fit_roundtrip(self, tmp_path):
        t = [float(x) for x in range(1, 40)]
        export.write_series_csv(tmp_path / "in.csv", t, {"value": [(1 + x) ** -1.5 for x in t]})
        code, results = invoke(tmp_path, "fit", "--input", str(tmp_path / "in.csv"))
        assert code == 0 and results[0].value == pytest.approx(-1.5, abs=1e-9)

    def test_report_aggregates(self, tmp_path):
        invoke(tmp_path, "hurwitz")
        invoke(tmp_path, "transform-check")
        code, results = invoke(tmp_path, "report")
        names = {r.name for r in results}
        assert code == 0 and "hurwitz:all_positive" in names and "transform_check:det_T" in names
        assert invoke(tmp_path, "report")[1] == results

    def test_report_empty(self, tmp_path):
        assert invoke(tmp_path, "report")[0] == 1

    def test_env_out(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NSFP1_OUT", str(tmp_path / "env"))
        cli.run(["hurwitz"])
        assert (tmp_path / "env" / "hurwitz.json").is_file()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nsfp1", "--out", str(tmp_path), "semigroup", "--r", "2", "--t", "0.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout

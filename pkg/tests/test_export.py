import json

import numpy as np
import pytest

from nsfp1 import export
from nsfp1.export import CheckResult


class TestSeriesCsv:
    def test_empty_series_is_header_only(self, tmp_path):
        p = export.write_series_csv(tmp_path / "s.csv", [], {"a": []})
        assert p.read_text() == "t,a\n"

    def test_roundtrip_exact(self, tmp_path, rng):
        t = np.linspace(0, 1, 7)
        cols = {"a": rng.standard_normal(7), "b": np.exp(-t)}
        times, back = export.read_series_csv(export.write_series_csv(tmp_path / "s.csv", t, cols))
        assert np.array_equal(times, t)
        for k in cols:
            assert np.array_equal(back[k], cols[k])

    def test_custom_index(self, tmp_path):
        p = export.write_series_csv(tmp_path / "s.csv", [1.0], {"y": [2.0]}, index="r")
        assert p.read_text().splitlines()[0] == "r,y"

    def test_length_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            export.write_series_csv(tmp_path / "s.csv", [0, 1], {"a": [1.0]})

    def test_not_a_series(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("foo,bar\n1,2\n")
        with pytest.raises(ValueError):
            export.read_series_csv(p)


class TestReportJson:
    def test_single_result(self, tmp_path):
        p = export.write_report_json(tmp_path / "r.json", [CheckResult("x", np.float64(1.5), 2, np.bool_(True))], {})
        payload = json.loads(p.read_text())
        assert payload["results"] == [{"name": "x", "value": 1.5, "tolerance": 2, "pass": True}]
        assert set(payload) == {"tool_version", "config_echo", "results"}

    def test_byte_identical(self, tmp_path):
        res = [CheckResult("a", np.arange(3.0), [1e-9, 2], False)]
        echo = {"z": 1, "a": (1, 2), "c": 1 + 2j}
        a = export.write_report_json(tmp_path / "a.json", res, echo).read_bytes()
        b = export.write_report_json(tmp_path / "b.json", res, dict(reversed(echo.items()))).read_bytes()
        assert a == b

    def test_non_finite_values_are_strings(self, tmp_path):
        p = export.write_report_json(tmp_path / "r.json", [CheckResult("x", float("nan"), 0, False)], {})
        assert json.loads(p.read_text())["results"][0]["value"] == "nan"

    def test_read_rejects_foreign(self, tmp_path):
        p = tmp_path / "f.json"
        p.write_text("{}")
        with pytest.raises(ValueError):
            export.read_report_json(p)


def test_plot_data(tmp_path):
    paths = export.emit_plot_data(tmp_path, [0.0, 1.0], {"a": [1.0, 0.5]}, prefix="p_")
    assert paths[0].name == "p_a.dat"
    assert paths[0].read_text() == "# t a\n0.0 1.0\n1.0 0.5\n"


def test_summary_text():
    text = export.summary_text("title", [CheckResult("x", 1, 2, True), CheckResult("y", 3, 2, False)])
    assert text.splitlines() == ["title", "  PASS  x: value=1 tolerance=2", "  FAIL  y: value=3 tolerance=2"]

"""CSV, JSON and plot-text writers; output is byte-identical for identical input."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__


@dataclass
class CheckResult:
    name: str
    value: object
    tolerance: object
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": _plain(self.value),
                "tolerance": _plain(self.tolerance), "pass": bool(self.passed)}


def _plain(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, complex):
        return [float(x.real), float(x.imag)]
    return x


def _fmt(x) -> str:
    return repr(float(x))


def _open(path: Path, mode="w"):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_series_csv(path, times, columns: dict, index: str = "t") -> Path:
    """Header ``t,<names>`` (or ``<index>,<names>``) and one row per time, floats in shortest round-trip form."""
    path = Path(path)
    times = np.asarray(times, dtype=float)
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float) for k in names]
    for name, col in zip(names, data):
        if col.shape != times.shape:
            raise ValueError(f"column {name!r} has {col.size} rows, expected {times.size}")
    with _open(path) as fh:
        fh.write(",".join([index, *names]) + "\n")
        for i, t in enumerate(times):
            fh.write(",".join([_fmt(t), *(_fmt(c[i]) for c in data)]) + "\n")
    return path


def read_series_csv(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not lines or not lines[0].startswith("t"):
        raise ValueError(f"{path} is not a series CSV (missing 't' header)")
    names = lines[0].split(",")[1:]
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()]).reshape(-1, len(names) + 1)
    return rows[:, 0], {n: rows[:, i + 1] for i, n in enumerate(names)}


def write_report_json(path, results, config_echo: dict) -> Path:
    """``{tool_version, config_echo, results: [{name, value, tolerance, pass}]}`` with sorted keys."""
    path = Path(path)
    payload = {
        "tool_version": __version__,
        "config_echo": _plain(config_echo),
        "results": [r.as_dict() if isinstance(r, CheckResult) else dict(r) for r in results],
    }
    with _open(path) as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def read_report_json(path) -> dict:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read report {path}: {exc}") from exc
    if not {"tool_version", "config_echo", "results"} <= set(payload):
        raise ValueError(f"{path} is not a result file")
    return payload


def emit_plot_data(directory, times, columns: dict, prefix: str = "") -> list[Path]:
    """One two-column text file per curve, named ``<prefix><name>.dat``."""
    directory = Path(directory)
    out = []
    times = np.asarray(times, dtype=float)
    for name, values in columns.items():
        path = directory / f"{prefix}{name}.dat"
        with _open(path) as fh:
            fh.write(f"# t {name}\n")
            for t, v in zip(times, np.asarray(values, dtype=float)):
                fh.write(f"{_fmt(t)} {_fmt(v)}\n")
        out.append(path)
    return out


def write_summary(path, title: str, results) -> Path:
    path = Path(path)
    with _open(path) as fh:
        fh.write(summary_text(title, results))
    return path


def summary_text(title: str, results) -> str:
    lines = [title]
    for r in results:
        d = r.as_dict() if isinstance(r, CheckResult) else r
        lines.append(f"  {'PASS' if d['pass'] else 'FAIL'}  {d['name']}: value={d['value']} tolerance={d['tolerance']}")
    return "\n".join(lines) + "\n"

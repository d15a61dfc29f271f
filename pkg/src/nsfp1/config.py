"""Experiment configuration: INI files layered over built-in defaults.

Every value is stored as text in ``DEFAULTS`` and converted by the typed
accessors of :class:`ExperimentConfig`. Command-line flags override file
values, which override the defaults. See ``docs/config.md`` for the schema.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path

OUT_ENV = "NSFP1_OUT"
DEFAULT_OUT = "nsfp1_out"

DEFAULTS: dict[str, dict[str, str]] = {
    "global": {"out": "", "seed": "0", "threads": "1"},
    "spectrum": {"r": "", "rmin": "0.001", "rmax": "1000", "n": "200"},
    "hurwitz": {"r": "1", "random": "0"},
    "gap": {"rmin": "0.025", "rmax": "64", "n": "10000"},
    "semigroup": {"r": "1", "t": "1", "method": "auto"},
    "transform": {"r": "1"},
    "decay": {
        "profile": "gaussian:1", "m": "0", "window": "50:500", "times": "60",
        "nodes": "4096", "rmin": "1e-4", "rmax": "128",
    },
    "bands": {"r0": "0.025", "dim": "3", "n": "32", "length": "100"},
    "simulate": {
        "dim": "3", "n": "32", "length": "100", "dt": "0.05", "t_final": "10",
        "amplitude": "1e-3", "init": "random", "nonlinear": "yes", "dealias": "yes",
        "sample_every": "1", "band_limit": "4",
    },
    "fit": {"input": "", "column": "value", "window": ""},
    "tolerances": {
        "eigen_zero": "1e-9",
        "low_slope_real": "3.5",
        "low_slope_imag": "2.5",
        "low_coeff_rel": "1e-3",
        "hurwitz_rel": "1e-6",
        "gap_threshold": "1e-3",
        "semigroup_slack": "1e-3",
        "projector": "1e-8",
        "vieta_rel": "1e-8",
        "transform": "1e-12",
        "high_scale": "1e-3",
        "high_imag": "0.1",
        "exp_m0": "0.05",
        "exp_m1": "0.05",
        "exp_m2": "0.07",
        "exp_dt": "0.07",
        "exp_l1": "0.1",
        "partition": "1e-10",
        "linear_limit": "1e-10",
        "stationary": "1e-12",
        "order_min": "1.8",
        "h4_factor": "2",
        "ledger_rate": "1e-6",
        "nonlinear_gap": "0.1",
    },
}


class ConfigError(ValueError):
    """Unparseable or invalid configuration (CLI exit code 1)."""


@dataclass
class ExperimentConfig:
    parser: configparser.ConfigParser

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_dict(DEFAULTS)
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {p}")
            try:
                text = p.read_text()
                extra = configparser.ConfigParser(interpolation=None)
                extra.read_string(text, source=str(p))
            except (configparser.Error, OSError) as exc:
                raise ConfigError(f"cannot parse {p}: {exc}") from exc
            for section in extra.sections():
                if section not in DEFAULTS:
                    raise ConfigError(f"unknown section [{section}] in {p}")
                for key, value in extra.items(section):
                    if key not in DEFAULTS[section]:
                        raise ConfigError(f"unknown key {key!r} in [{section}] of {p}")
                    cp.set(section, key, value)
        return cls(cp)

    def override(self, section: str, **values) -> None:
        for key, value in values.items():
            if value is None:
                continue
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            cp_value = ("yes" if value else "no") if isinstance(value, bool) else str(value)
            self.parser.set(section, key, cp_value)

    def _get(self, section, key, conv):
        raw = self.parser.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc

    def str(self, section: str, key: str) -> str:
        return self.parser.get(section, key)

    def int(self, section: str, key: str) -> int:
        return self._get(section, key, int)

    def float(self, section: str, key: str) -> float:
        return self._get(section, key, float)

    def bool(self, section: str, key: str) -> bool:
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    def floats(self, section: str, key: str) -> list[float]:
        raw = self.parser.get(section, key).replace(",", " ").split()
        try:
            return [float(x) for x in raw]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    def window(self, section: str, key: str = "window") -> tuple[float, float] | None:
        raw = self.parser.get(section, key).strip()
        if not raw:
            return None
        try:
            a, b = (float(x) for x in raw.split(":"))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must look like A:B, got {raw!r}") from exc
        if not 0 <= a < b:
            raise ConfigError(f"[{section}] {key} needs 0 <= A < B, got {raw!r}")
        return a, b

    def tolerance(self, key: str) -> float:
        return self.float("tolerances", key)

    def out_dir(self) -> Path:
        raw = self.parser.get("global", "out") or os.environ.get(OUT_ENV, "") or DEFAULT_OUT
        return Path(raw)

    def section(self, name: str) -> dict[str, str]:
        return dict(self.parser.items(name))


def tolerances(path: str | None = None) -> dict[str, float]:
    cfg = ExperimentConfig.load(path)
    return {k: cfg.tolerance(k) for k in DEFAULTS["tolerances"]}

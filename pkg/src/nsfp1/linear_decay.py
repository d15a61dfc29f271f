"""Whole-space linear evolution of radially symmetric data.

The generator depends on ``|xi|`` only, so radially symmetric initial data
stay radially symmetric and every whole-space norm reduces to a radial
integral. Each node ``r_j`` carries seven amplitudes:

    rho, d, theta, n0, M   (compressible block, evolved by exp(t B(r)))
    Pu, Pn1                (transverse block, closed-form 2x2 propagator)

Norms use the log-spaced trapezoid rule ``sum_j w_j 4 pi r_j**2 (...)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DegenerateWindowError
from .symbol import batch_spectrum, compressible_symbol, incompressible_semigroup

AMPLITUDES = ("rho", "d", "theta", "n0", "M", "Pu", "Pn1")

# physical fields in terms of amplitude slots; u and n1 combine their
# potential and transverse parts, which are orthogonal
COMPONENTS = {
    "rho": (0,),
    "u": (1, 5),
    "theta": (2,),
    "n0": (3,),
    "n1": (4, 6),
    "all": tuple(range(7)),
}
for _i, _name in enumerate(AMPLITUDES):
    COMPONENTS.setdefault(_name, (_i,))


# ------------------------------------------------------------- profiles

@dataclass(frozen=True)
class RadialProfile:
    """Initial radial profile ``f(r)``; every amplitude starts at ``f(r)``."""

    kind: str
    params: tuple = ()
    table: tuple | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if len(self.params) != 1 or not self.params[0] > 0:
                raise ValueError("gaussian profile needs one positive width")
        elif self.kind == "bump":
            if len(self.params) not in (1, 2) or not self.params[0] > 0:
                raise ValueError("bump profile needs a positive radius and an optional center")
            if len(self.params) == 2 and self.params[1] < 0:
                raise ValueError("bump center must be >= 0")
        elif self.kind == "table":
            if self.table is None:
                raise ValueError("table profile needs (r, value) columns")
            r, v = (np.asarray(c, dtype=float) for c in self.table)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise ValueError("table profile needs two equal-length columns with at least two rows")
            if np.any(np.diff(r) <= 0) or r[0] < 0:
                raise ValueError("table radii must be non-negative and strictly increasing")
            if not np.all(np.isfinite(v)):
                raise ValueError("table values must be finite")
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (self.params[0] * r) ** 2)
        if self.kind == "bump":
            radius = self.params[0]
            center = self.params[1] if len(self.params) == 2 else 0.0
            s = (r - center) / radius
            inside = np.abs(s) < 1
            with np.errstate(divide="ignore", over="ignore"):
                out = np.exp(1.0 - 1.0 / (1.0 - np.where(inside, s, 0.0) ** 2))
            return np.where(inside, out, 0.0)
        rt, vt = (np.asarray(c, dtype=float) for c in self.table)
        return np.interp(r, rt, vt, left=0.0, right=0.0)

    @property
    def descriptor(self) -> str:
        if self.kind == "table":
            return f"table[{len(self.table[0])}]"
        return ":".join([self.kind, *(repr(float(p)) for p in self.params)])


def parse_profile(text: str) -> RadialProfile:
    """``gaussian:W``, ``bump:R[:C]`` or ``table:PATH`` (two whitespace-separated columns)."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "table":
        path = Path(rest)
        try:
            data = np.loadtxt(path, ndmin=2)
        except OSError as exc:
            raise ValueError(f"cannot read profile table {path}: {exc}") from exc
        if data.shape[1] != 2:
            raise ValueError(f"profile table {path} must have two columns")
        return RadialProfile("table", table=(tuple(data[:, 0]), tuple(data[:, 1])))
    try:
        params = tuple(float(p) for p in rest.split(":")) if rest else ()
    except ValueError as exc:
        raise ValueError(f"bad profile parameters in {text!r}") from exc
    return RadialProfile(kind, params)


# ------------------------------------------------------------ spectrum

@dataclass
class RadialSpectrum:
    nodes: np.ndarray
    weights: np.ndarray
    amplitudes: np.ndarray  # (n_nodes, 7) complex
    t: float = 0.0
    profile: str = ""

    def __post_init__(self):
        if self.nodes.ndim != 1 or np.any(np.diff(self.nodes) <= 0) or self.nodes[0] <= 0:
            raise ValueError("nodes must be positive and strictly increasing")
        if self.weights.shape != self.nodes.shape or np.any(self.weights <= 0):
            raise ValueError("weights must be positive, one per node")
        if self.amplitudes.shape != (self.nodes.size, len(AMPLITUDES)):
            raise ValueError(f"amplitudes must have shape {(self.nodes.size, len(AMPLITUDES))}")

    @property
    def compressible(self) -> np.ndarray:
        return self.amplitudes[:, :5]

    @property
    def transverse(self) -> np.ndarray:
        return self.amplitudes[:, 5:]


def log_nodes(n_nodes: int, r_min: float, r_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced nodes and trapezoid weights for ``int_{r_min}^{r_max} f(r) dr``."""
    if n_nodes < 2 or not 0 < r_min < r_max:
        raise ValueError("need n_nodes >= 2 and 0 < r_min < r_max")
    r = np.geomspace(r_min, r_max, n_nodes)
    w = r * math.log(r_max / r_min) / (n_nodes - 1)
    w[[0, -1]] *= 0.5
    return r, w


def radial_profile_init(profile: RadialProfile | str, n_nodes: int = 4096,
                        r_min: float = 1e-4, r_max: float = 128.0) -> RadialSpectrum:
    if isinstance(profile, str):
        profile = parse_profile(profile)
    r, w = log_nodes(n_nodes, r_min, r_max)
    amps = np.repeat(profile(r)[:, None], len(AMPLITUDES), axis=1).astype(complex)
    return RadialSpectrum(r, w, amps, 0.0, profile.descriptor)


class LinearEvolver:
    """Caches the eigen-data of every node so repeated ``t`` evaluations are cheap."""

    def __init__(self, spectrum: RadialSpectrum):
        self.spectrum = spectrum
        self._batch = batch_spectrum(spectrum.nodes)

    def __call__(self, t: float) -> RadialSpectrum:
        if t < 0:
            raise ValueError("t must be >= 0")
        spectrum = self.spectrum
        if t == 0:
            return replace(spectrum, amplitudes=spectrum.amplitudes.copy())
        E5 = self._batch.semigroup(t)
        E2 = incompressible_semigroup(spectrum.nodes, t)
        amps = np.concatenate([
            np.einsum("nij,nj->ni", E5, spectrum.compressible),
            np.einsum("nij,nj->ni", E2, spectrum.transverse),
        ], axis=1)
        return replace(spectrum, amplitudes=amps, t=spectrum.t + t)


def evolve_linear(spectrum: RadialSpectrum, t: float) -> RadialSpectrum:
    return LinearEvolver(spectrum)(t)


# --------------------------------------------------------------- norms

def _power(amps: np.ndarray, component: str) -> np.ndarray:
    try:
        slots = COMPONENTS[component]
    except KeyError:
        raise ValueError(f"unknown component {component!r}; choose from {sorted(COMPONENTS)}") from None
    return np.sum(np.abs(amps[:, slots]) ** 2, axis=1)


def norm_L2_deriv(spectrum: RadialSpectrum, m: int = 0, component: str = "all") -> float:
    """``||grad^m U||_{L^2}`` as ``(sum_j w_j 4 pi r_j**(2+2m) |U_j|**2)**0.5``."""
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    r = spectrum.nodes
    integrand = 4 * np.pi * r ** (2 + 2 * m) * _power(spectrum.amplitudes, component)
    return float(np.sqrt(np.sum(spectrum.weights * integrand)))


def norm_L1_fourier(spectrum: RadialSpectrum, component: str = "all") -> float:
    """``sum_j w_j 4 pi r_j**2 |U_j|``; bounds ``||U||_{L^inf}`` up to ``(2 pi)**-3``."""
    r = spectrum.nodes
    return float(np.sum(spectrum.weights * 4 * np.pi * r ** 2 * np.sqrt(_power(spectrum.amplitudes, component))))


def time_derivative(spectrum: RadialSpectrum) -> RadialSpectrum:
    """Amplitudes of ``d/dt U``: ``B(r) V`` on the compressible block, ``-A2(r) W`` on the transverse one."""
    r = spectrum.nodes
    dV = np.einsum("nij,nj->ni", -compressible_symbol(r), spectrum.compressible)
    Pu, Pn1 = spectrum.transverse.T
    dW = np.stack([-r ** 2 * Pu + Pn1, -Pn1], axis=1)
    return replace(spectrum, amplitudes=np.concatenate([dV, dW], axis=1))


def time_derivative_norm(spectrum: RadialSpectrum, component: str) -> float:
    return norm_L2_deriv(time_derivative(spectrum), 0, component)


# ------------------------------------------------------------- fitting

@dataclass
class DecaySeries:
    label: str
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")


@dataclass
class DecayFit:
    label: str
    exponent: float
    ci_half_width: float
    residual_rms: float
    prefactor: float
    window: tuple[float, float]
    n_samples: int


def fit_decay(series: DecaySeries, window: tuple[float, float] | None = None,
              confidence: float = 0.95) -> DecayFit:
    """Least-squares slope of ``log v`` against ``log(1 + t)`` inside ``window``."""
    t, v = series.times, series.values
    if window is None:
        window = (float(t.min()), float(t.max())) if t.size else (0.0, 0.0)
    ta, tb = window
    if not ta < tb:
        raise DegenerateWindowError(f"empty fit window [{ta}, {tb}]")
    sel = (t >= ta) & (t <= tb)
    if sel.sum() < 10:
        raise DegenerateWindowError(f"{int(sel.sum())} samples in [{ta}, {tb}]; at least 10 are needed")
    if np.any(v[sel] <= 0) or not np.all(np.isfinite(v[sel])):
        raise ValueError(f"series {series.label!r} has non-positive or non-finite values in the window")
    x = np.log1p(t[sel])
    y = np.log(v[sel])
    res = stats.linregress(x, y)
    n = int(sel.sum())
    tcrit = stats.t.ppf(0.5 + confidence / 2, n - 2)
    resid = y - (res.intercept + res.slope * x)
    return DecayFit(series.label, float(res.slope), float(tcrit * res.stderr),
                    float(np.sqrt(np.mean(resid ** 2))), float(np.exp(res.intercept)),
                    (float(ta), float(tb)), n)


# ---------------------------------------------------------- decay study

@dataclass
class DecayStudy:
    series: dict
    fits: dict
    profile: str
    window: tuple[float, float]


def decay_times(window=(50.0, 500.0), n_times: int = 60) -> np.ndarray:
    return np.geomspace(window[0], window[1], n_times)


def decay_study(profile: RadialProfile | str = "gaussian:1", window=(50.0, 500.0), n_times: int = 60,
                orders=(0, 1, 2), derivative_components=("rho", "u", "theta", "n0", "n1"),
                n_nodes: int = 4096, r_min: float = 1e-4, r_max: float = 128.0,
                threads: int = 1) -> DecayStudy:
    """Norm series of the linear flow and their fitted power-law exponents.

    Series labels are ``L2_grad{m}``, ``dt_{component}`` and ``L1_fourier``.
    """
    spectrum = radial_profile_init(profile, n_nodes, r_min, r_max)
    evolve = LinearEvolver(spectrum)
    times = decay_times(window, n_times)

    def sample(t):
        s = evolve(t)
        ds = time_derivative(s)
        row = {f"L2_grad{m}": norm_L2_deriv(s, m) for m in orders}
        row.update({f"dt_{c}": norm_L2_deriv(ds, 0, c) for c in derivative_components})
        row["L1_fourier"] = norm_L1_fourier(s)
        return row

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            samples = list(pool.map(sample, times))
    else:
        samples = [sample(t) for t in times]
    rows = {k: [row[k] for row in samples] for k in samples[0]}
    series = {k: DecaySeries(k, times, np.array(v), {"profile": spectrum.profile}) for k, v in rows.items()}
    fits = {k: fit_decay(s, window) for k, s in series.items()}
    return DecayStudy(series, fits, spectrum.profile, tuple(window))

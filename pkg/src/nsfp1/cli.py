"""Command-line front end.

Every subcommand writes ``<out>/<name>.json`` (machine readable) and
``<out>/<name>.txt`` (summary), plus CSV or plot data where it produces
series. Exit codes: 0 success, 1 usage or config error, 2 failed numerical
check, 3 runtime abort.
"""
from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bands, export, linear_decay, solver, symbol
from .config import ConfigError, ExperimentConfig
from .errors import ConsistencyError, NumericalAbort, RootFindingError, StabilityError, VacuumError
from .export import CheckResult
from .grid import SpectralGrid

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_ABORT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


# --------------------------------------------------------------- commands

def cmd_spectrum(cfg: ExperimentConfig, out: Path, threads: int):
    rs = cfg.floats("spectrum", "r")
    if not rs:
        rs = list(np.geomspace(cfg.float("spectrum", "rmin"), cfg.float("spectrum", "rmax"), cfg.int("spectrum", "n")))
    tol = cfg.tolerance("vieta_rel")
    cols = {f"{part}_y{i + 1}": [] for i in range(5) for part in ("re", "im")}
    worst_sum = worst_prod = 0.0
    for r in rs:
        y = symbol.eigenvalues(r).values
        a = symbol.char_poly_closed(r)
        for i in range(5):
            cols[f"re_y{i + 1}"].append(y[i].real)
            cols[f"im_y{i + 1}"].append(y[i].imag)
        worst_sum = max(worst_sum, abs(y.sum() + a[1]) / max(abs(a[1]), 1.0))
        if a[5] > 0:
            worst_prod = max(worst_prod, abs(np.prod(y) + a[5]) / a[5])
    export.write_series_csv(out / "spectrum.csv", rs, cols, index="r")
    lines = [f"r={r:.6g}: " + ", ".join(f"{complex(cols[f're_y{i+1}'][k], cols[f'im_y{i+1}'][k]):.10g}" for i in range(5))
             for k, r in enumerate(rs[:20])]
    return [CheckResult("vieta_sum", worst_sum, tol, worst_sum <= tol),
            CheckResult("vieta_product", worst_prod, tol, worst_prod <= tol)], lines, {"r_count": len(rs)}


def cmd_hurwitz(cfg, out, threads):
    r = cfg.float("hurwitz", "r")
    rep = symbol.hurwitz_determinants(r)
    lines = [f"A{k} = {v:.10g}" for k, v in enumerate(rep.minors[:4], start=1)]
    lines.append(f"A5 = {rep.minors[4]:.10g}")
    lines.append("standard minors: " + ", ".join(f"{v:.10g}" for v in rep.standard))
    lines.append("verdict: all positive" if rep.all_positive else "verdict: NOT all positive")
    results = [CheckResult(f"A{k}", v, rep.closed_forms[k - 1], True) for k, v in enumerate(rep.minors, start=1)]
    results.append(CheckResult("all_positive", rep.all_positive, True, rep.all_positive))
    count = cfg.int("hurwitz", "random")
    if count:
        rng = random.Random(cfg.int("global", "seed"))
        ok_match = ok_pos = True
        for _ in range(count):
            q = rng.randint(1, 1000)
            x = symbol.hurwitz_exact(Fraction(rng.randint(1, 10 * q), q))
            ok_match &= x.match
            ok_pos &= x.all_positive
        results += [CheckResult("exact_match_random", count, 0, ok_match),
                    CheckResult("exact_positive_random", count, 0, ok_pos)]
    return results, lines, {"minors": rep.minors, "standard": rep.standard}


def cmd_gap(cfg, out, threads):
    scan = symbol.spectral_abscissa_scan(cfg.float("gap", "rmin"), cfg.float("gap", "rmax"), cfg.int("gap", "n"), threads)
    thr = cfg.tolerance("gap_threshold")
    lines = [f"c0 estimate = {scan.c0_estimate:.6e} at r = {scan.worst_r:.6g}",
             f"max Re y = {-scan.c0_estimate:.6e} (threshold {-thr:.1e})"]
    return [CheckResult("c0_positive", scan.c0_estimate, 0.0, scan.c0_estimate > 0),
            CheckResult("max_re_below_threshold", -scan.c0_estimate, -thr, -scan.c0_estimate <= -thr)], \
        lines, {"c0_estimate": scan.c0_estimate, "worst_r": scan.worst_r}


def cmd_semigroup(cfg, out, threads):
    r, t = cfg.float("semigroup", "r"), cfg.float("semigroup", "t")
    method = cfg.str("semigroup", "method")
    if method not in ("auto", "expm", "projector"):
        raise ConfigError(f"semigroup method must be auto, expm or projector, got {method!r}")
    E = symbol.semigroup(r, t, method)
    ref = symbol.semigroup_expm(r, t)
    diff = float(np.abs(E - ref).max())
    tol = cfg.tolerance("projector")
    norm = float(np.linalg.norm(E, 2))
    lines = [f"|exp(tB)|_2 = {norm:.10g} at r={r}, t={t} ({method})", f"max |E - expm| = {diff:.3e}"]
    return [CheckResult("expm_agreement", diff, tol, diff <= tol)], lines, {"norm": norm}


def cmd_transform(cfg, out, threads):
    r = cfg.float("transform", "r")
    tol = cfg.tolerance("transform")
    rep = symbol.compare_transformed(r, tol)
    documented = {("M", "J"), ("M", "M")}
    found = {(a, b) for a, b, _, _ in rep.mismatches}
    lines = [f"det T = {rep.det_T:.15g}"]
    for a, b, c, p in rep.mismatches:
        lines.append(f"row {a}, column {b}: conjugation {c:.15g}, printed {p:.15g}")
    mj = float(rep.computed[4, 2])
    return [CheckResult("det_T", rep.det_T, 5.0, abs(rep.det_T - 5) <= tol * 5),
            CheckResult("mismatches_documented", sorted(found), sorted(documented), found <= documented),
            CheckResult("row_M_J_entry", mj, r / 5, abs(mj - r / 5) <= tol * max(1, r))], \
        lines, {"mismatches": rep.mismatches}


EXPECTED_DECAY = {"L2_grad0": (-0.75, "exp_m0"), "L2_grad1": (-1.25, "exp_m1"), "L2_grad2": (-1.75, "exp_m2"),
                  "dt_rho": (-1.25, "exp_dt"), "dt_u": (-0.75, "exp_dt"), "dt_theta": (-0.75, "exp_dt"),
                  "dt_n0": (-0.75, "exp_dt"), "dt_n1": (-0.75, "exp_dt"), "L1_fourier": (-1.5, "exp_l1")}


def cmd_decay(cfg, out, threads):
    ms = [int(v) for v in cfg.floats("decay", "m")]
    if not ms or min(ms) < 0:
        raise ConfigError("decay m must list non-negative integers")
    window = cfg.window("decay")
    if window is None:
        raise ConfigError("decay window is required")
    try:
        profile = linear_decay.parse_profile(cfg.str("decay", "profile"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    study = linear_decay.decay_study(profile, window, cfg.int("decay", "times"), orders=tuple(sorted(set(ms) | {0, 1, 2})),
                                     n_nodes=cfg.int("decay", "nodes"), r_min=cfg.float("decay", "rmin"),
                                     r_max=cfg.float("decay", "rmax"), threads=threads)
    primary = f"L2_grad{ms[0]}"
    cols = {"value": study.series[primary].values}
    cols.update({k: s.values for k, s in study.series.items() if k != primary})
    times = study.series[primary].times
    export.write_series_csv(out / "decay_linear.csv", times, cols)
    export.emit_plot_data(out / "plot", times, {k: s.values for k, s in study.series.items()}, prefix="decay_")
    results, lines = [], []
    for name, fit in study.fits.items():
        m = int(name[7:]) if name.startswith("L2_grad") else None
        if name in EXPECTED_DECAY:
            target, key = EXPECTED_DECAY[name]
        else:
            target, key = -0.75 - m / 2, "exp_m2"
        tol = cfg.tolerance(key)
        ok = abs(fit.exponent - target) <= tol
        results.append(CheckResult(f"exponent_{name}", fit.exponent, [target, tol], ok))
        lines.append(f"{name}: exponent {fit.exponent:.4f} +/- {fit.ci_half_width:.4f} (target {target} +/- {tol})")
    return results, lines, {"fits": {k: vars(f) for k, f in study.fits.items()}}


def cmd_bands(cfg, out, threads):
    const = bands.derive_band_constants(cfg.float("bands", "r0"))
    grid = SpectralGrid(cfg.int("bands", "dim"), cfg.int("bands", "n"), cfg.float("bands", "length"), threads)
    rng = np.random.default_rng(cfg.int("global", "seed"))
    f_hat = grid.forward(rng.standard_normal(grid.shape))
    dec = bands.decompose(f_hat, grid, const)
    mean = f_hat * (grid.shell == 0)
    recon = sum(dec.components.values()) + mean
    split = dec.low + dec.medium + dec.high + mean
    scale = np.abs(f_hat).max()
    err = float(max(np.abs(recon - f_hat).max(), np.abs(split - f_hat).max()) / scale)
    lo, hi = bands.overlap_constants()
    tol = cfg.tolerance("partition")
    lines = [f"k0 = {const.k0}, k1 = {const.k1}, R0 = {const.R0:g}",
             f"resolved k range [{dec.k_lo}, {dec.k_hi}] (long waves lumped: {dec.lumped_low})",
             f"sum phi_k^2 in [{lo:.6f}, {hi:.6f}]; Bernstein edge 2^k1 = {bands.bernstein_constant(const):g}"]
    results = [CheckResult("partition_of_unity", err, tol, err <= tol)]
    if const.r0 == 1 / 40:
        got = (const.k0, const.k1, const.R0)
        results.append(CheckResult("constants", got, (-7, 5, 64.0), got == (-7, 5, 64.0)))
    return results, lines, {"overlap": [lo, hi]}


def _solver_config(cfg, threads) -> solver.SolverConfig:
    s = "simulate"
    try:
        return solver.SolverConfig(
            dim=cfg.int(s, "dim"), n=cfg.int(s, "n"), length=cfg.float(s, "length"), dt=cfg.float(s, "dt"),
            t_final=cfg.float(s, "t_final"), amplitude=cfg.float(s, "amplitude"), init=cfg.str(s, "init"),
            seed=cfg.int("global", "seed"), nonlinear=cfg.bool(s, "nonlinear"), dealias=cfg.bool(s, "dealias"),
            sample_every=cfg.int(s, "sample_every"), band_limit=cfg.int(s, "band_limit"), workers=threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(cfg, out, threads):
    sc = _solver_config(cfg, threads)
    res = solver.run(sc)
    cols = {f"grad{m}": res.grad_norms[:, m] for m in range(5)}
    cols["h4"] = res.h4
    cols["ledger"] = res.ledger
    cols.update({f"band_{b}": v for b, v in res.band_norms.items()})
    export.write_series_csv(out / "simulate_series.csv", res.times, cols)
    energy_cols = {"energy": [e.energy for e in res.energy]}
    for k in solver.DISSIPATION_KEYS:
        energy_cols[f"rate_{k}"] = [e.integrands[k] for e in res.energy]
        energy_cols[f"int_{k}"] = [e.integrals[k] for e in res.energy]
    export.write_series_csv(out / "simulate_energy.csv", res.times, energy_cols)
    export.emit_plot_data(out / "plot", res.times, cols, prefix="simulate_")
    sup = float(res.h4.max())
    factor = cfg.tolerance("h4_factor")
    led = res.ledger
    if led.size > 1 and led[0] > 0:
        led = led / led[0]
    rate = float(np.max(np.diff(led) / np.diff(res.times))) if led.size > 1 else 0.0
    lines = [f"sup H4 = {sup:.6e} (amplitude {sc.amplitude:g})",
             f"max ledger growth rate = {rate:.3e} (ledger normalized by its initial value)"]
    return [CheckResult("sup_h4", sup, factor * sc.amplitude, sup <= factor * sc.amplitude),
            CheckResult("ledger_rate", rate, cfg.tolerance("ledger_rate"), rate <= cfg.tolerance("ledger_rate"))], \
        lines, {"steps": sc.n_steps}


def cmd_fit(cfg, out, threads):
    src = cfg.str("fit", "input")
    if not src:
        raise ConfigError("fit needs --input")
    try:
        times, cols = export.read_series_csv(src)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    column = cfg.str("fit", "column")
    if column not in cols:
        raise ConfigError(f"column {column!r} not in {src}; available: {', '.join(cols)}")
    series = linear_decay.DecaySeries(column, times, cols[column])
    try:
        fit = linear_decay.fit_decay(series, cfg.window("fit"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lines = [f"{column}: exponent {fit.exponent:.6f} +/- {fit.ci_half_width:.6f} over {fit.window}, "
             f"residual rms {fit.residual_rms:.3e}"]
    return [CheckResult(f"fit_{column}", fit.exponent, fit.ci_half_width, True)], lines, {"fit": vars(fit)}


def aggregate(out: Path) -> list[CheckResult]:
    results = []
    for path in sorted(out.glob("*.json")):
        if path.name == "report.json":
            continue
        payload = export.read_report_json(path)
        for r in payload["results"]:
            results.append(CheckResult(f"{path.stem}:{r['name']}", r["value"], r["tolerance"], bool(r["pass"])))
    return results


def cmd_report(cfg, out, threads):
    results = aggregate(out)
    if not results:
        raise ConfigError(f"no result files in {out}")
    verdict = all(r.passed for r in results)
    return results, [f"aggregate verdict: {'PASS' if verdict else 'FAIL'} ({len(results)} checks)"], {}


COMMANDS = {
    "spectrum": ("spectrum", cmd_spectrum, "eigenvalues of the compressible block"),
    "hurwitz": ("hurwitz", cmd_hurwitz, "Hurwitz determinants against the closed forms"),
    "gap": ("gap", cmd_gap, "spectral abscissa scan"),
    "semigroup": ("semigroup", cmd_semigroup, "exp(tB) by projectors or scaling and squaring"),
    "transform-check": ("transform", cmd_transform, "change of variables T A T^-1"),
    "decay-linear": ("decay", cmd_decay, "whole-space linear decay exponents"),
    "bands": ("bands", cmd_bands, "Littlewood-Paley constants and partition checks"),
    "simulate": ("simulate", cmd_simulate, "pseudospectral run on a periodic box"),
    "fit": ("fit", cmd_fit, "power-law fit of a CSV column"),
    "report": (None, cmd_report, "aggregate result files"),
}

FLAGS = {
    "spectrum": [("--r", str), ("--rmin", float), ("--rmax", float), ("--n", int)],
    "hurwitz": [("--r", float), ("--random", int)],
    "gap": [("--rmin", float), ("--rmax", float), ("--n", int)],
    "semigroup": [("--r", float), ("--t", float), ("--method", str)],
    "transform": [("--r", float)],
    "decay": [("--m", str), ("--profile", str), ("--window", str), ("--times", int), ("--nodes", int),
              ("--rmin", float), ("--rmax", float)],
    "bands": [("--r0", float), ("--dim", int), ("--n", int), ("--length", float)],
    "simulate": [("--dim", int), ("--n", int), ("--length", float), ("--dt", float), ("--t-final", float),
                 ("--amplitude", float), ("--init", str), ("--nonlinear", str), ("--dealias", str),
                 ("--sample-every", int), ("--band-limit", int)],
    "fit": [("--input", str), ("--column", str), ("--window", str)],
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nsfp1", description=__doc__.splitlines()[0])
    p.add_argument("--out", help="output directory (default: $NSFP1_OUT or ./nsfp1_out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--config", help="INI file with experiment settings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (section, _, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        for flag, typ in FLAGS.get(section, []):
            sp.add_argument(flag, type=typ, dest=flag[2:].replace("-", "_"))
    return p


def run(argv=None) -> tuple[int, list[CheckResult]]:
    try:
        args = build_parser().parse_args(argv)
        cfg = ExperimentConfig.load(args.config)
        cfg.override("global", out=args.out, seed=args.seed, threads=args.threads)
        section, func, _ = COMMANDS[args.command]
        if section:
            values = {k: v for k, v in vars(args).items() if k in dict(cfg.parser.items(section))}
            cfg.override(section, **values)
        threads = cfg.int("global", "threads")
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        out = cfg.out_dir()
        results, lines, extra = func(cfg, out, threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE, []
    except (NumericalAbort, VacuumError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT, []
    except (ConsistencyError, StabilityError, RootFindingError) as exc:
        print(f"numerical check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK, []
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE, []

    stem = "report" if args.command == "report" else args.command.replace("-", "_")
    echo = {"command": args.command, "seed": cfg.int("global", "seed")}
    if section:
        echo[section] = cfg.section(section)
    echo["tolerances"] = cfg.section("tolerances")
    echo["extra"] = extra
    export.write_report_json(out / f"{stem}.json", results, echo)
    text = "\n".join(lines) + "\n" + export.summary_text(args.command, results)
    (out / f"{stem}.txt").write_text(text)
    print(text, end="")
    return (EXIT_OK if all(r.passed for r in results) else EXIT_CHECK), results


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())

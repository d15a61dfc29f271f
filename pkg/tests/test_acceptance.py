"""Acceptance criteria 1-13 at their stated tolerances and runtime limits.

Each test records its measurement through the ``accept`` fixture before
asserting, and the terminal summary prints one PASS/FAIL line per criterion.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from nsfp1 import bands, linear_decay, solver, symbol
from nsfp1.grid import SpectralGrid
from nsfp1.model import PHYSICAL, PerturbationState

GAP_R = (1 / 40, 64.0)


@pytest.fixture(scope="module")
def gap_scan():
    t0 = time.perf_counter()
    scan = symbol.spectral_abscissa_scan(*GAP_R, 10_000)
    return scan, time.perf_counter() - t0


def test_criterion_01_eigenvalues_at_zero(accept):
    t0 = time.perf_counter()
    y = np.sort_complex(symbol.eigenvalues(0.0).values)
    err = float(np.abs(y - np.array([-5, -1, 0, 0, 0])).max())
    elapsed = time.perf_counter() - t0
    assert accept(1, "limits", err <= 1e-9 and elapsed < 1, f"max error {err:.1e}, {elapsed:.2f} s")


def test_criterion_02_low_frequency_expansions(accept):
    t0 = time.perf_counter()
    rs = 2.0 ** -np.arange(7, 13)
    resid = np.array([symbol.low_branch_offsets(r) - symbol.expansion_low_offsets(r) for r in rs])
    logr = np.log(rs)
    real_slopes = [np.polyfit(logr, np.log(np.abs(resid[:, i].real)), 1)[0] for i in range(5)]
    imag_slopes = [np.polyfit(logr, np.log(np.abs(resid[:, i].imag)), 1)[0] for i in (3, 4)]
    r = rs[-1]
    osc = symbol.low_branch_offsets(r)[3:]
    coeff = float(np.mean(np.abs(osc.imag)) / r)
    coeff_err = abs(coeff - math.sqrt(2)) / math.sqrt(2)
    elapsed = time.perf_counter() - t0
    ok = min(real_slopes) >= 3.5 and min(imag_slopes) >= 2.5 and coeff_err <= 1e-3 and elapsed < 5
    detail = (f"real slopes {min(real_slopes):.2f}..{max(real_slopes):.2f}, imag slopes "
              f"{min(imag_slopes):.2f}, sqrt2 coefficient {coeff:.8f}, {elapsed:.2f} s")
    assert accept(2, "expansions", ok, detail)


def test_criterion_03_hurwitz_exact(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    match = positive = True
    for _ in range(100):
        q = int(rng.integers(1, 1000))
        p = int(rng.integers(1, 10 * q + 1))
        h = symbol.hurwitz_exact(Fraction(p, q))
        match &= h.match
        positive &= all(v > 0 for v in h.minors)
    elapsed = time.perf_counter() - t0
    assert accept(3, "exact minors", match and positive and elapsed < 10,
                  f"closed forms match {match}, all positive {positive}, {elapsed:.2f} s")


def test_criterion_04_spectral_gap(accept, gap_scan):
    scan, elapsed = gap_scan
    max_re = -scan.c0_estimate
    accept(4, "c0", scan.c0_estimate > 0, f"c0 = {scan.c0_estimate:.4e} at r = {scan.worst_r:.4g}")
    assert accept(4, "threshold", max_re <= -1e-3 and elapsed < 30,
                  f"max Re y = {max_re:.4e} vs -1e-3, {elapsed:.2f} s")


def test_criterion_05_semigroup_bound(accept, gap_scan):
    scan, _ = gap_scan
    c0 = scan.c0_estimate
    t0 = time.perf_counter()
    ts = np.linspace(2, 20, 37)
    worst = -np.inf
    for r in np.geomspace(*GAP_R, 20):
        log_norm = [math.log(np.linalg.norm(symbol.semigroup(r, t), 2)) for t in ts]
        slope = stats.linregress(ts, log_norm).slope
        worst = max(worst, slope + c0 * (1 - 1e-3))
    elapsed = time.perf_counter() - t0
    assert accept(5, "slopes", worst <= 0 and elapsed < 30,
                  f"worst slope minus bound {worst:.3e}, {elapsed:.2f} s")


def test_criterion_06_projector_algebra(accept):
    t0 = time.perf_counter()
    eye = np.eye(5)
    worst_orth = worst_sum = worst_sg = 0.0
    used = 0
    for r in np.geomspace(1e-3, 100, 200):
        es = symbol.eigenvalues(r)
        if es.degenerate:
            continue
        used += 1
        P = es.projectors
        for i in range(5):
            for j in range(5):
                worst_orth = max(worst_orth, np.linalg.norm(P[i] @ P[j] - (i == j) * P[i], 2))
        worst_sum = max(worst_sum, np.linalg.norm(P.sum(axis=0) - eye, 2))
        E = symbol.semigroup(r, 1.0, "projector")
        worst_sg = max(worst_sg, float(np.abs(E - symbol.semigroup_expm(r, 1.0)).max()))
    elapsed = time.perf_counter() - t0
    ok = max(worst_orth, worst_sum, worst_sg) <= 1e-8 and used == 200 and elapsed < 10
    assert accept(6, "projectors", ok, f"PiPj {worst_orth:.1e}, sum {worst_sum:.1e}, "
                                       f"semigroup {worst_sg:.1e} on {used} r, {elapsed:.2f} s")


def test_criterion_07_vieta(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for r in 100 * (1 - rng.random(1000)):
        y = symbol.eigenvalues(r).values
        s, p = 4 * r * r + 6, r ** 6 + 5 * r ** 4
        worst = max(worst, abs(y.sum() + s) / s, abs(np.prod(y) + p) / p)
    elapsed = time.perf_counter() - t0
    assert accept(7, "identities", worst <= 1e-8 and elapsed < 5, f"worst relative {worst:.1e}, {elapsed:.2f} s")


def test_criterion_08_transform(accept):
    t0 = time.perf_counter()
    allowed = {("M", "J"), ("M", "M")}
    ok_entries = ok_det = ok_report = True
    for r in np.random.default_rng(8).uniform(0.01, 50, 50):
        rep = symbol.compare_transformed(r, 1e-12)
        ok_entries &= {(a, b) for a, b, _, _ in rep.mismatches} <= allowed
        ok_det &= abs(rep.det_T - 5) <= 1e-12 * 5
        mj = {(a, b): c for a, b, c, _ in rep.mismatches}.get(("M", "J"))
        ok_report &= mj is not None and abs(mj - r / 5) <= 1e-12 * max(1, r)
    elapsed = time.perf_counter() - t0
    assert accept(8, "conjugation", ok_entries and ok_det and ok_report and elapsed < 1,
                  f"entries {ok_entries}, det {ok_det}, row-M term reported {ok_report}, {elapsed:.2f} s")


def test_criterion_09_high_frequency(accept):
    t0 = time.perf_counter()
    r = 100.0
    y = symbol.eigenvalues(r).values
    scaled = y.real / r ** 2
    n_minus1 = int(np.sum((np.abs(scaled + 1) <= 1e-3) & (np.abs(y.imag) < 1e-6 * r)))
    n_minus3 = int(np.sum((np.abs(scaled + 3) <= 1e-3) & (np.abs(y.imag) < 1e-6 * r)))
    n_third = int(np.sum(np.abs(y + 1 / 3) <= 1e-3))
    osc = y[np.abs(y.imag) > 0.5 * r]
    ok_osc = (len(osc) == 2 and min(abs(v.imag - r) for v in osc) <= 0.1
              and min(abs(v.imag + r) for v in osc) <= 0.1 and np.all(np.abs(osc.real) <= 10))
    hf = symbol.expansion_high(r)
    report = "; ".join(f"{k} {v:.6g}" for k, v in hf.corrected.items())
    elapsed = time.perf_counter() - t0
    ok = n_minus1 == 1 and n_minus3 == 1 and n_third == 1 and ok_osc and bool(report) and elapsed < 1
    assert accept(9, "asymptotics", ok, f"parabolic {n_minus1}+{n_minus3}, bounded {n_third}, "
                                        f"oscillatory {ok_osc}, {elapsed:.2f} s")


DECAY_TARGETS = [
    ("L2_grad0", -0.75, 0.05), ("L2_grad1", -1.25, 0.05), ("L2_grad2", -1.75, 0.07),
    ("dt_rho", -1.25, 0.07), ("dt_u", -0.75, 0.07), ("dt_theta", -0.75, 0.07),
    ("dt_n0", -0.75, 0.07), ("dt_n1", -0.75, 0.07), ("L1_fourier", -1.5, 0.1),
]


@pytest.fixture(scope="module")
def decay():
    t0 = time.perf_counter()
    study = linear_decay.decay_study("gaussian:1", window=(50, 500), n_nodes=4096)
    return study, time.perf_counter() - t0


@pytest.mark.parametrize("label,target,tol", DECAY_TARGETS, ids=[d[0] for d in DECAY_TARGETS])
def test_criterion_10_decay_exponents(accept, decay, label, target, tol):
    study, elapsed = decay
    got = study.fits[label].exponent
    ok = abs(got - target) <= tol and elapsed < 60
    assert accept(10, label, ok, f"{got:.4f} vs {target} +/- {tol}")


def test_criterion_11_littlewood_paley(accept, rng):
    t0 = time.perf_counter()
    const = bands.derive_band_constants(1 / 40)
    ok_const = (const.k0, const.k1, const.R0) == (-7, 5, 64.0)

    grid = SpectralGrid(3, 32, 100.0)
    f_hat = grid.forward(rng.standard_normal(grid.shape))
    dec = bands.decompose(f_hat, grid, const)
    mean = f_hat * (grid.shell == 0)
    scale = np.abs(f_hat).max()
    err = max(np.abs(sum(dec.components.values()) + mean - f_hat).max(),
              np.abs(dec.low + dec.medium + dec.high + mean - f_hat).max()) / scale

    def pure(length, n, m):
        g = SpectralGrid(1, n, length)
        wave = np.zeros(n, complex)
        wave[[m, -m]] = 1.0
        lo, me, hi = bands.band_split(wave, g, const)
        return [float(np.abs(b).max()) for b in (lo, me, hi)]

    long_wave = pure(2 * math.pi * 1000, 16, 1)   # |xi| = 1e-3
    medium = pure(2 * math.pi, 16, 1)             # |xi| = 1
    short = pure(2 * math.pi, 256, 100)           # |xi| = 100
    ok_support = (long_wave == [1, 0, 0] and medium == [0, 1, 0] and short == [0, 0, 1])

    g1 = SpectralGrid(1, 256, 2 * math.pi)
    _, _, hi = bands.band_split(g1.forward(rng.standard_normal(256)), g1, const)
    edge = bands.bernstein_constant(const)
    norms = [math.sqrt(g1.norm_weight * np.sum(g1.k2 ** m * np.abs(hi) ** 2)) for m in range(5)]
    ok_bern = all(b >= edge * a for a, b in zip(norms, norms[1:]))
    elapsed = time.perf_counter() - t0
    ok = ok_const and err <= 1e-10 and ok_support and ok_bern and elapsed < 10
    assert accept(11, "bands", ok, f"constants {ok_const}, partition {err:.1e}, supports {ok_support}, "
                                   f"Bernstein edge {edge:g} {ok_bern}, {elapsed:.2f} s")


def test_criterion_12_linear_limit(accept):
    t0 = time.perf_counter()
    cfg = solver.SolverConfig(n=32, dt=0.05, t_final=5.0, nonlinear=False, sample_every=100)
    grid, s0 = solver.init_grid(cfg)
    res = solver.run(cfg)
    exact = solver.exact_linear_solution(s0, grid, cfg.t_final)
    got = res.final_state.pack()
    live = np.abs(exact) > 1e-12 * np.abs(exact).max()
    rel = float((np.abs(got - exact)[live] / np.abs(exact)[live]).max())
    elapsed = time.perf_counter() - t0
    assert accept(12, "linear limit", rel <= 1e-10 and cfg.n_steps == 100 and elapsed < 120,
                  f"max per-mode relative {rel:.1e} over {cfg.n_steps} steps, {elapsed:.1f} s")


def test_criterion_12_uniform_density(accept):
    grid = SpectralGrid(3, 32, 100.0)
    s = PerturbationState.zeros(grid, PHYSICAL)
    s.rho[...] = 0.3
    s = s.to_spectral(grid)
    integ = solver.Integrator(grid)
    worst = 0.0
    for _ in range(5):
        nxt = integ.step(s, 0.05)
        worst = max(worst, float(np.abs(nxt.pack() - s.pack()).max()))
        s = nxt
    assert accept(12, "stationarity", worst <= 1e-12, f"max change per step {worst:.1e}")


def test_criterion_12_step_halving(accept):
    t0 = time.perf_counter()
    base = dict(n=32, length=100.0, t_final=2.0, amplitude=10.0, sample_every=1000)
    ref = solver.run(solver.SolverConfig(dt=0.025, **base)).final_state.pack()
    errs = np.array([np.abs(solver.run(solver.SolverConfig(dt=dt, **base)).final_state.pack() - ref).max()
                     for dt in (0.4, 0.2, 0.1)])
    orders = np.log2(errs[:-1] / errs[1:])
    above_roundoff = errs.min() > 1e6 * np.finfo(float).eps * np.abs(ref).max()
    elapsed = time.perf_counter() - t0
    assert accept(12, "order", orders.min() >= 1.8 and above_roundoff and elapsed < 120,
                  f"orders {orders[0]:.3f}, {orders[1]:.3f}, {elapsed:.1f} s")


def test_criterion_13_small_data(accept):
    t0 = time.perf_counter()
    eps = 1e-3
    cfg = solver.SolverConfig(n=32, length=100.0, dt=0.05, t_final=10.0, amplitude=eps)
    res = solver.run(cfg)
    sup = float(res.h4.max())
    led = res.ledger / res.ledger[0]
    rate = float(np.max(np.diff(led) / np.diff(res.times)))
    accept(13, "sup H4", sup <= 2 * eps, f"{sup:.4e} vs {2 * eps:g}")
    accept(13, "ledger", rate <= 1e-6, f"max normalized growth rate {rate:.2e}")

    grid, state = solver.init_grid(cfg)
    nl, lin = solver.Integrator(grid), solver.Integrator(grid, nonlinear=False)
    a = b = state.pack()
    gap = 0.0
    for _ in range(int(round(5.0 / cfg.dt))):
        a, b = nl.step_packed(a, cfg.dt), lin.step_packed(b, cfg.dt)
        gap = max(gap, grid.l2_norm(a - b) / grid.l2_norm(b))
    elapsed = time.perf_counter() - t0
    accept(13, "trajectory gap", gap < 0.1, f"{gap:.2e} on [0, 5]")
    accept(13, "runtime", elapsed < 300, f"{elapsed:.1f} s")
    assert sup <= 2 * eps and rate <= 1e-6 and gap < 0.1 and elapsed < 300

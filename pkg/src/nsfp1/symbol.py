"""Linearised Fourier-space generators and their spectral analysis.

Per wave vector the linearised system reads ``dV/dt = -A(xi) V``. Under the
Helmholtz split the 9x9 generator decouples into a compressible 5x5 block in
``(rho, d, theta, n0, M)`` that depends on ``r = |xi|`` only, and two copies
of a 2x2 block acting on the divergence-free parts of ``u`` and ``n1``.
Eigenvalues ``y`` are those of ``B = -A``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import ConsistencyError, HurwitzMismatchError, RootFindingError, StabilityError

DELTA_DEG = 1e-6
# below this eigenvalue separation the projector sum loses digits; ``auto`` uses expm
SEP_PROJECTOR = 0.25
LABEL_R_MIN = 1e-3
LABEL_R_MAX = 1e3
LABEL_POINTS = 6000
LOW_LIMITS = (-5, -1, 0, 0, 0)

# a_k(r) = sum_j COEFFS[k][j] * r**(2j): characteristic polynomial of B, monic in y
CHAR_POLY_TABLE = (
    (1,),
    (6, 4),
    (5, 23, 3),
    (0, 28, 11),
    (0, 10, 19, 3),
    (0, 0, 5, 1),
)

# printed closed forms of the Hurwitz determinants as polynomials in r**2
HURWITZ_CLOSED_TABLE = (
    (6, 4),
    (30, 130, 99, 12),
    (0, 480, 2836, 3048, 981, 84),
    (0, 0, 4800, 37480, 85804, 76230, 28623, 4539, 252),
)


def _poly_r2(table, r):
    """Evaluate sum_j table[j] * r**(2j) (works for floats, arrays and Fractions)."""
    r2 = r * r
    acc = 0
    for c in reversed(table):
        acc = acc * r2 + c
    return acc


# ---------------------------------------------------------------- generators

def compressible_symbol(r):
    """5x5 symbol acting on ``(rho, d, theta, n0, M)``; ``r`` may be an array."""
    r = np.asarray(r, dtype=float)
    A = np.zeros(r.shape + (5, 5))
    r2 = r * r
    A[..., 0, 1] = r
    A[..., 1, 0] = -r
    A[..., 1, 1] = 3 * r2
    A[..., 1, 2] = -r
    A[..., 1, 4] = -1
    A[..., 2, 1] = r
    A[..., 2, 2] = r2 + 4
    A[..., 2, 3] = -1
    A[..., 3, 2] = -4
    A[..., 3, 3] = 1
    A[..., 3, 4] = r
    A[..., 4, 3] = -r
    A[..., 4, 4] = 1
    return A


def incompressible_symbol(r):
    """2x2 symbol on the divergence-free parts ``(Pu, Pn1)``."""
    r = np.asarray(r, dtype=float)
    A = np.zeros(r.shape + (2, 2))
    A[..., 0, 0] = r * r
    A[..., 0, 1] = -1
    A[..., 1, 1] = 1
    return A


def full_symbol(xi) -> np.ndarray:
    """9x9 generator on ``(rho, u1, u2, u3, theta, n0, n1_1, n1_2, n1_3)`` read off the PDE."""
    xi = np.asarray(xi, dtype=float)
    ixi = 1j * xi
    A = np.zeros((9, 9), dtype=complex)
    U, TH, N0, N1 = slice(1, 4), 4, 5, slice(6, 9)
    A[0, U] = ixi
    A[U, 0] = ixi
    A[U, TH] = ixi
    A[U, U] = xi @ xi * np.eye(3) + 2 * np.outer(xi, xi)
    A[U, N1] = -np.eye(3)
    A[TH, U] = ixi
    A[TH, TH] = xi @ xi + 4
    A[TH, N0] = -1
    A[N0, N1] = ixi
    A[N0, TH] = -4
    A[N0, N0] = 1
    A[N1, N0] = ixi
    A[N1, N1] = np.eye(3)
    return A


def helmholtz_unitary(xi) -> np.ndarray:
    """Unitary ``Q`` with ``Q A9 Q^H = A5 + A2 + A2`` (ordering rho,d,theta,n0,M,Pu_a,Pn1_a,Pu_b,Pn1_b)."""
    xi = np.asarray(xi, dtype=float)
    r = np.linalg.norm(xi)
    if r == 0:
        raise ValueError("the Helmholtz frame is undefined at xi = 0")
    e = xi / r
    helper = np.eye(3)[np.argmin(np.abs(e))]
    t1 = np.cross(e, helper)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(e, t1)
    Q = np.zeros((9, 9), dtype=complex)
    U, N1 = slice(1, 4), slice(6, 9)
    Q[0, 0] = 1
    Q[1, U] = 1j * e
    Q[2, 4] = 1
    Q[3, 5] = 1
    Q[4, N1] = 1j * e
    Q[5, U] = t1
    Q[6, N1] = t1
    Q[7, U] = t2
    Q[8, N1] = t2
    return Q


@dataclass(frozen=True)
class ModeSymbol:
    r: float
    A5: np.ndarray
    A2: np.ndarray

    @property
    def B5(self) -> np.ndarray:
        return -self.A5

    def full(self, xi) -> np.ndarray:
        if not math.isclose(float(np.linalg.norm(xi)), self.r, rel_tol=1e-12, abs_tol=1e-300):
            raise ValueError("|xi| does not match the symbol's frequency magnitude")
        return full_symbol(xi)


def build_symbol(r: float) -> ModeSymbol:
    if not (np.isfinite(r) and r >= 0):
        raise ValueError(f"frequency magnitude must be finite and >= 0, got {r}")
    return ModeSymbol(float(r), compressible_symbol(r), incompressible_symbol(r))


# ------------------------------------------------------ characteristic polynomial

def char_poly_closed(r):
    """Coefficients ``(1, a1, ..., a5)`` of ``y^5 + a1 y^4 + ... + a5``."""
    return tuple(_poly_r2(t, r) for t in CHAR_POLY_TABLE)


def char_poly_coeffs(r: float, check: bool = True) -> np.ndarray:
    """Closed-form coefficients, verified against ``det(yI - B)`` expanded numerically."""
    if not r >= 0:
        raise ValueError(f"r must be >= 0, got {r}")
    a = np.array(char_poly_closed(float(r)), dtype=float)
    if check:
        numeric = np.poly(-compressible_symbol(r))
        scale = np.maximum(1.0, np.abs(a))
        bad = np.abs(numeric - a) > 1e-8 * scale
        if np.any(bad):
            raise ConsistencyError(f"characteristic polynomial mismatch at r={r}: {a} vs {numeric}")
    return a


def _horner(coeffs, z):
    p = 0j
    dp = 0j
    for c in coeffs:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _polish(coeffs, roots, iters=4):
    roots = np.array(roots, dtype=complex)
    for i in range(len(roots)):
        z = roots[i]
        others = np.delete(roots, i)
        gap = np.min(np.abs(others - z)) if len(others) else np.inf
        for _ in range(iters):
            p, dp = _horner(coeffs, z)
            if p == 0 or dp == 0:
                break
            step = p / dp
            if abs(step) > 0.5 * gap:
                break
            z_new = z - step
            if abs(_horner(coeffs, z_new)[0]) >= abs(p):
                break
            z = z_new
        roots[i] = z
    return roots


def _raw_roots(r: float) -> np.ndarray:
    """Unlabelled roots: companion matrix, Newton polish, cross-check against eig(B)."""
    a = char_poly_coeffs(r)
    nzero = 0
    while nzero < 5 and a[5 - nzero] == 0.0:
        nzero += 1
    reduced = a[: 6 - nzero]
    roots = np.roots(reduced) if len(reduced) > 1 else np.array([])
    roots = _polish(reduced, roots)
    roots = np.concatenate([roots, np.zeros(nzero)]).astype(complex)

    direct = np.linalg.eigvals(-compressible_symbol(r))
    rows, cols = linear_sum_assignment(np.abs(roots[:, None] - direct[None, :]))
    dev = np.abs(roots[rows] - direct[cols])
    if np.any(dev > 1e-7 * np.maximum(1.0, np.abs(roots[rows]))):
        raise RootFindingError(f"companion roots and eig(B) disagree at r={r}: max deviation {dev.max():.3e}")
    for y in roots:
        res = abs(_horner(a, y)[0])
        scale = sum(abs(c) * abs(y) ** (5 - k) for k, c in enumerate(a))
        if res > 1e-10 * scale:
            raise RootFindingError(f"root {y} has relative residual {res / scale:.3e} at r={r}")
    return roots


# ------------------------------------------------------------ expansions

def expansion_low_offsets(r) -> np.ndarray:
    """Printed low-frequency branches minus their ``r = 0`` limits."""
    r = float(r)
    r2 = r * r
    s = math.sqrt(2.0) * r
    return np.array([
        -11 / 20 * r2,
        -r2 / 4,
        -r2 / 2,
        -27 / 20 * r2 - 1j * s,
        -27 / 20 * r2 + 1j * s,
    ], dtype=complex)


def expansion_low(r) -> np.ndarray:
    """Truncated low-frequency branches ``y1..y5`` exactly as printed."""
    return np.array(LOW_LIMITS, dtype=complex) + expansion_low_offsets(r)


def _dominant_balance_high():
    """Leading terms of the roots for r -> infinity from the coefficient table.

    Returns a list of ``(name, scale, leading, constant)`` meaning
    ``y ~ leading * r**scale + constant``.
    """
    c = [list(t) + [0] * (5 - len(t)) for t in CHAR_POLY_TABLE]

    def top(k, j):
        return Fraction(c[k][j]) if j < len(c[k]) else Fraction(0)

    out = []
    # parabolic branches y = z r^2 + mu: leading polynomial sum_k c[k][k] z^(5-k)
    lead = [top(k, k) for k in range(6)]
    nxt = [top(k, k - 1) if k >= 1 else Fraction(0) for k in range(6)]
    roots_z = [Fraction(int(z)) for z in np.roots([float(x) for x in lead[:3]]).real.round()]
    for z in roots_z:
        if sum(lead[k] * z ** (5 - k) for k in range(3)) != 0:
            raise ConsistencyError("parabolic leading coefficient is not an integer root")
        dP0 = sum((5 - k) * lead[k] * z ** (4 - k) for k in range(5))
        P1 = sum(nxt[k] * z ** (5 - k) for k in range(6))
        out.append((f"parabolic({z})", 2, z, -P1 / dP0))
    # oscillatory pair y = i s w r + nu balancing a2 y^3 against a4 y at order r^7
    w2 = top(4, 3) / top(2, 2)
    w = math.sqrt(w2)
    # order r^6 terms: a1 y^4 + a2 (3 y^2 nu) + a3 y^2 + a4 nu + a5
    num = top(1, 1) * w2 * w2 - top(3, 2) * w2 + top(5, 3)
    den = 3 * top(2, 2) * w2 - top(4, 3)
    nu = num / den
    out.append(("oscillatory(+)", 1, 1j * w, nu))
    out.append(("oscillatory(-)", 1, -1j * w, nu))
    # bounded branch: a4 y + a5 at order r^6
    out.append(("bounded", 0, -top(5, 3) / top(4, 3), Fraction(0)))
    return out


@dataclass
class HighFrequencyExpansion:
    r: float
    printed: np.ndarray
    corrected: dict
    constants: dict = field(default_factory=dict)


def expansion_high(r) -> HighFrequencyExpansion:
    """Printed high-frequency list and the dominant-balance prediction."""
    r = float(r)
    r2 = r * r
    printed = np.array([-1 / 3, -r2 - 4.5, 1j * r - 1, -1j * r - 1, 1j * r - 1], dtype=complex)
    corrected, constants = {}, {}
    for name, scale, lead, const in _dominant_balance_high():
        corrected[name] = complex(lead) * r ** scale + float(const)
        constants[name] = (lead if isinstance(lead, complex) else Fraction(lead), Fraction(const))
    return HighFrequencyExpansion(r, printed, corrected, constants)



def _taylor_shift(coeffs, y0):
    """Coefficients of ``p(y0 + z)`` by repeated synthetic division (exact for Fractions)."""
    c = list(coeffs)
    n = len(c) - 1
    for i in range(n):
        for j in range(1, n - i + 1):
            c[j] += y0 * c[j - 1]
    return c


def low_branch_offsets(r: float) -> np.ndarray:
    """Labelled ``y_i(r) - y_i(0)`` with full relative accuracy for small ``r``.

    The roots leaving ``-5`` and ``-1`` are found from the polynomial shifted
    to that limit in exact rational arithmetic, so their O(r**2) offsets are
    not swamped by rounding at the scale of the limit itself.
    """
    r = float(r)
    if not r > 0:
        raise ValueError("r must be > 0")
    offsets = eigenvalues(r).values - np.array(LOW_LIMITS)
    a = char_poly_closed(Fraction(r))
    for i, y0 in enumerate(LOW_LIMITS[:2]):
        q = [float(c) for c in _taylor_shift(a, Fraction(y0))]
        z = np.roots(q)
        k = int(np.argmin(np.abs(z)))
        offsets[i] = _polish(q, z)[k].real
    return offsets


# ------------------------------------------------------------- branch labels

@lru_cache(maxsize=1)
def _label_table():
    rs = np.geomspace(LABEL_R_MIN, LABEL_R_MAX, LABEL_POINTS)
    raw = np.linalg.eigvals(-compressible_symbol(rs))
    labeled = np.empty_like(raw)
    labeled[0] = _match(expansion_low(rs[0]), raw[0])
    for i in range(1, len(rs)):
        labeled[i] = _match(labeled[i - 1], raw[i])
    return rs, labeled


def _match(reference, values):
    """Reorder ``values`` to follow ``reference`` by minimum-cost assignment."""
    rows, cols = linear_sum_assignment(np.abs(reference[:, None] - values[None, :]))
    out = np.empty(len(reference), dtype=complex)
    out[rows] = values[cols]
    return out


def _label(r: float, roots: np.ndarray) -> np.ndarray:
    if r == 0:
        return np.array([-5, -1, 0, 0, 0], dtype=complex)
    if r < LABEL_R_MIN:
        return _match(expansion_low(r), roots)
    rs, table = _label_table()
    if r <= LABEL_R_MAX:
        i = int(np.clip(np.searchsorted(rs, r), 0, len(rs) - 1))
        j = max(i - 1, 0)
        ref = table[i] if abs(np.log(rs[i] / r)) < abs(np.log(rs[j] / r)) else table[j]
        return _match(ref, roots)
    ref = table[-1]
    for rr in np.geomspace(LABEL_R_MAX, r, max(2, int(200 * np.log10(r / LABEL_R_MAX)) + 2))[1:]:
        ref = _match(ref, np.linalg.eigvals(-compressible_symbol(rr)))
    return _match(ref, roots)


# ---------------------------------------------------------- eigen systems

@dataclass
class EigenSystem:
    r: float
    values: np.ndarray
    projectors: np.ndarray | None
    degenerate: bool
    min_separation: float


def _min_separation(y) -> np.ndarray:
    y = np.asarray(y)
    d = np.abs(y[..., :, None] - y[..., None, :])
    n = y.shape[-1]
    d[..., np.arange(n), np.arange(n)] = np.inf
    return d.min(axis=(-1, -2))


def projectors_from(B: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Spectral projectors ``P_i = prod_{j != i} (B - y_j I)/(y_i - y_j)``; batched over leading axes."""
    n = y.shape[-1]
    eye = np.eye(B.shape[-1])
    P = np.empty(y.shape + B.shape[-2:], dtype=complex)
    for i in range(n):
        acc = np.broadcast_to(eye, B.shape).astype(complex)
        for j in range(n):
            if j == i:
                continue
            factor = (B - y[..., j, None, None] * eye) / (y[..., i] - y[..., j])[..., None, None]
            acc = acc @ factor
        P[..., i, :, :] = acc
    return P


def eigenvalues(r: float) -> EigenSystem:
    """Labelled eigenvalues of ``B(r)`` with projectors when well separated."""
    if not (np.isfinite(r) and r >= 0):
        raise ValueError(f"r must be finite and >= 0, got {r}")
    r = float(r)
    y = _label(r, _raw_roots(r))
    sep = float(_min_separation(y))
    degenerate = not sep > DELTA_DEG
    P = None if degenerate else projectors_from(-compressible_symbol(r), y)
    return EigenSystem(r, y, P, degenerate, sep)


# -------------------------------------------------------------- Hurwitz

def _det(M):
    """Determinant by cofactor expansion (exact for Fractions; sizes <= 5)."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = 0
    for j in range(n):
        if M[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        total += (-1) ** j * M[0][j] * _det(minor)
    return total


def hurwitz_minors_printed(a) -> tuple:
    """Determinants ``A1..A5`` with the matrix layout printed alongside the closed forms."""
    a0, a1, a2, a3, a4, a5 = a
    z = 0 * a1
    A1 = a1
    A2 = _det([[a1, a0], [a3, a2]])
    A3 = _det([[a1, a0, z], [a3, a2, a1], [a5, a4, a3]])
    A4 = _det([[a1, a0, z, z], [a3, a2, a1, z], [a5, a4, a3, z], [z, z, a5, a4]])
    A5 = _det([[a1, a0, z, z, z], [a3, a2, a1, z, z], [a5, a4, a3, z, z], [z, z, a5, a4, z], [z, z, z, z, a5]])
    return A1, A2, A3, A4, A5


def hurwitz_minors_standard(a) -> tuple:
    """Leading principal minors of the standard 5x5 Hurwitz matrix."""
    a0, a1, a2, a3, a4, a5 = a
    z = 0 * a1
    H = [[a1, a0, z, z, z],
         [a3, a2, a1, a0, z],
         [a5, a4, a3, a2, a1],
         [z, z, a5, a4, a3],
         [z, z, z, z, a5]]
    return tuple(_det([row[:k] for row in H[:k]]) for k in range(1, 6))


def hurwitz_closed_forms(r) -> tuple:
    A1, A2, A3, A4 = (_poly_r2(t, r) for t in HURWITZ_CLOSED_TABLE)
    a5 = char_poly_closed(r)[5]
    return A1, A2, A3, A4, a5 * A4


@dataclass
class HurwitzReport:
    r: float
    minors: tuple
    closed_forms: tuple
    standard: tuple

    @property
    def all_positive(self) -> bool:
        return all(v > 0 for v in self.minors) and all(v > 0 for v in self.standard)


def hurwitz_determinants(r: float) -> HurwitzReport:
    """Minors from the polynomial coefficients checked against the closed forms."""
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")
    a = char_poly_coeffs(r)
    minors = tuple(float(v) for v in hurwitz_minors_printed(tuple(a)))
    closed = tuple(float(v) for v in hurwitz_closed_forms(float(r)))
    for k, (m, c) in enumerate(zip(minors, closed), start=1):
        if abs(m - c) > 1e-6 * max(abs(c), 1e-300):
            raise HurwitzMismatchError(f"A{k} at r={r}: minor {m!r} vs closed form {c!r}")
    standard = tuple(float(v) for v in hurwitz_minors_standard(tuple(a)))
    report = HurwitzReport(float(r), minors, closed, standard)
    if not report.all_positive:
        raise StabilityError(f"non-positive Hurwitz determinant at r={r}: {minors}, {standard}")
    return report


@dataclass
class ExactHurwitz:
    r: Fraction
    minors: tuple          # integers after clearing denominators
    closed_forms: tuple
    standard: tuple

    @property
    def match(self) -> bool:
        return self.minors[:4] == self.closed_forms[:4]

    @property
    def all_positive(self) -> bool:
        return all(v > 0 for v in self.minors) and all(v > 0 for v in self.standard)


def hurwitz_exact(r: Fraction) -> ExactHurwitz:
    """Hurwitz determinants in exact rational arithmetic, scaled to integers.

    With ``r = p/q`` every determinant is a polynomial in ``r**2`` of known
    degree, so multiplying by ``q**(2*degree)`` clears the denominator.
    """
    r = Fraction(r)
    if r <= 0:
        raise ValueError("r must be > 0")
    q = r.denominator
    a = char_poly_closed(r)
    degrees = (1, 3, 5, 8, 11)

    def clear(vals, degs):
        out = []
        for v, deg in zip(vals, degs):
            scaled = Fraction(v) * q ** (2 * deg)
            if scaled.denominator != 1:
                raise ConsistencyError(f"denominator survived clearing at r={r}")
            out.append(scaled.numerator)
        return tuple(out)

    minors = clear(hurwitz_minors_printed(a), degrees)
    closed = clear(hurwitz_closed_forms(r), degrees)
    standard = clear(hurwitz_minors_standard(a), (1, 3, 5, 8, 11))
    return ExactHurwitz(r, minors, closed, standard)


# -------------------------------------------------------- spectral gap

@dataclass
class GapScan:
    c0_estimate: float
    worst_r: float
    r_min: float
    r_max: float
    n_samples: int


def max_real_part(r_values) -> np.ndarray:
    r_values = np.asarray(r_values, dtype=float)
    return np.linalg.eigvals(-compressible_symbol(r_values)).real.max(axis=-1)


def spectral_abscissa_scan(r_min: float, r_max: float, n_samples: int, threads: int = 1) -> GapScan:
    """``-max_r max_i Re y_i(r)`` over log-spaced samples in ``[r_min, r_max]``."""
    if not (0 < r_min < r_max) or n_samples < 2:
        raise ValueError("need 0 < r_min < r_max and n_samples >= 2")
    rs = np.geomspace(r_min, r_max, n_samples)
    if threads > 1:
        chunks = np.array_split(rs, threads)
        with ThreadPoolExecutor(threads) as pool:
            m = np.concatenate(list(pool.map(max_real_part, chunks)))
    else:
        m = max_real_part(rs)
    i = int(np.argmax(m))
    return GapScan(float(-m[i]), float(rs[i]), float(r_min), float(r_max), int(n_samples))


# ------------------------------------------------------------ semigroups

def semigroup_expm(r, t: float) -> np.ndarray:
    """``exp(t B(r))`` by scaling and squaring (batched over ``r``)."""
    return sla.expm(-t * compressible_symbol(r)).astype(complex)


def semigroup(r: float, t: float, method: str = "auto") -> np.ndarray:
    """``exp(t B(r))``: projector sum when the spectrum is well separated."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if method == "expm":
        return semigroup_expm(r, t)
    es = eigenvalues(r)
    if es.degenerate:
        if method == "projector":
            raise ValueError(f"projector route unavailable: separation {es.min_separation:.2e} at r={r}")
        return semigroup_expm(r, t)
    if method == "auto" and es.min_separation < SEP_PROJECTOR:
        return semigroup_expm(r, t)
    return np.einsum("i,ijk->jk", np.exp(es.values * t), es.projectors)


@dataclass
class BatchSpectrum:
    """Eigen-data of ``B(r)`` for an array of ``r``, used for repeated evaluation in ``t``."""

    r: np.ndarray
    values: np.ndarray
    projectors: np.ndarray
    degenerate: np.ndarray
    use_expm: np.ndarray

    def semigroup(self, t: float) -> np.ndarray:
        E = np.einsum("ni,nijk->njk", np.exp(self.values * t), self.projectors)
        if np.any(self.use_expm):
            E[self.use_expm] = semigroup_expm(self.r[self.use_expm], t)
        return E


def _polish_batch(coeffs, y, iters=3):
    """Newton steps on the closed-form polynomial, kept only where the residual drops."""
    coeffs = [np.asarray(c, dtype=float)[..., None] for c in coeffs]

    def horner(z):
        p = np.zeros_like(z)
        dp = np.zeros_like(z)
        for c in coeffs:
            dp = dp * z + p
            p = p * z + c
        return p, dp

    gap = _min_separation(y)[..., None]
    for _ in range(iters):
        p, dp = horner(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dp != 0, p / dp, 0)
        cand = y - step
        ok = (np.abs(step) < 0.5 * gap) & (np.abs(horner(cand)[0]) < np.abs(p))
        y = np.where(ok, cand, y)
    return y


def batch_spectrum(r_values) -> BatchSpectrum:
    r_values = np.asarray(r_values, dtype=float)
    B = -compressible_symbol(r_values)
    y = _polish_batch(char_poly_closed(r_values), np.linalg.eigvals(B))
    sep = _min_separation(y)
    deg = ~(sep > DELTA_DEG)
    P = projectors_from(B, y)
    P[deg] = 0
    return BatchSpectrum(r_values, y, P, deg, ~(sep >= SEP_PROJECTOR))


def incompressible_semigroup(r, t: float) -> np.ndarray:
    """Closed-form ``exp(-t A2(r))``: ``Pn1`` decays as ``e^{-t}``, ``Pu`` diffuses with forcing."""
    r = np.asarray(r, dtype=float)
    r2 = r * r
    decay = np.exp(-r2 * t)
    x = (r2 - 1.0) * t
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.abs(x) > 1e-12, -np.expm1(-x) / np.where(x == 0, 1, x), 1.0 - x / 2)
    coupling = np.exp(-t) * t * ratio
    E = np.zeros(r.shape + (2, 2))
    E[..., 0, 0] = decay
    E[..., 0, 1] = coupling
    E[..., 1, 1] = np.exp(-t)
    return E


# -------------------------------------------------- change of variables

@dataclass(frozen=True)
class TransformT:
    r: float
    T: np.ndarray
    T_inverse: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.T))


def transform_T(r: float) -> TransformT:
    """Map ``(rho, d, theta, n0, M) -> (G, F, J, K, M)``."""
    r = float(r)
    T = np.array([
        [1, 0, 0, 0, r],
        [0, 1, 0, 0, 1],
        [0, 0, 4, -1, 0],
        [0, 0, 1, 1, 0],
        [0, 0, 0, 0, 1],
    ], dtype=float)
    Tinv = np.array([
        [1, 0, 0, 0, -r],
        [0, 1, 0, 0, -1],
        [0, 0, 0.2, 0.2, 0],
        [0, 0, -0.2, 0.8, 0],
        [0, 0, 0, 0, 1],
    ], dtype=float)
    return TransformT(r, T, Tinv)


def transformed_generator(r: float) -> np.ndarray:
    tr = transform_T(r)
    return tr.T @ compressible_symbol(r) @ tr.T_inverse


def printed_transformed_generator(r: float) -> np.ndarray:
    """Coefficient matrix read literally off the transformed system as printed."""
    r = float(r)
    r2 = r * r
    return np.array([
        [0, r, r2 / 5, -4 * r2 / 5, 0],
        [-r, 3 * r2, 0, -r, -2 * r2],
        [0, 4 * r, 5 + 4 * r2 / 5, 4 * r2 / 5, -5 * r],
        [0, r, r2 / 5, r2 / 5, 0],
        [0, 0, 0, -4 * r / 5, 1 + r / 5],
    ], dtype=float)


TRANSFORM_LABELS = ("G", "F", "J", "K", "M")


@dataclass
class TransformReport:
    r: float
    det_T: float
    inverse_error: float
    mismatches: list          # (row, col, conjugated, printed)
    computed: np.ndarray
    printed: np.ndarray


def compare_transformed(r: float, tol: float = 1e-12) -> TransformReport:
    tr = transform_T(r)
    C = transformed_generator(r)
    P = printed_transformed_generator(r)
    bad = np.argwhere(np.abs(C - P) > tol * np.maximum(1.0, np.abs(P)))
    mismatches = [(TRANSFORM_LABELS[i], TRANSFORM_LABELS[j], float(C[i, j]), float(P[i, j])) for i, j in bad]
    inv_err = float(np.abs(tr.T @ tr.T_inverse - np.eye(5)).max())
    return TransformReport(float(r), tr.det, inv_err, mismatches, C, P)


# --------------------------------------------------- low-frequency Lyapunov

def lyapunov_matrix(r: float) -> np.ndarray:
    """Hermitian matrix of the low-frequency form in ``(G, F, J, K, M)``."""
    H = np.diag([1.0, 1.0, 1 / 50, 1.0, 0.5])
    H[0, 1] = H[1, 0] = -4 * r / 5
    return H


def lyapunov_low(W, r: float) -> float:
    """``|G|^2 + |F|^2 + |K|^2 + |M|^2/2 + |J|^2/50 - (8/5) r Re(G conj F)``."""
    G, F, J, K, M = np.asarray(W, dtype=complex)
    return float(abs(G) ** 2 + abs(F) ** 2 + abs(K) ** 2 + 0.5 * abs(M) ** 2 + abs(J) ** 2 / 50
                 - 1.6 * r * (G * np.conj(F)).real)

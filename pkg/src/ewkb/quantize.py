"""Monodromy products, exact quantization conditions and their roots.

Side conventions: ``upper`` is D^+ (built from A^{-1}), ``lower`` is D^-
(built from A^{+1}).  The Stokes automorphism s -> s(1 + t^2) maps the
upper condition onto the lower one.  ``median`` averages the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize
from scipy.special import rgamma

from .records import AIRY_WKB, DW_WKB, SPLITTING, SpectralRecord
from .wkb import eval_F

UPPER, LOWER, MEDIAN = "upper", "lower", "median"
SIDES = (UPPER, LOWER, MEDIAN)
EULER_GAMMA = 0.5772156649015329


def _side_sign(side: str) -> int:
    if side == UPPER:
        return 1
    if side == LOWER:
        return -1
    raise ValueError(f"side must be upper or lower here, got {side!r}")


# ---------------------------------------------------------------- matrices

@dataclass
class Monodromy2x2:
    entries: object  # 2x2 numpy array or sympy Matrix
    provenance: tuple = ()

    def __matmul__(self, other: "Monodromy2x2") -> "Monodromy2x2":
        return Monodromy2x2(self.entries @ other.entries if isinstance(self.entries, np.ndarray)
                            else self.entries * other.entries,
                            self.provenance + other.provenance)

    @property
    def symbolic(self) -> bool:
        return not isinstance(self.entries, np.ndarray)

    def det(self):
        if self.symbolic:
            import sympy as sp
            return sp.simplify(self.entries.det())
        return complex(np.linalg.det(self.entries))

    def trace(self):
        if self.symbolic:
            import sympy as sp
            return sp.simplify(self.entries.trace())
        return complex(np.trace(self.entries))

    def check(self, tol: float = 1e-10) -> bool:
        d = self.det()
        if self.symbolic:
            return d == 1
        return abs(d - 1) < tol


def _mat(rows, symbolic):
    if symbolic:
        import sympy as sp
        return sp.Matrix(rows)
    return np.array(rows, dtype=complex)


def m_plus(symbolic=False):
    import sympy as sp
    i = sp.I if symbolic else 1j
    return Monodromy2x2(_mat([[1, i], [0, 1]], symbolic), ("M+",))


def m_minus(symbolic=False):
    import sympy as sp
    i = sp.I if symbolic else 1j
    return Monodromy2x2(_mat([[1, 0], [i, 1]], symbolic), ("M-",))


def t_matrix(symbolic=False):
    import sympy as sp
    i = sp.I if symbolic else 1j
    return Monodromy2x2(_mat([[0, -i], [-i, 0]], symbolic), ("T",))


def n_matrix(v, label="N", symbolic=False):
    """diag(v, 1/v) with v = exp(int S_odd) between two turning points."""
    return Monodromy2x2(_mat([[v, 0], [0, 1 / v]], symbolic), (label,))


def airy_monodromy(sqrtA, sqrtB, side: str, symbolic: bool | None = None) -> Monodromy2x2:
    """M+ T N12 M- N23 M- (upper) or M+ T N12 M- M+ N23 (lower).

    N12 = diag(sqrt A, 1/sqrt A) and N23 = diag(1/sqrt B, sqrt B); with this
    orientation tr M = 2 xi.
    """
    if symbolic is None:
        symbolic = not isinstance(sqrtA, (int, float, complex, np.number))
    n12 = n_matrix(sqrtA, "N12", symbolic)
    n23 = n_matrix(1 / sqrtB, "N23", symbolic)
    head = m_plus(symbolic) @ t_matrix(symbolic) @ n12 @ m_minus(symbolic)
    if _side_sign(side) == 1:
        return head @ n23 @ m_minus(symbolic)
    return head @ m_plus(symbolic) @ n23


def dw_matrices(F: complex, hbar: float, c_ratio: complex, sqrtB0: complex):
    """The four DW connection steps, the normalization and branch-cut matrices.

    c_ratio = C-/C+.  Entries are returned as displayed; see the ledger for how
    their product relates to the closed-form condition.
    """
    g = np.sqrt(2 * np.pi)
    lo = 1j * c_ratio * g * hbar**F * rgamma(0.5 - F)
    up = 1j / c_ratio * g * hbar ** (-F) * rgamma(0.5 + F)
    mats = {
        "IV->I": Monodromy2x2(np.array([[1, 0], [lo * np.exp(1j * np.pi * F), 1]]), ("IV->I",)),
        "I->II": Monodromy2x2(np.array([[1, up], [0, 1]]), ("I->II",)),
        "II->III": Monodromy2x2(np.array([[1, 0], [lo * np.exp(-1j * np.pi * F), 1]]), ("II->III",)),
        "III->IV": Monodromy2x2(np.array([[1, up * np.exp(-2j * np.pi * F)], [0, 1]]), ("III->IV",)),
        "N": n_matrix(complex(sqrtB0), "N"),
        "T": t_matrix(False),
    }
    return mats


def dw_monodromy(F, hbar, c_ratio, sqrtB0, side: str) -> Monodromy2x2:
    m = dw_matrices(F, hbar, c_ratio, sqrtB0)
    if _side_sign(side) == 1:
        return m["III->IV"] @ m["N"] @ m["T"] @ m["II->III"]
    return m["III->IV"] @ m["IV->I"] @ m["N"] @ m["T"]


# ---------------------------------------------------------------- xi, alpha, beta

def xi(A, B, side: str):
    """xi^+- = (1 + A^{+-1} + B) / (2 sqrt(A^{+-1} B))."""
    a = A ** _side_sign(side)
    return (1 + a + B) / (2 * np.sqrt(a * B))


def alpha_beta(x):
    """Roots of z^2 - 2 xi z + 1, larger modulus first."""
    r = np.sqrt(x * x - 1 + 0j)
    a, b = x + r, x - r
    if abs(a) < abs(b):
        a, b = b, a
    return a, b


def bloch_angle(theta: float, p: int, N: int) -> float:
    return (theta + 2 * np.pi * p) / N


# ---------------------------------------------------------------- conditions

@dataclass
class QuantizationCondition:
    N: int
    theta: float
    side: str
    kind: str
    evaluator: Callable
    factors: list
    regular_factors: list = field(default_factory=list)
    hbar: float = float("nan")
    meta: dict = field(default_factory=dict)

    def factor_product(self, E):
        out = 1.0 + 0j
        for f in self.factors:
            out = out * f(E)
        return out


def _const(v):
    return v if callable(v) else (lambda E, _v=v: _v)


def condition_airy(A, B, theta: float, N: int = 1, side: str = UPPER) -> QuantizationCondition:
    """D^(N) = alpha^N + beta^N - 2 cos(theta) and its p-factors.

    A and B may be numbers or callables of E.  Each factor is
    (A^{-+1} B)^{-1/2} [1 + A^{-+1}(1 + B) - 2 sqrt(A^{-+1} B) cos((theta + 2 pi p)/N)].
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    fA, fB = _const(A), _const(B)
    sg = _side_sign(side)

    def full(E):
        a, b = alpha_beta(xi(fA(E), fB(E), side))
        return a**N + b**N - 2 * np.cos(theta)

    def make(p):
        # 2 xi - 2 c_p equals the bracket over sqrt(A^{-+1} B); writing it through
        # xi keeps one square-root branch for every p, which odd N needs
        c = np.cos(bloch_angle(theta, p, N))
        return lambda E: 2 * xi(fA(E), fB(E), side) - 2 * c

    def reg(p):
        c = np.cos(bloch_angle(theta, p, N))
        return lambda E: 1 + fA(E) ** (-sg) * (1 + fB(E)) - 2 * np.sqrt(fA(E) ** (-sg) * fB(E)) * c

    return QuantizationCondition(N, theta, side, "Airy", full, [make(p) for p in range(N)],
                                 [reg(p) for p in range(N)])


def binomial_form(x, N: int):
    """alpha^N + beta^N = 2 sum_l C(N, N-2l) xi^(N-2l) (xi^2 - 1)^l."""
    from math import comb
    return 2 * sum(comb(N, N - 2 * l) * x ** (N - 2 * l) * (x * x - 1) ** l
                   for l in range(N // 2 + 1))


def singlet_indices(N: int, theta: float, tol: float = 1e-12) -> list[int]:
    """Bloch factors whose cos((theta + 2 pi p)/N) is not shared with another p."""
    cs = [np.cos(bloch_angle(theta, p, N)) for p in range(N)]
    return [p for p in range(N) if sum(abs(cs[p] - c) < tol for c in cs) == 1]


def paired_indices(N: int, theta: float, tol: float = 1e-12) -> list[tuple[int, int]]:
    cs = [np.cos(bloch_angle(theta, p, N)) for p in range(N)]
    out = []
    for p in range(N):
        for q in range(p + 1, N):
            if abs(cs[p] - cs[q]) < tol:
                out.append((p, q))
    return out


# DW cycles -------------------------------------------------------------------

def leading_F_table(N: int) -> list[np.ndarray]:
    """F = -E/N only."""
    return [np.array([0.0, -1.0 / N])]


def dw_cycles(F_table, E, hbar: float, N: int, c_branch: int = -1):
    """(F, calA, sqrt calB) at rescaled energy E.

    sqrt calB = (C-/C+) sqrt(2 pi) sqrt(B0) hbar^F / Gamma(1/2 - F), with 1/Gamma
    evaluated directly so Gamma poles give zeros instead of divisions.
    """
    from .wkb import normalization_constants
    E = np.asarray(E, dtype=complex)
    F = eval_F(F_table, E, hbar)
    calA = np.exp(2j * np.pi * F)
    if c_branch == -1:
        c_ratio = (32.0 / N) ** (E / N)
    else:
        cp, cm = normalization_constants(N, E, c_branch)
        c_ratio = cm / cp
    sqrtB0 = np.exp(-8.0 / (N * hbar))
    sqrtB = c_ratio * np.sqrt(2 * np.pi) * sqrtB0 * hbar**F * rgamma(0.5 - F)
    return F, calA, sqrtB


def condition_dw(F_table, hbar: float, theta: float, N: int = 1, side: str = UPPER,
                 c_branch: int = -1) -> QuantizationCondition:
    """DW condition D^(N)+- = (calA^{-+1} calB)^{-N/2} prod_p [...].

    F_table is the polynomial table of F(E, hbar) from wkb.residue_F_poly
    (or leading_F_table).  Energies are rescaled: physical = hbar * E.
    ``regular_factors`` hold sqrt(calB) * D_p, free of the 1/sqrt(calB) blow-up;
    roots are searched on those.
    """
    if not hbar > 0:
        raise ValueError("hbar must be positive")

    def half_phases(E):
        F, calA, sqrtB = dw_cycles(F_table, E, hbar, N, c_branch)
        return np.exp(1j * np.pi * F), sqrtB

    def reg_factor(p):
        c = np.cos(bloch_angle(theta, p, N))

        def f(E):
            h, sb = half_phases(E)
            if side == MEDIAN:
                return (h + 1 / h) * (1 + 0.5 * sb * sb) - 2 * c * sb
            sg = _side_sign(side)
            # calA^{+-1/2} + calA^{-+1/2}(1 + calB) - 2 c sqrt(calB)
            return h**sg + h ** (-sg) * (1 + sb * sb) - 2 * c * sb
        return f

    regs = [reg_factor(p) for p in range(N)]

    def factor(p):
        return lambda E: regs[p](E) / half_phases(E)[1]

    facs = [factor(p) for p in range(N)]

    def full(E):
        out = 1.0 + 0j
        for f in facs:
            out = out * f(E)
        return out

    return QuantizationCondition(N, theta, side, "DW", full, facs, regs, hbar,
                                 {"c_branch": c_branch})


def low_energy_form(E, hbar: float, theta: float, N: int, side: str, p: int = 0):
    """Closed low-energy forms for N = 1 and the N = 2 p-brackets."""
    sg = _side_sign(side)
    B0 = np.exp(-16.0 / (N * hbar))
    h = hbar * N / 32.0
    e = E / N
    first = h**e * rgamma(0.5 - e) / np.sqrt(B0)
    second = np.sqrt(B0) * np.exp(sg * 1j * np.pi * e) * rgamma(0.5 + e) * h ** (-e)
    c = np.cos(bloch_angle(theta, p, N))
    return first + second - np.sqrt(2 / np.pi) * c


# ---------------------------------------------------------------- roots

def _is_real_problem(cond: QuantizationCondition) -> bool:
    return cond.side == MEDIAN


def _argument_count(f, x0, x1, height, n=64):
    """Winding number of f around the rectangle [x0,x1] x [-h,h]."""
    h = height
    pts = np.concatenate([
        np.linspace(x0 - 1j * h, x1 - 1j * h, n, endpoint=False),
        np.linspace(x1 - 1j * h, x1 + 1j * h, n, endpoint=False),
        np.linspace(x1 + 1j * h, x0 + 1j * h, n, endpoint=False),
        np.linspace(x0 + 1j * h, x0 - 1j * h, n + 1),
    ])
    v = np.array([f(z) for z in pts])
    d = np.angle(v[1:] / v[:-1])
    return int(np.round(np.sum(d) / (2 * np.pi)))


def _secant(f, z0, z1, tol=1e-14, maxit=80):
    f0, f1 = f(z0), f(z1)
    for _ in range(maxit):
        if f1 == f0:
            break
        z2 = z1 - f1 * (z1 - z0) / (f1 - f0)
        z0, f0 = z1, f1
        z1, f1 = z2, f(z2)
        if abs(z1 - z0) < tol * max(1.0, abs(z1)):
            return z1, True
    return z1, abs(f1) < 1e-8


def solve_spectrum(cond: QuantizationCondition, bands: int, E_window=(0.0, None),
                   grid: int = 400, height: float = 1e-3) -> list[SpectralRecord]:
    """Roots per Bloch factor, labelled (n, p), energies reported physically.

    Median conditions are real on the real axis and are bracketed by sign
    changes; one-sided conditions use the argument principle on thin
    rectangles around the real axis, then secant polishing.
    """
    lo, hi = E_window
    if hi is None:
        hi = cond.N * (bands + 1.0)
    method = DW_WKB if cond.kind == "DW" else AIRY_WKB
    hbar = cond.hbar if np.isfinite(cond.hbar) else 1.0
    fs = cond.regular_factors or cond.factors
    out = []
    xs = np.linspace(lo, hi, grid + 1)
    for p, f in enumerate(fs):
        roots = []
        if _is_real_problem(cond):
            vals = np.array([f(x).real for x in xs])
            for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
                if fa == 0:
                    roots.append((a, False))
                elif fa * fb < 0:
                    r = optimize.brentq(lambda x: f(x).real, a, b, xtol=1e-15, rtol=1e-15)
                    roots.append((r, False))
        else:
            for a, b in zip(xs[:-1], xs[1:]):
                k = _argument_count(f, a, b, height)
                if k <= 0:
                    continue
                z, ok = _secant(f, complex(a + 0.3 * (b - a)), complex(a + 0.7 * (b - a)))
                roots.append((z, not ok))
        roots.sort(key=lambda r: np.real(r[0]))
        for n, (z, flag) in enumerate(roots[:bands]):
            out.append(SpectralRecord(cond.N, hbar, cond.theta, p, n, complex(hbar * z), method, flag))
    out.sort(key=lambda r: (r.p, r.n))
    return out


# ---------------------------------------------------------------- splitting

@dataclass
class SplittingEstimate:
    delta: complex
    instanton: float
    bion_real: float
    bion_imag: float

    def energy(self, N: int, hbar: float) -> complex:
        """Physical energy from E/N = 1/2 + delta."""
        return hbar * N * (0.5 + self.delta)


def splitting_estimate(N: int, hbar: float, theta: float, p: int = 0,
                       side: str = UPPER) -> SplittingEstimate:
    if N not in (1, 2):
        raise NotImplementedError("closed splitting formulas exist for N = 1 and N = 2 only")
    sg = _side_sign(side)
    B0 = np.exp(-16.0 / (N * hbar))
    if B0 >= 0.1:
        raise ValueError("hbar too large for the splitting expansion (B0 >= 0.1)")
    if N == 1:
        k = 64.0 * B0 / (np.pi * hbar)
        c = np.cos(theta)
        inst = -np.sqrt(k) * c
        log_arg = hbar / 32.0
    else:
        k = 32.0 * B0 / (np.pi * hbar)
        c = np.cos(theta / 2)
        inst = -((-1) ** p) * np.sqrt(k) * c
        log_arg = hbar / 16.0
    bion_re = k * c * c * (EULER_GAMMA - np.log(log_arg))
    bion_im = sg * k * np.pi / 2
    return SplittingEstimate(complex(inst + bion_re + 1j * bion_im), float(inst),
                             float(bion_re), float(bion_im))


def splitting_records(N, hbar, theta, side=MEDIAN, e_pert=None):
    """Ground band as perturbative value plus N * delta (rescaled units).

    e_pert is the perturbative E/hbar at this hbar; by default the harmonic N/2.
    """
    base = N * 0.5 if e_pert is None else e_pert
    out = []
    for p in range(N):
        if side == MEDIAN:
            d = splitting_estimate(N, hbar, theta, p, UPPER)
            shift = N * (d.instanton + d.bion_real)
        else:
            shift = N * splitting_estimate(N, hbar, theta, p, side).delta
        out.append(SpectralRecord(N, hbar, theta, p, 0, complex(hbar * (base + shift)), SPLITTING))
    return out


# ---------------------------------------------------------------- dictionary

AIRY_TO_DW = "AiryToDW"
DW_TO_AIRY = "DWToAiry"


def dictionary_translate(direction: str, cycles: dict) -> dict:
    """Translate between Airy period data and the DW symbols calA, calB.

    AiryToDW input: E, hbar, omega (one per well, or a list of two), S_B and
    c_ratios (C_l- / C_l+ per well).  Output adds calA, calB.
    DWToAiry input: calA, calB, E, hbar, S_B; recovers omega and the product
    of C-ratios.  Identical wells are assumed in that direction.
    """
    from scipy.special import gamma
    req = {"E", "hbar"}
    if not req <= set(cycles):
        raise KeyError(f"missing {req - set(cycles)}")
    E = complex(cycles["E"])
    hbar = float(cycles["hbar"])
    S_B = float(cycles.get("S_B", 16.0))
    if direction == AIRY_TO_DW:
        if "c_ratios" not in cycles:
            raise KeyError("C+- data (c_ratios) required")
        om = cycles["omega"]
        oms = list(om) if isinstance(om, (list, tuple)) else [om, om]
        crs = list(cycles["c_ratios"])
        calA = np.exp(-2j * np.pi * E / oms[0])
        calB = 2 * np.pi * np.exp(-S_B / hbar)
        for l, (w, cr) in enumerate(zip(oms, crs), start=1):
            calB *= cr * np.exp((-1) ** l * 1j * np.pi * E / w) * hbar ** (-E / w) / gamma(0.5 + E / w)
        out = dict(cycles)
        out.update(calA=complex(calA), calB=complex(calB))
        return out
    if direction == DW_TO_AIRY:
        calA = complex(cycles["calA"])
        calB = complex(cycles["calB"])
        if "omega_branch" in cycles:
            k = cycles["omega_branch"]
        else:
            k = 0
        logA = np.log(calA) + 2j * np.pi * k
        w = complex(-2j * np.pi * E / logA)
        base = 2 * np.pi * np.exp(-S_B / hbar)
        for l in (1, 2):
            base *= np.exp((-1) ** l * 1j * np.pi * E / w) * hbar ** (-E / w) / gamma(0.5 + E / w)
        prod = calB / base
        out = dict(cycles)
        out.update(omega=w, c_ratio_product=complex(prod))
        return out
    raise ValueError(f"unknown direction {direction!r}")


def omega_branch_for(E: complex, omega: complex) -> int:
    """Branch index k with log(calA) + 2 pi i k = -2 pi i E / omega."""
    target = -2j * np.pi * E / omega
    principal = np.log(np.exp(target))
    return int(np.round((target - principal).imag / (2 * np.pi)))


# ---------------------------------------------------------------- helpers

def dw_spectrum(N: int, hbar: float, theta: float, bands: int = 2, orders: int = 8,
                side: str = MEDIAN, F_table=None) -> list[SpectralRecord]:
    """Convenience: F from the contour residue, then solve the DW condition."""
    from .wkb import residue_F_poly
    if F_table is None:
        F_table = residue_F_poly(N, orders)
    cond = condition_dw(F_table, hbar, theta, N, side)
    # search window in rescaled units; stay below the barrier top 2/hbar
    hi = min(N * (bands + 0.9), 2.0 / hbar + 0.5)
    return solve_spectrum(cond, bands, (0.05, hi))

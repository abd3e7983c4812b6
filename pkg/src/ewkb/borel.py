"""Perturbative energy series, Borel-Pade lateral sums and Borel-plane poles.

Borel convention: sum c_k hbar^k = int_0^inf (du/hbar) e^{-u/hbar} sum b_k u^k,
b_k = c_k / k!.  The Pade approximant is built in a scaled variable v = u/sigma
so that the scaled coefficients neither blow up nor vanish.  The Pade
denominator comes from a least-squares solve, which stays usable when the
Borel transform is itself rational and the Toeplitz system is singular.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np
from scipy import integrate

from .series import HbarSeries
from .wkb import residue_F_poly

MIN_COEFFS = 10
MIN_SING_COEFFS = 20


class BorelError(RuntimeError):
    pass


# ---------------------------------------------------------------- perturbative series

@lru_cache(maxsize=16)
def _F_table(N: int, max_order: int):
    tol = 1e-10 if max_order <= 12 else 1e-5
    return tuple(tuple(np.real(np.asarray(c))) for c in residue_F_poly(N, max_order, tol=tol))


def _poly_compose(coeffs_E, E_series, M):
    """sum_d c_d E(h)^d truncated to h^M, with E(h) an array of h-coefficients."""
    out = np.zeros(M + 1)
    pw = np.zeros(M + 1)
    pw[0] = 1.0
    for d, c in enumerate(coeffs_E):
        if d:
            pw = np.convolve(pw, E_series)[: M + 1]
        out += c * pw
    return out


def perturbative_energy_series(N: int, level: int = 0, max_order: int = 12,
                               F_table=None, physical: bool = True) -> HbarSeries:
    """E_n(hbar) from the perturbative condition F(E, hbar) = -(n + 1/2).

    F comes from the contour residue of S_odd; the inversion is done order by
    order with dF_0/dE = -1/N.  physical=True returns E = hbar * E_resc
    (leading term hbar N (n + 1/2)); otherwise the rescaled series E/hbar.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    table = F_table if F_table is not None else _F_table(N, max_order)
    if len(table) < max_order + 1:
        raise BorelError(f"F known to order {len(table) - 1}, need {max_order}")
    M = max_order
    target = -(level + 0.5)
    F = [np.asarray(c, dtype=float) for c in table[: M + 1]]
    e = np.zeros(M + 1)
    e[0] = -target * N  # F_0 = -E/N
    dF0 = -1.0 / N
    for j in range(1, M + 1):
        tot = 0.0
        for k in range(0, j + 1):
            comp = _poly_compose(F[k], e, j)
            tot += comp[j - k]
        # e[j] currently zero, so tot is the residual at order j
        e[j] = -tot / dF0
    return HbarSeries(e, 1 if physical else 0)


# ---------------------------------------------------------------- Pade machinery

def _scale_for(b: np.ndarray) -> float:
    """Geometric estimate of the Borel radius from the tail coefficients."""
    k = np.arange(b.size)
    nz = [(i, abs(x)) for i, x in zip(k, b) if i > 0 and abs(x) > 0]
    if len(nz) < 2:
        return 1.0
    tail = nz[-min(5, len(nz)):]
    est = [a ** (-1.0 / i) for i, a in tail]
    sig = float(np.exp(np.mean(np.log(est))))
    return sig if np.isfinite(sig) and sig > 0 else 1.0


@dataclass
class PadeBorel:
    """Rational Borel transform B(u) = p(u/sigma)/q(u/sigma)."""

    p: np.poly1d
    q: np.poly1d
    sigma: float
    degree: tuple

    def __call__(self, u):
        v = np.asarray(u) / self.sigma
        return self.p(v) / self.q(v)

    def poles(self) -> np.ndarray:
        r = self.q.roots
        return np.asarray(r, complex) * self.sigma

    def residues(self) -> np.ndarray:
        """Res_u B at each simple pole."""
        dq = self.q.deriv()
        r = np.asarray(self.q.roots, complex)
        return self.p(r) / dq(r) * self.sigma


def _pade_coeffs(series: HbarSeries) -> tuple[np.ndarray, bool]:
    c = series.coeffs
    real = bool(np.all(np.abs(c.imag) <= 1e-14 * np.maximum(1.0, np.abs(c.real))))
    b = np.array([x / factorial(k) for k, x in enumerate(c)], dtype=complex)
    return (b.real if real else b), real


def borel_pade(series: HbarSeries, degree=None, sigma=None) -> PadeBorel:
    b, _ = _pade_coeffs(series)
    n = b.size
    if degree is None:
        M = n - 1
        degree = (M // 2, M - M // 2)
    L, Md = degree
    if L + Md > n - 1:
        raise BorelError(f"Pade degree {degree} needs {L + Md + 1} coefficients, have {n}")
    sig = _scale_for(b) if sigma is None else sigma
    bs = b[: L + Md + 1] * sig ** np.arange(L + Md + 1)
    p, q = _pade(bs, L, Md)
    return PadeBorel(np.poly1d(p[::-1]), np.poly1d(q[::-1]), sig, (L, Md))


def _pade(b: np.ndarray, L: int, M: int):
    """Ascending coefficients of p (degree L) and q (degree M, q0 = 1)."""
    if M == 0:
        return b[: L + 1].copy(), np.ones(1)
    # sum_{j=0}^{M} q_j b_{k-j} = 0 for k = L+1 .. L+M
    A = np.zeros((M, M), dtype=b.dtype)
    rhs = np.zeros(M, dtype=b.dtype)
    for r, k in enumerate(range(L + 1, L + M + 1)):
        rhs[r] = -b[k]
        for j in range(1, M + 1):
            if k - j >= 0:
                A[r, j - 1] = b[k - j]
    sol = np.linalg.lstsq(A, rhs, rcond=1e-14)[0]
    q = np.concatenate([[1.0], sol])
    p = np.array([sum(q[j] * b[k - j] for j in range(0, min(k, M) + 1)) for k in range(L + 1)])
    return p, q


def _laplace(B: PadeBorel, hbar: float, angle: float):
    ph = np.exp(1j * angle)
    # cut where e^{-r cos/hbar} |B| is negligible; B grows at most polynomially
    cosv = np.cos(angle)
    if cosv <= 0:
        raise BorelError("ray must lie in the right half plane")
    T = hbar / cosv * (40.0 + max(0, B.degree[0] - B.degree[1]) * 3.0)

    def f(r):
        u = r * ph
        return complex(np.exp(-u / hbar) * B(u) * ph / hbar)

    val, err = integrate.quad(f, 0.0, T, complex_func=True, limit=400,
                              epsabs=1e-15, epsrel=1e-13)
    return complex(val), float(abs(err))


@dataclass
class BorelSum:
    value: complex
    error: float
    pole_on_ray: bool
    degree: tuple


def _genuine(B: PadeBorel, rtol: float = 1e-10):
    """(pole, residue) pairs whose residue is not negligible; the rest are
    Froissart doublets, which e^{-u/hbar} would otherwise promote."""
    zs, rs = B.poles(), B.residues()
    if zs.size == 0:
        return []
    big = float(np.max(np.abs(rs)))
    return [(z, r) for z, r in zip(zs, rs) if abs(r) > rtol * big]


def _poles_on_ray(B: PadeBorel, angle: float, reach: float, tol: float = 1e-3) -> bool:
    for z, _ in _genuine(B):
        if abs(z) < reach and abs(z) > 0 and abs(np.angle(z) - angle) < tol:
            return True
    return False


def borel_pade_sum(series: HbarSeries, hbar: float, ray_angle: float = 0.0,
                   pade_degree=None) -> BorelSum:
    """Laplace integral of the Pade-Borel transform along arg u = ray_angle.

    The error estimate is the spread over neighbouring Pade degrees.  A pole on
    the ray is reported; the value is then the principal value, i.e. the
    average of the two rays at +-1e-2 around it.
    """
    if series.coeffs.size < MIN_COEFFS:
        raise BorelError(f"need at least {MIN_COEFFS} coefficients")
    n = series.coeffs.size
    if pade_degree is None:
        M = n - 1
        pade_degree = (M // 2, M - M // 2)
    B = borel_pade(series, pade_degree)
    reach = 60 * hbar
    on_ray = _poles_on_ray(B, ray_angle, reach)

    def value(Bx):
        if on_ray:
            a, ea = _laplace(Bx, hbar, ray_angle + 1e-2)
            b, eb = _laplace(Bx, hbar, ray_angle - 1e-2)
            return 0.5 * (a + b), ea + eb
        return _laplace(Bx, hbar, ray_angle)

    v, qerr = value(B)
    alts = []
    L, Md = pade_degree
    for d in ((L - 1, Md), (L, Md - 1)):
        if min(d) < 0:
            continue
        try:
            alts.append(value(borel_pade(series, d))[0])
        except (BorelError, np.linalg.LinAlgError):
            pass
    spread = max((abs(a - v) for a in alts), default=0.0)
    scale = float(hbar) ** float(series.nu)
    return BorelSum(complex(v * scale), float((spread + qerr) * abs(scale)), on_ray,
                    tuple(pade_degree))


# ---------------------------------------------------------------- discontinuity

@dataclass
class Discontinuity:
    value: float       # Im S_+  (= (S_+ - S_-)/2i for real-coefficient series)
    error: float
    upper_bound: bool
    poles: list


def _wedge_poles(B: PadeBorel, angle: float, lower: bool = False):
    out = []
    for z, r in _genuine(B):
        a = np.angle(z)
        inside = -angle < a < -1e-9 if lower else -1e-9 <= a < angle
        if z.real > 0 and inside:
            out.append((z, r))
    return out


def _disc_from_poles(B: PadeBorel, hbar: float, angle: float):
    # S_+ - S_- = -2 pi i sum Res over poles swept between the two rays
    tot = 0j
    for z, r in _wedge_poles(B, angle) + _wedge_poles(B, angle, lower=True):
        tot += r * np.exp(-z / hbar) / hbar
    return complex(-np.pi * tot)  # (S_+ - S_-) / 2i


def lateral_discontinuity(series: HbarSeries, hbar: float, pade_degree=None,
                          angle: float = 0.1) -> Discontinuity:
    """(S_+ - S_-)/2i from the residues of the Pade poles between the rays.

    For a rational Borel transform this is exact and free of the cancellation
    a direct difference of two quadratures suffers.  The error estimate is the
    spread over neighbouring degrees.
    """
    if series.coeffs.size < MIN_COEFFS:
        raise BorelError(f"need at least {MIN_COEFFS} coefficients")
    n = series.coeffs.size
    if pade_degree is None:
        M = n - 1
        pade_degree = (M // 2, M - M // 2)
    B = borel_pade(series, pade_degree)
    d = _disc_from_poles(B, hbar, angle)
    L, Md = pade_degree
    alts = []
    for dg in ((L - 1, Md), (L, Md - 1), (L - 1, Md - 1)):
        if min(dg) < 0:
            continue
        alts.append(_disc_from_poles(borel_pade(series, dg), hbar, angle))
    err = max((abs(a - d) for a in alts), default=0.0)
    scale = float(hbar) ** float(series.nu)
    val = float(d.real) * scale
    err = err * abs(scale)
    ub = val == 0 or abs(val) < 10 * err
    return Discontinuity(val, float(err), bool(ub), [complex(z) for z, _ in _wedge_poles(B, angle)])


def lateral_discontinuity_quadrature(series: HbarSeries, hbar: float, pade_degree=None,
                                     angle: float = 0.1) -> float:
    """Same quantity from two ray integrals; a check on the residue route."""
    up = borel_pade_sum(series, hbar, angle, pade_degree).value
    dn = borel_pade_sum(series, hbar, -angle, pade_degree).value
    return float(((up - dn) / 2j).real)


def predicted_bion_imaginary(N: int, hbar: float) -> float:
    """Imaginary bion term of the rescaled energy E/hbar: N (pi/2) k, k = c_N B0/(pi hbar)."""
    B0 = np.exp(-16.0 / (N * hbar))
    k = (64.0 if N == 1 else 32.0) * B0 / (np.pi * hbar)
    return N * k * np.pi / 2


# ---------------------------------------------------------------- singularities

@dataclass
class Singularity:
    location: complex | None
    spread: float
    conclusive: bool
    candidates: list


def borel_singularities(series: HbarSeries, degrees=None, rel_tol: float = 0.05,
                        positive: bool = True) -> Singularity:
    """Nearest stable Pade pole of the Borel transform.

    Poles are collected over several diagonal degrees; the nearest pole on the
    positive real axis (or the nearest overall when positive=False) must agree
    across degrees within rel_tol, otherwise the answer is inconclusive.
    """
    n = series.coeffs.size
    if n < MIN_SING_COEFFS:
        raise BorelError(f"need at least {MIN_SING_COEFFS} coefficients")
    if degrees is None:
        top = n - 1
        degrees = [(m // 2, m - m // 2) for m in range(max(10, top - 6), top + 1)]
    cands = []
    for dg in degrees:
        B = borel_pade(series, dg)
        ps = B.poles()
        if positive:
            ps = [z for z in ps if z.real > 0 and abs(z.imag) < 0.05 * z.real]
        ps = sorted(ps, key=abs)
        # discard Froissart doublets: poles with a negligible residue
        res = dict(zip(B.poles(), B.residues()))
        ps = [z for z in ps if abs(res.get(z, 1.0)) > 1e-10 * max(1.0, abs(z))]
        if ps:
            cands.append(complex(ps[0]))
    if not cands:
        return Singularity(None, float("inf"), False, [])
    med = complex(np.median(np.real(cands)), np.median(np.imag(cands)))
    spread = max(abs(c - med) for c in cands) / max(abs(med), 1e-300)
    return Singularity(med, float(spread), bool(spread < rel_tol), cands)


def large_order_ratios(series: HbarSeries, action: float, last: int = 5) -> np.ndarray:
    """c_{k+1} S / ((k + 1) c_k) over the last few orders; tends to 1."""
    c = series.coeffs.real
    k = np.arange(c.size - 1)
    r = c[1:] * action / ((k + 1) * c[:-1])
    return r[-last:]


def alternating_factorial_series(M: int, nu=0) -> HbarSeries:
    return HbarSeries([(-1) ** k * factorial(k) for k in range(M + 1)], nu)


def exponential_series(M: int) -> HbarSeries:
    return HbarSeries([Fraction(1, factorial(k)) for k in range(M + 1)])

"""Riccati recursion on closed contours, Voros symbols, the residue F and C+-.

S = sum_{n >= -1} S_n hbar^n solves S^2 + S' = Q/hbar^2.  On a circle
x = c + r e^{i phi} every S_n is sampled at uniform phi, and the x-derivative
is taken spectrally: df/dx = (df/dphi) / (i (x - c)).

In Rescaled mode Q = Q0 + hbar Q1 with Q1 = -2E, and every S_n is a
polynomial in E of degree <= n + 1.  Node values then carry an extra
leading axis holding the E-polynomial coefficients, so F(E, hbar) comes out
as exact polynomials in E (up to rounding) rather than at one energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .potential import FIXED, RESCALED, PotentialSpec, turning_points
from .series import HbarSeries

DEFAULT_NODES = 256
MAX_NODES = 4096
NODE_TOL = 1e-10
DEFAULT_ORDERS = 12
PAIR = "pair"
POINT = "point"


class ContourError(RuntimeError):
    pass


@dataclass
class ContourSampling:
    center: complex
    radius: float
    nodes: np.ndarray
    kind: str
    enclosed: tuple = ()
    values: dict = field(default_factory=dict)  # order n -> node values

    @property
    def phi(self):
        return np.angle(self.nodes - self.center)

    @property
    def size(self):
        return self.nodes.size


def circle(center: complex, radius: float, n_nodes: int = DEFAULT_NODES,
           kind: str = POINT, enclosed: tuple = ()) -> ContourSampling:
    phi = 2 * np.pi * np.arange(n_nodes) / n_nodes
    nodes = center + radius * np.exp(1j * phi)
    return ContourSampling(complex(center), float(radius), nodes, kind, tuple(enclosed))


FILTER_RTOL = 1e-14


def _ddx(values: np.ndarray, contour: ContourSampling) -> np.ndarray:
    """Spectral x-derivative along the last axis.

    Fourier modes below FILTER_RTOL of the largest one are rounding noise;
    they are dropped so repeated differentiation does not amplify them.
    """
    n = contour.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    F = np.fft.fft(values, axis=-1)
    amp = np.abs(F)
    F[amp < FILTER_RTOL * amp.max(axis=-1, keepdims=True)] = 0.0
    dphi = np.fft.ifft(1j * k * F, axis=-1)
    return dphi / (1j * (contour.nodes - contour.center))


def _polymul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of E-polynomial valued node arrays (axis 0 = power of E)."""
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1]), complex)
    for i in range(a.shape[0]):
        out[i:i + b.shape[0]] += a[i] * b
    return out


def _padd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] < b.shape[0]:
        a, b = b, a
    out = a.copy()
    out[: b.shape[0]] += b
    return out


def continuous_sqrt(q: np.ndarray, ref: complex | None = None) -> np.ndarray:
    """sqrt(q) with the sign chosen continuously along the node sequence."""
    r = np.sqrt(q.astype(complex))
    if ref is not None and np.real(r[0] * np.conj(ref)) < 0:
        r[0] = -r[0]
    for j in range(1, r.size):
        if np.real(r[j] * np.conj(r[j - 1])) < 0:
            r[j] = -r[j]
    return r


def _sminus1(pot: PotentialSpec, contour: ContourSampling, sign: int) -> np.ndarray:
    x = contour.nodes
    if pot.mode == RESCALED:
        # sqrt(2(1 - cos Nx)) = 2 sin(Nx/2), entire, behaves as +N x at 0
        return sign * 2.0 * np.sin(pot.N * x / 2.0)
    s = continuous_sqrt(pot.Q0(x))
    # closing check: the loop must enclose an even number of branch points
    if np.real(s[0] * np.conj(s[-1])) < 0:
        raise ContourError("sqrt Q is not single valued on this contour")
    return sign * s


def riccati_orders(pot: PotentialSpec, contour: ContourSampling, max_order: int = DEFAULT_ORDERS,
                   sign: int = 1) -> ContourSampling:
    """Fill contour.values[n] for n = -1..max_order on the branch sign*sqrt(Q0).

    In Fixed mode values are plain node arrays.  In Rescaled mode they are
    arrays of shape (deg + 1, nodes) with axis 0 the power of E.
    """
    s_m1 = _sminus1(pot, contour, sign)
    q0 = pot.Q0(contour.nodes)
    if np.max(np.abs(s_m1**2 - q0)) > 1e-12 * max(1.0, np.max(np.abs(q0))):
        raise ContourError("branch of S_-1 inconsistent with Q")
    if np.min(np.abs(s_m1)) < 1e-6:
        raise ContourError("contour passes through a zero of Q")
    rescaled = pot.mode == RESCALED
    nn = contour.size
    S: dict[int, np.ndarray] = {}
    S[-1] = s_m1[None, :] if rescaled else s_m1
    inv2 = 1.0 / (2.0 * s_m1)
    for n in range(0, max_order + 1):
        if rescaled:
            acc = np.zeros((1, nn), complex)
            for j in range(0, n):
                acc = _padd(acc, _polymul(S[j], S[n - 1 - j]))
            acc = _padd(acc, _ddx(S[n - 1], contour))
            if n == 0:
                # right-hand side Q1 = -2E: coefficient of E^1
                q1 = np.zeros((2, nn), complex)
                q1[1] = -2.0
                acc = _padd(-acc, q1)
            else:
                acc = -acc
            S[n] = acc * inv2[None, :]
        else:
            acc = np.zeros(nn, complex)
            for j in range(0, n):
                acc = acc + S[j] * S[n - 1 - j]
            acc = acc + _ddx(S[n - 1], contour)
            S[n] = -acc * inv2
        bound = np.max(np.abs(S[n]))
        if n == 0 and not rescaled and bound > 1e4:
            r_hint = 2 * contour.radius
            raise ContourError(f"S_0 too large on contour ({bound:.2e}); try radius ~{r_hint:.3g}")
    contour.values = S
    return contour


def contour_integral(values: np.ndarray, contour: ContourSampling) -> complex | np.ndarray:
    """Trapezoid rule for the closed contour, dx = i (x - c) dphi."""
    w = 1j * (contour.nodes - contour.center) * (2 * np.pi / contour.size)
    return np.sum(values * w, axis=-1)


def odd_part(pot: PotentialSpec, contour_factory, max_order: int):
    """Half difference of the two branches, order by order."""
    plus = riccati_orders(pot, contour_factory(), max_order, sign=1).values
    minus = riccati_orders(pot, contour_factory(), max_order, sign=-1).values
    out = {}
    for n in plus:
        a, b = plus[n], minus[n]
        if a.ndim == 2:
            out[n] = 0.5 * _padd(a, -b)
        else:
            out[n] = 0.5 * (a - b)
    return out


# ---------------------------------------------------------------- Voros symbols

@dataclass
class VorosSymbol:
    cycle: str
    wells: tuple
    log_value: HbarSeries
    side: str = "none"
    nodes: int = 0


def cycle_contour(pot: PotentialSpec, cycle: str, well: int = 0, n_nodes: int = DEFAULT_NODES):
    """Circle around the pair of turning points bounding well ``well`` (A) or
    the barrier to its right (B)."""
    N = pot.N
    E = pot.E
    b = np.arccos(complex(1.0 - E))  # turning points at (+-b + 2 pi k)/N
    a = b / N
    period = 2 * np.pi / N
    if cycle == "A":
        center = well * period
        inner, outer = abs(a), abs(period - a)
        enclosed = (center - a, center + a)
    elif cycle == "B":
        center = well * period + period / 2
        inner, outer = abs(period / 2 - a), abs(period / 2 + a)
        enclosed = (center - (period / 2 - a), center + (period / 2 - a))
    else:
        raise ValueError(f"unknown cycle {cycle!r}")
    if not outer > inner:
        raise ContourError("turning points too close to separate cycles")
    r = float(np.sqrt(inner * outer))
    return circle(center, r, n_nodes, PAIR, enclosed)


def _voros_at(pot: PotentialSpec, cycle: str, well: int, max_order: int, n_nodes: int):
    S = odd_part(pot, lambda: cycle_contour(pot, cycle, well, n_nodes), max_order)
    c = cycle_contour(pot, cycle, well, n_nodes)
    return np.array([contour_integral(S[n], c) for n in range(-1, max_order + 1)])


def voros_symbol(pot: PotentialSpec, cycle: str = "A", max_order: int = 9, well: int = 0,
                 side: str = "none", tol: float = NODE_TOL) -> VorosSymbol:
    """log A or log B = oint S_odd as a series starting at hbar^-1.

    Orientation: the leading coefficient of log A is +i times a positive
    period; that of log B is real and negative.
    """
    if pot.mode != FIXED:
        raise ValueError("Voros symbols of the Airy cycles use Fixed mode")
    for tp in turning_points(pot):
        if tp.multiplicity != 1:
            raise ValueError("cycle endpoints must be simple turning points")
    n = DEFAULT_NODES
    vals = _voros_at(pot, cycle, well, max_order, n)
    while True:
        n2 = 2 * n
        vals2 = _voros_at(pot, cycle, well, max_order, n2)
        scale = np.maximum(1.0, np.abs(vals2))
        if np.all(np.abs(vals2 - vals) < tol * scale):
            break
        if n2 >= MAX_NODES:
            raise ContourError("Voros symbol not converged at the node cap")
        n, vals = n2, vals2
    lead = vals2[0]
    flip = (cycle == "A" and lead.imag < 0) or (cycle == "B" and lead.real > 0)
    if flip:
        vals2 = -vals2
    # only odd hbar powers survive; zero out the rest explicitly after checking
    clean = vals2.copy()
    for k in range(clean.size):
        if k % 2 == 1:
            clean[k] = 0.0
    return VorosSymbol(cycle, (well,), HbarSeries(clean, -1), side, n2)


def voros_raw(pot: PotentialSpec, cycle: str, max_order: int, n_nodes: int = 512, well: int = 0):
    """Unfiltered oint S_n^odd for n = -1..max_order (for parity checks)."""
    return _voros_at(pot, cycle, well, max_order, n_nodes)


def period_quadrature(pot: PotentialSpec, cycle: str) -> float:
    """2 * int sqrt|Q| between the cycle's turning points, by real quadrature."""
    from scipy import integrate
    N = pot.N
    a = float(np.arccos(1.0 - pot.E.real)) / N
    period = 2 * np.pi / N
    f = lambda x: np.sqrt(abs(pot.Q0(x)))
    if cycle == "A":
        val, _ = integrate.quad(f, -a, a, epsabs=1e-14, epsrel=1e-13, limit=200)
    else:
        val, _ = integrate.quad(f, a, period - a, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 2.0 * val


# ---------------------------------------------------------------- DW residue

def residue_F_poly(N: int, max_order: int, n_nodes: int = DEFAULT_NODES,
                   tol: float = NODE_TOL) -> list[np.ndarray]:
    """F_n(E) coefficient arrays: F(E, hbar) = sum_n hbar^n sum_d F[n][d] E^d.

    Residue at x = 0 of S_odd on the branch S_-1 = +2 sin(Nx/2).
    """
    pot = PotentialSpec(N, 0.0, RESCALED)
    # close to half a period balances the pole at 0 against those at +-2pi/N
    radius = 0.95 * np.pi / N

    def run(nodes):
        fac = lambda: circle(0.0, radius, nodes, POINT, (0.0,))
        S = odd_part(pot, fac, max_order)
        c = fac()
        return [contour_integral(S[n], c) / (2j * np.pi) for n in range(0, max_order + 1)]

    n = n_nodes
    cur = run(n)
    while True:
        n2 = 2 * n
        nxt = run(n2)
        ok = all(np.all(np.abs(a - b[: a.size]) <= tol * np.maximum(1.0, np.abs(b[: a.size])))
                 for a, b in zip(cur, nxt))
        if ok or n2 >= MAX_NODES:
            if not ok:
                raise ContourError("residue F not converged at the node cap")
            break
        n, cur = n2, nxt
    out = []
    for k, arr in enumerate(nxt):
        arr = np.real_if_close(arr, tol=1e6)
        arr = np.asarray(arr)
        out.append(arr[: k + 2].copy())
    return out


def residue_F(pot: PotentialSpec, max_order: int = 8, E: complex | None = None) -> HbarSeries:
    """F(E, hbar) = Res_{x=0} S_odd as a series in hbar at fixed E."""
    if pot.mode != RESCALED:
        raise ValueError("residue_F needs Rescaled mode")
    E = pot.E if E is None else E
    polys = residue_F_poly(pot.N, max_order)
    coeffs = [np.polyval(np.asarray(c)[::-1], E) for c in polys]
    return HbarSeries(coeffs, 0)


def eval_F(polys, E, hbar):
    """F(E, hbar) from the polynomial table, vectorized over E."""
    E = np.asarray(E, dtype=complex)
    tot = np.zeros_like(E)
    for k in range(len(polys) - 1, -1, -1):
        tot = tot * hbar + np.polyval(np.asarray(polys[k])[::-1], E)
    return tot


def eval_dF_dE(polys, E, hbar):
    E = np.asarray(E, dtype=complex)
    tot = np.zeros_like(E)
    for k in range(len(polys) - 1, -1, -1):
        c = np.asarray(polys[k])
        d = np.arange(1, c.size) * c[1:]
        tot = tot * hbar + (np.polyval(d[::-1], E) if d.size else 0.0)
    return tot


# ---------------------------------------------------------------- local map, C+-

def _kappa(N, E, branch):
    return branch * E / N


def local_map_coefficients(N: int, branch: int | None = None, max_x_order: int = 5):
    """Taylor coefficients of y0(x) and y1(x) / E about the double point x = 0.

    y0 solves (y0/2) y0' = +-sqrt(Q0) with y0(0) = 0, i.e.
    y0^2 = +-(32/N) sin^2(Nx/4).  y1 solves the first-order matching
        (y0^2/2) y0' y1' + y0'^2 y0 y1 / 2 - y0'^2 kappa = Q1 = -2E
    with kappa = +-E/N fixed by regularity at x = 0.  The -sqrt(Q0)
    branch picks up a factor i in both maps.
    """
    if branch not in (1, -1):
        raise ValueError("branch flag (+1 for +sqrt(Q0), -1 for -sqrt(Q0)) is required")
    import sympy as sp
    x, E = sp.symbols("x E")
    n = sp.Integer(N)
    order = max_x_order + 2
    y0p = sp.sqrt(32 / n) * sp.sin(n * x / 4)
    cs = sp.symbols(f"c0:{order + 1}")
    y1p = sum(cs[k] * x**k for k in range(1, order + 1, 2))
    kap = E / n
    lhs = (y0p**2 / 2) * sp.diff(y0p, x) * sp.diff(y1p, x) \
        + sp.diff(y0p, x) ** 2 * y0p * y1p / 2 - sp.diff(y0p, x) ** 2 * kap
    expr = sp.expand(sp.series(lhs + 2 * E, x, 0, order + 3).removeO())
    sol = {}
    for k in range(2, order + 3, 2):
        eqk = sp.expand(expr.coeff(x, k).subs(sol))
        free = [c for c in cs if eqk.has(c) and c not in sol]
        if free:
            sol[free[0]] = sp.solve(eqk, free[0])[0]
    y1p = sp.expand(y1p.subs(sol))
    y0s = sp.expand(sp.series(y0p, x, 0, max_x_order + 1).removeO())
    ph = sp.Integer(1) if branch == 1 else sp.I
    y0c = {k: sp.simplify(ph * y0s.coeff(x, k)) for k in range(1, max_x_order + 1, 2)}
    y1c = {k: sp.simplify(ph * y1p.coeff(x, k).coeff(E, 1)) for k in range(1, max_x_order + 1, 2)}
    return y0c, y1c


def normalization_constants(N: int, E: complex, branch: int = -1) -> tuple[complex, complex]:
    """Closed forms of C+,0 and C-,0.

    branch -1 (-sqrt(Q0)):  C+-,0 = (32/N)^(-+E/(2N))
    branch +1 (+sqrt(Q0)):  C+-,0 = exp(+-i pi E/(2N)) (32/N)^(+-E/(2N))
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    base = 32.0 / N
    ex = E / (2 * N)
    if branch == -1:
        return complex(base ** (-ex)), complex(base ** ex)
    return (complex(np.exp(1j * np.pi * ex) * base ** ex),
            complex(np.exp(-1j * np.pi * ex) * base ** (-ex)))


def normalization_constants_limit(N: int, E: complex, branch: int = -1, x0: float = 1e-4,
                                  height: float = 60.0) -> tuple[complex, complex]:
    """C+-,0 from the x -> 0 limit of the matching relation, by quadrature.

    C+-,0 = lim exp[s +- int_inf^x S_odd,0] / y0(x)^(-+kappa), s = branch.
    S_odd,0 = Q1 / (2 * 2 sin(Nx/2)) is the odd part, independent of the
    branch.  The point at infinity is +i inf on the +sqrt(Q0) branch and
    -i inf on the other; the tail beyond ``height`` decays like e^{-N y / 2}.
    """
    from scipy import integrate
    sig = float(branch)
    s_odd0 = lambda z: (-2.0 * E) / (4.0 * np.sin(N * z / 2.0))
    # int_{x0 + i sig H}^{x0} f dz = -i sig int_0^H f(x0 + i sig t) dt
    g = lambda t: -1j * sig * s_odd0(x0 + 1j * sig * t)
    lim = dict(epsabs=1e-15, epsrel=1e-12, limit=400, points=[1.0])
    I = (integrate.quad(lambda t: g(t).real, 0.0, height, **lim)[0]
         + 1j * integrate.quad(lambda t: g(t).imag, 0.0, height, **lim)[0])
    kap = _kappa(N, E, branch)
    ph = 1.0 if branch == 1 else 1j
    y0 = ph * np.sqrt(32.0 / N) * np.sin(N * x0 / 4.0)
    out = []
    for pm in (1, -1):
        out.append(complex(np.exp(sig * pm * I) / y0 ** (-pm * kap)))
    return out[0], out[1]

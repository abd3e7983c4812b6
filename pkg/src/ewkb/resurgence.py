"""Exact trans-series algebra in the cycle symbols s = sqrt(A), t = sqrt(B).

Everything lives in rational function fields over QQ built with
sympy.polys.fields, so equality is decided on canonical (cancelled) forms.
theta stays symbolic through w = e^{i theta / N}; z is a primitive N-th root
of unity and p-dependence enters as w z^p.  Whenever a root of unity has to
be specialized, we reduce modulo its cyclotomic polynomial.

Side convention follows quantize: ``upper`` is built from A^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import comb
from fractions import Fraction

import sympy as sp
from sympy import QQ
from sympy.polys.fields import field
from sympy.polys.orderings import grlex
from sympy.polys.rings import ring

UPPER, LOWER = "upper", "lower"


def _sign(side):
    if side == UPPER:
        return 1
    if side == LOWER:
        return -1
    raise ValueError(f"side must be upper or lower, got {side!r}")


@lru_cache(maxsize=None)
def cycle_field():
    """QQ(s, t, w, z) with graded lex order."""
    return field("s,t,w,z", QQ, grlex)


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class CycleSymbolExpr:
    """A canonical element of QQ(s, t, w, z)."""

    value: object

    @classmethod
    def of(cls, v):
        K = cycle_field()[0]
        return cls(K(v))

    def __add__(self, o):
        return CycleSymbolExpr(self.value + _val(o))

    __radd__ = __add__

    def __sub__(self, o):
        return CycleSymbolExpr(self.value - _val(o))

    def __rsub__(self, o):
        return CycleSymbolExpr(_val(o) - self.value)

    def __mul__(self, o):
        return CycleSymbolExpr(self.value * _val(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return CycleSymbolExpr(self.value / _val(o))

    def __rtruediv__(self, o):
        return CycleSymbolExpr(_val(o) / self.value)

    def __pow__(self, k: int):
        return CycleSymbolExpr(self.value**k)

    def __neg__(self):
        return CycleSymbolExpr(-self.value)

    def __eq__(self, o):
        return isinstance(o, CycleSymbolExpr) and self.value == o.value or (
            not isinstance(o, CycleSymbolExpr) and self.value == _val(o))

    def __hash__(self):
        return hash(self.text())

    @property
    def numerator(self):
        return self.value.numer

    @property
    def denominator(self):
        return self.value.denom

    def text(self) -> str:
        """Deterministic canonical text."""
        return str(self.value)

    def as_expr(self):
        return self.value.as_expr()

    def __repr__(self):
        return f"CycleSymbolExpr({self.text()})"


def _val(o):
    if isinstance(o, CycleSymbolExpr):
        return o.value
    K = cycle_field()[0]
    return K(o)


def symbols():
    """(s, t, w, z) as CycleSymbolExpr."""
    _, *g = cycle_field()
    return tuple(CycleSymbolExpr(x) for x in g)


def _hom(f, images):
    """Apply the substitution gen -> polynomial image to a field element."""
    K = f.field
    R = K.ring
    num, den = f.numer, f.denom
    for gen, img in images.items():
        num = num.compose(R.gens[gen], img)
        den = den.compose(R.gens[gen], img)
    return K(num) / K(den)


def stokes_automorphism(expr):
    """s -> s (1 + t^2), t -> t, phases fixed; extended to the whole field."""
    v = _val(expr)
    R = v.field.ring
    s, t = R.gens[0], R.gens[1]
    out = _hom(v, {0: s * (1 + t * t)})
    return CycleSymbolExpr(out) if isinstance(expr, CycleSymbolExpr) else out


def xi(side):
    """xi^{+-} = (1 + A^{+-1} + B) / (2 sqrt(A^{+-1} B))."""
    s, t, _, _ = symbols()
    a = s ** (2 * _sign(side))
    return (1 + a + t * t) / (2 * s ** _sign(side) * t)


def bloch_cos(p: int, N: int):
    """cos((theta + 2 pi p)/N) = (w z^p + 1/(w z^p)) / 2."""
    _, _, w, z = symbols()
    u = w * z**p
    return (u + 1 / u) / 2


def dp_normalized(p: int, N: int, side):
    """D_p^{+-} divided by sqrt(A^{-+1} B): 2 xi^{+-} - 2 cos((theta + 2 pi p)/N)."""
    return 2 * xi(side) - 2 * bloch_cos(p, N)


def d1_normalized(side, c=None):
    """N = 1 condition with cos(theta) either symbolic (w) or a given value."""
    if c is None:
        return dp_normalized(0, 1, side)
    return 2 * xi(side) - 2 * c


# ---------------------------------------------------------------- quadratic extension

@dataclass(frozen=True)
class QuadExt:
    """x + y r with r^2 = radicand; x, y, radicand are CycleSymbolExpr."""

    x: CycleSymbolExpr
    y: CycleSymbolExpr
    radicand: CycleSymbolExpr

    def _chk(self, o):
        if o.radicand != self.radicand:
            raise ValueError("different extensions")

    def __add__(self, o):
        self._chk(o)
        return QuadExt(self.x + o.x, self.y + o.y, self.radicand)

    def __sub__(self, o):
        self._chk(o)
        return QuadExt(self.x - o.x, self.y - o.y, self.radicand)

    def __mul__(self, o):
        self._chk(o)
        return QuadExt(self.x * o.x + self.y * o.y * self.radicand,
                       self.x * o.y + self.y * o.x, self.radicand)

    def __pow__(self, k: int):
        out = QuadExt(CycleSymbolExpr.of(1), CycleSymbolExpr.of(0), self.radicand)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, o):
        return (isinstance(o, QuadExt) and self.radicand == o.radicand
                and self.x == o.x and self.y == o.y)

    def __hash__(self):
        return hash((self.x.text(), self.y.text(), self.radicand.text()))

    def stokes(self):
        """Image under the automorphism, with r mapped to the root of the image radicand."""
        return QuadExt(stokes_automorphism(self.x), stokes_automorphism(self.y),
                       stokes_automorphism(self.radicand))


def alpha_beta_ext(side):
    x = xi(side)
    rad = x * x - 1
    one, zero = CycleSymbolExpr.of(1), CycleSymbolExpr.of(0)
    return QuadExt(x, one, rad), QuadExt(x, -one, rad)


# ---------------------------------------------------------------- reports

@dataclass
class CheckReport:
    name: str
    holds: bool
    passed: int
    total: int
    witness: str = ""
    details: dict = dc_field(default_factory=dict)

    def summary(self, unit="sectors") -> str:
        tag = "PASS" if self.holds else "FAIL"
        return f"{tag} {self.passed}/{self.total} {unit}"


def ddp_check(N: int, cap: int = 8) -> CheckReport:
    """Stokes automorphism maps every upper p-factor onto the lower one."""
    if N < 1 or N > cap:
        raise ValueError(f"N must be in [1, {cap}]")
    ok = 0
    witness = ""
    xp, xm = xi(UPPER), xi(LOWER)
    xi_ok = stokes_automorphism(xp) == xm
    ap, bp = alpha_beta_ext(UPPER)
    am, bm = alpha_beta_ext(LOWER)
    ab_ok = ap.stokes() == am and bp.stokes() == bm
    ring_ok = (ap * bp).x == CycleSymbolExpr.of(1) and (ap * bp).y == CycleSymbolExpr.of(0) \
        and (ap + bp).x == 2 * xp
    for p in range(N):
        up = dp_normalized(p, N, UPPER)
        img = stokes_automorphism(up)
        if img == dp_normalized(p, N, LOWER):
            ok += 1
            witness = img.text()
        else:
            witness = f"p={p}: {img.text()} != {dp_normalized(p, N, LOWER).text()}"
            break
    holds = ok == N and xi_ok and ab_ok and ring_ok
    return CheckReport("ddp", holds, ok, N, witness,
                       {"xi": xi_ok, "alpha_beta": ab_ok, "alpha_beta_ring": ring_ok})


# ---------------------------------------------------------------- factorization

@lru_cache(maxsize=None)
def _zring():
    # z leads so that division by a cyclotomic polynomial is reduction in z
    return ring("z,X,w", QQ)


def _cyclotomic(n):
    R, z, X, w = _zring()
    coeffs = sp.Poly(sp.cyclotomic_poly(n, sp.Symbol("z")), sp.Symbol("z")).all_coeffs()
    out = R(0)
    for k, c in enumerate(reversed(coeffs)):
        out += int(c) * z**k
    return out


def binomial_form(N: int):
    """P_N(X) with X = 2 xi: 2 sum_l C(N, N-2l) xi^(N-2l) (xi^2 - 1)^l."""
    R, z, X, w = _zring()
    x = X * QQ(1, 2)
    return 2 * sum(comb(N, N - 2 * l) * x ** (N - 2 * l) * (x * x - 1) ** l
                   for l in range(N // 2 + 1))


def factorization_check(N: int, cap: int = 8) -> CheckReport:
    """alpha^N + beta^N - 2 cos(theta) equals prod_p D_p exactly.

    With X = 2 xi and u_p = w z^p, each D_p times u_p is X u_p - u_p^2 - 1.
    The product is reduced modulo Phi_N(z) and compared with
    (-1)^(N-1) (w^N P_N(X) - w^(2N) - 1); P_N is checked separately against
    (xi + r)^N + (xi - r)^N in the radical extension.
    """
    if N < 1 or N > cap:
        raise ValueError(f"N must be in [1, {cap}]")
    R, z, X, w = _zring()
    prod = R(1)
    for p in range(N):
        u = w * z**p
        prod *= X * u - u * u - 1
    red = prod.rem([_cyclotomic(N)])
    P = binomial_form(N)
    target = (-1) ** (N - 1) * (w**N * P - w ** (2 * N) - 1)
    prod_ok = red == target
    # binomial middle form against the radical expansion
    a, b = alpha_beta_ext(UPPER)
    s_ = a**N + b**N
    rad_ok = s_.y == CycleSymbolExpr.of(0)
    xv = xi(UPPER)
    bin_val = CycleSymbolExpr.of(0)
    for l in range(N // 2 + 1):
        bin_val = bin_val + 2 * comb(N, N - 2 * l) * xv ** (N - 2 * l) * (xv * xv - 1) ** l
    bin_ok = rad_ok and s_.x == bin_val
    holds = prod_ok and bin_ok
    return CheckReport("factorization", holds, int(prod_ok) + int(bin_ok), 2,
                       str(P.as_expr()), {"product": prod_ok, "binomial": bin_ok})


def _zeta_factor(N: int, k: int):
    """D at angle k pi / N in QQ[X, zeta_{2N}]: X - zeta^k - zeta^(2N-k)."""
    R, z, X, w = _zring()
    k %= 2 * N
    return X - z**k - z ** ((2 * N - k) % (2 * N))


def _theta_factors(N: int, theta_over_pi: int):
    R, *_ = _zring()
    phi = _cyclotomic(2 * N)
    return [_zeta_factor(N, 2 * p + theta_over_pi).rem([phi]) for p in range(N)]


def perfect_square_check(N: int) -> CheckReport:
    """theta = pi, even N: D_p equals D_{N-1-p}, so the product is a square.

    Also checks P_N(X) + 2 = P_{N/2}(X)^2, the full-condition form of the
    same statement.
    """
    if N % 2:
        raise ValueError("perfect square needs even N")
    fs = _theta_factors(N, 1)
    pairs = sum(fs[p] == fs[N - 1 - p] for p in range(N // 2))
    phi = _cyclotomic(2 * N)
    half = 1
    for p in range(N // 2):
        half *= fs[p]
    full = 1
    for f in fs:
        full *= f
    sq_ok = (full - half * half).rem([phi]) == 0
    P = binomial_form(N)
    Ph = binomial_form(N // 2)
    id_ok = P + 2 == Ph * Ph
    holds = pairs == N // 2 and sq_ok and id_ok
    return CheckReport("perfect_square", holds, pairs, N // 2, str(half.as_expr()),
                       {"square": sq_ok, "chebyshev": id_ok})


def singlet_labels_exact(N: int, theta_over_pi: int) -> list[int]:
    """Bloch indices whose factor is not repeated, for theta in {0, pi}."""
    if theta_over_pi not in (0, 1):
        raise ValueError("theta must be 0 or pi")
    fs = _theta_factors(N, theta_over_pi)
    return [p for p in range(N) if sum(fs[p] == f for f in fs) == 1]


def psum_rule(N: int, Q: int) -> int:
    """sum_p z^(pQ) modulo Phi_N(z); N if N | Q, otherwise 0."""
    R, z, X, w = _zring()
    acc = sum((z ** ((p * Q) % N) for p in range(N)), R(0)).rem([_cyclotomic(N)])
    if acc == 0:
        return 0
    c = acc.as_expr()
    if c.free_symbols:
        raise ArithmeticError(f"non-constant p-sum {c}")
    return int(c)


# ---------------------------------------------------------------- Gutzwiller

def gutzwiller_expansion(side, n_max: int, m_max: int):
    """Truncated G_pt, G_np and K as sympy expressions in E.

    A(E), B(E) are undetermined functions; s and t stand for sqrt(A), sqrt(B)
    only through A**(1/2), B**(1/2).  The Maslov sign (-1)^n rides with each orbit.
    """
    sg = _sign(side)
    E, th = sp.symbols("E theta", real=True)
    A = sp.Function("A")(E)
    B = sp.Function("B")(E)
    ph = sp.exp(sp.I * th) + sp.exp(-sp.I * th)
    g_pt = -sp.diff(A ** (-sg), E) * sum((-1) ** n * A ** (-sg * n) for n in range(n_max + 1))
    K = B * sum((-1) ** n * A ** (sg * n) for n in range(n_max + 1)) \
        - sp.sqrt(B) * sum((-1) ** n * A ** (sg * (n + sp.Rational(1, 2))) for n in range(n_max + 1)) * ph
    g_np = -sp.diff(K, E) * sum((-1) ** m * K**m for m in range(m_max + 1))
    return {"E": E, "theta": th, "A": A, "B": B, "G_pt": g_pt, "G_np": g_np, "K": K}


def gutzwiller_bracket(side):
    """1 + B/(1 + A^{+-1}) - sqrt(B)/(sqrt(A) + 1/sqrt(A)) (e^{i theta} + e^{-i theta})."""
    sg = _sign(side)
    E, th = sp.symbols("E theta", real=True)
    A = sp.Function("A")(E)
    B = sp.Function("B")(E)
    ph = sp.exp(sp.I * th) + sp.exp(-sp.I * th)
    return 1 + B / (1 + A**sg) - sp.sqrt(B) / (sp.sqrt(A) + 1 / sp.sqrt(A)) * ph


# ---------------------------------------------------------------- sectors

@dataclass(frozen=True)
class SectorIndex:
    p: int
    Q: int
    K: int

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if abs(self.Q) + self.K == 0:
            raise ValueError("|Q| + K must be positive")


def _hyp2f1_terminating(K: int, Q: int, x):
    """2F1(1-K, -K; |Q|+1; x) as a finite sum (the -K parameter terminates it)."""
    out = 0
    term = Fraction(1)
    a, b, c = 1 - K, -K, abs(Q) + 1
    for j in range(K + 1):
        out = out + term * x**j
        term = term * (a + j) * (b + j) / ((c + j) * (j + 1))
        if term == 0:
            break
    return out


def sector_coefficient(p: int, Q: int, K: int, N: int = 1, side=UPPER) -> CycleSymbolExpr:
    """Closed-form coefficient of the (p, Q, K) sector including its phase.

    (1/(|Q|+K)) C(|Q|+K, K) (B/calK^2)^{|Q|/2+K} 2F1(1-K,-K;|Q|+1;-A^{+-1}) (-A^{-+1})^K
    times w^Q z^{pQ}, with calK = s + 1/s.
    """
    SectorIndex(p, Q, K)
    sg = _sign(side)
    s, t, w, z = symbols()
    n = abs(Q) + K
    kk = s + 1 / s
    amp = (t / kk) ** abs(Q) * (t * t / (kk * kk)) ** K
    hyp = _hyp2f1_terminating(K, Q, -(s ** (2 * sg)))
    core = Fraction(comb(n, K), n) * amp * hyp * (-(s ** (-2 * sg))) ** K
    return core * w**Q * z ** ((p * Q) % N if N > 1 else 0)


def _lowest_t_degree(f) -> float:
    """Order of vanishing in t of a field element whose denominator is t-regular."""
    if f == 0:
        return float("inf")
    num, den = f.numer, f.denom
    if min(m[1] for m in den.monoms()) != 0:
        raise ArithmeticError("denominator vanishes at t = 0")
    return min(m[1] for m in num.monoms())


def _t_part(num, d: int):
    """Terms of t-degree d from a polynomial."""
    R = num.ring
    out = R(0)
    for m, c in num.terms():
        if m[1] == d:
            out += R({m: c})
    return out


def brute_force_sectors(order: int, side=UPPER) -> dict:
    """(Q, K) -> coefficient from expanding -log of the normalized bracket.

    sum_n (a + b)^n / n with a = -A^{-+1} B / D_A and b = sqrt(A^{-+1} B)(w + 1/w) / D_A,
    D_A = 1 + A^{-+1}; w plays e^{i theta}.  Terms with t-degree <= order are exact.
    """
    sg = _sign(side)
    s, t, w, z = symbols()
    a_ = s ** (-2 * sg)
    D = 1 + a_
    a = -a_ * t * t / D
    b = s ** (-sg) * t * (w + 1 / w) / D
    x = a + b
    tot = CycleSymbolExpr.of(0)
    xn = CycleSymbolExpr.of(1)
    for n in range(1, order + 1):
        xn = xn * x
        tot = tot + xn * Fraction(1, n)
    num, den = tot.numerator, tot.denominator
    # den = w^k * (poly in s); split numerator monomials by (t, w) degree
    wd = {m[2] for m in den.monoms()}
    td = {m[1] for m in den.monoms()}
    if len(wd) != 1 or td != {0}:
        raise ArithmeticError("unexpected denominator structure")
    (w0,) = wd
    K_ = tot.value.field
    R = num.ring
    out = {}
    for m, c in num.terms():
        d, q = m[1], m[2] - w0
        if d > order:
            continue
        if (d - abs(q)) % 2 or d < abs(q):
            raise ArithmeticError("t-degree and charge mismatch")
        kk = (d - abs(q)) // 2
        mono = R({(m[0], m[1], 0, m[3]): c})
        out.setdefault((q, kk), R(0))
        out[(q, kk)] += mono
    den_nw = R({(m[0], m[1], 0, m[3]): c for m, c in den.terms()})
    return {k: CycleSymbolExpr(K_(v) / K_(den_nw)) for k, v in out.items()}


def sector_expansion_check(order: int = 6, side=UPPER) -> CheckReport:
    bf = brute_force_sectors(order, side)
    keys = sorted(k for k in bf if abs(k[0]) + 2 * k[1] <= order and abs(k[0]) + k[1] > 0)
    ok = 0
    witness = ""
    _, _, w, _ = symbols()
    for Q, K in keys:
        cf = sector_coefficient(0, Q, K, 1, side) / w**Q
        if cf == bf[(Q, K)]:
            ok += 1
        else:
            witness = f"(Q={Q}, K={K}): closed {cf.text()} vs brute {bf[(Q, K)].text()}"
    # every sector allowed by the order must appear
    expected = [(Q, K) for Q in range(-order, order + 1) for K in range(order + 1)
                if abs(Q) + 2 * K <= order and abs(Q) + K > 0]
    complete = sorted(expected) == keys
    return CheckReport("sectors", ok == len(keys) and complete, ok, len(keys), witness,
                       {"complete": complete})


# ---------------------------------------------------------------- truncated t-series

@lru_cache(maxsize=None)
def _sw_field():
    return field("s,w", QQ, grlex)


class TSeries:
    """Truncated power series in t with coefficients in QQ(s, w)."""

    def __init__(self, coeffs, order: int):
        F = _sw_field()[0]
        c = [F(x) for x in coeffs][: order + 1]
        c += [F(0)] * (order + 1 - len(c))
        self.c = c
        self.order = order

    @classmethod
    def from_poly(cls, poly, order):
        """Polynomial in (s, t, w) from a ring with those generator names."""
        F, s, w = _sw_field()
        names = [str(g) for g in poly.ring.gens]
        cs = [F(0)] * (order + 1)
        for m, c in poly.terms():
            e = dict(zip(names, m))
            d = e.get("t", 0)
            if d <= order:
                cs[d] += F(c) * s ** e.get("s", 0) * w ** e.get("w", 0)
        return cls(cs, order)

    def __add__(self, o):
        return TSeries([a + b for a, b in zip(self.c, o.c)], self.order)

    def __sub__(self, o):
        return TSeries([a - b for a, b in zip(self.c, o.c)], self.order)

    def __neg__(self):
        return TSeries([-a for a in self.c], self.order)

    def __mul__(self, o):
        if not isinstance(o, TSeries):
            return TSeries([a * o for a in self.c], self.order)
        n = self.order
        out = [self.c[0] * 0] * (n + 1)
        for i, a in enumerate(self.c):
            if a == 0:
                continue
            for j in range(n + 1 - i):
                out[i + j] += a * o.c[j]
        return TSeries(out, n)

    def inverse(self):
        if self.c[0] == 0:
            raise ZeroDivisionError("series has no constant term")
        n = self.order
        inv0 = 1 / self.c[0]
        out = [inv0]
        for k in range(1, n + 1):
            acc = sum((self.c[j] * out[k - j] for j in range(1, k + 1)), self.c[0] * 0)
            out.append(-acc * inv0)
        return TSeries(out, n)

    def deriv(self):
        return TSeries([k * self.c[k] for k in range(1, self.order + 1)], self.order - 1)

    def truncate(self, n):
        return TSeries(self.c[: n + 1], n)

    def __pow__(self, k):
        out = TSeries([1], self.order)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, o):
        m = min(self.order, o.order)
        return all(a == b for a, b in zip(self.c[: m + 1], o.c[: m + 1]))

    def is_zero(self):
        return all(a == 0 for a in self.c)


def _beta_series(side, order):
    """Small root beta^{+-} of z^2 - 2 xi z + 1 as a t-series; also rho~ with beta = t rho~ (1 + beta^2)."""
    F, s, w = _sw_field()
    sg = _sign(side)
    a = s ** (2 * sg)
    # 1/(2 xi) = s^{sg} t / (1 + a + t^2) = t * rho~
    den = TSeries([1 + a, 0, 1], order)
    rho_t = den.inverse() * (s**sg)
    tser = TSeries([0, 1], order)
    beta = TSeries([0], order)
    for _ in range(order + 1):
        beta = tser * rho_t * (TSeries([1], order) + beta * beta)
    return beta, rho_t


def grand_expansion_check(N: int, order: int = 8, side=UPPER) -> CheckReport:
    """Log-derivative in t of the trace identity, as exact t-series up to ``order``.

    d/dt [ -N log(sqrt(A^{-+1}B) alpha) + sum_p sum_{Q != 0} beta^|Q| u_p^Q / |Q| ]
      = -d/dt log prod_p D_p,
    the p-sum being taken with sum_p z^{pQ} = N [N | Q], itself verified exactly.
    """
    if order > 8:
        raise ValueError("order must be <= 8")
    sg = _sign(side)
    F, s, w = _sw_field()
    M = order + 1  # one spare order because of the derivative
    beta, rho_t = _beta_series(side, M)
    one = TSeries([1], M)
    # sqrt(A^{-+1}B) alpha = s^{-sg} t / beta = s^{-sg} / (rho~ (1 + beta^2))
    g = rho_t * (one + beta * beta)
    lhs = (g.deriv() * g.truncate(M - 1).inverse()) * N  # -N d log(1/g)
    rules = {Q: psum_rule(N, Q) for Q in range(1, M + 1)}
    phases = set()
    for Q in range(1, M + 1):
        k = rules[Q]
        if k == 0:
            continue
        bq = (beta**Q).deriv() * Fraction(k, Q)
        lhs = lhs + bq * (w**Q + w ** (-Q))
        phases.add(Q)
    # right side: prod_p D_p with D_p u_p = X u_p - u_p^2 - 1 in (s, t) variables
    R, z, s_, t_, w_ = ring("z,s,t,w", QQ)
    sgn_pow = 2 if sg == 1 else 0
    prod = R(1)
    for p in range(N):
        u = w_ * z**p
        # s^{2} (upper) or 1 (lower) times D_p, times u
        Dp = (s_**sgn_pow + (s_ ** (2 - sgn_pow)) * (1 + t_ * t_)) * u - s_ * t_ * (u * u + 1)
        prod *= Dp
    cyc = sp.Poly(sp.cyclotomic_poly(N, sp.Symbol("z")), sp.Symbol("z")).all_coeffs()
    phi = sum((int(c) * z**k for k, c in enumerate(reversed(cyc))), R(0))
    red = prod.rem([phi])
    if any(m[0] for m in red.monoms()):
        return CheckReport("grand", False, 0, 1, "product did not reduce to z-free form")
    P = TSeries.from_poly(red, M)
    rhs = -(P.deriv() * P.truncate(M - 1).inverse())
    diff = lhs - rhs
    holds = diff.truncate(order - 1).is_zero()
    killed = [Q for Q in range(1, M + 1) if rules[Q] == 0]
    return CheckReport("grand", holds, int(holds), 1, "",
                       {"surviving_Q": sorted(phases), "killed_Q": killed,
                        "order": order})


def _log1p_truncated(y, order):
    """sum_{n} (-1)^{n+1} y^n / n for y = O(t^2), exact through t^order."""
    out = CycleSymbolExpr.of(0)
    yn = CycleSymbolExpr.of(1)
    for n in range(1, order // 2 + 1):
        yn = yn * y
        out = out + yn * Fraction((-1) ** (n + 1), n)
    return out


def holomorphic_shift(order: int):
    """Image minus target for the Q = 0 column: log[(s^2(1+t^2)^2 + 1)/((1+t^2)(1+s^2))]."""
    s, t, _, _ = symbols()
    y = (s * s * (1 + t * t) ** 2 + 1) / ((1 + t * t) * (1 + s * s)) - 1
    return _log1p_truncated(y, order)


def triangle_closure(Q: int, order: int, p: int = 0, N: int = 1, K_single: int | None = None) -> CheckReport:
    """Closure of the K-summed (p, Q) column under the Stokes automorphism.

    The upper column sum_K c^+(p, Q, K) is mapped by s -> s(1 + t^2) and
    compared with the lower column through t^order.  For Q = 0 the two differ
    by a u-free holomorphic term, which is subtracted.  Single terms are
    checked to fail: details['single_invariant'] lists (K, bool).
    """
    kmax = (order - abs(Q)) // 2
    k0 = 0 if Q else 1
    if kmax < k0:
        raise ValueError("order too small for this charge")
    up = CycleSymbolExpr.of(0)
    lo = CycleSymbolExpr.of(0)
    singles = []
    for K in range(k0, kmax + 1):
        cu = sector_coefficient(p, Q, K, N, UPPER)
        cl = sector_coefficient(p, Q, K, N, LOWER)
        up = up + cu
        lo = lo + cl
        singles.append((K, _lowest_t_degree((stokes_automorphism(cu) - cl).value) > order))
    diff = stokes_automorphism(up) - lo
    if Q == 0:
        diff = diff - holomorphic_shift(order)
    deg = _lowest_t_degree(diff.value)
    holds = deg > order
    return CheckReport("closure", holds, int(holds), 1, f"O(t^{deg})",
                       {"single_invariant": singles, "lowest_degree": deg})

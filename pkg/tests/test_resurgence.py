from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from ewkb import resurgence as R
from ewkb.resurgence import (LOWER, UPPER, CycleSymbolExpr, alpha_beta_ext, brute_force_sectors,
                             d1_normalized, ddp_check, dp_normalized, factorization_check,
                             grand_expansion_check, gutzwiller_bracket, gutzwiller_expansion,
                             perfect_square_check, psum_rule, sector_coefficient,
                             sector_expansion_check, singlet_labels_exact, stokes_automorphism,
                             symbols, triangle_closure, xi)

s, t, w, z = symbols()
S = stokes_automorphism


def _monomial(data):
    c, a, b, d = data
    return Fraction(c) * s**a * t**b * w**d


monos = st.tuples(st.integers(-3, 3).filter(bool), st.integers(0, 3), st.integers(0, 3),
                  st.integers(-2, 2)).map(_monomial)
polys = st.lists(monos, min_size=1, max_size=4).map(lambda ms: sum(ms[1:], ms[0]))


@st.composite
def rational(draw):
    num = draw(polys)
    den = draw(polys)
    if den == 0:
        den = den + 1
    return num / den


@settings(max_examples=30, deadline=None)
@given(f=rational(), g=rational())
def test_automorphism_is_ring_hom(f, g):
    assert S(f * g) == S(f) * S(g)
    assert S(f + g) == S(f) + S(g)


@settings(max_examples=20, deadline=None)
@given(f=polys)
def test_automorphism_fixes_s_free(f):
    g = f.value.numer.compose(f.value.field.ring.gens[0], f.value.field.ring(1))
    h = CycleSymbolExpr(f.value.field(g))
    assert S(h) == h


def test_elementary_images():
    assert S(t) == t
    assert S(s * s) == s * s * (1 + t * t) ** 2
    assert S(1 / s) == 1 / (s * (1 + t * t))


def test_canonical_text_is_deterministic():
    a = (s + t) / (s * t + 1)
    b = (t + s) * 2 / (2 + 2 * t * s)
    assert a == b and a.text() == b.text()


def test_ddp_n1():
    assert S(d1_normalized(UPPER)) == d1_normalized(LOWER)
    assert S(xi(UPPER)) == xi(LOWER)
    # the unnormalized brackets differ by the prefactor; both sides use the same one
    up = 1 + 1 / (s * s) * (1 + t * t) - 2 * (t / s) * R.bloch_cos(0, 1)
    lo = 1 + s * s * (1 + t * t) - 2 * (s * t) * R.bloch_cos(0, 1)
    assert S(up * s / t) == lo / (s * t)


def test_alpha_beta_in_extension():
    a, b = alpha_beta_ext(UPPER)
    one = CycleSymbolExpr.of(1)
    assert (a * b).x == one and (a * b).y == 0
    assert (a + b).x == 2 * xi(UPPER) and (a + b).y == 0
    aa, bb = alpha_beta_ext(LOWER)
    assert a.stokes() == aa and b.stokes() == bb


@pytest.mark.parametrize("N", range(1, 9))
def test_ddp_all_sectors(N):
    rep = ddp_check(N)
    assert rep.holds and rep.passed == rep.total == N
    assert rep.summary() == f"PASS {N}/{N} sectors"


def test_ddp_n2_per_factor():
    for p in range(2):
        assert S(dp_normalized(p, 2, UPPER)) == dp_normalized(p, 2, LOWER)
        assert S(dp_normalized(p, 2, UPPER)) != dp_normalized(1 - p, 2, LOWER)


def test_ddp_cap():
    with pytest.raises(ValueError):
        ddp_check(9)


@pytest.mark.parametrize("N", range(1, 9))
def test_factorization_exact(N):
    assert factorization_check(N).holds


@pytest.mark.parametrize("N", [2, 4, 6, 8])
def test_perfect_square(N):
    rep = perfect_square_check(N)
    assert rep.holds


@pytest.mark.parametrize("N", [3, 5, 7])
def test_singlet_labels(N):
    K = (N - 1) // 2
    assert singlet_labels_exact(N, 0) == [0]
    assert singlet_labels_exact(N, 1) == [K]


def test_psum_rule():
    for N in range(1, 7):
        for Q in range(-7, 8):
            assert psum_rule(N, Q) == (N if Q % N == 0 else 0)


def test_gutzwiller_leading_terms():
    g = gutzwiller_expansion(UPPER, 0, 0)
    E, A, B, th = g["E"], g["A"], g["B"], g["theta"]
    assert sp.simplify(g["G_pt"] + sp.diff(1 / A, E)) == 0
    K0 = B - sp.sqrt(B) * sp.sqrt(A) * (sp.exp(sp.I * th) + sp.exp(-sp.I * th))
    assert sp.simplify(g["K"] - K0) == 0


def test_gutzwiller_half_pi_kills_odd_instantons():
    g = gutzwiller_expansion(LOWER, 3, 2)
    K = g["K"].subs(g["theta"], sp.pi / 2)
    assert not K.has(sp.sqrt(g["B"]))


def test_gutzwiller_geometric_resummation():
    # the orbit sums in K resum to the bracket: K = bracket - 1
    g = gutzwiller_expansion(UPPER, 12, 0)
    A, B = g["A"], g["B"]
    vals = {A: sp.Rational(1, 10), B: sp.Rational(1, 7), g["theta"]: 0}
    K = sp.N(g["K"].subs(vals))
    closed = sp.N((gutzwiller_bracket(UPPER) - 1).subs(vals))
    assert abs(K - closed) < 1e-12


def test_sector_trivial_cases():
    kk = s + 1 / s
    assert sector_coefficient(0, 1, 0) == (t / kk) * w
    assert sector_coefficient(0, -1, 0) == (t / kk) / w
    assert sector_coefficient(0, 0, 1, 1, UPPER) == -(1 / (s * s)) * t * t / (kk * kk)
    with pytest.raises(ValueError):
        sector_coefficient(0, 0, 0)


@pytest.mark.parametrize("side", [UPPER, LOWER])
def test_sector_expansion_brute_force(side):
    rep = sector_expansion_check(6, side)
    assert rep.holds and rep.passed == rep.total
    assert len(brute_force_sectors(6, side)) == rep.total


@pytest.mark.parametrize("N", [1, 2, 3])
def test_grand_expansion(N):
    rep = grand_expansion_check(N, 8)
    assert rep.holds
    assert all(Q % N == 0 for Q in rep.details["surviving_Q"])
    assert all(Q % N for Q in rep.details["killed_Q"])


def test_grand_expansion_n2_phases():
    assert grand_expansion_check(2, 8).details["surviving_Q"] == [2, 4, 6, 8]


def test_grand_expansion_detects_broken_psum(monkeypatch):
    monkeypatch.setattr(R, "psum_rule", lambda N, Q: N)
    assert not grand_expansion_check(2, 6).holds


@pytest.mark.parametrize("Q", [0, 1, -1, 2])
def test_triangle_closure(Q):
    rep = triangle_closure(Q, 8)
    assert rep.holds
    assert not any(ok for _, ok in rep.details["single_invariant"])


def test_single_term_not_invariant():
    c = sector_coefficient(0, 0, 1, 1, UPPER)
    assert S(c) != c
    assert S(c) != sector_coefficient(0, 0, 1, 1, LOWER)

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from ewkb.oracle import BlochProblem, bloch_decompose, converged_levels
from ewkb.quantize import (AIRY_TO_DW, DW_TO_AIRY, LOWER, MEDIAN, UPPER, airy_monodromy,
                           alpha_beta, binomial_form, condition_airy, condition_dw,
                           dictionary_translate, dw_cycles, dw_matrices, dw_monodromy,
                           dw_spectrum, leading_F_table, low_energy_form, paired_indices,
                           singlet_indices, solve_spectrum, splitting_estimate,
                           splitting_records, xi)
from ewkb.records import DW_WKB, SPLITTING
from ewkb.wkb import residue_F_poly

cplx = st.complex_numbers(min_magnitude=0.3, max_magnitude=3.0, allow_nan=False,
                          allow_infinity=False)


@pytest.fixture(scope="module")
def F1():
    return residue_F_poly(1, 12, tol=1e-6)


# ---------------------------------------------------------------- monodromy

def test_symbolic_det_and_trace():
    s, t = sp.symbols("s t", positive=True)
    for side, sg in ((UPPER, 1), (LOWER, -1)):
        M = airy_monodromy(s, t, side)
        assert M.check()
        a = s ** (2 * sg)
        assert sp.simplify(M.trace() - (1 + a + t * t) / (s**sg * t)) == 0
    assert airy_monodromy(s, t, UPPER).provenance[:2] == ("M+", "T")


@settings(max_examples=40, deadline=None)
@given(sa=cplx, sb=cplx, side=st.sampled_from([UPPER, LOWER]))
def test_numeric_det_and_trace(sa, sb, side):
    M = airy_monodromy(sa, sb, side)
    assert M.check()
    sg = 1 if side == UPPER else -1
    two_xi = (1 + sa ** (2 * sg) + sb * sb) / (sa**sg * sb)
    assert abs(M.trace() - two_xi) < 1e-9 * max(1, abs(two_xi))


def test_unit_cycles():
    x = xi(1.0, 1.0, UPPER)
    assert x == 1.5
    a, b = alpha_beta(x)
    assert a + b == pytest.approx(3) and a * b == pytest.approx(1)


@settings(max_examples=20, deadline=None)
@given(F=st.floats(-1.3, 1.3), h=st.floats(0.2, 1.0))
def test_dw_steps_unimodular(F, h):
    mats = dw_matrices(F, h, 1.7, np.exp(-8 / h))
    for m in mats.values():
        assert m.check()
    for side in (UPPER, LOWER):
        assert dw_monodromy(F, h, 1.7, np.exp(-8 / h), side).check()


# ---------------------------------------------------------------- Airy conditions

def test_airy_n1_unit():
    c = condition_airy(1.0, 1.0, 0.0, 1)
    assert c.evaluator(0.0) == pytest.approx(1.0)
    assert c.factors[0](0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("N", range(1, 7))
def test_factorization_random_points(N):
    rng = np.random.default_rng(100 + N)
    worst = 0.0
    for _ in range(100):
        A = complex(*rng.normal(size=2)) + 1.5
        B = 0.5 * complex(*rng.normal(size=2)) + 0.5
        th = rng.uniform(-np.pi, np.pi)
        for side in (UPPER, LOWER):
            c = condition_airy(A, B, th, N, side)
            d = c.evaluator(0.0)
            worst = max(worst, abs(d - c.factor_product(0.0)) / max(1.0, abs(d)))
    assert worst < 1e-10


@settings(max_examples=50, deadline=None)
@given(x=cplx, N=st.integers(1, 8))
def test_binomial_middle_form(x, N):
    a, b = alpha_beta(x)
    assert abs(a**N + b**N - binomial_form(x, N)) < 1e-9 * max(1, abs(a) ** N)


def test_perfect_square_n2():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A = complex(*rng.normal(size=2)) + 1.5
        B = 0.5 * complex(*rng.normal(size=2)) + 0.5
        c = condition_airy(A, B, np.pi, 2)
        f0, f1 = c.factors[0](0), c.factors[1](0)
        assert abs(f0 - f1) < 1e-12 * max(1, abs(f0))
        assert abs(c.evaluator(0) - f0 * f0) < 1e-12 * max(1, abs(f0) ** 2)


def test_singlet_and_pairs_n3():
    assert singlet_indices(3, 0.0) == [0]
    assert paired_indices(3, 0.0) == [(1, 2)]
    assert singlet_indices(3, np.pi) == [1]


def test_global_inconsistency_labels():
    for N in (3, 5, 7):
        K = (N - 1) // 2
        assert singlet_indices(N, 0.0) == [0]
        assert singlet_indices(N, np.pi) == [K]


# ---------------------------------------------------------------- DW conditions

def test_cal_a_and_cal_b_leading():
    N, h, E = 2, 0.4, 0.37
    F, calA, sB = dw_cycles(leading_F_table(N), E, h, N)
    assert calA == pytest.approx(np.exp(-2j * np.pi * E / N))
    B0 = np.exp(-16 / (N * h))
    expect = 2 * np.pi * B0 / gamma(0.5 + E / N) ** 2 * (N * h / 32) ** (-2 * E / N)
    assert sB**2 == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("side", [UPPER, LOWER])
def test_low_energy_form_n1(side):
    c = condition_dw(leading_F_table(1), 0.5, 0.7, 1, side)
    for E in (0.45, 0.5, 0.55, 0.5 + 0.02j):
        d = c.factors[0](E) / np.sqrt(2 * np.pi)
        ref = low_energy_form(E, 0.5, 0.7, 1, side)
        assert abs(d - ref) < 1e-10 * max(1, abs(ref))


def test_low_energy_form_n2_brackets():
    c = condition_dw(leading_F_table(2), 0.5, 0.7, 2, UPPER)
    for p in range(2):
        d = c.factors[p](0.9) / np.sqrt(2 * np.pi)
        assert abs(d - low_energy_form(0.9, 0.5, 0.7, 2, UPPER, p)) < 1e-10 * abs(d)


def test_gamma_poles_are_finite():
    c = condition_dw(leading_F_table(1), 0.5, 0.0, 1, MEDIAN)
    # F = 1/2 + k makes 1/Gamma(1/2 - F) vanish; the regular factor stays finite
    for E in (-0.5, -1.5):
        v = c.regular_factors[0](E)
        assert np.isfinite(v) and abs(v) < 1e-12


def test_factor_product_dw():
    c = condition_dw(leading_F_table(3), 0.6, 0.4, 3, UPPER)
    for E in (0.8, 1.4 + 0.1j):
        assert abs(c.evaluator(E) - c.factor_product(E)) < 1e-10 * abs(c.evaluator(E))


# ---------------------------------------------------------------- spectra

def test_ground_energy_n1(F1):
    recs = dw_spectrum(1, 0.5, 0.0, 2, F_table=F1)
    ora = converged_levels(BlochProblem(1, 0.5, 0.0), 2)[0]
    got = sorted(r.energy.real for r in recs)
    assert np.allclose(got, ora, rtol=1e-5)
    assert all(r.method == DW_WKB and abs(r.energy.imag) < 1e-8 for r in recs)


def test_kramers_roots_n2():
    F2 = residue_F_poly(2, 10, tol=1e-6)
    recs = dw_spectrum(2, 0.5, np.pi, 2, F_table=F2)
    by = {(r.p, r.n): r.energy.real for r in recs}
    for n in range(2):
        assert abs(by[(0, n)] - by[(1, n)]) < 1e-8


def test_theta_half_pi_is_band_average(F1):
    h = 0.5
    e = {th: dw_spectrum(1, h, th, 1, F_table=F1)[0].energy.real
         for th in (0.0, np.pi / 2, np.pi)}
    B0 = np.exp(-16 / h)
    assert abs(e[np.pi / 2] - 0.5 * (e[0.0] + e[np.pi])) < 50 * h * B0 * 64 / (np.pi * h)


def test_one_sided_roots_are_complex_conjugates(F1):
    up = solve_spectrum(condition_dw(F1, 0.5, 0.0, 1, UPPER), 1, (0.05, 1.0))
    lo = solve_spectrum(condition_dw(F1, 0.5, 0.0, 1, LOWER), 1, (0.05, 1.0))
    assert abs(up[0].energy - np.conj(lo[0].energy)) < 1e-10
    assert not up[0].flagged


def test_empty_window_gives_no_roots(F1):
    assert solve_spectrum(condition_dw(F1, 0.5, 0.0, 1, MEDIAN), 2, (0.6, 0.9)) == []


# ---------------------------------------------------------------- splitting

def test_splitting_half_pi():
    h = 0.4
    d = splitting_estimate(1, h, np.pi / 2, 0, UPPER)
    k = 64 * np.exp(-16 / h) / (np.pi * h)
    assert d.instanton == pytest.approx(0, abs=1e-20)
    assert d.bion_real == pytest.approx(0, abs=1e-20)
    assert d.bion_imag == pytest.approx(k * np.pi / 2)
    assert splitting_estimate(1, h, np.pi / 2, 0, LOWER).bion_imag == pytest.approx(-k * np.pi / 2)


def test_splitting_n2_theta_pi_p_independent():
    a = splitting_estimate(2, 0.4, np.pi, 0)
    b = splitting_estimate(2, 0.4, np.pi, 1)
    assert abs(a.delta - b.delta) < 1e-15


def test_splitting_matches_oracle_band_edge():
    h = 0.4
    d = splitting_estimate(1, h, 0.0, 0)
    e0 = converged_levels(BlochProblem(1, h, 0.0), 1)[0][0] / h
    epi = converged_levels(BlochProblem(1, h, np.pi), 1)[0][0] / h
    shift = e0 - 0.5 * (e0 + epi)
    assert abs(d.delta.real - d.bion_real) == pytest.approx(abs(shift), rel=0.15)


def test_splitting_records_and_errors():
    recs = splitting_records(2, 0.4, 0.3)
    assert [r.p for r in recs] == [0, 1] and all(r.method == SPLITTING for r in recs)
    with pytest.raises(NotImplementedError):
        splitting_estimate(3, 0.4, 0.0)
    with pytest.raises(ValueError):
        splitting_estimate(1, 10.0, 0.0)


# ---------------------------------------------------------------- dictionary

def test_dictionary_identical_wells_reduce_to_cal_b():
    N, h, E = 1, 0.5, 0.3
    _, calA, sB = dw_cycles(leading_F_table(N), E, h, N)
    d = dictionary_translate(AIRY_TO_DW, dict(E=E, hbar=h, omega=N, S_B=16 / N,
                                              c_ratios=[(32 / N) ** (E / N)] * 2))
    assert d["calA"] == pytest.approx(calA)
    assert d["calB"] == pytest.approx(sB**2, rel=1e-12)


def test_dictionary_zero_energy():
    h = 0.5
    d = dictionary_translate(AIRY_TO_DW, dict(E=0.0, hbar=h, omega=1, c_ratios=[1, 1]))
    assert d["calB"] == pytest.approx(2 * np.exp(-16 / h))


def test_dictionary_round_trip():
    src = dict(E=0.3, hbar=0.5, omega=1.0, S_B=16.0, c_ratios=[2.0, 2.0])
    fwd = dictionary_translate(AIRY_TO_DW, src)
    back = dictionary_translate(DW_TO_AIRY, fwd)
    assert abs(back["omega"] - 1.0) < 1e-12
    assert abs(back["c_ratio_product"] - 4.0) < 1e-12
    again = dictionary_translate(AIRY_TO_DW, dict(src, omega=back["omega"].real))
    assert abs(again["calB"] - fwd["calB"]) < 1e-12 * abs(fwd["calB"])


def test_dictionary_requires_c_data():
    with pytest.raises(KeyError):
        dictionary_translate(AIRY_TO_DW, dict(E=0.3, hbar=0.5, omega=1.0))

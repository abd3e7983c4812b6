from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import rs_energy_series
from ewkb.potential import RESCALED, build_potential
from ewkb.wkb import (ContourError, circle, contour_integral, cycle_contour, eval_F,
                      local_map_coefficients, normalization_constants,
                      normalization_constants_limit, period_quadrature, residue_F,
                      residue_F_poly, riccati_orders, voros_raw, voros_symbol)


@pytest.fixture(scope="module")
def n1_e1():
    return build_potential(1, 1.0)


def _filled(pot, sign=1, order=4, radius=0.5, center=np.pi / 2):
    # a circle round a single turning point carries a branch cut; use the pair contour
    c = cycle_contour(pot, "A") if center is None else circle(center, radius)
    return riccati_orders(pot, c, order, sign)


def test_sminus1_squares_to_q(n1_e1):
    c = riccati_orders(n1_e1, cycle_contour(n1_e1, "A"), 3)
    assert np.max(np.abs(c.values[-1] ** 2 - n1_e1.Q(c.nodes))) < 1e-12


def test_single_point_circle_is_rejected(n1_e1):
    # sqrt Q changes sign around an isolated simple zero
    with pytest.raises(ContourError):
        riccati_orders(n1_e1, circle(np.pi / 2, 0.5), 2)


def test_s0_closed_form(n1_e1):
    c = riccati_orders(n1_e1, cycle_contour(n1_e1, "A"), 1)
    x = c.nodes
    expect = -0.25 * n1_e1.dQ(x) / n1_e1.Q(x)
    assert np.max(np.abs(c.values[0] - expect)) < 1e-10


def test_even_part_cycle_integrals(n1_e1):
    # S_even = -(1/2) d log S_odd: orders >= 1 integrate to zero, S_0 picks up
    # the winding of S_odd, a Maslov-type -pi i on the A-cycle
    plus = riccati_orders(n1_e1, cycle_contour(n1_e1, "A"), 4, 1)
    minus = riccati_orders(n1_e1, cycle_contour(n1_e1, "A"), 4, -1)
    c = cycle_contour(n1_e1, "A")
    ints = [contour_integral(0.5 * (plus.values[n] + minus.values[n]), c) for n in range(5)]
    assert abs(abs(ints[0]) - np.pi) < 1e-10
    assert abs(ints[0].real) < 1e-10
    assert max(abs(v) for v in ints[1:]) < 1e-9


def test_voros_a_leading_matches_quadrature(n1_e1):
    v = voros_symbol(n1_e1, "A", 5)
    lead = v.log_value.coefficient(-1)
    assert abs(lead.real) < 1e-12
    assert abs(lead.imag - period_quadrature(n1_e1, "A")) < 1e-10


def test_voros_b_leading_is_negative(n1_e1):
    v = voros_symbol(n1_e1, "B", 3)
    lead = v.log_value.coefficient(-1)
    assert lead.real < 0 and abs(lead.imag) < 1e-10
    assert abs(-lead.real - period_quadrature(n1_e1, "B")) < 1e-10


def test_voros_b_tends_to_bion_action():
    # -oint_B sqrt Q -> S_B = 16 as E -> 0+; the defect is O(E log E)
    leads = [-voros_symbol(build_potential(1, E), "B", 1).log_value.coefficient(-1).real
             for E in (0.1, 0.01, 0.003)]
    defects = [16 - v for v in leads]
    assert defects[0] > defects[1] > defects[2] > 0
    assert defects[2] < 0.1


def test_period_scales_with_n():
    a1 = voros_symbol(build_potential(1, 0.8), "A", 1).log_value.coefficient(-1)
    a2 = voros_symbol(build_potential(2, 0.8), "A", 1).log_value.coefficient(-1)
    assert abs(a2 - a1 / 2) < 1e-10


def test_only_odd_hbar_powers(n1_e1):
    raw = voros_raw(n1_e1, "A", 7)
    # raw[k] is the coefficient of hbar^(k-1); odd k are even powers
    odd = np.abs(raw[1::2])
    even = np.abs(raw[0::2])
    assert np.max(odd) < 1e-10 * np.min(even)


def test_contour_independence(n1_e1):
    from ewkb.wkb import odd_part
    vals = []
    for r in (1.8, 2.3):
        fac = lambda r=r: circle(0.0, r, 512)
        S = odd_part(n1_e1, fac, 5)
        c = fac()
        vals.append(np.array([contour_integral(S[n], c) for n in (-1, 1, 3, 5)]))
    assert np.allclose(vals[0], vals[1], rtol=1e-9)


def test_f_leading_is_minus_e_over_n():
    F = residue_F(build_potential(1, 0.5, RESCALED), 4)
    assert abs(F.coefficient(0) + 0.5) < 1e-10


def test_omega_a_leading_for_n2():
    E = 0.37
    F = residue_F(build_potential(2, E, RESCALED), 4)
    assert abs(-E / F.coefficient(0) - 2) < 1e-10


@pytest.mark.parametrize("N", [1, 2, 3])
def test_f_leading_random_energies(N):
    polys = residue_F_poly(N, 2)
    rng = np.random.default_rng(7 + N)
    for E in rng.uniform(0, 1, 10):
        assert abs(np.polyval(polys[0][::-1], E) + E / N) < 1e-10


def test_f_is_not_zero_at_zero_energy():
    # S_odd keeps poles at the merged point even at E = 0, so F(0, hbar) != 0
    F = residue_F(build_potential(2, 0.0, RESCALED), 3)
    assert abs(F.coefficient(0)) < 1e-12
    assert abs(F.coefficient(1) + 1 / 32) < 1e-10


@pytest.mark.parametrize("N,n", [(1, 0), (1, 1), (2, 0)])
def test_quantization_against_rs_oracle(N, n):
    # F(E_n(hbar), hbar) = -(n + 1/2) with E_n the exact RS series
    eps = [float(e) for e in rs_energy_series(N, n, 6)]
    polys = residue_F_poly(N, 6)
    for h in (0.02, 0.05):
        E = sum(c * h**k for k, c in enumerate(eps))
        F = complex(eval_F(polys, E, h))
        assert abs(F + (n + 0.5)) < 50 * h**7


def test_local_map_coefficients_printed_values():
    for N in (1, 2, 3):
        y0, y1 = local_map_coefficients(N, 1, 3)
        assert float(y0[1]) == pytest.approx(np.sqrt(2 * N))
        assert float(y0[3]) == pytest.approx(-N**2.5 / (48 * np.sqrt(2)))
        assert float(y1[1]) == pytest.approx(-np.sqrt(N) / (16 * np.sqrt(2)))


def test_local_map_needs_branch():
    with pytest.raises(ValueError):
        local_map_coefficients(1, None)


def test_normalization_constants_closed_form():
    cp, cm = normalization_constants(1, 0.5, -1)
    assert cp == pytest.approx(32 ** -0.25)
    assert cm == pytest.approx(32 ** 0.25)
    assert normalization_constants(3, 0.0, -1) == (1, 1)
    cp1, cm1 = normalization_constants(1, 0.5, 1)
    assert cp1 == pytest.approx(np.exp(1j * np.pi * 0.25) * 32 ** 0.25)
    assert cm1 == pytest.approx(np.exp(-1j * np.pi * 0.25) * 32 ** -0.25)


@settings(max_examples=10, deadline=None)
@given(N=st.integers(1, 3), E=st.floats(0.05, 1.5), branch=st.sampled_from([1, -1]))
def test_normalization_constants_two_routes(N, E, branch):
    a = normalization_constants(N, E, branch)
    b = normalization_constants_limit(N, E, branch)
    assert np.allclose(a, b, rtol=1e-6)


def test_rs_oracle_known_coefficients():
    # quartic term -x^4/24 shifts E/hbar by -<y^4>/24 hbar = -hbar/32
    eps = rs_energy_series(1, 0, 3)
    assert eps[:2] == [Fraction(1, 2), Fraction(-1, 32)]
    from ewkb.oracle import BlochProblem, converged_levels
    h = 0.05
    e0 = converged_levels(BlochProblem(1, h, 0.0), 1)[0][0] / h
    series = sum(float(c) * h**k for k, c in enumerate(eps))
    assert abs(e0 - series) < 1e-5

"""Acceptance criteria 1-10.  Each test records one PASS/FAIL line; the lines
are printed in the terminal summary (see conftest.py) and by running this file
directly."""

import time

import numpy as np
import pytest

from ewkb.borel import (borel_singularities, lateral_discontinuity,
                        perturbative_energy_series, predicted_bion_imaginary)
from ewkb.oracle import BlochProblem, band_splitting, bloch_decompose, converged_levels
from ewkb.quantize import condition_airy, condition_dw, dw_spectrum, solve_spectrum
from ewkb.resurgence import (ddp_check, factorization_check, grand_expansion_check,
                             perfect_square_check, sector_expansion_check,
                             singlet_labels_exact, triangle_closure)
from ewkb.stokes import detect_mutation, hausdorff_mod, trace_graph, translate
from ewkb.potential import build_potential, turning_points
from ewkb.wkb import residue_F_poly

RESULTS = {}

# oracle splitting ratios, frozen before the WKB side was built:
# gap / (N hbar) / (2 sqrt(c B0 / (pi hbar))), c = 64 (N=1), 32 (N=2)
SPLIT_RATIOS = {1: {0.7: 0.9191298718609762, 0.55: 0.9373139901173795, 0.4: 0.9549710316533679},
                2: {0.7: 0.8239284226342803, 0.55: 0.8671283009211803, 0.4: 0.9066629089634496}}


def record(k, ok, detail):
    RESULTS[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[k])
    return ok


def test_c01_oracle_agreement():
    table = residue_F_poly(1, 12, tol=1e-6)
    errs = {}
    slowest = 0.0
    for th in (0.0, np.pi / 2, np.pi):
        for h in (1.0, 0.5, 0.25):
            t0 = time.perf_counter()
            got = sorted(r.energy.real for r in dw_spectrum(1, h, th, 2, F_table=table))[:2]
            ref = converged_levels(BlochProblem(1, h, th), 2)[0]
            slowest = max(slowest, time.perf_counter() - t0)
            errs[(th, h)] = [abs(g - r) / r for g, r in zip(got, ref)]
            assert len(got) == 2
    at_half = max(max(errs[(th, 0.5)]) for th in (0.0, np.pi / 2, np.pi))
    mono = all(errs[(th, 1.0)][n] > errs[(th, 0.5)][n] > errs[(th, 0.25)][n]
               for th in (0.0, np.pi / 2, np.pi) for n in range(2))
    ok = at_half < 0.01 and mono and slowest < 60
    record(1, ok, f"max rel err at hbar=0.5 {at_half:.2e}, monotone {mono}, "
                  f"slowest point {slowest:.2f}s")
    assert ok


def test_c02_kramers_doubling():
    recs = bloch_decompose(BlochProblem(2, 0.5, np.pi), 6)
    es = np.array(sorted(r.energy.real for r in recs))
    gap = float(np.max(np.abs(es[0::2] - es[1::2])))
    square = all(perfect_square_check(N).holds for N in (2, 4, 6, 8))
    F2 = residue_F_poly(2, 10, tol=1e-6)
    roots = dw_spectrum(2, 0.5, np.pi, 2, F_table=F2)
    by = {(r.p, r.n): r.energy.real for r in roots}
    wkb_gap = max(abs(by[(0, n)] - by[(1, n)]) for n in range(2))
    ok = gap < 1e-10 and square and wkb_gap < 1e-8
    record(2, ok, f"oracle pair gap {gap:.1e}, exact perfect square {square}, "
                  f"WKB pair gap {wkb_gap:.1e}")
    assert ok


def test_c03_global_inconsistency():
    labels = {N: (singlet_labels_exact(N, 0), singlet_labels_exact(N, 1)) for N in (3, 5)}
    ok = all(labels[N] == ([0], [(N - 1) // 2]) for N in (3, 5))
    record(3, ok, "singlet p at (theta=0, theta=pi): "
                  + ", ".join(f"N={N} {labels[N]}" for N in (3, 5)))
    assert ok


def test_c04_ddp_invariance():
    t0 = time.perf_counter()
    reps = [ddp_check(N) for N in range(1, 9)]
    dt = time.perf_counter() - t0
    ok = all(r.holds for r in reps) and dt < 10
    passed = sum(r.passed for r in reps)
    record(4, ok, f"{passed}/{sum(r.total for r in reps)} p-factors for N<=8 in {dt:.2f}s")
    assert ok


def test_c05_factorization():
    exact = all(factorization_check(N).holds for N in range(1, 9))
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        A = complex(*rng.normal(size=2)) + 1.5
        B = 0.5 * complex(*rng.normal(size=2)) + 0.5
        th = rng.uniform(-np.pi, np.pi)
        N = int(rng.integers(1, 9))
        c = condition_airy(A, B, th, N)
        d = c.evaluator(0.0)
        worst = max(worst, abs(d - c.factor_product(0.0)) / max(1.0, abs(d)))
    ok = exact and worst < 1e-10
    record(5, ok, f"exact for N<=8 {exact}, 100 random points max residual {worst:.1e}")
    assert ok


def test_c06_splitting_asymptotics():
    hs = (0.7, 0.55, 0.4)
    parts = []
    ok = True
    for N, c in ((1, 64.0), (2, 32.0)):
        ratios = []
        for h in hs:
            B0 = np.exp(-16 / (N * h))
            r = band_splitting(N, h) / (N * h) / (2 * np.sqrt(c * B0 / (np.pi * h)))
            assert r == pytest.approx(SPLIT_RATIOS[N][h], rel=1e-8)
            ratios.append(r)
        good = 0.85 <= ratios[-1] <= 1.15 and abs(ratios[0] - 1) > abs(ratios[1] - 1) > abs(ratios[2] - 1)
        ok = ok and good
        parts.append(f"N={N} " + "/".join(f"{r:.3f}" for r in ratios))
    record(6, ok, "ratios over hbar 0.7/0.55/0.4: " + ", ".join(parts))
    assert ok


def test_c07_borel_action():
    locs = {}
    for N in (1, 2):
        s = perturbative_energy_series(N, 0, 24, physical=False)
        sg = borel_singularities(s)
        locs[N] = sg.location.real if sg.location is not None else float("nan")
    ok = all(abs(locs[N] - 16 / N) < 0.05 * 16 / N for N in (1, 2))
    record(7, ok, f"nearest positive singularity N=1 {locs[1]:.3f} (16), "
                  f"N=2 {locs[2]:.3f} (8), 25 coefficients")
    assert ok


def test_c08_lateral_cancellation():
    s = perturbative_energy_series(1, 0, 20, physical=False)
    d = lateral_discontinuity(s, 0.3)
    pred = predicted_bion_imaginary(1, 0.3)
    # the upper lateral sum pairs with the lower-side condition ("opposite" pairing)
    ratio = -d.value / pred
    ok = 0.8 <= ratio <= 1.2 and not d.upper_bound
    record(8, ok, f"discontinuity / predicted bion term at hbar=0.3: {ratio:.3f} "
                  f"(+-{d.error / pred:.3f}, conclusive {not d.upper_bound})")
    assert ok


def test_c09_sector_expansion():
    sectors = all(sector_expansion_check(6, side).holds for side in ("upper", "lower"))
    grand = all(grand_expansion_check(N, 8).holds for N in (1, 2, 3))
    closure = []
    singles_fail = True
    for Q in (0, 1, -1, 2):
        rep = triangle_closure(Q, 8)
        closure.append(rep.holds)
        singles_fail = singles_fail and not any(ok for _, ok in rep.details["single_invariant"])
    ok = sectors and grand and all(closure) and singles_fail
    record(9, ok, f"sectors exact {sectors}, grand t^8 N<=3 {grand}, "
                  f"column closure {all(closure)}, single terms non-invariant {singles_fail}")
    assert ok


def test_c10_stokes_structure():
    counts = all(len(turning_points(build_potential(N, E))) == 2 * N
                 for N in (1, 2, 3, 4) for E in (0.3, 1.0, 1.7))
    muts = detect_mutation(1, 1.0, (-0.2, 0.2))
    at_zero = len(muts) == 1 and muts[0].angle == 0.0
    worst = 0.0
    for N in (2, 3):
        g = trace_graph(N, 1.0, 0.1)
        pts = [z for c in g.curves for z in c.points]
        worst = max(worst, hausdorff_mod(pts, translate(g, 2 * np.pi / N), 2 * np.pi))
    ok = counts and at_zero and worst < 1e-6
    record(10, ok, f"2N turning points {counts}, mutation angles "
                   f"{[m.angle for m in muts]}, Z_N Hausdorff {worst:.1e}")
    assert ok


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                pass

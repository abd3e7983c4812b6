"""Lowest two bands of V = 1 - cos x from the DW quantization condition,
set against Fourier diagonalization.  The relative error should shrink as
hbar goes down; that is the whole point of the semiclassical side."""

import numpy as np

from ewkb.oracle import BlochProblem, converged_levels
from ewkb.quantize import dw_spectrum
from ewkb.wkb import residue_F_poly

table = residue_F_poly(1, 12, tol=1e-6)   # F(E, hbar) polynomials, built once

print(f"{'theta':>6} {'hbar':>5} {'n':>2} {'DW':>18} {'oracle':>18} {'rel err':>9}")
for theta in (0.0, np.pi / 2, np.pi):
    for hbar in (1.0, 0.5, 0.25):
        wkb = sorted(r.energy.real for r in dw_spectrum(1, hbar, theta, 2, F_table=table))[:2]
        ref = converged_levels(BlochProblem(1, hbar, theta), 2)[0]
        for n, (a, b) in enumerate(zip(wkb, ref)):
            print(f"{theta:6.3f} {hbar:5.2f} {n:2d} {a:18.12f} {b:18.12f} {abs(a - b) / b:9.2e}")

# band widths: theta = 0 and theta = pi bracket each band
print()
for hbar in (0.7, 0.55, 0.4):
    lo = converged_levels(BlochProblem(1, hbar, 0.0), 1)[0][0]
    hi = converged_levels(BlochProblem(1, hbar, np.pi), 1)[0][0]
    print(f"hbar={hbar:4.2f}  ground band width {hi - lo:.3e}")

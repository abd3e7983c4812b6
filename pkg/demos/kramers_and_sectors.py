"""Even N at theta = pi: every level comes in a pair.  Odd N instead has one
unpaired Bloch sector, and which one depends on theta."""

import numpy as np

from ewkb.oracle import BlochProblem, bloch_decompose
from ewkb.resurgence import factorization_check, perfect_square_check, singlet_labels_exact

recs = bloch_decompose(BlochProblem(2, 0.5, np.pi), 6)
for r in sorted(recs, key=lambda r: r.energy.real):
    print(f"N=2 theta=pi  p={r.p}  E={r.energy.real:.14f}")

print()
for N in range(1, 9):
    fac = factorization_check(N)
    line = f"N={N}: factorization {'exact' if fac.holds else 'FAILS'}"
    if N % 2 == 0:
        line += f", perfect square at theta=pi {perfect_square_check(N).holds}"
    else:
        line += f", singlet p at theta=0 {singlet_labels_exact(N, 0)}, at theta=pi {singlet_labels_exact(N, 1)}"
    print(line)

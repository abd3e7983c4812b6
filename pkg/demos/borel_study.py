"""Perturbative ground-state series, its Borel-Pade singularity and the
ambiguity of lateral resummation compared with the bion contribution."""

from ewkb.borel import (borel_pade_sum, borel_singularities, lateral_discontinuity,
                        large_order_ratios, perturbative_energy_series,
                        predicted_bion_imaginary)

for N in (1, 2):
    s = perturbative_energy_series(N, 0, 24, physical=False)
    sing = borel_singularities(s)
    print(f"N={N}: nearest Borel singularity {sing.location.real:.4f}  (bion action {16 / N:.4f})")
    print("      large-order ratios", large_order_ratios(s, 16 / N).round(4))

s = perturbative_energy_series(1, 0, 20, physical=False)
for hbar in (0.3, 0.2):
    up = borel_pade_sum(s, hbar, ray_angle=+0.05)
    dn = borel_pade_sum(s, hbar, ray_angle=-0.05)
    d = lateral_discontinuity(s, hbar)
    pred = predicted_bion_imaginary(1, hbar)
    print(f"hbar={hbar}: upper {up.value:.12f}  lower {dn.value:.12f}")
    print(f"          discontinuity {d.value:.4e} +- {d.error:.1e}, "
          f"bion prediction {pred:.4e}, ratio {-d.value / pred:.4f}")

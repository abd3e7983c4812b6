"""Stokes graph of V = 1 - cos(Nx) at E = 1: curve counts, the topology
change at arg hbar = 0 and an SVG snapshot written next to this file."""

from pathlib import Path

import numpy as np

from ewkb.stokes import detect_mutation, export_graph, hausdorff_mod, trace_graph, translate

for N in (1, 2, 3):
    g = trace_graph(N, 1.0, 0.1)
    print(f"N={N}: {len(g.curves)} curves from {len(g.turning_points)} turning points")

for m in detect_mutation(1, 1.0, (-0.2, 0.2)):
    print(f"mutation at arg hbar = {m.angle}")

g = trace_graph(3, 1.0, 0.1)
pts = [z for c in g.curves for z in c.points]
print("Z_3 shift distance", hausdorff_mod(pts, translate(g, 2 * np.pi / 3), 2 * np.pi))

out = Path(__file__).with_name("stokes_N2.svg")
export_graph(trace_graph(2, 1.0, 0.1), "svg", out)
print("wrote", out)

"""Stokes curves Im (1/hbar) int_a^x sqrt(Q) dx = 0 for V = 1 - cos(Nx).

Curves are integrated in arclength, dx/ds = e^{i arg hbar} conj(w)/|w| with
w = sqrt(Q0) continued along the curve, so that (1/hbar) w dx stays real and
positive.  Steps are classical RK4 with a step that shrinks near turning
points; a curve stops when it leaves the strip |Im x| < ymax, when it comes
within SADDLE_TOL of another turning point (a saddle connection), or after
a maximal length.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .potential import FIXED, PotentialSpec, TurningPoint, turning_points

SADDLE_TOL = 1e-5
MAX_STEP = 0.02
MAX_LENGTH = 40.0
YMAX = 2.5


@dataclass
class StokesCurve:
    source: int                  # turning point index in the graph list
    index: int                   # +1 or -1
    points: list                 # complex vertices
    end: str                     # "top", "bottom", "open" or "tp"
    target: int | None = None    # turning point index for saddle connections
    seed_angle: float = 0.0

    @property
    def is_saddle(self) -> bool:
        return self.end == "tp"


@dataclass
class StokesGraph:
    N: int
    E: complex
    arg_hbar: float
    window: tuple
    turning_points: list
    curves: list
    cuts: list = field(default_factory=list)
    regions: list = field(default_factory=list)
    ymax: float = YMAX

    def signature(self) -> tuple:
        """Sorted incidence multiset (source, target-or-boundary, index)."""
        rows = []
        for c in self.curves:
            tgt = f"tp{c.target}" if c.is_saddle else c.end
            rows.append((f"tp{c.source}", tgt, "+" if c.index > 0 else "-"))
        return tuple(sorted(rows))

    def saddle_connections(self) -> list:
        return [c for c in self.curves if c.is_saddle]

    def merged_curve_count(self) -> int:
        """Curves after identifying each saddle connection traced from both ends."""
        seen = set()
        dup = 0
        for c in self.saddle_connections():
            key = tuple(sorted((c.source, c.target)))
            if key in seen:
                dup += 1
            else:
                seen.add(key)
        return len(self.curves) - dup


# ---------------------------------------------------------------- branches

def _fixed_sqrt(pot: PotentialSpec, x):
    """Reference branch 2 sqrt(sin((Nx+c)/2)) sqrt(sin((Nx-c)/2)), cos c = 1 - E."""
    c = np.arccos(complex(1.0 - pot.E))
    N = pot.N
    return 2 * np.sqrt(np.sin((N * x + c) / 2)) * np.sqrt(np.sin((N * x - c) / 2))


def _direction(w, arg_hbar):
    return np.exp(1j * arg_hbar) * np.conj(w) / abs(w)


def seed_angles(pot: PotentialSpec, tp: TurningPoint, arg_hbar: float) -> list[float]:
    """Local asymptotic directions: 3 for a simple point, 4 for a double point."""
    a = tp.location
    if tp.multiplicity == 1:
        phase = np.angle(np.sqrt(complex(pot.dQ(a))))
        return [(2.0 / 3.0) * (arg_hbar - phase + k * np.pi) for k in range(3)]
    phase = np.angle(np.sqrt(complex(pot.d2Q(a)) / 2))
    return [0.5 * (arg_hbar - phase + k * np.pi) for k in range(4)]


def _lattice(points, period, reps=3):
    out = []
    for i, z in enumerate(points):
        for k in range(-reps, reps + 1):
            out.append((i, z + k * period))
    return out


def trace_curve(pot: PotentialSpec, tps: list, src: int, angle: float, arg_hbar: float,
                ymax: float = YMAX, max_length: float = MAX_LENGTH) -> StokesCurve:
    a = tps[src].location
    period = 2 * np.pi
    others = [(i, z) for i, z in _lattice([t.location for t in tps], period)
              if abs(z - a) > 1e-9]
    start_r = 1e-3
    x = a + start_r * np.exp(1j * angle)
    w = np.sqrt(complex(pot.Q0(x)))
    d = _direction(w, arg_hbar)
    if (d * np.exp(-1j * angle)).real < 0:
        w = -w
    ref = _fixed_sqrt(pot, x)
    index = 1 if (w / ref).real >= 0 else -1
    pts = [complex(a), complex(x)]

    def wsq(z, prev):
        r = np.sqrt(complex(pot.Q0(z)))
        return r if abs(r - prev) <= abs(r + prev) else -r

    def f(z, prev):
        ww = wsq(z, prev)
        return _direction(ww, arg_hbar), ww

    s = start_r
    end, target = "open", None
    while s < max_length:
        dist = min(abs(x - z) for _, z in others) if others else np.inf
        h = min(MAX_STEP, 0.25 * max(dist, 1e-7), 0.25 * abs(x - a) + MAX_STEP * 0.1)
        k1, w1 = f(x, w)
        k2, _ = f(x + 0.5 * h * k1, w1)
        k3, _ = f(x + 0.5 * h * k2, w1)
        k4, w4 = f(x + h * k3, w1)
        x = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        w = wsq(x, w4)
        s += h
        pts.append(complex(x))
        if abs(x.imag) > ymax:
            end = "top" if x.imag > 0 else "bottom"
            break
        near = [(i, z) for i, z in others if abs(x - z) < SADDLE_TOL]
        if near:
            end, target = "tp", near[0][0]
            pts[-1] = complex(near[0][1])
            break
    return StokesCurve(src, index, pts, end, target, float(angle))


def _pair_cuts(tps: list) -> list:
    """Cuts joining consecutive turning points through each well."""
    cuts = []
    simple = [t for t in tps if t.multiplicity == 1]
    for i in range(0, len(simple) - 1, 2):
        cuts.append((simple[i].location, simple[i + 1].location))
    return cuts


def _regions(curves: list) -> list:
    """Asymptotic regions: consecutive boundary hits along the top and bottom edges."""
    regs = []
    for side in ("top", "bottom"):
        hits = sorted((c.points[-1].real, i) for i, c in enumerate(curves) if c.end == side)
        for (x0, i0), (x1, i1) in zip(hits[:-1], hits[1:]):
            regs.append({"side": side, "between": [i0, i1], "span": [x0, x1]})
    return regs


def trace_graph(N: int, E: complex, arg_hbar: float, window=(0.0, 2 * np.pi),
                ymax: float = YMAX, cut_pairing: str = "well") -> StokesGraph:
    """All Stokes curves from turning points with real part in ``window``.

    The turning point list covers whole periods so that connection targets
    are always labelled by an index of the list (modulo 2 pi).
    """
    if not -np.pi / 2 < arg_hbar < np.pi / 2:
        raise ValueError("arg_hbar must lie in (-pi/2, pi/2)")
    pot = PotentialSpec(N, complex(E), FIXED)
    lo, hi = window
    tps = turning_points(pot, (lo, hi)) if hi > lo else []
    curves = []
    for i, tp in enumerate(tps):
        for ang in seed_angles(pot, tp, arg_hbar):
            curves.append(trace_curve(pot, tps, i, ang, arg_hbar, ymax))
    # saddle targets outside the window are identified modulo 2 pi by _lattice;
    # when the window spans less than a period they may be missing, which is fine
    cuts = _pair_cuts(tps) if cut_pairing == "well" else []
    return StokesGraph(N, complex(E), float(arg_hbar), (float(lo), float(hi)), tps, curves,
                       cuts, _regions(curves), ymax)


# ---------------------------------------------------------------- mutations

@dataclass
class Mutation:
    angle: float | None
    bracket: tuple
    before: tuple
    after: tuple
    at: tuple | None = None
    saddles: int = 0


def detect_mutation(N: int, E: complex, sweep=(-0.2, 0.2), samples: int = 9,
                    resolution: float = 1e-6, window=(0.0, 2 * np.pi)) -> list[Mutation]:
    """Angles where the incidence signature changes.

    The sweep is sampled (always including 0 if it lies inside), neighbouring
    samples are compared, and each change is bisected down to ``resolution``.
    """
    lo, hi = sweep
    if lo <= -np.pi / 2 or hi >= np.pi / 2:
        raise ValueError("sweep must exclude +-pi/2")
    grid = list(np.linspace(lo, hi, samples))
    if lo < 0 < hi and 0.0 not in grid:
        grid.append(0.0)
    grid = sorted(set(float(g) for g in grid))
    cache = {}

    def graph(a):
        if a not in cache:
            cache[a] = trace_graph(N, E, a, window)
        return cache[a]

    sigs = [graph(a).signature() for a in grid]
    out = []
    i = 0
    while i < len(grid) - 1:
        if sigs[i] == sigs[i + 1]:
            i += 1
            continue
        # isolated degenerate sample: differs from both neighbours
        if i + 2 < len(grid) and sigs[i + 1] != sigs[i + 2]:
            a = grid[i + 1]
            g = graph(a)
            out.append(Mutation(a, (a, a), sigs[i], sigs[i + 2], sigs[i + 1],
                                len(g.saddle_connections())))
            i += 2
            continue
        a, b = grid[i], grid[i + 1]
        sa, sb = sigs[i], sigs[i + 1]
        while b - a > resolution:
            m = 0.5 * (a + b)
            sm = graph(m).signature()
            if sm == sa:
                a = m
            elif sm == sb:
                b = m
            else:
                # a degenerate signature strictly inside: keep narrowing on the left change
                b, sb = m, sm
        out.append(Mutation(0.5 * (a + b), (a, b), sa, sb))
        i += 1
    return out


def mirror_signature(sig: tuple) -> tuple:
    """Image under complex conjugation of x: top and bottom swap."""
    swap = {"top": "bottom", "bottom": "top"}
    return tuple(sorted((s, swap.get(t, t), i) for s, t, i in sig))


def hausdorff_mod(a: list, b: list, period: float) -> float:
    """Symmetric Hausdorff distance between two vertex clouds with real parts mod period."""
    A = np.asarray(a)
    B = np.asarray(b)
    if A.size == 0 and B.size == 0:
        return 0.0
    if A.size == 0 or B.size == 0:
        return float("inf")

    def wrap(z):
        return np.mod(z.real, period) + 1j * z.imag

    A, B = wrap(A), wrap(B)

    def one(P, R):
        best = 0.0
        for z in P:
            d = np.abs(R - z)
            d2 = np.abs(R - (z - period))
            d3 = np.abs(R - (z + period))
            best = max(best, float(min(d.min(), d2.min(), d3.min())))
        return best

    return max(one(A, B), one(B, A))


def translate(graph: StokesGraph, shift: float) -> list:
    return [z + shift for c in graph.curves for z in c.points]


# ---------------------------------------------------------------- export

def _header(graph: StokesGraph) -> dict:
    return {"N": graph.N, "E": [graph.E.real, graph.E.imag], "arg_hbar": graph.arg_hbar,
            "window": list(graph.window), "ymax": graph.ymax}


def graph_to_dict(graph: StokesGraph) -> dict:
    return {
        **_header(graph),
        "turning_points": [{"x": [t.location.real, t.location.imag],
                            "multiplicity": t.multiplicity, "well": t.well_index}
                           for t in graph.turning_points],
        "curves": [{"source": c.source, "index": c.index, "end": c.end, "target": c.target,
                    "seed_angle": c.seed_angle,
                    "points": [[z.real, z.imag] for z in c.points]} for c in graph.curves],
        "cuts": [[[a.real, a.imag], [b.real, b.imag]] for a, b in graph.cuts],
        "regions": graph.regions,
    }


def graph_from_dict(d: dict) -> StokesGraph:
    tps = [TurningPoint(complex(*t["x"]), t["multiplicity"], t["well"]) for t in d["turning_points"]]
    curves = [StokesCurve(c["source"], c["index"], [complex(*p) for p in c["points"]], c["end"],
                          c["target"], c["seed_angle"]) for c in d["curves"]]
    cuts = [(complex(*a), complex(*b)) for a, b in d["cuts"]]
    return StokesGraph(d["N"], complex(*d["E"]), d["arg_hbar"], tuple(d["window"]), tps, curves,
                       cuts, d["regions"], d.get("ymax", YMAX))


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def render_csv(graph: StokesGraph, header: str = "") -> str:
    buf = io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve_id", "x_re", "x_im", "index"])
    for k, c in enumerate(graph.curves):
        for z in c.points:
            w.writerow([k, _fmt(z.real), _fmt(z.imag), "+" if c.index > 0 else "-"])
    return buf.getvalue()


def render_json(graph: StokesGraph, header: str = "") -> str:
    d = graph_to_dict(graph)
    if header:
        d["config"] = header
    return json.dumps(d, sort_keys=True, indent=1)


def render_svg(graph: StokesGraph, header: str = "", width: int = 800, height: int = 400) -> str:
    lo, hi = graph.window
    if hi <= lo:
        hi = lo + 1.0
    ym = graph.ymax

    def px(z):
        return ((z.real - lo) / (hi - lo) * width, (ym - z.imag) / (2 * ym) * height)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    if header:
        safe = header.replace("--", "- -")
        out.append(f"<!-- {safe} -->")
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    for a, b in graph.cuts:
        (x0, y0), (x1, y1) = px(a), px(b)
        out.append(f'<line class="cut" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                   'stroke="black" stroke-dasharray="6,4"/>')
    for k, c in enumerate(graph.curves):
        d = " ".join(("M" if i == 0 else "L") + f"{x:.2f},{y:.2f}"
                     for i, (x, y) in enumerate(px(z) for z in c.points))
        color = "#c0392b" if c.index > 0 else "#2c3e80"
        out.append(f'<path class="stokes" id="c{k}" d="{d}" fill="none" stroke="{color}"/>')
        mid = c.points[len(c.points) // 2]
        x, y = px(mid)
        out.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="12">{"+" if c.index > 0 else "-"}</text>')
    for t in graph.turning_points:
        x, y = px(t.location)
        out.append(f'<circle class="tp" cx="{x:.2f}" cy="{y:.2f}" r="4" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_graph(graph: StokesGraph, fmt: str, path=None, header: str = "") -> str:
    fmt = fmt.lower()
    render = {"csv": render_csv, "json": render_json, "svg": render_svg}.get(fmt)
    if render is None:
        raise ValueError(f"unknown format {fmt!r}")
    text = render(graph, header)
    if path is not None:
        p = Path(path)
        try:
            p.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {p}: {exc}") from exc
    return text


def load_graph_json(path_or_text) -> StokesGraph:
    s = str(path_or_text)
    text = Path(s).read_text() if not s.lstrip().startswith("{") else s
    return graph_from_dict(json.loads(text))

"""Command-line front end: ``ewkb <command> [flags]``.

Parameters come from an optional TOML file (``--config``) overridden by
flags.  Every output starts with a header echoing the full resolved
configuration, so identical configs give byte-identical files.
Exit codes: 0 success, 2 configuration error, 3 numerical failure or a
failed identity check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = ("spectrum", "split", "stokes-graph", "ddp-check", "factorize", "borel",
            "sectors", "oracle")
SIDES = ("upper", "lower", "median")
FORMATS = {
    "spectrum": ("csv", "json"),
    "split": ("csv", "json"),
    "stokes-graph": ("svg", "csv", "json"),
    "ddp-check": ("txt", "json"),
    "factorize": ("txt", "json"),
    "borel": ("csv", "json"),
    "sectors": ("csv", "json"),
    "oracle": ("json", "csv"),
}
BASE_DEFAULTS = {
    "n": 1, "hbar": "0.5", "theta": "0", "orders": 8, "side": "median", "out": None,
    "format": None, "seed": 0, "bands": 2, "energy": 1.0, "arg_hbar": 0.1, "periods": 1,
    "level": 0, "pairing": "opposite",
}
COMMAND_DEFAULTS = {
    "borel": {"orders": 20, "hbar": "0.3,0.2"},
    "sectors": {"orders": 6, "side": "upper"},
    "split": {"hbar": "0.7,0.55,0.4"},
    "ddp-check": {"n": 1},
}
NUMERIC_ERRORS = (ArithmeticError, RuntimeError, np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parsing

_PI = re.compile(r"^\s*([+-]?[0-9.]*)\s*\*?\s*pi\s*(?:/\s*([0-9.]+))?\s*$")


def parse_angle(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    m = _PI.match(str(text))
    if m:
        num = m.group(1)
        k = float(num) if num not in ("", "+", "-") else (-1.0 if num == "-" else 1.0)
        den = float(m.group(2)) if m.group(2) else 1.0
        return k * math.pi / den
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse angle {text!r}") from exc


def parse_sweep(text, angle=False) -> list[float]:
    """'0.5', '0.7,0.55,0.4' or 'start:stop:count'."""
    conv = parse_angle if angle else float
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [conv(x) for x in text]
    s = str(text)
    try:
        if ":" in s:
            a, b, k = s.split(":")
            return [float(x) for x in np.linspace(conv(a), conv(b), int(k))]
        return [conv(x) for x in s.split(",") if x.strip()]
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse sweep {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ewkb", description="Exact WKB for V = 1 - cos(Nx)")
    ap.add_argument("--version", action="version", version=f"ewkb {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML file; flags override its values")
        p.add_argument("--n", type=int)
        p.add_argument("--hbar", help="value, comma list or start:stop:count")
        p.add_argument("--theta", help="value, comma list or start:stop:count; 'pi' allowed")
        p.add_argument("--orders", type=int)
        p.add_argument("--side", choices=SIDES)
        p.add_argument("--out")
        p.add_argument("--format", choices=sorted({f for v in FORMATS.values() for f in v}))
        p.add_argument("--seed", type=int)
        p.add_argument("--bands", type=int)
        p.add_argument("--level", type=int)
        if name == "stokes-graph":
            p.add_argument("--energy", type=float)
            p.add_argument("--arg-hbar", dest="arg_hbar", type=float)
            p.add_argument("--periods", type=int)
        if name == "borel":
            p.add_argument("--pairing", choices=("opposite", "same"))
    return ap


def resolve_config(ns: argparse.Namespace) -> dict:
    cfg = dict(BASE_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(ns.command, {}))
    if getattr(ns, "config", None):
        try:
            with open(ns.config, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML: {exc}") from exc
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(data) - set(BASE_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for k in BASE_DEFAULTS:
        v = getattr(ns, k, None)
        if v is not None:
            cfg[k] = v
    cfg["command"] = ns.command
    if cfg["format"] is None:
        cfg["format"] = FORMATS[ns.command][0]
    validate(cfg)
    return cfg


def validate(cfg: dict):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(isinstance(cfg["n"], int) and cfg["n"] >= 1, "n must be an integer >= 1")
    hb = parse_sweep(cfg["hbar"])
    need(hb and all(h > 0 for h in hb), "hbar must be positive")
    parse_sweep(cfg["theta"], angle=True)
    need(isinstance(cfg["orders"], int) and cfg["orders"] >= 0, "orders must be >= 0")
    need(cfg["side"] in SIDES, f"side must be one of {SIDES}")
    need(cfg["format"] in FORMATS[cfg["command"]],
         f"format for {cfg['command']} must be one of {FORMATS[cfg['command']]}")
    need(isinstance(cfg["bands"], int) and cfg["bands"] >= 1, "bands must be >= 1")
    need(isinstance(cfg["seed"], int), "seed must be an integer")
    need(-math.pi / 2 < float(cfg["arg_hbar"]) < math.pi / 2, "arg-hbar must lie in (-pi/2, pi/2)")
    need(isinstance(cfg["periods"], int) and cfg["periods"] >= 0, "periods must be >= 0")
    need(cfg["pairing"] in ("opposite", "same"), "pairing must be opposite or same")
    if cfg["command"] in ("ddp-check", "factorize"):
        need(cfg["n"] <= 8, "symbolic checks are capped at n = 8")
    if cfg["command"] == "split":
        need(cfg["n"] in (1, 2), "closed splitting formulas exist for n = 1, 2 only")
    if cfg["command"] == "borel":
        need(cfg["orders"] >= 10, "borel needs orders >= 10")


def header_lines(cfg: dict) -> list[str]:
    out = [f"ewkb {__version__}"]
    for k in sorted(cfg):
        out.append(f"{k} = {cfg[k]}")
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("EWKB_THREADS", "1")))
    except ValueError:
        raise ConfigError("EWKB_THREADS must be an integer")


def _pmap(fn, items):
    items = list(items)
    n = min(_threads(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _f(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _table(cfg, columns, rows, trailer=()):
    if cfg["format"] == "json":
        return json.dumps({"config": {k: cfg[k] for k in sorted(cfg)}, "version": __version__,
                           "columns": columns, "rows": rows, "notes": list(trailer)},
                          indent=1, sort_keys=True, default=str) + "\n"
    buf = io.StringIO()
    for line in header_lines(cfg):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_f(r.get(c)) for c in columns])
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_spectrum(cfg):
    from .borel import perturbative_energy_series
    from .oracle import BlochProblem, bloch_decompose
    from .quantize import dw_spectrum, splitting_records
    from .wkb import residue_F_poly

    N = cfg["n"]
    table = residue_F_poly(N, cfg["orders"])
    pert = perturbative_energy_series(N, 0, cfg["orders"], F_table=table, physical=False)
    grid = [(h, t) for h in parse_sweep(cfg["hbar"]) for t in parse_sweep(cfg["theta"], True)]

    def point(ht):
        h, th = ht
        dw = {(r.p, r.n): r for r in dw_spectrum(N, h, th, cfg["bands"], side=cfg["side"],
                                                  F_table=table)}
        ora = {(r.p, r.n): r for r in bloch_decompose(BlochProblem(N, h, th), N * cfg["bands"])}
        spl = {}
        if N in (1, 2) and math.exp(-16.0 / (N * h)) < 0.1:
            side = cfg["side"]
            e_pert = float(pert(h).real)
            spl = {(r.p, r.n): r for r in splitting_records(N, h, th, side, e_pert)}
        rows = []
        for key in sorted(set(dw) | set(ora)):
            row = {"N": N, "hbar": h, "theta": th, "p": key[0], "n": key[1]}
            for tag, src in (("DWWKB", dw), ("Oracle", ora), ("SplittingFormula", spl)):
                r = src.get(key)
                if r is not None:
                    row[f"E_{tag}"] = float(r.energy.real)
                    row[f"E_{tag}_over_hbar"] = float(r.rescaled.real)
                    if tag != "Oracle":
                        row[f"E_{tag}_imag"] = float(r.energy.imag)
            if "E_DWWKB" in row and "E_Oracle" in row:
                row["rel_err"] = abs(row["E_DWWKB"] - row["E_Oracle"]) / abs(row["E_Oracle"])
            rows.append(row)
        return rows

    rows = [r for chunk in _pmap(point, grid) for r in chunk]
    cols = ["N", "hbar", "theta", "p", "n", "E_DWWKB", "E_DWWKB_over_hbar", "E_DWWKB_imag",
            "E_Oracle", "E_Oracle_over_hbar", "E_SplittingFormula",
            "E_SplittingFormula_over_hbar", "E_SplittingFormula_imag", "rel_err"]
    return _table(cfg, cols, rows), 0


def cmd_split(cfg):
    from .oracle import band_splitting
    from .quantize import splitting_estimate

    N = cfg["n"]
    th = parse_sweep(cfg["theta"], True)[0]
    c = 64.0 if N == 1 else 32.0

    def point(h):
        B0 = math.exp(-16.0 / (N * h))
        lead = 2 * math.sqrt(c * B0 / (math.pi * h))
        gap = band_splitting(N, h)
        measured = gap / (N * h)
        row = {"N": N, "hbar": h, "B0": B0, "oracle_gap": gap, "oracle_gap_rescaled": measured,
               "leading_formula": lead, "ratio": measured / lead}
        if B0 < 0.1:
            d = splitting_estimate(N, h, th, 0, "upper")
            row.update(theta=th, delta_instanton=d.instanton, delta_bion_real=d.bion_real,
                       delta_bion_imag=d.bion_imag)
        return row

    rows = _pmap(point, parse_sweep(cfg["hbar"]))
    cols = ["N", "hbar", "B0", "oracle_gap", "oracle_gap_rescaled", "leading_formula", "ratio",
            "theta", "delta_instanton", "delta_bion_real", "delta_bion_imag"]
    return _table(cfg, cols, rows), 0


def cmd_stokes(cfg):
    from .stokes import export_graph, trace_graph

    g = trace_graph(cfg["n"], cfg["energy"], float(cfg["arg_hbar"]),
                    (0.0, 2 * math.pi * cfg["periods"]))
    return export_graph(g, cfg["format"], None, "\n".join(header_lines(cfg))), 0


def _report(cfg, lines, holds, data):
    if cfg["format"] == "json":
        return json.dumps({"config": {k: cfg[k] for k in sorted(cfg)}, "version": __version__,
                           "holds": holds, "lines": lines, **data},
                          indent=1, sort_keys=True, default=str) + "\n"
    return "".join(f"# {h}\n" for h in header_lines(cfg)) + "\n".join(lines) + "\n"


def cmd_ddp(cfg):
    from .resurgence import UPPER, dp_normalized, ddp_check, stokes_automorphism

    N = cfg["n"]
    rep = ddp_check(N)
    lines = []
    for p in range(N):
        img = stokes_automorphism(dp_normalized(p, N, UPPER))
        lines.append(f"p={p}: S[D_p^+] = {img.text()}")
    lines.append(f"xi: {rep.details['xi']}  alpha/beta: {rep.details['alpha_beta']}")
    lines.append(rep.summary("sectors"))
    return _report(cfg, lines, rep.holds, {"passed": rep.passed, "total": rep.total}), \
        0 if rep.holds else 3


def cmd_factorize(cfg):
    from .quantize import condition_airy
    from .resurgence import factorization_check, perfect_square_check, singlet_labels_exact

    N = cfg["n"]
    rep = factorization_check(N)
    lines = [f"P_{N}(X) = {rep.witness}",
             f"product form: {rep.details['product']}  binomial form: {rep.details['binomial']}"]
    holds = rep.holds
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    thetas = parse_sweep(cfg["theta"], True)
    for _ in range(100):
        A = complex(*rng.normal(size=2)) + 1.5
        B = complex(*rng.normal(size=2)) * 0.5 + 0.5
        th = thetas[0]
        cond = condition_airy(A, B, th, N, "upper")
        d = cond.evaluator(0.0)
        r = abs(d - cond.factor_product(0.0)) / max(1.0, abs(d))
        worst = max(worst, r)
    num_ok = worst < 1e-10
    holds = holds and num_ok
    lines.append(f"numeric spot checks: 100 points, max residual {worst:.3e}")
    if N % 2 == 0:
        ps = perfect_square_check(N)
        holds = holds and ps.holds
        lines.append(f"theta = pi perfect square: {ps.summary('pairs')}")
    else:
        lines.append(f"singlet at theta = 0: p = {singlet_labels_exact(N, 0)}")
        lines.append(f"singlet at theta = pi: p = {singlet_labels_exact(N, 1)}")
    lines.append(("PASS" if holds else "FAIL") + f" factorization N={N}")
    return _report(cfg, lines, holds, {"max_residual": worst}), 0 if holds else 3


def cmd_borel(cfg):
    from .borel import (borel_pade_sum, borel_singularities, lateral_discontinuity,
                        perturbative_energy_series, predicted_bion_imaginary)

    N = cfg["n"]
    series = perturbative_energy_series(N, cfg["level"], cfg["orders"], physical=False)
    sgn = -1.0 if cfg["pairing"] == "opposite" else 1.0

    def point(h):
        up = borel_pade_sum(series, h, 0.1)
        dn = borel_pade_sum(series, h, -0.1)
        disc = lateral_discontinuity(series, h)
        pred = predicted_bion_imaginary(N, h)
        return {"N": N, "hbar": h, "S_plus_re": up.value.real, "S_plus_im": up.value.imag,
                "S_minus_im": dn.value.imag, "sum_error": up.error, "disc": disc.value,
                "disc_error": disc.error, "upper_bound": disc.upper_bound,
                "predicted": pred, "ratio": sgn * disc.value / pred}

    rows = _pmap(point, parse_sweep(cfg["hbar"]))
    trailer = []
    if series.coeffs.size >= 20:
        sg = borel_singularities(series)
        loc = "inconclusive" if sg.location is None else f"{sg.location.real:.6g}"
        trailer.append(f"nearest positive Borel singularity: {loc} (spread {sg.spread:.3g})")
    cols = ["N", "hbar", "S_plus_re", "S_plus_im", "S_minus_im", "sum_error", "disc",
            "disc_error", "upper_bound", "predicted", "ratio"]
    return _table(cfg, cols, rows, trailer), 0


def cmd_sectors(cfg):
    from .resurgence import sector_coefficient, sector_expansion_check

    N, order, side = cfg["n"], cfg["orders"], cfg["side"]
    if side == "median":
        raise ConfigError("sectors needs side upper or lower")
    rows = []
    for p in range(N):
        for Q in range(-order, order + 1):
            for K in range(0, order + 1):
                if abs(Q) + 2 * K > order or abs(Q) + K == 0:
                    continue
                c = sector_coefficient(p, Q, K, N, side)
                rows.append({"p": p, "Q": Q, "K": K, "side": side, "coefficient": c.text()})
    rep = sector_expansion_check(order, side) if order <= 8 else None
    trailer = [f"brute-force log expansion: {rep.summary()}"] if rep else []
    return _table(cfg, ["p", "Q", "K", "side", "coefficient"], rows, trailer), \
        0 if rep is None or rep.holds else 3


def cmd_oracle(cfg):
    from .oracle import BlochProblem, bloch_decompose

    N = cfg["n"]
    grid = [(h, t) for h in parse_sweep(cfg["hbar"]) for t in parse_sweep(cfg["theta"], True)]

    def point(ht):
        h, th = ht
        return [{"N": N, "hbar": h, "theta": th, "p": r.p, "n": r.n, "E": float(r.energy.real),
                 "E_over_hbar": float(r.rescaled.real), "flagged": r.flagged}
                for r in bloch_decompose(BlochProblem(N, h, th), N * cfg["bands"])]

    rows = [r for chunk in _pmap(point, grid) for r in chunk]
    return _table(cfg, ["N", "hbar", "theta", "p", "n", "E", "E_over_hbar", "flagged"], rows), 0


HANDLERS = {
    "spectrum": cmd_spectrum, "split": cmd_split, "stokes-graph": cmd_stokes,
    "ddp-check": cmd_ddp, "factorize": cmd_factorize, "borel": cmd_borel,
    "sectors": cmd_sectors, "oracle": cmd_oracle,
}


def run(cfg: dict) -> tuple[str, int]:
    return HANDLERS[cfg["command"]](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)  # argparse itself exits with 2 on bad flags
    try:
        cfg = resolve_config(ns)
        text, code = run(cfg)
    except ConfigError as exc:
        print(f"ewkb: config error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"ewkb: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if cfg["out"]:
        try:
            with open(cfg["out"], "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"ewkb: cannot write output: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

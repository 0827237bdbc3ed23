"""Batch experiment front-end.

Subcommands: dmt (analytic curves + SVG chart), outage (Monte Carlo outage
sweep + slope summary), simulate (decoder-level session error sweep), repair
(end-to-end storage repair sweep), selftest (algebra and oracle-equivalence
checks).  Every output file embeds a provenance header (version + full
config including the master seed) sufficient to re-run it bit-identically;
all merged statistics are integer counts, so results do not depend on the
worker count.  Exit codes: 0 success, 2 configuration error, 3 runtime
error, 4 statistical insufficiency.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .channel import SnrPoint, trial_rng
from .dmt import DmtCurve, emit_fig1
from .lift import Fragment, lift, unlift
from .outage import InsufficientSamplesError, OutageSpec, run_outage_sweep
from .parallel import map_tasks
from .protocol import _repair_range, _session_range
from .storage import StorageConfig
from . import algebra

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_STATS = 4

DMT_HEADER = "r,d_optimal,d_proposed,d_tdma"
OUTAGE_HEADER = "scheme,K,r,offset,snr_db,trials,outages,p_hat,ci_lo,ci_hi"
SIMULATE_HEADER = "scheme,m,decoder,snr_db,trials,session_errors,session_err_rate,visited_mean"
REPAIR_HEADER = "snr_db,trials,session_err_rate,share_fail_rate,repair_fail_rate,scheme"

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c")


def _parse_snr_grid(text: str) -> tuple[float, ...]:
    """Parse 'lo:hi:step' (inclusive, dB) or a single dB value."""
    parts = text.split(":")
    if len(parts) == 1:
        return (float(parts[0]),)
    if len(parts) != 3:
        raise ValueError(f"SNR grid must be 'lo:hi:step' or a single value, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"bad SNR grid {text!r}")
    grid = []
    v = lo
    while v <= hi + 1e-9:
        grid.append(round(v, 9))
        v += step
    return tuple(grid)


def _provenance(command: str, config: dict) -> list[str]:
    payload = json.dumps({"command": command, **config}, sort_keys=True)
    return [f"wstsim {__version__}", f"config: {payload}"]


def _write_csv(path: Path, provenance: list[str], header: str, rows) -> None:
    lines = [f"# {p}" for p in provenance] + [header] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_dmt_svg(path: Path, rows, provenance: list[str]) -> None:
    """Hand-rolled SVG line chart: deterministic bytes for identical inputs."""
    width, height = 640, 480
    ml, mr, mt, mb = 64, 16, 20, 48
    plot_w, plot_h = width - ml - mr, height - mt - mb
    xs = [float(r[0]) for r in rows]
    x_max = max(xs) or 1.0
    y_max = max(float(v) for r in rows for v in r[1:]) or 1.0

    def px(x: float) -> float:
        return ml + plot_w * x / x_max

    def py(y: float) -> float:
        return mt + plot_h * (1.0 - y / y_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- {' | '.join(provenance)} -->",
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + plot_h}" x2="{ml + plot_w}" y2="{mt + plot_h}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + plot_h}" stroke="black"/>',
    ]
    n_ticks = 5
    for i in range(n_ticks + 1):
        xv = x_max * i / n_ticks
        yv = y_max * i / n_ticks
        parts.append(
            f'<line x1="{px(xv):.2f}" y1="{mt + plot_h}" x2="{px(xv):.2f}" '
            f'y2="{mt + plot_h + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(xv):.2f}" y="{mt + plot_h + 20}" font-size="12" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )
        parts.append(
            f'<line x1="{ml - 5}" y1="{py(yv):.2f}" x2="{ml}" y2="{py(yv):.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{ml - 9}" y="{py(yv) + 4:.2f}" font-size="12" '
            f'text-anchor="end">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{ml + plot_w / 2:.2f}" y="{height - 10}" font-size="14" '
        f'text-anchor="middle">r</text>'
    )
    parts.append(
        f'<text x="18" y="{mt + plot_h / 2:.2f}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 18 {mt + plot_h / 2:.2f})">d(r)</text>'
    )
    labels = ("optimal MAC", "pair scheme", "TDMA")
    for idx, label in enumerate(labels):
        pts = " ".join(f"{px(float(r[0])):.2f},{py(float(r[idx + 1])):.2f}" for r in rows)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{_SVG_COLORS[idx]}" stroke-width="2"/>'
        )
        ly = mt + 18 + 18 * idx
        parts.append(
            f'<line x1="{ml + plot_w - 150}" y1="{ly}" x2="{ml + plot_w - 120}" y2="{ly}" '
            f'stroke="{_SVG_COLORS[idx]}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{ml + plot_w - 114}" y="{ly + 4}" font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def cmd_dmt(args) -> int:
    rows = emit_fig1(args.K, args.grid)
    config = {"K": args.K, "grid": args.grid}
    prov = _provenance("dmt", config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"dmt_K{args.K}.csv"
    _write_csv(
        csv_path,
        prov,
        DMT_HEADER,
        ([_fmt(float(v)) for v in row] for row in rows),
    )
    svg_path = out_dir / f"dmt_K{args.K}.svg"
    _write_dmt_svg(svg_path, rows, prov)
    print(f"dmt: wrote {csv_path} and {svg_path} ({len(rows)} grid rows)")
    return EXIT_OK


def cmd_outage(args) -> int:
    spec = OutageSpec(
        scheme=args.scheme,
        K=args.K,
        r=Fraction(args.r),
        rate_offset_bits=args.offset,
        snr_grid_db=_parse_snr_grid(args.snr_grid),
        trials=args.trials,
        seed=args.seed,
    )
    start = time.perf_counter()
    est = run_outage_sweep(spec, workers=args.workers)
    elapsed = time.perf_counter() - start
    config = {
        "scheme": spec.scheme,
        "K": spec.K,
        "r": str(spec.r),
        "offset": spec.rate_offset_bits,
        "snr_grid_db": list(spec.snr_grid_db),
        "trials": spec.trials,
        "seed": spec.seed,
    }
    prov = _provenance("outage", config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"outage_{spec.scheme}_K{spec.K}.csv"
    _write_csv(
        csv_path,
        prov,
        OUTAGE_HEADER,
        (
            [
                spec.scheme,
                str(spec.K),
                str(spec.r),
                _fmt(spec.rate_offset_bits),
                _fmt(c.snr_db),
                str(c.trials),
                str(c.outages),
                _fmt(c.p_hat),
                _fmt(c.ci_lo),
                _fmt(c.ci_hi),
            ]
            for c in est.cells
        ),
    )
    summary = {
        "provenance": {"version": __version__, "command": "outage", **config},
        "slope": None
        if est.slope is None
        else {
            "d_hat": est.slope.d_hat,
            "stderr": est.slope.stderr,
            "used_points": est.slope.used_points,
            "excluded_points": est.slope.excluded_points,
        },
        "slope_error": est.slope_error,
    }
    json_path = out_dir / f"outage_{spec.scheme}_K{spec.K}_summary.json"
    json_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(
        f"outage: {spec.trials} trials x {len(spec.snr_grid_db)} SNR points "
        f"in {elapsed:.1f}s -> {csv_path}"
    )
    if est.slope is None:
        print(f"outage: slope fit unavailable: {est.slope_error}", file=sys.stderr)
        return EXIT_STATS
    print(f"outage: d_hat = {est.slope.d_hat:.3f} (stderr {est.slope.stderr:.3f})")
    return EXIT_OK


def _blocked_ranges(trials: int, block: int = 250):
    start = 0
    while start < trials:
        stop = min(start + block, trials)
        yield start, stop
        start = stop


def cmd_simulate(args) -> int:
    snr_grid = _parse_snr_grid(args.snr_grid)
    decoder_mode = "oracle" if args.decoder == "ml" else "sphere"
    tasks = [
        (args.m, db, args.scheme, decoder_mode, args.seed, idx, args.trials, start, stop)
        for idx, db in enumerate(snr_grid)
        for start, stop in _blocked_ranges(args.trials)
    ]
    start_t = time.perf_counter()
    totals = {idx: np.zeros(3, dtype=np.int64) for idx in range(len(snr_grid))}
    for idx, counts in map_tasks(_session_range, tasks, args.workers):
        totals[idx] += counts
    elapsed = time.perf_counter() - start_t
    config = {
        "scheme": args.scheme,
        "m": args.m,
        "decoder": args.decoder,
        "snr_grid_db": list(snr_grid),
        "trials": args.trials,
        "seed": args.seed,
    }
    prov = _provenance("simulate", config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"simulate_{args.scheme}_m{args.m}_{args.decoder}.csv"
    rows = []
    visited_total = 0
    for idx, db in enumerate(snr_grid):
        n, errors, visited = (int(v) for v in totals[idx])
        visited_total += visited
        rows.append(
            [
                args.scheme,
                str(args.m),
                args.decoder,
                _fmt(float(db)),
                str(n),
                str(errors),
                _fmt(errors / n),
                _fmt(visited / n),
            ]
        )
    _write_csv(csv_path, prov, SIMULATE_HEADER, rows)
    mean_visited = visited_total / (args.trials * len(snr_grid))
    print(
        f"simulate: {args.trials} trials x {len(snr_grid)} SNR points in "
        f"{elapsed:.1f}s, visited-node mean {mean_visited:.1f} -> {csv_path}"
    )
    return EXIT_OK


def cmd_repair(args) -> int:
    cfg = StorageConfig(n=args.n, k=args.k, d=args.d, fragment_bits=args.fragment_bits)
    snr_grid = _parse_snr_grid(args.snr_grid)
    decoder_mode = "oracle" if args.decoder == "ml" else "sphere"
    tasks = [
        (
            cfg,
            args.m,
            db,
            args.scheme,
            decoder_mode,
            args.seed,
            idx,
            args.trials,
            start,
            stop,
            bool(args.noiseless),
        )
        for idx, db in enumerate(snr_grid)
        for start, stop in _blocked_ranges(args.trials)
    ]
    start_t = time.perf_counter()
    totals = {idx: np.zeros(6, dtype=np.int64) for idx in range(len(snr_grid))}
    for idx, counts in map_tasks(_repair_range, tasks, args.workers):
        totals[idx] += counts
    elapsed = time.perf_counter() - start_t
    config = {
        "n": args.n,
        "k": args.k,
        "d": args.d,
        "fragment_bits": args.fragment_bits,
        "m": args.m,
        "scheme": args.scheme,
        "decoder": args.decoder,
        "snr_grid_db": list(snr_grid),
        "trials": args.trials,
        "seed": args.seed,
        "noiseless": bool(args.noiseless),
    }
    prov = _provenance("repair", config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"repair_{args.scheme}.csv"
    rows = []
    for idx, db in enumerate(snr_grid):
        sessions, errored, shares, failed, repairs, repair_fail = (
            int(v) for v in totals[idx]
        )
        rows.append(
            [
                _fmt(float(db)),
                str(repairs),
                _fmt(errored / sessions),
                _fmt(failed / shares),
                _fmt(repair_fail / repairs),
                args.scheme,
            ]
        )
    _write_csv(csv_path, prov, REPAIR_HEADER, rows)
    print(
        f"repair: {args.trials} trials x {len(snr_grid)} SNR points in "
        f"{elapsed:.1f}s -> {csv_path}"
    )
    return EXIT_OK


def _selftest_algebra(rng) -> tuple[bool, str]:
    for root in algebra.ROOTS:
        if abs(algebra.min_poly_value(root)) > 1e-12:
            return False, f"minimal polynomial fails at root {root}"
    for _ in range(500):
        coeffs = rng.integers(-50, 51, size=12)
        a = algebra.FieldElement(
            algebra.GaussianInt(int(coeffs[0]), int(coeffs[1])),
            algebra.GaussianInt(int(coeffs[2]), int(coeffs[3])),
            algebra.GaussianInt(int(coeffs[4]), int(coeffs[5])),
        )
        b = algebra.FieldElement(
            algebra.GaussianInt(int(coeffs[6]), int(coeffs[7])),
            algebra.GaussianInt(int(coeffs[8]), int(coeffs[9])),
            algebra.GaussianInt(int(coeffs[10]), int(coeffs[11])),
        )
        ta, tb = algebra.apply_tau(a, 1), algebra.apply_tau(b, 1)
        if algebra.apply_tau(a + b, 1) != ta + tb or algebra.apply_tau(a * b, 1) != ta * tb:
            return False, "tau is not a ring homomorphism"
        if algebra.apply_tau(algebra.apply_tau(ta, 1), 1) != a:
            return False, "tau^3 is not the identity"
        algebra.trace_norm(a)  # raises if Galois action is broken
        for j in range(3):
            lhs = algebra.embed(ta, j)
            rhs = algebra.embed(a, (j + 1) % 3)
            if abs(lhs - rhs) > 1e-6:
                return False, "embeddings do not shift cyclically under tau"
    return True, "minimal polynomial, homomorphism, tau^3, trace/norm, embedding shift"


def _selftest_lift() -> tuple[bool, str]:
    seen = set()
    for i in range(64):
        frag = Fragment(format(i, "06b"), 2)
        point = lift(frag)
        if unlift(point, 2) != frag:
            return False, f"round trip failed for {frag.bits}"
        seen.add(point.element.coefficients())
    if len(seen) != 64:
        return False, "lift is not injective at m=2"
    return True, "lift bijective on all 64 fragments at m=2"


def _selftest_decoder(rng) -> tuple[bool, str]:
    snr = SnrPoint(10.0)
    from .channel import draw_session, transmit
    from .decoder import decode_session
    from .encoder import build_pair_codeword, dispersion_basis
    from .lift import random_fragment

    for _ in range(50):
        p1 = lift(random_fragment(rng, 2))
        p2 = lift(random_fragment(rng, 2))
        codeword = build_pair_codeword(p1, p2, 2)
        chan, noise = draw_session(rng, 2, 1, 2, 3)
        received = transmit(codeword, chan, noise, snr)
        basis = dispersion_basis(2, 2)
        a = decode_session(received, chan, basis, snr, 2, mode="sphere")
        b = decode_session(received, chan, basis, snr, 2, mode="oracle")
        if a.points != b.points:
            return False, "sphere decoder disagrees with the ML oracle"
        if abs(a.result.metric - b.result.metric) > 1e-9:
            return False, "sphere metric disagrees with the ML oracle"
    return True, "sphere decoder == ML oracle on 50 noisy pair sessions"


def _selftest_dmt() -> tuple[bool, str]:
    from .dmt import SchemeParams, dmt_optimal_mac, dmt_proposed, dmt_tdma

    params = SchemeParams(K=10)
    opt = dmt_optimal_mac(params)
    expected = DmtCurve(
        (
            (Fraction(0), Fraction(2)),
            (Fraction(2, 11), Fraction(18, 11)),
            (Fraction(1, 5), Fraction(0)),
        )
    )
    if opt != expected:
        return False, "optimal MAC curve breakpoints are wrong"
    if dmt_proposed(params) != DmtCurve(((Fraction(0), Fraction(2)), (Fraction(1, 5), Fraction(0)))):
        return False, "pair-scheme curve breakpoints are wrong"
    if dmt_tdma(params) != DmtCurve(((Fraction(0), Fraction(2)), (Fraction(1, 10), Fraction(0)))):
        return False, "TDMA curve breakpoints are wrong"
    return True, "K=10 curve breakpoints exact"


def cmd_selftest(args) -> int:
    rng = trial_rng(args.seed)
    checks = [
        ("algebra", lambda: _selftest_algebra(rng)),
        ("lift", _selftest_lift),
        ("decoder", lambda: _selftest_decoder(rng)),
        ("dmt", _selftest_dmt),
    ]
    failed = False
    for name, fn in checks:
        ok, detail = fn()
        print(f"selftest {name}: {'ok' if ok else 'FAIL'} - {detail}")
        failed |= not ok
    return EXIT_RUNTIME if failed else EXIT_OK


def _add_common(parser, seeded: bool = True) -> None:
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument(
        "--workers",
        type=int,
        default=os.cpu_count() or 1,
        help="worker processes (results are worker-count independent)",
    )
    parser.add_argument("--config", default=None, help="JSON file with flag defaults")
    if seeded:
        parser.add_argument(
            "--seed", type=int, default=None, help="64-bit master seed (required)"
        )


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="wstsim",
        description="Wireless storage repair simulator: space-time codes over a fading MAC",
    )
    parser.add_argument("--version", action="version", version=f"wstsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser("dmt", help="emit analytic DMT curves (CSV + SVG)")
    p.add_argument("--K", type=int, default=10, help="number of helper nodes")
    p.add_argument("--grid", type=int, default=101, help="number of grid rows")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config", default=None)
    p.set_defaults(fn=cmd_dmt)
    subparsers["dmt"] = p

    p = sub.add_parser("outage", help="Monte Carlo outage sweep + slope estimate")
    p.add_argument("--scheme", choices=("tdma", "pair", "full-mac"), default="pair")
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--r", default="0", help="multiplexing gain (fraction or decimal)")
    p.add_argument("--offset", type=float, default=None, help="rate offset in bits")
    p.add_argument("--snr-grid", default="10:25:5", help="lo:hi:step in dB")
    p.add_argument("--trials", type=int, default=100000)
    _add_common(p)
    p.set_defaults(fn=cmd_outage)
    subparsers["outage"] = p

    p = sub.add_parser("simulate", help="decoder-level session error sweep")
    p.add_argument("--scheme", choices=("pair", "tdma"), default="pair")
    p.add_argument("--m", type=int, default=2, help="bits per QAM symbol (even)")
    p.add_argument("--decoder", choices=("sphere", "ml"), default="sphere")
    p.add_argument("--snr-grid", default="10:30:5")
    p.add_argument("--trials", type=int, default=1000)
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)
    subparsers["simulate"] = p

    p = sub.add_parser("repair", help="end-to-end storage repair sweep")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--fragment-bits", type=int, default=24)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--scheme", choices=("pair", "tdma"), default="pair")
    p.add_argument("--decoder", choices=("sphere", "ml"), default="sphere")
    p.add_argument("--snr-grid", default="10:30:5")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--noiseless", action="store_true", help="force W = 0")
    _add_common(p)
    p.set_defaults(fn=cmd_repair)
    subparsers["repair"] = p

    p = sub.add_parser("selftest", help="run algebra and oracle-equivalence checks")
    p.add_argument("--seed", type=int, default=12345)
    p.set_defaults(fn=cmd_selftest)
    subparsers["selftest"] = p

    return parser, subparsers


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    config_path = getattr(args, "config", None)
    if config_path:
        # config supplies defaults, explicit flags win: re-parse with the
        # subcommand's defaults replaced by the file contents
        try:
            data = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"wstsim: cannot read config {config_path}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        target = subparsers[args.command]
        known = {a.dest for a in target._actions}
        unknown = set(data) - known
        if unknown:
            print(f"wstsim: unknown config keys {sorted(unknown)}", file=sys.stderr)
            return EXIT_CONFIG
        target.set_defaults(**data)
        args = parser.parse_args(argv)
    if hasattr(args, "seed") and args.seed is None:
        print("wstsim: a master seed is required (--seed)", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "outage" and args.offset is None:
        # r = 0 means zero rate and no outage event; default to 1 bit there
        args.offset = 1.0 if Fraction(args.r) == 0 else 0.0
    try:
        return args.fn(args)
    except (ValueError, KeyError) as exc:
        print(f"wstsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientSamplesError as exc:
        print(f"wstsim: insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_STATS
    except OSError as exc:
        print(f"wstsim: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

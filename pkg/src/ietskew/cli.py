"""Command-line front end: ``iet-skew <command> [options]``.

Every run is a config -> artifact pipeline.  The parsed options form an
ExperimentConfig; its sha256 digest and the package version are embedded
in every artifact, so a saved artifact identifies the exact run that
produced it.  In rational mode the pipelines are exact and the artifacts
reproduce byte for byte from config + code version.

Artifacts go to ``--out`` (JSON, or CSV for deviation grids when the
path ends in .csv) with a one-line summary on stdout; without ``--out``
the artifact itself goes to stdout and the summary moves to stderr.
Errors exit nonzero with a machine-readable ``{"error": code, ...}``
line on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cocycle import StepCocycle, StripPoint
from .errors import BadConfig, IetSkewError
from .ergolab import (
    empirical_birkhoff_measure,
    fiber_histograms,
    translation_invariance_probe,
)
from .good_returns import (
    IntervalSet,
    balanced_times,
    check_sum_bound,
    good_return_search,
    recurrence_search,
    verify_certificate,
)
from .iet_core import (
    FLOAT,
    RATIONAL,
    Iet,
    Permutation,
    coerce_lengths,
    format_scalar,
    golden_iet,
    keane_check,
    letter_names,
    new_iet,
    sample_iet,
)
from .renorm import rauzy_step, start_induction, towers, zorich_step
from .spectrum import deviation_scan, lyapunov_exponents, renormalization_times


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("IETSKEW_WORKERS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# config and artifacts
# ---------------------------------------------------------------------------


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


@dataclass(frozen=True)
class ExperimentConfig:
    """What was asked for: the subcommand plus its fully-resolved options."""

    command: str
    params: dict

    def to_json(self) -> dict:
        return {"command": self.command, "params": self.params}

    def digest(self) -> str:
        return hashlib.sha256(_canonical(self.to_json()).encode()).hexdigest()


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    skip = {"func", "out"}
    params = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    return ExperimentConfig(args.command, params)


def _emit(args, cfg: ExperimentConfig, payload: dict, summary: str) -> int:
    doc = {
        "version": __version__,
        "config_digest": cfg.digest(),
        "config": cfg.to_json(),
        "result": payload,
    }
    text = json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return 0


def _emit_csv(args, cfg: ExperimentConfig, header, rows, summary: str) -> int:
    lines = [
        f"# ietskew {__version__}",
        f"# config_digest: {cfg.digest()}",
        f"# config: {_canonical(cfg.to_json())}",
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def _scalar(text: str):
    """Rational literals ("3/10") stay exact; anything else is a float
    unless it is a plain integer."""
    s = str(text).strip()
    if "/" in s:
        return Fraction(s)
    try:
        return int(s)
    except ValueError:
        return float(s)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise BadConfig("input file not found", path=path)
    except json.JSONDecodeError as exc:
        raise BadConfig("input file is not valid JSON", path=path, detail=str(exc))


def _unwrap(obj: dict, key: str) -> dict:
    """Accept bare descriptions and artifacts that embed one under result."""
    if key in obj and isinstance(obj[key], dict):
        return obj[key]
    result = obj.get("result")
    if isinstance(result, dict) and isinstance(result.get(key), dict):
        return result[key]
    return obj


def _load_iet(path: str) -> Iet:
    return Iet.from_json(_unwrap(_load_json(path), "iet"))


def _load_cocycle(path: str) -> StepCocycle:
    return StepCocycle.from_json(_unwrap(_load_json(path), "cocycle"))


def _parse_n_grid(text: str):
    """"lo:hi[:count]" -> geometric integer grid, 4 points per decade by
    default."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise BadConfig("n-grid must be lo:hi or lo:hi:count", given=text)
    lo, hi = float(parts[0]), float(parts[1])
    if not 1 <= lo < hi:
        raise BadConfig("n-grid needs 1 <= lo < hi", lo=lo, hi=hi)
    if len(parts) == 3:
        count = int(parts[2])
    else:
        count = max(2, int(round(np.log10(hi / lo) * 4)) + 1)
    ns = np.unique(np.rint(np.geomspace(lo, hi, count)).astype(np.int64))
    return [int(n) for n in ns]


def _comma_list(text: str):
    return [p.strip() for p in str(text).split(",") if p.strip()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_iet(args) -> int:
    cfg = _config_from_args(args)
    if args.iet:
        T = _load_iet(args.iet)
        origin = "file"
    elif args.golden:
        mode = args.mode or RATIONAL
        T = golden_iet(mode=mode, depth=args.depth)
        origin = "golden"
    elif args.sample_d:
        mode = args.mode or RATIONAL
        T = sample_iet(args.sample_d, args.seed, mode=mode)
        origin = "sample"
    elif args.lengths:
        if not (args.top and args.bottom):
            raise BadConfig("--lengths needs --top and --bottom rank rows")
        perm = Permutation.from_json(
            {"pi0": [int(r) for r in _comma_list(args.top)],
             "pi1": [int(r) for r in _comma_list(args.bottom)]}
        )
        mode = args.mode or RATIONAL
        T = new_iet(perm, coerce_lengths(_comma_list(args.lengths), mode), mode)
        origin = "explicit"
    else:
        raise BadConfig("give one of --iet, --golden, --sample-d, --lengths")
    keane = None
    if T.mode == RATIONAL:
        rep = keane_check(T, args.keane_horizon)
        keane = {"horizon": rep.horizon, "ok": rep.ok, "connection": rep.connection}
    payload = {
        "iet": T.to_json(),
        "origin": origin,
        "keane": keane,
        "total": format_scalar(T.total, T.mode),
        "breakpoints": [format_scalar(b, T.mode) for b in T.breakpoints()],
    }
    kword = "n/a" if keane is None else keane["ok"]
    summary = f"iet d={T.d} mode={T.mode} keane={kword}"
    return _emit(args, cfg, payload, summary)


def _cmd_renorm(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    state = start_induction(T)
    if args.rauzy:
        for _ in range(args.n):
            state = rauzy_step(state)
        kappas = []
    else:
        for _ in range(args.n):
            state = zorich_step(state)
        kappas = [b.kappa for b in state.zorich_steps]
    path = state.path
    payload = {
        "kind": "rauzy" if args.rauzy else "zorich",
        "steps": args.n,
        "arrows": str(path) if path else "",
        "kappas": kappas,
        "heights": list(state.q),
        "induced_lengths": [format_scalar(l, T.mode) for l in state.current.lengths],
        "induced_perm": state.current.perm.to_json(),
    }
    summary = (
        f"renorm {payload['kind']} n={args.n} arrows={payload['arrows'] or '-'} "
        f"max_height={max(state.q)}"
    )
    return _emit(args, cfg, payload, summary)


def _cmd_towers(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    state = start_induction(T)
    for _ in range(args.n):
        state = rauzy_step(state) if args.rauzy else zorich_step(state)
    dec = towers(state)
    names = letter_names(T.d)
    area = sum((hi - lo) * h for (lo, hi), h in zip(dec.bases, dec.heights))
    rows = []
    for a in range(T.d):
        lo, hi = dec.bases[a]
        rows.append(
            {
                "letter": names[a],
                "base": [format_scalar(lo, T.mode), format_scalar(hi, T.mode)],
                "width": format_scalar(hi - lo, T.mode),
                "height": dec.heights[a],
            }
        )
    payload = {
        "kind": "rauzy" if args.rauzy else "zorich",
        "steps": args.n,
        "towers": rows,
        "area": format_scalar(area, T.mode),
        "area_matches_total": area == T.total if T.mode == RATIONAL else bool(
            abs(float(area) - float(T.total)) < 1e-9
        ),
    }
    summary = (
        f"towers n={args.n} heights={list(dec.heights)} area={payload['area']} "
        f"identity={'ok' if payload['area_matches_total'] else 'BROKEN'}"
    )
    return _emit(args, cfg, payload, summary)


def _cmd_lyapunov(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    est = lyapunov_exponents(T, n_blocks=args.blocks)
    payload = est.to_json()
    summary = (
        f"lyapunov theta1={est.theta1:.6f} theta2={est.theta2:.6f} "
        f"gap={est.gap:.6f} blocks={est.blocks_used}"
    )
    return _emit(args, cfg, payload, summary)


def _cmd_deviation(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    f = _load_cocycle(args.cocycle)
    grid = _parse_n_grid(args.n_grid)
    if args.heights_grid:
        # sample at the orbit's renormalization times inside the same range
        grid = renormalization_times(T, int(grid[0]), int(grid[-1]))
        if not grid:
            raise BadConfig("no renormalization times inside the grid range")
    scan = deviation_scan(
        T, f, grid, x_samples=args.points, seed=args.seed, workers=args.workers
    )
    slope = scan.birkhoff_slope
    summary = (
        f"deviation n={grid[0]}..{grid[-1]} "
        f"slope={'none' if slope is None else f'{slope:.4f}'} "
        f"visit_slope={'none' if scan.visits.slope is None else f'{scan.visits.slope:.4f}'}"
    )
    if args.out and args.out.endswith(".csv"):
        names = letter_names(T.d)
        header = ["n", "max_abs_birkhoff"] + [f"dev_{a}" for a in names]
        return _emit_csv(args, cfg, header, scan.rows(), summary)
    return _emit(args, cfg, scan.to_json(), summary)


def _cmd_balanced_times(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    bt = balanced_times(
        T,
        args.epsilon,
        args.eta,
        budget=args.budget,
        seed=args.seed,
        n_x_samples=args.samples,
        n_times=args.times,
    )
    ver = bt.verification
    ok = (
        ver.get("cond_i_failures", 1) == 0
        and ver.get("cond_ii_failures", 1) == 0
        and ver.get("cond_iii_ok", False)
        and ver.get("heights_increasing", False)
    )
    summary = (
        f"balanced-times selected={len(bt.sequence)} "
        f"h1={float(bt.sequence[0].h):.4e} verified={'ok' if ok else 'FAILED'}"
        if bt.sequence
        else "balanced-times selected=0"
    )
    return _emit(args, cfg, bt.to_json(), summary)


def _cmd_good_returns(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    f = _load_cocycle(args.cocycle)
    E = IntervalSet.parse(args.E, T.mode)
    D = _scalar(args.D)
    check_sum_bound(f, D)  # reject a bad bound before the expensive part
    bt = balanced_times(
        T,
        args.epsilon,
        args.eta,
        budget=args.budget,
        seed=args.seed,
        n_x_samples=args.samples,
        n_times=args.times,
    )
    if args.kind == "recurrence":
        cert = recurrence_search(
            T, f, E, D, args.P, bt, budget=args.search_budget, seed=args.seed
        )
        verification = None
    else:
        cert = good_return_search(
            T, f, E, D, args.N, bt, budget=args.search_budget, seed=args.seed
        )
        verification = verify_certificate(T, f, E, D, cert)
    payload = {
        "kind": args.kind,
        "E": E.to_json(),
        "D": format_scalar(D, T.mode),
        "balanced_times": bt.to_json(),
        "certificate": cert.to_json(T.mode),
        "verification": verification,
    }
    tail = ""
    if verification is not None:
        tail = f" verified={'ok' if verification['all'] else 'FAILED'}"
    summary = (
        f"good-returns {args.kind} n={cert.n} x={format_scalar(cert.x, T.mode)} "
        f"|S_n|={abs(float(cert.birkhoff)):.4f}{tail}"
    )
    return _emit(args, cfg, payload, summary)


def _cmd_strip(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    f = _load_cocycle(args.cocycle)
    if args.returns:
        p0 = StripPoint(_scalar(args.x0) if args.x0 else 0.1234, _scalar(args.t0))
        mes = empirical_birkhoff_measure(
            T, f, p0, args.band, args.returns, x_bins=args.bins, t_bins=args.bins
        )
        payload = mes.to_json()
        summary = (
            f"strip returns={args.returns} band={args.band} steps={mes.steps} "
            f"mass={mes.mass():.4f}"
        )
        return _emit(args, cfg, payload, summary)
    x0 = float(_scalar(args.x0)) if args.x0 else float(np.pi / 6) % 1.0
    hl = fiber_histograms(
        T, f, x0, args.n, L=args.band_width, bins=args.bins, t0=float(_scalar(args.t0))
    )
    payload = {
        "n": args.n,
        "max_abs_t": hl.max_abs_t,
        "clipped": hl.clipped,
        "histograms": [h.to_json() for h in hl],
    }
    summary = (
        f"strip n={args.n} windows={len(hl)} bins={args.bins} "
        f"max|t|={hl.max_abs_t:.4f} clipped={hl.clipped}"
    )
    return _emit(args, cfg, payload, summary)


def _cmd_probe(args) -> int:
    cfg = _config_from_args(args)
    T = _load_iet(args.iet)
    f = _load_cocycle(args.cocycle)
    rep = translation_invariance_probe(
        T,
        f,
        sigma=_scalar(args.sigma) if args.sigma is not None else None,
        n=args.n,
        L=args.band_width,
        bins=args.bins,
        x0=float(_scalar(args.x0)) if args.x0 else None,
    )
    summary = (
        f"probe n={args.n} jumps={len(rep.per_jump)} aggregate={rep.aggregate:.4f} "
        f"max|t|={rep.max_abs_t:.4f}"
    )
    return _emit(args, cfg, rep.to_json(), summary)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iet-skew",
        description="Interval exchanges, renormalization, and skew products.",
    )
    parser.add_argument("--version", action="version", version=f"iet-skew {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, cocycle=False):
        p.add_argument("--iet", help="IET description (JSON file)")
        if cocycle:
            p.add_argument("--cocycle", required=True, help="step cocycle (JSON file)")
        p.add_argument("--out", help="artifact path (stdout when omitted)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("iet", help="build, sample, or inspect an exchange")
    common(p)
    p.add_argument("--golden", action="store_true", help="golden-ratio 2-exchange")
    p.add_argument("--depth", type=int, default=1200, help="rational golden depth")
    p.add_argument("--sample-d", type=int, help="sample a random d-exchange")
    p.add_argument("--lengths", help="comma list, rational literals allowed")
    p.add_argument("--top", help="1-based rank row, e.g. 1,2,3")
    p.add_argument("--bottom", help="1-based rank row, e.g. 3,2,1")
    p.add_argument("--mode", choices=[RATIONAL, FLOAT])
    p.add_argument("--keane-horizon", type=int, default=64, help="connection scan depth")
    p.set_defaults(func=_cmd_iet)

    p = sub.add_parser("renorm", help="run induction steps")
    common(p)
    p.add_argument("--n", type=int, required=True, help="number of steps")
    p.add_argument("--rauzy", action="store_true", help="plain steps, no acceleration")
    p.set_defaults(func=_cmd_renorm)

    p = sub.add_parser("towers", help="tower decomposition after n steps")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rauzy", action="store_true")
    p.set_defaults(func=_cmd_towers)

    p = sub.add_parser("lyapunov", help="top two exponents of the acceleration")
    common(p)
    p.add_argument("--blocks", type=int, default=10**4)
    p.set_defaults(func=_cmd_lyapunov)

    p = sub.add_parser("deviation", help="Birkhoff/visit deviation growth scan")
    common(p, cocycle=True)
    p.add_argument("--n-grid", required=True, help="lo:hi[:count], e.g. 1e2:1e5")
    p.add_argument("--points", type=int, default=32, help="orbit start samples")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument(
        "--heights-grid",
        action="store_true",
        help="sample at the orbit's renormalization times inside the range",
    )
    p.set_defaults(func=_cmd_deviation)

    p = sub.add_parser("balanced-times", help="select and certify balanced times")
    common(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--budget", type=int, default=4000, help="acceleration steps to explore")
    p.add_argument("--samples", type=int, default=100, help="points per certificate check")
    p.add_argument("--times", type=int, default=6, help="how many times to select")
    p.set_defaults(func=_cmd_balanced_times)

    p = sub.add_parser("good-returns", help="search and verify a return certificate")
    common(p, cocycle=True)
    p.add_argument("--E", required=True, help='interval set "a:b,c:d", rationals allowed')
    p.add_argument("--D", required=True, help="Birkhoff bound, must exceed m*M")
    p.add_argument("--N", type=int, default=1000, help="good returns need n > N")
    p.add_argument("--P", type=int, default=1, help="recurrence: first balanced index")
    p.add_argument("--kind", choices=["good", "recurrence"], default="good")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=4.0)
    p.add_argument("--budget", type=int, default=60, help="balanced-times budget")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--times", type=int, default=2)
    p.add_argument("--search-budget", type=int, default=40)
    p.set_defaults(func=_cmd_good_returns)

    p = sub.add_parser("strip", help="skew-product orbit statistics")
    common(p, cocycle=True)
    p.add_argument("--n", type=int, default=10**5, help="orbit length for histograms")
    p.add_argument("--x0", help="start point (rational literal allowed)")
    p.add_argument("--t0", default="0", help="start fiber value")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--band-width", type=float, help="fiber band half-width override")
    p.add_argument("--returns", type=int, help="collect band returns instead")
    p.add_argument("--band", type=float, default=2.0, help="return band half-width")
    p.set_defaults(func=_cmd_strip)

    p = sub.add_parser("probe", help="translation-invariance probe of the fiber laws")
    common(p, cocycle=True)
    p.add_argument("--n", type=int, default=10**5)
    p.add_argument("--sigma", help="single jump to probe (default: all jumps)")
    p.add_argument("--x0")
    p.add_argument("--bins", type=int, default=256)
    p.add_argument("--band-width", type=float)
    p.set_defaults(func=_cmd_probe)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IetSkewError as exc:
        doc = {"error": exc.code, "message": str(exc), "details": exc.details}
        print(_canonical(doc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

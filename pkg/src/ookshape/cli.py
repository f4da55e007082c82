"""Command-line entry point: ``ookshape <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .desearch import DeParams, SearchFailed, de_optimize
from .infotheory import (SnrPoint, db_to_sigma2, operating_point,
                         optimize_ts_case1, optimize_ts_case2, required_snr, select_code_rate)
from .ldpc import LiftedCode, count_4cycles, lift
from .protograph import BaseMatrix, NoConvergence, builtin, design_rate, threshold
from .sim import SimJob, emit_rate_curves, run_cer
from .surrogate import match_surrogate
from .txchain import make_plan, plan_for

log = logging.getLogger("ookshape")

LONG_RUN_N = 64800
DEFAULT_RATE_SET = "0.25,0.33,0.5,0.67,0.75,0.8,0.9"


def parse_grid(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        lo, hi, step = (float(v) for v in text.split(":"))
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}")
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + k * step, 10) for k in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def load_base(spec: str) -> BaseMatrix:
    path = Path(spec)
    return BaseMatrix.load(path) if path.exists() else builtin(spec)


def _ts_from_args(args, base: BaseMatrix | None = None):
    rc = args.rc if args.rc is not None else design_rate(base)
    return operating_point(rc, args.rtx, args.case)


def _write_text(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_rates(args) -> int:
    opt = optimize_ts_case1 if args.case == 1 else optimize_ts_case2
    rows = []
    for db in args.snr_db:
        rate, cfg = opt(args.rc, SnrPoint.from_db(db))
        rows.append([f"{db:.4f}", f"{rate:.10f}", f"{cfg.p1:.10f}", f"{cfg.amp_shaped:.10f}",
                     f"{cfg.amp_uniform:.10f}"])
    header = ["es_n0_db", "rate_ts", "p1", "amp_s", "amp_u"]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    else:
        print(",".join(header))
        for r in rows:
            print(",".join(r))
    if args.curves:
        emit_rate_curves(args.case, parse_floats(args.curves), args.snr_db, Path(args.curves_out))
    return 0


def cmd_select_rate(args) -> int:
    rates = parse_floats(args.rate_set)
    lines = []
    for rtx in args.rtx:
        rc = select_code_rate(rtx, rates, args.case)
        lines.append(f"{rtx:g},{rc:g},{required_snr(rc, rtx, args.case):.3f}\n")
    _write_text(args.out, "rate_tx,rate_code,es_n0_db\n" + "".join(lines))
    return 0


def cmd_threshold(args) -> int:
    base = load_base(args.base)
    op = _ts_from_args(args, base)
    try:
        thr = threshold(base, op.config)
    except NoConvergence as exc:
        log.error("%s", exc)
        return 1
    result = {
        "threshold_db": round(thr, 6),
        "rate_limit_db": round(op.es_n0_db, 6),
        "gap_db": round(thr - op.es_n0_db, 6),
        "config": {k: round(v, 12) if isinstance(v, float) else v
                   for k, v in op.config.__dict__.items()},
    }
    if args.dump_surrogate:
        ts = op.config
        sigma2 = db_to_sigma2(thr)
        sur = match_surrogate(ts.p1, ts.amp_shaped, sigma2)
        result["surrogate"] = {"sigma2_tilde": sur.sigma2_tilde, "amp": sur.amp,
                               "cond_entropy": sur.cond_entropy,
                               "degenerate": sur.degenerate}
    _write_text(args.out, json.dumps(result, indent=1, sort_keys=True) + "\n")
    return 0


def cmd_search(args) -> int:
    m, n = args.m, args.n
    punct = [int(j) for j in args.punctured.split(",") if j.strip()]
    rc = args.rc if args.rc is not None else (n - m) / (n - len(punct))
    op = operating_point(rc, args.rtx, args.case)
    params = DeParams(population_size=args.population, generations=args.generations,
                      rng_seed=args.seed, min_col_degree=args.min_degree)
    seeds = [load_base(s) for s in args.seed_base]

    def progress(gen: int, best: float) -> None:
        if gen % 10 == 0:
            log.info("generation %d: best threshold %.3f dB", gen, best)

    try:
        res = de_optimize((m, n), punct, op.config, params, seeds, progress)
    except SearchFailed as exc:
        log.error("%s", exc)
        return 1
    log.info("threshold %.3f dB, rate limit %.3f dB, %d evaluations",
             res.best.fitness, op.es_n0_db, res.evaluations)
    _write_text(args.out, res.best.base.to_text())
    return 0


def cmd_lift(args) -> int:
    base = load_base(args.base)
    code = lift(base, args.q, args.seed, args.method)
    log.info("n_full=%d n_tx=%d 4-cycles=%d", code.n_full, code.n_tx, count_4cycles(code.h))
    _write_text(args.out, code.to_json() + "\n")
    return 0


def cmd_simulate(args) -> int:
    if args.code:
        code = LiftedCode.from_json(Path(args.code).read_text())
        base = code.base
    else:
        base = load_base(args.base)
        code = None
    q = args.q
    if args.long_run:
        q = LONG_RUN_N // base.shape[1]
    op = _ts_from_args(args, base)
    if code is None:
        plan = plan_for(base, q, op.config, args.lift_seed, matcher=not args.no_matcher)
    else:
        plan = make_plan(code, op.config, matcher=not args.no_matcher)
    job = SimJob(plan.code, op.config, args.ebn0, args.min_errors, args.max_frames, args.seed,
                 Path(args.out), args.max_iter, not args.no_matcher, args.stop_cer)
    for rec in run_cer(job, plan):
        log.info("Eb/N0 %.2f dB: %d/%d frame errors, CER %.3e", rec.eb_n0_db,
                 rec.frame_errors, rec.frames, rec.cer)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ookshape",
                                description="Time-sharing probabilistic shaping for OOK.")
    sub = p.add_subparsers(dest="command", required=True)
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")

    def common(sp, out_help="output file (default: stdout)"):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help=out_help)

    sp = sub.add_parser("rates", parents=[verbose],
                        help="optimized time-sharing rates over an SNR grid")
    sp.add_argument("--case", type=int, choices=(1, 2), default=1)
    sp.add_argument("--rc", type=float, required=True)
    sp.add_argument("--snr-db", type=parse_grid, default=parse_grid("-10:10:1"))
    sp.add_argument("--curves", help="comma list of code rates for the full curve set")
    sp.add_argument("--curves-out", default="rate_curves.csv")
    common(sp)
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("select-rate", parents=[verbose],
                        help="best code rate for given transmission rates")
    sp.add_argument("--rtx", type=parse_floats, required=True)
    sp.add_argument("--rate-set", default=DEFAULT_RATE_SET)
    sp.add_argument("--case", type=int, choices=(1, 2), default=1)
    common(sp)
    sp.set_defaults(func=cmd_select_rate)

    sp = sub.add_parser("threshold", parents=[verbose],
                        help="P-EXIT threshold of a protograph")
    sp.add_argument("--base", required=True, help="base-matrix file or builtin name")
    sp.add_argument("--case", type=int, choices=(1, 2), default=1)
    sp.add_argument("--rtx", type=float, required=True)
    sp.add_argument("--rc", type=float, help="code rate (default: design rate)")
    sp.add_argument("--dump-surrogate", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("search", parents=[verbose],
                        help="differential-evolution protograph search")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--punctured", default="", help="comma list of punctured columns")
    sp.add_argument("--case", type=int, choices=(1, 2), default=1)
    sp.add_argument("--rtx", type=float, required=True)
    sp.add_argument("--rc", type=float)
    sp.add_argument("--generations", type=int, default=500)
    sp.add_argument("--population", type=int, default=40)
    sp.add_argument("--min-degree", type=int, default=1)
    sp.add_argument("--seed-base", action="append", default=[],
                    help="base matrix to place in the initial population")
    common(sp)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("lift", parents=[verbose],
                        help="quasi-cyclic lifting to a JSON descriptor")
    sp.add_argument("--base", required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--method", choices=("greedy", "random"), default="greedy")
    common(sp)
    sp.set_defaults(func=cmd_lift)

    sp = sub.add_parser("simulate", parents=[verbose],
                        help="Monte Carlo CER over an Eb/N0 grid")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--base")
    src.add_argument("--code", help="lifted-code JSON from the lift subcommand")
    sp.add_argument("--q", type=int, default=128)
    sp.add_argument("--lift-seed", type=int, default=0)
    sp.add_argument("--long-run", action="store_true",
                    help=f"lift to n_full = {LONG_RUN_N} (slow)")
    sp.add_argument("--case", type=int, choices=(1, 2), default=1)
    sp.add_argument("--rtx", type=float, required=True)
    sp.add_argument("--rc", type=float)
    sp.add_argument("--no-matcher", action="store_true",
                    help="uniform signaling: data bits feed the encoder directly")
    sp.add_argument("--ebn0", type=parse_grid, required=True)
    sp.add_argument("--min-errors", type=int, default=100)
    sp.add_argument("--max-frames", type=int, default=1_000_000)
    sp.add_argument("--max-iter", type=int, default=100)
    sp.add_argument("--stop-cer", type=float,
                    help="skip the remaining grid once the CER falls below this value")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="CSV file; a JSON manifest goes alongside")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())

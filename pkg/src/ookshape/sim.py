"""Monte Carlo codeword-error-rate harness and rate-curve export."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import beta

from .infotheory import (SnrPoint, TsConfig, binary_entropy, db_to_sigma2, ebn0_to_esn0,
                         esn0_to_ebn0, ook_capacity, optimize_ts_case1, optimize_ts_case2,
                         uniform_ook_rate)
from .ldpc import LiftedCode
from .txchain import FramePlan, FrameStatus, channel_awgn, make_plan, receive, transmit

WORKERS_ENV = "OOKSHAPE_WORKERS"
CSV_FIELDS = ["eb_n0_db", "es_n0_db", "eb_n0_db_realized", "frames", "frame_errors", "cer",
              "cer_lo", "cer_hi", "mean_iterations", "realized_rate_tx"]


@dataclass
class SimJob:
    code: LiftedCode
    ts: TsConfig
    eb_n0_grid: Sequence[float]
    min_errors: int = 100
    max_frames: int = 1_000_000
    seed: int = 0
    out: Path | None = None
    max_iter: int = 100
    matcher: bool = True
    stop_cer: float | None = None  # skip the rest of the grid once CER drops below this

    def __post_init__(self):
        grid = list(self.eb_n0_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("Eb/N0 grid must be non-empty and ascending")
        if self.min_errors < 1:
            raise ValueError("min_errors must be at least 1")
        self.eb_n0_grid = grid

    def manifest(self) -> dict:
        code_json = self.code.to_json()
        return {
            "ts": asdict(self.ts),
            "eb_n0_grid": self.eb_n0_grid,
            "min_errors": self.min_errors,
            "max_frames": self.max_frames,
            "seed": self.seed,
            "max_iter": self.max_iter,
            "matcher": self.matcher,
            "stop_cer": self.stop_cer,
            "lift": {"q": self.code.q, "seed": self.code.seed},
            "code_sha256": hashlib.sha256(code_json.encode()).hexdigest(),
            "base_sha256": hashlib.sha256(self.code.base.to_text().encode()).hexdigest(),
            "code_files_sha256": code_files_sha256(),
        }


def _db(x: float) -> str:
    # adding 0.0 turns a rounded -0.0 into 0.0
    return f"{round(x, 4) + 0.0:.4f}"


@dataclass
class CerRecord:
    eb_n0_db: float
    es_n0_db: float
    frames: int
    frame_errors: int
    mean_iterations: float
    realized_rate_tx: float
    wall_time: float = field(default=0.0, compare=False)

    @property
    def cer(self) -> float:
        return self.frame_errors / self.frames

    @property
    def eb_n0_db_realized(self) -> float:
        return esn0_to_ebn0(self.es_n0_db, self.realized_rate_tx)

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        """Clopper-Pearson interval for the CER."""
        k, n = self.frame_errors, self.frames
        a = 1 - level
        lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
        hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
        return lo, hi

    def row(self) -> dict:
        lo, hi = self.interval()
        return {
            "eb_n0_db": _db(self.eb_n0_db),
            "es_n0_db": _db(self.es_n0_db),
            "eb_n0_db_realized": _db(self.eb_n0_db_realized),
            "frames": self.frames,
            "frame_errors": self.frame_errors,
            "cer": f"{self.cer:.6e}",
            "cer_lo": f"{lo:.6e}",
            "cer_hi": f"{hi:.6e}",
            "mean_iterations": f"{self.mean_iterations:.4f}",
            "realized_rate_tx": f"{self.realized_rate_tx:.6f}",
        }

    @classmethod
    def from_row(cls, row: dict) -> "CerRecord":
        return cls(float(row["eb_n0_db"]), float(row["es_n0_db"]), int(row["frames"]),
                   int(row["frame_errors"]), float(row["mean_iterations"]),
                   float(row["realized_rate_tx"]))


def frame_rng(seed: int, snr_index: int, frame: int) -> np.random.Generator:
    return np.random.default_rng([seed, snr_index, frame])


def simulate_frame(plan: FramePlan, sigma2: float, rng: np.random.Generator,
                   max_iter: int = 100) -> tuple[bool, int]:
    """One frame through the chain. Returns ``(frame_error, bp_iterations)``."""
    bits = rng.integers(0, 2, plan.k_prime, dtype=np.uint8)
    symbols, _ = transmit(bits, plan)
    res = receive(channel_awgn(symbols, sigma2, rng), plan, sigma2, max_iter)
    err = res.status is FrameStatus.COMPOSITION_FAIL or not np.array_equal(res.info_bits, bits)
    return err, res.iterations


def _workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _read_existing(path: Path) -> dict[str, CerRecord]:
    if not path.exists():
        return {}
    with path.open(newline="") as fh:
        return {row["eb_n0_db"]: CerRecord.from_row(row) for row in csv.DictReader(fh)}


def code_files_sha256() -> str:
    """Content hash over the package sources, in sorted path order."""
    h = hashlib.sha256()
    root = Path(__file__).resolve().parent
    for path in sorted(root.rglob("*.py")) + sorted(root.rglob("data/*.txt")):
        h.update(path.relative_to(root).as_posix().encode() + b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def _progress_path(out: Path) -> Path:
    return out.with_name(out.name + ".progress")


def run_point(plan: FramePlan, es_n0_db: float, snr_index: int, job: SimJob,
              workers: int, start: tuple[int, int, int] = (0, 0, 0),
              checkpoint=None) -> tuple[int, int, int]:
    """Simulate one SNR point from the ``(frames, errors, iterations)`` counts in ``start``.

    ``checkpoint`` is called with the running counts after every batch.
    """
    sigma2 = db_to_sigma2(es_n0_db)
    frames, errors, iters = start
    batch = 32 * workers

    def task(f: int) -> tuple[bool, int]:
        return simulate_frame(plan, sigma2, frame_rng(job.seed, snr_index, f), job.max_iter)

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while frames < job.max_frames and errors < job.min_errors:
            idx = range(frames, min(frames + batch, job.max_frames))
            results = list(pool.map(task, idx)) if pool else [task(f) for f in idx]
            # results past the stopping frame are discarded to stay worker-independent
            for err, it in results:
                frames += 1
                errors += err
                iters += it
                if errors >= job.min_errors:
                    break
            if checkpoint is not None:
                checkpoint(frames, errors, iters)
    finally:
        if pool:
            pool.shutdown()
    return frames, errors, iters


def run_cer(job: SimJob, plan: FramePlan | None = None, workers: int | None = None
            ) -> list[CerRecord]:
    """Simulate every grid point.

    With ``job.out`` set, finished points are appended to the CSV and the running
    counts of the current point go to a ``.progress`` sidecar after each batch,
    so an interrupted run picks up at the same frame index.
    """
    plan = plan or make_plan(job.code, job.ts, matcher=job.matcher)
    workers = workers or _workers()
    done: dict[str, CerRecord] = {}
    progress = None
    if job.out:
        out = Path(job.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        done = _read_existing(out)
        prog_path = _progress_path(out)
        if prog_path.exists():
            progress = json.loads(prog_path.read_text())
        out.with_suffix(".json").write_text(json.dumps(job.manifest(), indent=1) + "\n")
        if not out.exists():
            with out.open("w", newline="") as fh:
                csv.DictWriter(fh, CSV_FIELDS).writeheader()
    records = []
    for k, eb in enumerate(job.eb_n0_grid):
        if job.stop_cer is not None and records and records[-1].cer < job.stop_cer:
            break
        key = f"{eb:.4f}"
        if key in done:
            records.append(done[key])
            continue
        es = ebn0_to_esn0(eb, job.ts.rate_tx)
        start = (0, 0, 0)
        if progress and progress["index"] == k:
            start = (progress["frames"], progress["errors"], progress["iterations"])
        checkpoint = None
        if job.out:
            def checkpoint(f, e, i, k=k):
                tmp = prog_path.with_suffix(".tmp")
                tmp.write_text(json.dumps({"index": k, "frames": f, "errors": e,
                                           "iterations": i}))
                os.replace(tmp, prog_path)
        t0 = time.perf_counter()
        frames, errors, iters = run_point(plan, es, k, job, workers, start, checkpoint)
        rec = CerRecord(eb, es, frames, errors, iters / frames, plan.realized_rate_tx,
                        time.perf_counter() - t0)
        records.append(rec)
        if job.out:
            with out.open("a", newline="") as fh:
                csv.DictWriter(fh, CSV_FIELDS).writerow(rec.row())
            prog_path.unlink(missing_ok=True)
    return records


def waterfall_crossing(records: Sequence[CerRecord], target: float,
                       axis: str = "eb_n0_db") -> float:
    """Interpolate (log CER, linear dB) to the first SNR where CER falls to ``target``."""
    pts = [(getattr(r, axis), r.cer) for r in records]
    for (x0, c0), (x1, c1) in zip(pts, pts[1:]):
        if c0 >= target > c1:
            l0 = math.log(c0)
            l1 = math.log(c1) if c1 > 0 else math.log(target) - 1.0
            return x0 + (math.log(target) - l0) * (x1 - x0) / (l1 - l0)
    raise ValueError(f"CER never crosses {target} on the simulated grid")


# ---------------------------------------------------------------------------
# rate curves


def _case_opt(case_id: int):
    return optimize_ts_case1 if case_id == 1 else optimize_ts_case2


def rate_curves(case_id: int, rc_set: Iterable[float], snr_grid: Iterable[float]) -> list[dict]:
    """Per SNR: OOK capacity, uniform OOK, and for each R_C the optimized R_TS
    together with R_TX = R_C * H2(p1*) at the same optimum."""
    rc_set = list(rc_set)
    rows = []
    for db in snr_grid:
        snr = SnrPoint.from_db(db)
        row = {"es_n0_db": float(db), "capacity": ook_capacity(snr)[0],
               "uniform": uniform_ook_rate(snr)}
        for rc in rc_set:
            rate, cfg = _case_opt(case_id)(rc, snr)
            row[f"rts_{rc:g}"] = rate
            row[f"rtx_{rc:g}"] = rc * binary_entropy(cfg.p1)
        rows.append(row)
    return rows


def emit_rate_curves(case_id: int, rc_set: Iterable[float], snr_grid: Iterable[float],
                     path: Path | None = None) -> list[dict]:
    rows = rate_curves(case_id, rc_set, snr_grid)
    if path is not None:
        with Path(path).open("w", newline="") as fh:
            w = csv.DictWriter(fh, list(rows[0]))
            w.writeheader()
            for row in rows:
                w.writerow({k: f"{v:.10f}" for k, v in row.items()})
    return rows


def crossing_point(rate_code: float, case_id: int, lo_db: float = -15.0, hi_db: float = 10.0,
                   step_db: float = 0.5) -> tuple[float, float]:
    """SNR where the optimized R_TS curve meets its R_TX curve, and the rate there."""
    opt = _case_opt(case_id)

    def gap(db: float) -> float:
        rate, cfg = opt(rate_code, SnrPoint.from_db(db))
        return rate - rate_code * binary_entropy(cfg.p1)

    grid = np.arange(lo_db, hi_db + 1e-9, step_db)
    vals = [gap(x) for x in grid]
    roots = [brentq(gap, grid[i], grid[i + 1], xtol=1e-5)
             for i in range(len(grid) - 1) if vals[i] < 0 <= vals[i + 1]
             or vals[i] >= 0 > vals[i + 1]]
    if len(roots) != 1:
        raise ValueError(f"expected one crossing, found {len(roots)}")
    db = roots[0]
    return db, opt(rate_code, SnrPoint.from_db(db))[0]


def capacity_snr(rate: float, lo_db: float = -20.0, hi_db: float = 20.0) -> float:
    """E_s/N_0 at which the OOK capacity equals ``rate``."""
    return brentq(lambda db: ook_capacity(SnrPoint.from_db(db))[0] - rate, lo_db, hi_db,
                  xtol=1e-5)

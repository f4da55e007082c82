"""Acceptance criteria 1-9, one test each; verdicts are repeated in the terminal summary."""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.special import expit
from scipy.stats import norm

from ookshape.ccdm import Composition, dm_dematch, dm_match, make_composition
from ookshape.cli import main
from ookshape.infotheory import (SnrPoint, TsConfig, binary_entropy, ook_capacity,
                                 operating_point, optimize_ts_case1, optimize_ts_case2,
                                 select_code_rate, uniform_ook_rate)
from ookshape.ldpc import TannerGraph, bp_decode
from ookshape.protograph import builtin, threshold
from ookshape.sim import SimJob, capacity_snr, crossing_point, run_cer, waterfall_crossing
from ookshape.txchain import demap, plan_for, receive, transmit

RATE_SET = [0.25, 0.33, 0.5, 0.67, 0.75, 0.8, 0.9]

# R_TX -> (R_C* case 1, R_C* case 2)
TABLE_RC = {0.2: (0.33, 0.67), 0.25: (0.5, 0.67), 0.33: (0.5, 0.67), 0.5: (0.67, 0.67),
            0.67: (0.75, 0.8), 0.75: (0.8, 0.8), 0.85: (0.9, 0.9)}


def test_1_code_rate_table(criterion):
    t0 = time.perf_counter()
    wrong = []
    for rtx, expected in TABLE_RC.items():
        for case, rc in zip((1, 2), expected):
            got = select_code_rate(rtx, RATE_SET, case)
            if got != rc:
                wrong.append(f"R_TX={rtx} case {case}: {got} != {rc}")
    dt = time.perf_counter() - t0
    criterion(1, not wrong and dt < 60,
              f"14/14 rows match in {dt:.1f} s" if not wrong else "; ".join(wrong))


@pytest.fixture(scope="module")
def thresholds():
    out = {}
    for name, rc, case in (("B1", 0.5, 1), ("B2", 2 / 3, 2)):
        op = operating_point(rc, 0.25, case)
        t0 = time.perf_counter()
        thr = threshold(builtin(name), op.config)
        out[name] = (thr, op.es_n0_db, time.perf_counter() - t0)
    return out


def test_2_threshold_regression(criterion, thresholds):
    b1, _, t1 = thresholds["B1"]
    b2, _, t2 = thresholds["B2"]
    ok = abs(b1 + 3.82) <= 0.2 and abs(b2 + 4.49) <= 0.2 and max(t1, t2) < 300
    criterion(2, ok, f"B1 {b1:.3f} dB (target -3.82), B2 {b2:.3f} dB (target -4.49), "
                     f"{t1:.1f} s / {t2:.1f} s")


def test_3_threshold_gap(criterion, thresholds):
    gaps = {k: thr - lim for k, (thr, lim, _) in thresholds.items()}
    ok = all(0.1 <= g <= 0.5 for g in gaps.values())
    criterion(3, ok, ", ".join(f"{k} gap {g:.3f} dB" for k, g in gaps.items()))


def test_4_rate_gap(criterion):
    gaps = {}
    for rc in (0.5, 0.75):
        db, rate = crossing_point(rc, 1)
        gaps[rc] = db - capacity_snr(rate)
    ok = abs(gaps[0.5] - 1.0) <= 0.15 and abs(gaps[0.75] - 0.3) <= 0.15
    criterion(4, ok, f"R_C=0.5 gap {gaps[0.5]:.3f} dB (~1.0), "
                     f"R_C=0.75 gap {gaps[0.75]:.3f} dB (~0.3)")


def test_5_dominance_chain(criterion):
    violations = []
    for db in np.linspace(-10.0, 10.0, 40):
        snr = SnrPoint.from_db(db)
        cap = ook_capacity(snr)[0]
        uni = uniform_ook_rate(snr)
        for rc in RATE_SET:
            r1 = optimize_ts_case1(rc, snr)[0]
            r2 = optimize_ts_case2(rc, snr)[0]
            if not cap + 1e-9 >= r2 >= r1 - 1e-9 >= uni - 2e-9:
                violations.append(f"{db:.2f} dB R_C={rc}")
    criterion(5, not violations,
              f"{len(violations)} violations over 40 SNRs x {len(RATE_SET)} code rates"
              + (": " + ", ".join(violations[:5]) if violations else ""))


def index_bits(i, width):
    return np.array([(i >> (width - 1 - b)) & 1 for b in range(width)], dtype=np.uint8)


def test_6_ccdm_suite(criterion):
    failures = []
    for k in range(1, 15):
        for n1 in range(k + 1):
            c = Composition(k, n1)
            words = set()
            for i in range(2**c.k_prime):
                bits = index_bits(i, c.k_prime)
                w = dm_match(bits, c)
                words.add(w.tobytes())
                if int(w.sum()) != n1 or not np.array_equal(dm_dematch(w, c), bits):
                    failures.append(f"k={k} n1={n1} index {i}")
            if len(words) != 2**c.k_prime:
                failures.append(f"k={k} n1={n1} not injective")
    c = make_composition(512, 0.11)
    rng = np.random.default_rng(0)
    bad = 0
    for _ in range(10_000):
        bits = rng.integers(0, 2, c.k_prime, dtype=np.uint8)
        bad += not np.array_equal(dm_dematch(dm_match(bits, c), c), bits)
    if bad:
        failures.append(f"{bad} round-trip failures at k=512")
    gaps = [binary_entropy(0.2) - make_composition(k, 0.2).rate for k in (100, 1000, 10_000)]
    if not gaps[0] > gaps[1] > gaps[2] > 0:
        failures.append(f"rate gaps not decreasing: {gaps}")
    criterion(6, not failures,
              "bijective for k<=14, 10^4 round trips at k=512, rate gaps "
              + "/".join(f"{g:.4f}" for g in gaps) if not failures else "; ".join(failures[:5]))


TREE_H = np.array([[1, 1, 1, 0, 0, 0, 0, 0], [0, 0, 1, 1, 1, 0, 0, 0],
                   [0, 0, 0, 0, 1, 1, 1, 0], [0, 1, 0, 0, 0, 0, 0, 1]])


def map_p1(h, llr):
    words = np.array(list(itertools.product([0, 1], repeat=h.shape[1])))
    words = words[np.all((words @ h.T) % 2 == 0, axis=1)]
    w = np.exp(-(words @ llr))
    return (w @ words) / w.sum()


def test_7_decoder_oracles(criterion):
    rng = np.random.default_rng(1)
    graph = TannerGraph.from_h(TREE_H)
    bp_err = 0.0
    for _ in range(50):
        llr = rng.normal(1.0, 1.5, 8)
        res = bp_decode(graph, llr, max_iter=20, early_stop=False)
        bp_err = max(bp_err, np.max(np.abs(expit(-res.posterior) - map_p1(TREE_H, llr))))

    op = operating_point(2 / 3, 0.25, 2)
    plan = plan_for(builtin("B2"), 64, op.config)
    trips = 0
    for _ in range(100):
        bits = rng.integers(0, 2, plan.k_prime, dtype=np.uint8)
        res = receive(transmit(bits, plan)[0], plan, 1e-4)
        trips += np.array_equal(res.info_bits, bits)

    ts, sigma2, k = plan.ts, 0.45, plan.shaped_positions.size
    s = math.sqrt(sigma2)
    demap_err = 0.0
    for _ in range(18):
        y = rng.uniform(-1.0, ts.amp_shaped + 1.0, plan.n_tx)
        llr = demap(y, plan, sigma2)
        for pos, yy, amp, p1 in ((plan.shaped_positions, y[:k], ts.amp_shaped, ts.p1),
                                 (plan.uniform_positions, y[k:], ts.amp_uniform, 0.5)):
            on, off = p1 * norm.pdf(yy, amp, s), (1 - p1) * norm.pdf(yy, 0, s)
            demap_err = max(demap_err, np.max(np.abs(expit(-llr[pos]) - on / (on + off))))
    ok = bp_err < 1e-6 and trips == 100 and demap_err < 1e-12
    criterion(7, ok, f"tree BP vs MAP {bp_err:.1e}, noiseless {trips}/100, "
                     f"demapper vs Bayes {demap_err:.1e}")


def test_8_waterfall_ordering(criterion):
    grid = [2.5 + 0.5 * i for i in range(8)]
    shaped_plan = plan_for(builtin("B2"), 128, operating_point(2 / 3, 0.25, 2).config)
    uniform_ts = TsConfig.case1(0.25, 0.5)
    uniform_plan = plan_for(builtin("U025"), 288, uniform_ts, matcher=False)
    assert shaped_plan.n_tx == uniform_plan.n_tx == 1152

    shaped = run_cer(SimJob(shaped_plan.code, shaped_plan.ts, grid, stop_cer=1e-2),
                     shaped_plan)
    uniform = run_cer(SimJob(uniform_plan.code, uniform_ts, grid, matcher=False,
                             stop_cer=1e-2), uniform_plan)
    x_s = waterfall_crossing(shaped, 1e-2)
    x_u = waterfall_crossing(uniform, 1e-2)
    # at the first grid point where the shaped chain is below 1e-2, the two
    # 95% intervals must not overlap
    last = shaped[-1]
    other = next(r for r in uniform if r.eb_n0_db == last.eb_n0_db)
    separated = other.interval()[0] > last.interval()[1]
    for name, recs in (("shaped", shaped), ("uniform", uniform)):
        print(name, [(r.eb_n0_db, r.frame_errors, r.frames) for r in recs])
    criterion(8, x_s < x_u and separated,
              f"CER=1e-2 at Eb/N0 {x_s:.2f} dB (shaped B2, TS-2) vs {x_u:.2f} dB "
              f"(uniform, rate-0.25); at {last.eb_n0_db:.1f} dB CER {last.cer:.1e} vs "
              f"{other.cer:.1e}")


CLI_RUNS = [
    ["rates", "--case", "1", "--rc", "0.5", "--snr-db=-4:4:1", "--curves", "0.5,0.75",
     "--curves-out", "{dir}/curves.csv"],
    ["select-rate", "--rtx", "0.2,0.25,0.85", "--case", "1"],
    ["threshold", "--base", "B2", "--case", "2", "--rtx", "0.25", "--dump-surrogate"],
    ["search", "--m", "3", "--n", "9", "--case", "2", "--rtx", "0.25", "--generations", "3",
     "--population", "6", "--seed", "7"],
    ["lift", "--base", "B3", "--q", "32", "--seed", "2"],
    ["simulate", "--base", "B2", "--q", "16", "--case", "2", "--rtx", "0.25", "--ebn0",
     "1:3:1", "--min-errors", "10", "--max-frames", "200", "--seed", "5"],
]


def test_9_cli_determinism(criterion, tmp_path):
    mismatched = []
    for n, args in enumerate(CLI_RUNS):
        outputs = []
        for rep in ("a", "b"):
            d = tmp_path / f"{n}{rep}"
            d.mkdir()
            argv = [a.format(dir=d) for a in args] + ["--out", str(d / "out.csv")]
            assert main(argv) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        if outputs[0] != outputs[1]:
            mismatched.append(args[0])
    criterion(9, not mismatched, f"{len(CLI_RUNS)} subcommands byte-identical on repeat"
              if not mismatched else "differ: " + ", ".join(mismatched))

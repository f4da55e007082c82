"""Differential-evolution search for protographs with low P-EXIT thresholds.

DE/rand/1/bin over real-valued genomes; a genome decodes to a base matrix by
rounding and clamping, followed by a structural repair pass. Column order
matters (shaped vs. uniform columns), so no canonicalization is applied.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .infotheory import TsConfig
from .ldpc import gf2_rank
from .protograph import BaseMatrix, NoConvergence, converges, design_rate, threshold

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeParams:
    population_size: int = 40
    generations: int = 500
    scale_f: float = 0.5
    crossover_cr: float = 0.9
    max_entry: int = 4
    max_deg2_vns: int | None = None  # defaults to M - 1
    min_col_degree: int = 1
    # reject bases whose rows are dependent mod 2: every lift is then rank deficient
    full_rank_mod2: bool = False
    rng_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if not 0.0 < self.scale_f <= 2.0:
            raise ValueError("scale_f must lie in (0, 2]")
        if not 0.0 <= self.crossover_cr <= 1.0:
            raise ValueError("crossover_cr must lie in [0, 1]")
        if self.min_col_degree < 1:
            raise ValueError("min_col_degree must be at least 1")


@dataclass(frozen=True)
class Candidate:
    base: BaseMatrix
    fitness: float
    feasible: bool


@dataclass
class DeResult:
    best: Candidate
    history: list[float] = field(default_factory=list)
    evaluations: int = 0
    cache_hits: int = 0

    @property
    def cache_hit_ratio(self) -> float:
        total = self.evaluations + self.cache_hits
        return self.cache_hits / total if total else 0.0


class SearchFailed(RuntimeError):
    pass


def repair(entries: np.ndarray, max_entry: int, max_deg2: int,
           rng: np.random.Generator, min_degree: int = 1) -> np.ndarray:
    """Fix zero rows, low-degree columns and excess degree-2 columns in place.

    Columns already at ``max_entry`` everywhere are left alone; the result is
    then reported as infeasible rather than repaired.
    """
    m, n = entries.shape
    for i in np.flatnonzero(entries.sum(axis=1) == 0):
        entries[i, rng.integers(n)] = 1
    for j in range(n):
        while entries[:, j].sum() < min_degree:
            rows = np.flatnonzero(entries[:, j] < max_entry)
            if rows.size == 0:
                break
            entries[rng.choice(rows), j] += 1
    deg2 = np.flatnonzero(entries.sum(axis=0) == 2)
    if deg2.size > max_deg2:
        for j in rng.permutation(deg2)[: deg2.size - max_deg2]:
            rows = np.flatnonzero(entries[:, j] < max_entry)
            if rows.size:
                entries[rng.choice(rows), j] += 1
    return entries


def structurally_feasible(b: BaseMatrix, max_entry: int, max_deg2: int,
                          min_degree: int = 1) -> bool:
    arr = b.array
    return (arr.max() <= max_entry and np.all(arr.sum(axis=0) >= min_degree)
            and np.all(arr.sum(axis=1) > 0)
            and int(np.sum(arr.sum(axis=0) == 2)) <= max_deg2)


class FitnessCache:
    """Thresholds keyed by the raw matrix (and puncturing)."""

    def __init__(self, ts: TsConfig):
        self.ts = ts
        self._store: dict[BaseMatrix, float] = {}
        self.hits = 0
        self.misses = 0

    def __call__(self, b: BaseMatrix) -> float:
        if b in self._store:
            self.hits += 1
            return self._store[b]
        self.misses += 1
        value = evaluate(b, self.ts)
        self._store[b] = value
        return value


def evaluate(b: BaseMatrix, ts: TsConfig) -> float:
    try:
        return threshold(b, ts)
    except NoConvergence:
        return math.inf


def de_optimize(dims: tuple[int, int], punctured: Sequence[int], ts: TsConfig,
                params: DeParams = DeParams(),
                seeds: Sequence[BaseMatrix] = (),
                progress: Callable[[int, float], None] | None = None) -> DeResult:
    """Search for the M x N protograph with the lowest threshold for ``ts``.

    ``seeds`` are placed in the initial population verbatim. Results are
    deterministic for a fixed ``params.rng_seed`` regardless of ``workers``.
    """
    m, n = dims
    punctured = frozenset(int(j) for j in punctured)
    max_deg2 = m - 1 if params.max_deg2_vns is None else params.max_deg2_vns
    probe = BaseMatrix.from_array(np.ones((m, n), dtype=int), punctured, params.max_entry)
    if abs(design_rate(probe) - ts.rate_code) > 1e-6:
        raise ValueError("dimensions do not match the code rate of ts")

    root = np.random.SeedSequence(params.rng_seed)
    init_rng = np.random.default_rng(root.spawn(1)[0])
    pop_size = params.population_size
    hi = params.max_entry + 0.5
    genomes = init_rng.uniform(-0.5, hi, size=(pop_size, m, n))
    for k, s in enumerate(seeds[:pop_size]):
        genomes[k] = s.array

    cache = FitnessCache(ts)

    def admissible(b: BaseMatrix) -> bool:
        return not params.full_rank_mod2 or gf2_rank(b.array) == m

    def fitness_of(b: BaseMatrix) -> float:
        return cache(b) if admissible(b) else math.inf

    def decode(genome: np.ndarray, rng: np.random.Generator) -> tuple[BaseMatrix, np.ndarray]:
        ints = np.clip(np.rint(genome), 0, params.max_entry).astype(np.int64)
        ints = repair(ints, params.max_entry, max_deg2, rng, params.min_col_degree)
        return BaseMatrix.from_array(ints, punctured, params.max_entry), ints.astype(float)

    def pmap(fn, items):
        if params.workers > 1:
            with ThreadPoolExecutor(params.workers) as ex:
                return list(ex.map(fn, items))
        return [fn(x) for x in items]

    gen_seqs = root.spawn(params.generations + 1)
    rngs = [np.random.default_rng(s) for s in gen_seqs[0].spawn(pop_size)]
    decoded = [decode(g, r) for g, r in zip(genomes, rngs)]
    bases = [d[0] for d in decoded]
    genomes = np.stack([d[1] for d in decoded])
    fitness = np.array(pmap(fitness_of, bases))

    best = int(np.argmin(fitness))
    history = [float(fitness[best])]
    if progress:
        progress(0, history[-1])

    for gen in range(1, params.generations + 1):
        cand_rngs = [np.random.default_rng(s) for s in gen_seqs[gen].spawn(pop_size)]
        trials = []
        for k in range(pop_size):
            rng = cand_rngs[k]
            r1, r2, r3 = rng.choice([i for i in range(pop_size) if i != k], 3, replace=False)
            mutant = genomes[r1] + params.scale_f * (genomes[r2] - genomes[r3])
            mask = rng.random((m, n)) < params.crossover_cr
            mask.flat[rng.integers(m * n)] = True
            trial = np.where(mask, mutant, genomes[k])
            trials.append(decode(trial, rng))

        def trial_fitness(k: int) -> float:
            b = trials[k][0]
            if not admissible(b):
                return math.inf
            if b in cache._store:
                return cache(b)
            # only a trial that converges at its target's threshold can win
            if math.isfinite(fitness[k]) and not converges(b, ts, fitness[k]):
                return math.inf
            return cache(b)

        trial_fit = pmap(trial_fitness, range(pop_size))
        for k in range(pop_size):
            if trial_fit[k] <= fitness[k]:
                bases[k] = trials[k][0]
                genomes[k] = trials[k][1]
                fitness[k] = trial_fit[k]
        best = int(np.argmin(fitness))
        history.append(float(fitness[best]))
        log.info("generation %d best %.3f dB", gen, history[-1])
        if progress:
            progress(gen, history[-1])

    if not math.isfinite(fitness[best]):
        raise SearchFailed(f"no converging protograph found; last best {bases[best].entries}")
    cand = Candidate(bases[best], float(fitness[best]),
                     structurally_feasible(bases[best], params.max_entry, max_deg2,
                                           params.min_col_degree))
    return DeResult(cand, history, cache.misses, cache.hits)

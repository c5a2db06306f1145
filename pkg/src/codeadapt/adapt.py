"""Adaptation by evolutionary search.

Out-of-scope programs are evolved with the transformation operators; the
sub-model validity score of each variant is its fitness. A variant is only
emitted when its fitness clears the threshold, otherwise the original
program is returned untouched.
"""
from __future__ import annotations

import hashlib
import math
import random
import time
import zlib
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .lang import Ast
from .transforms import TransformOp, TransformRecord, apply, apply_sequence
from .units import SourceUnit
from .validation.dsmg import SubModelBundle, score_inputs

NUM_OPS = 15


@dataclass(frozen=True)
class AesConfig:
    max_iter: int = 3
    fitness_threshold: float = 0.2
    mutation_rate: float = 0.1
    crossover_n: int = 15
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError("must be at least 1", "max_iter")
        if not 1 <= self.crossover_n <= NUM_OPS:
            raise ConfigError(f"must be in 1..{NUM_OPS}", "crossover_n")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("must be in [0, 1]", "mutation_rate")


def crossover_n_for_rate(rate: float) -> int:
    """Map a crossover rate (0.16, 0.33, 0.66, 1) to an operator count (2, 5, 10, 15)."""
    return max(1, min(NUM_OPS, round(rate * NUM_OPS)))


def derive_seed(*parts) -> int:
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True, eq=False)
class Candidate:
    ast: Ast
    lineage: tuple[TransformRecord, ...] = ()
    fitness: Optional[float] = None

    def scored(self, fitness: float) -> "Candidate":
        return replace(self, fitness=float(fitness))

    @property
    def ops(self) -> list[int]:
        return [r.op.id for r in self.lineage]


class Evaluator:
    """Fitness oracle: the final validity score of a program under (model, bundle).

    Scores are memoized by printed program text, so re-visited variants cost
    nothing.
    """

    def __init__(self, model, bundle: SubModelBundle):
        self.model = model
        self.bundle = bundle
        self._cache: dict[str, tuple[float, int]] = {}
        self.evaluations = 0

    def score_units(self, units: Sequence[SourceUnit]) -> tuple[np.ndarray, np.ndarray]:
        """Final scores and predicted labels, computed fresh."""
        X = self.model.encode(units)
        l_x, _, final = score_inputs(self.model, self.bundle, X)
        return final, l_x

    def __call__(self, asts: Sequence[Ast]) -> list[float]:
        units = [SourceUnit("", a) for a in asts]
        missing = [u for u in units if u.text not in self._cache]
        if missing:
            final, l_x = self.score_units(missing)
            self.evaluations += len(missing)
            for u, f, lab in zip(missing, final, l_x):
                self._cache[u.text] = (float(f), int(lab))
        return [self._cache[u.text][0] for u in units]

    def label(self, ast: Ast) -> int:
        unit = SourceUnit("", ast)
        self([ast])
        return self._cache[unit.text][1]


def genpop(seed: Candidate, rng_seed: int = 0) -> list[Candidate]:
    """The seed plus one single-operator variant per operator that finds a site."""
    pop = [seed]
    for op_id in range(1, NUM_OPS + 1):
        new, rec = apply(seed.ast, TransformOp(op_id, rng_seed))
        if rec.sites_found == 0:
            continue
        pop.append(Candidate(new, seed.lineage + (rec,)))
    return pop


def fitness(pop: Sequence[Candidate], evaluator: Evaluator) -> list[Candidate]:
    todo = [c for c in pop if c.fitness is None]
    scores = iter(evaluator([c.ast for c in todo]))
    return [c if c.fitness is not None else c.scored(next(scores)) for c in pop]


def select(pop: Sequence[Candidate]) -> list[Candidate]:
    """Keep the fitter half (rounded up); ties go to shorter lineages, then earlier members."""
    if any(c.fitness is None for c in pop):
        raise ValueError("select needs scored candidates")
    ranked = sorted(range(len(pop)), key=lambda i: (-pop[i].fitness, len(pop[i].lineage), i))
    return [pop[i] for i in ranked[:math.ceil(len(pop) / 2)]]


def crossover_ops(n: int, rng: random.Random) -> list[int]:
    if n == NUM_OPS:
        ops = list(range(1, NUM_OPS + 1))
        rng.shuffle(ops)
        return ops
    if n == 2:
        return [1, rng.randint(2, NUM_OPS)]
    return rng.sample(range(1, NUM_OPS + 1), n)


def evolve(pop: Sequence[Candidate], cfg: AesConfig, rng: random.Random,
           key: tuple = ()) -> tuple[list[Candidate], int]:
    """Survivors plus one crossover child each; returns the new population and
    the number of operator applications spent."""
    if not pop:
        raise ValueError("evolve needs a non-empty population")
    children = []
    spent = 0
    for idx, parent in enumerate(pop):
        seed = derive_seed(cfg.rng_seed, *key, idx)
        ops = [TransformOp(o, seed) for o in crossover_ops(cfg.crossover_n, rng)]
        if rng.random() < cfg.mutation_rate:
            ops.append(TransformOp(rng.randint(1, NUM_OPS), seed))
        ast, recs = apply_sequence(parent.ast, ops)
        spent += len(ops)
        children.append(Candidate(ast, parent.lineage + tuple(recs)))
    return list(pop) + children, spent


def select_best(pop: Sequence[Candidate], incumbent: Optional[Candidate] = None) -> Candidate:
    best = incumbent
    for c in pop:
        if best is None or c.fitness > best.fitness:
            best = c
    return best


@dataclass
class AdaptResult:
    unit: SourceUnit
    best: Candidate
    adapted: bool
    history: list[float]
    transformations: int
    elapsed: float
    generations: int = 0

    def log(self, with_timing: bool = False) -> dict:
        """Lineage record; deterministic unless ``with_timing`` adds the wall time."""
        row = {"id": self.unit.id, "generations": self.generations,
               "initial_fitness": self.history[0], "final_fitness": self.best.fitness,
               "adapted": self.adapted, "ops_applied": self.best.ops if self.adapted else [],
               "best_history": self.history, "transformations": self.transformations}
        if with_timing:
            row["elapsed"] = self.elapsed
        return row


def adapt_unit(unit: SourceUnit, evaluator: Evaluator, cfg: AesConfig) -> AdaptResult:
    start = time.perf_counter()
    key = zlib.crc32(unit.id.encode("utf-8"))
    rng = random.Random(derive_seed(cfg.rng_seed, key))
    seed = fitness([Candidate(unit.ast)], evaluator)[0]
    pop = fitness(genpop(seed, derive_seed(cfg.rng_seed, key, 0)), evaluator)
    spent = len(pop) - 1
    best = select_best(pop, seed)
    history = [seed.fitness, best.fitness]
    generation = 0
    while generation < cfg.max_iter and best.fitness <= cfg.fitness_threshold:
        generation += 1
        pop, n = evolve(select(pop), cfg, rng, (key, generation))
        spent += n
        pop = fitness(pop, evaluator)
        best = select_best(pop, best)
        history.append(best.fitness)
    adapted = best.fitness > cfg.fitness_threshold and best is not seed
    out = unit.with_ast(best.ast) if adapted else unit
    return AdaptResult(out, best if adapted else seed, adapted, history, spent,
                       time.perf_counter() - start, generation)


def adapt_corpus(test: Sequence[SourceUnit], oos_ids, model, bundle: SubModelBundle,
                 cfg: AesConfig = AesConfig(), evaluator: Optional[Evaluator] = None
                 ) -> tuple[list[SourceUnit], list[AdaptResult]]:
    """Adapt the flagged units; everything else passes through as the same object."""
    oos_ids = set(oos_ids)
    unknown = oos_ids - {u.id for u in test}
    if unknown:
        raise ConfigError(f"ids not in the corpus: {sorted(unknown)[:5]}", "oos_ids")
    evaluator = evaluator or Evaluator(model, bundle)
    out, results = [], []
    for unit in test:
        if unit.id not in oos_ids:
            out.append(unit)
            continue
        res = adapt_unit(unit, evaluator, cfg)
        results.append(res)
        out.append(res.unit)
    return out, results

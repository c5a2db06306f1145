"""Search-strategy baselines for the adaptation stage.

Both strategies build at most ``budget`` transformations into a solution and
share the emission rule of the evolutionary search: the variant is used only
if its fitness clears the threshold.
"""
from __future__ import annotations

import random
import time
import zlib

from ..adapt import NUM_OPS, AdaptResult, Candidate, Evaluator, derive_seed, fitness
from ..transforms import TransformOp, apply
from ..units import SourceUnit

DEFAULT_BUDGET = 15


def _finish(unit: SourceUnit, seed: Candidate, best: Candidate, threshold: float,
            history: list[float], spent: int, start: float, steps: int) -> AdaptResult:
    adapted = best.fitness > threshold and best is not seed
    out = unit.with_ast(best.ast) if adapted else unit
    return AdaptResult(out, best if adapted else seed, adapted, history, spent,
                       time.perf_counter() - start, steps)


def random_search(unit: SourceUnit, evaluator: Evaluator, threshold: float,
                  rng_seed: int = 0, budget: int = DEFAULT_BUDGET) -> AdaptResult:
    """Stack uniformly random operators until the threshold is cleared or the budget is spent."""
    start = time.perf_counter()
    key = zlib.crc32(unit.id.encode("utf-8"))
    rng = random.Random(derive_seed(rng_seed, key, "random"))
    seed = fitness([Candidate(unit.ast)], evaluator)[0]
    cur = best = seed
    history = [seed.fitness]
    for step in range(budget):
        if best.fitness > threshold:
            break
        op = TransformOp(rng.randint(1, NUM_OPS), derive_seed(rng_seed, key, step))
        ast, rec = apply(cur.ast, op)
        cur = fitness([Candidate(ast, cur.lineage + (rec,))], evaluator)[0]
        if cur.fitness > best.fitness:
            best = cur
        history.append(best.fitness)
    return _finish(unit, seed, best, threshold, history, len(history) - 1, start, len(history) - 1)


def hill_climb(unit: SourceUnit, evaluator: Evaluator, threshold: float,
               rng_seed: int = 0, budget: int = DEFAULT_BUDGET) -> AdaptResult:
    """First-improvement hill climbing over single operators.

    Operators are tried in a fresh random order each step; the first one that
    raises the fitness is kept. The climb ends at the threshold, at a local
    optimum, or once the solution holds ``budget`` transformations.
    """
    start = time.perf_counter()
    key = zlib.crc32(unit.id.encode("utf-8"))
    rng = random.Random(derive_seed(rng_seed, key, "hillclimb"))
    seed = fitness([Candidate(unit.ast)], evaluator)[0]
    cur = seed
    history = [seed.fitness]
    spent = 0
    while len(cur.lineage) < budget and cur.fitness <= threshold:
        order = list(range(1, NUM_OPS + 1))
        rng.shuffle(order)
        step_seed = derive_seed(rng_seed, key, len(cur.lineage))
        improved = None
        for op_id in order:
            ast, rec = apply(cur.ast, TransformOp(op_id, step_seed))
            if rec.sites_found == 0:
                continue
            spent += 1
            cand = fitness([Candidate(ast, cur.lineage + (rec,))], evaluator)[0]
            if cand.fitness > cur.fitness:
                improved = cand
                break
        if improved is None:
            break
        cur = improved
        history.append(cur.fitness)
    return _finish(unit, seed, cur, threshold, history, spent, start, len(cur.lineage))

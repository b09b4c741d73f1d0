"""Transmission-pattern search under a fixed symbol budget.

``greedy_pattern`` spends the budget one symbol at a time on whichever spine
lowers the BLER bound most; ``ttp_pattern`` puts every extra symbol on the last
spine (the tail transmission pattern); ``brute_force_best_pattern`` enumerates
all positive compositions of the budget and is the optimality oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .bounds import BoundEvaluator, BoundKind, ThetaPartition
from .channel import FadingModel
from .codec import CodeParams
from .pattern import TransmissionPattern

MAX_COMPOSITIONS = 10**6


@dataclass(frozen=True)
class GreedyStep:
    pattern: TransmissionPattern
    p_e: float


def greedy_pattern(params: CodeParams, model: FadingModel, sigma2: float, partition: ThetaPartition | None,
                   p_ini: int, budget: int, kind: BoundKind = "refined"
                   ) -> tuple[TransmissionPattern, list[GreedyStep]]:
    """Greedy symbol allocation; returns the final pattern and every intermediate state.

    Ties between spines go to the largest index.
    """
    spines = params.spines
    if p_ini < 1:
        raise ValueError("p_ini must be >= 1")
    if p_ini * spines > budget:
        raise ValueError(f"infeasible: p_ini * n/k = {p_ini * spines} exceeds the budget {budget}")
    ev = BoundEvaluator(kind, params, model, sigma2, partition)
    pattern = TransmissionPattern.uniform(p_ini, spines)
    trajectory = [GreedyStep(pattern, ev.p_e(pattern))]
    while pattern.total < budget:
        best_i, best_val = 0, math.inf
        for i in range(spines):
            val = ev.p_e(pattern.incremented(i))
            if val <= best_val:
                best_i, best_val = i, val
        pattern = pattern.incremented(best_i)
        trajectory.append(GreedyStep(pattern, best_val))
    return pattern, trajectory


def ttp_pattern(base, extra: int) -> TransmissionPattern:
    """``base`` with ``extra`` more symbols on the last spine."""
    if extra < 0:
        raise ValueError("extra must be >= 0")
    base = base if isinstance(base, TransmissionPattern) else TransmissionPattern.of(base)
    return base.incremented(len(base) - 1, extra)


def compositions(total: int, parts: int):
    """All tuples of ``parts`` positive integers summing to ``total``."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        edges = (0, *cuts, total)
        yield tuple(b - a for a, b in zip(edges, edges[1:]))


def composition_count(total: int, parts: int) -> int:
    return math.comb(total - 1, parts - 1) if total >= parts else 0


def brute_force_best_pattern(params: CodeParams, model: FadingModel, sigma2: float,
                             partition: ThetaPartition | None, budget: int, kind: BoundKind = "refined"
                             ) -> tuple[TransmissionPattern, float]:
    """Exhaustive minimiser of the bound over patterns with every ``ell_i >= 1``.

    Ties go to the lexicographically largest tail-sum vector.
    """
    spines = params.spines
    count = composition_count(budget, spines)
    if count == 0:
        raise ValueError(f"budget {budget} cannot give every one of {spines} spines a symbol")
    if count > MAX_COMPOSITIONS:
        raise ValueError(f"{count} compositions exceed the enumeration limit of {MAX_COMPOSITIONS}")
    ev = BoundEvaluator(kind, params, model, sigma2, partition)
    best, best_val = None, math.inf
    for ells in compositions(budget, spines):
        cand = TransmissionPattern(ells)
        val = ev.p_e(cand)
        if val < best_val or (val == best_val and cand.tails > best.tails):
            best, best_val = cand, val
    return best, best_val

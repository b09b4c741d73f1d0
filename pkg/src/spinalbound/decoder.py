"""Exhaustive maximum-likelihood decoding with perfect CSI."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import Observations
from .codec import CodeParams, Constellation, build_constellation, codebook_words
from .pattern import TransmissionPattern

MAX_EXHAUSTIVE_BITS = 24
_CHUNK = 1 << 14


@dataclass(frozen=True)
class DecodeResult:
    message: int
    cost: float
    tie: bool = False


def _check(params: CodeParams, pattern: TransmissionPattern, obs: Observations):
    if len(obs) != pattern.total:
        raise ValueError(f"expected {pattern.total} observations, got {len(obs)}")


def decoding_cost(candidate: int, observations: Observations, params: CodeParams,
                  pattern: TransmissionPattern, constellation: Constellation | None = None) -> float:
    """Sum over (i, j) of ``|y_ij - h_ij f(x_ij(candidate))|^2``."""
    _check(params, pattern, observations)
    constellation = constellation or build_constellation(params.c, params.flavor)
    x = constellation.map(codebook_words(params, pattern, [candidate])[0])
    return float(np.sum(np.abs(observations.y - observations.h * x) ** 2))


@lru_cache(maxsize=16)
def codebook(params: CodeParams, pattern: TransmissionPattern) -> np.ndarray:
    """All ``2^n`` codewords as channel points, shape ``(2^n, total)``; cached."""
    if params.n > MAX_EXHAUSTIVE_BITS:
        raise ValueError(f"n={params.n} exceeds the exhaustive-search limit of {MAX_EXHAUSTIVE_BITS} bits")
    points = build_constellation(params.c, params.flavor).map(codebook_words(params, pattern))
    points.setflags(write=False)
    return points


def _costs(book: np.ndarray, y: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Costs of every codeword against a batch of observations: ``(batch, 2^n)``."""
    diff = y[:, None, :] - h[:, None, :] * book[None, :, :]
    return np.einsum("bmj,bmj->bm", diff.real, diff.real) + (
        np.einsum("bmj,bmj->bm", diff.imag, diff.imag) if np.iscomplexobj(diff) else 0.0)


def ml_decode(observations: Observations, params: CodeParams, pattern: TransmissionPattern,
              constellation: Constellation | None = None) -> DecodeResult:
    """Global argmin of the decoding cost; ties go to the smallest message word."""
    if params.n > MAX_EXHAUSTIVE_BITS:
        raise ValueError(f"n={params.n} exceeds the exhaustive-search limit of {MAX_EXHAUSTIVE_BITS} bits")
    _check(params, pattern, observations)
    y = np.asarray(observations.y)[None, :]
    h = np.asarray(observations.h)[None, :]
    if constellation is None and params.n <= 16:
        costs = _costs(codebook(params, pattern), y, h)[0]
    else:
        constellation = constellation or build_constellation(params.c, params.flavor)
        costs = np.empty(1 << params.n)
        # Chunks of consecutive words share spine prefixes; the reduction is order independent.
        for start in range(0, 1 << params.n, _CHUNK):
            msgs = np.arange(start, min(start + _CHUNK, 1 << params.n), dtype=np.uint64)
            book = constellation.map(codebook_words(params, pattern, msgs))
            costs[start:start + msgs.size] = _costs(book, y, h)[0]
    best = int(np.argmin(costs))
    best_cost = float(costs[best])
    return DecodeResult(best, best_cost, bool(np.count_nonzero(costs == best_cost) > 1))


def ml_decode_batch(y: np.ndarray, h: np.ndarray, params: CodeParams,
                    pattern: TransmissionPattern) -> np.ndarray:
    """Decode a batch of observation rows ``(batch, total)``; returns message words."""
    book = codebook(params, pattern)
    return np.argmin(_costs(book, np.asarray(y), np.asarray(h)), axis=1)

"""Monte Carlo BLER estimation with exact ML decoding, paired with the bounds."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import stats

from .bounds import ThetaPartition, bler_bound
from .channel import FadingModel, NoiseSpec, sample_fading, sample_noise, trial_rng
from .codec import CodeParams, build_constellation, codebook_words
from .decoder import MAX_EXHAUSTIVE_BITS, codebook, ml_decode_batch
from .pattern import TransmissionPattern

log = logging.getLogger(__name__)

DEFAULT_TRIALS = 10_000
_BATCH = 256

CodeMode = Literal["fixed", "ensemble"]


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo sweep.

    ``code="fixed"`` transmits with the code selected by ``params.key``.
    ``code="ensemble"`` draws a fresh hash key per trial, so the estimate is
    the BLER averaged over the random-hash ensemble the bounds are stated for.
    """

    params: CodeParams
    pattern: TransmissionPattern
    model: FadingModel
    snr_db_grid: tuple[float, ...]
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    theta_n: int = 20
    code: CodeMode = "fixed"

    def __post_init__(self):
        object.__setattr__(self, "snr_db_grid", tuple(float(s) for s in self.snr_db_grid))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db_grid:
            raise ValueError("SNR grid is empty")
        if self.params.n > MAX_EXHAUSTIVE_BITS:
            raise ValueError(f"n={self.params.n} exceeds the exhaustive-search limit of {MAX_EXHAUSTIVE_BITS} bits")
        if len(self.pattern) != self.params.spines:
            raise ValueError("pattern length does not match n/k")
        if self.model.flavor != self.params.flavor:
            raise ValueError("channel and code flavors differ")
        if self.code not in ("fixed", "ensemble"):
            raise ValueError(f"code must be 'fixed' or 'ensemble', got {self.code!r}")


@dataclass(frozen=True)
class SimPoint:
    snr_db: float
    sigma2: float
    errors: int
    trials: int
    ci95: tuple[float, float]
    bound_refined: float
    bound_gallager: float

    @property
    def bler(self) -> float:
        return self.errors / self.trials

    @property
    def dominance_ok(self) -> bool:
        """True when the whole 95% interval lies at or below the refined bound."""
        return self.ci95[1] <= self.bound_refined

    @property
    def violation(self) -> bool:
        """True when the data significantly contradict the refined bound."""
        return self.ci95[0] > self.bound_refined


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    points: tuple[SimPoint, ...] = field(default=())
    error: str | None = None


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(errors), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _stream(point: int, trial: int) -> int:
    return (point << 32) | trial


def _draw_trial(config: SimConfig, noise: NoiseSpec, point: int, trial: int, book):
    rng = trial_rng(config.seed, _stream(point, trial))
    msg = int(rng.integers(0, 1 << config.params.n))
    if config.code == "ensemble":
        key = int(rng.integers(0, 2**64, dtype=np.uint64))
        book = _keyed_book(config, key)
    size = config.pattern.total
    h = sample_fading(config.model, rng, size)
    y = h * book[msg] + sample_noise(noise, rng, size, config.model.flavor)
    return msg, y, h, book


def _keyed_book(config: SimConfig, key: int) -> np.ndarray:
    params = replace(config.params, key=key)
    return build_constellation(params.c, params.flavor).map(codebook_words(params, config.pattern))


def _decode(config: SimConfig, y, h, books) -> np.ndarray:
    if config.code == "fixed":
        return ml_decode_batch(y, h, config.params, config.pattern)
    diff = y[:, None, :] - h[:, None, :] * books
    return np.argmin(np.einsum("bmj,bmj->bm", diff.real, diff.real)
                     + np.einsum("bmj,bmj->bm", diff.imag, diff.imag), axis=1)


def _count_errors(config, noise, point, start, stop, book) -> int:
    draws = [_draw_trial(config, noise, point, t, book) for t in range(start, stop)]
    msgs = np.array([d[0] for d in draws])
    y = np.stack([d[1] for d in draws])
    h = np.stack([d[2] for d in draws])
    books = np.stack([d[3] for d in draws]) if config.code == "ensemble" else None
    decoded = _decode(config, y, h, books)
    return int(np.count_nonzero(decoded != msgs))


def _self_check(config: SimConfig, book):
    """Noiseless replay of trial 0 must decode to its own message."""
    msg, _, h, book = _draw_trial(config, NoiseSpec(1.0), 0, 0, book)
    x = book[msg]
    got = _decode(config, (h * x)[None, :], h[None, :], book[None])[0]
    if got != msg:
        raise RuntimeError(f"noiseless replay decoded {got} instead of {msg}")


def estimate_bler(config: SimConfig, workers: int = 1) -> SimResult:
    """Run ``config.trials`` independent trials per SNR point.

    Trial ``t`` at point ``p`` draws everything (message, hash key in ensemble
    mode, fading, noise) from ``trial_rng(seed, (p << 32) | t)``, so the counts
    do not depend on batching or ``workers``.
    """
    book = codebook(config.params, config.pattern) if config.code == "fixed" else None
    _self_check(config, book)
    partition = ThetaPartition.uniform(config.theta_n)
    points = []
    for p, snr in enumerate(config.snr_db_grid):
        noise = NoiseSpec.from_snr_db(snr, config.model.omega)
        batches = [(s, min(s + _BATCH, config.trials)) for s in range(0, config.trials, _BATCH)]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                counts = list(pool.map(lambda b: _count_errors(config, noise, p, *b, book), batches))
        else:
            counts = [_count_errors(config, noise, p, *b, book) for b in batches]
        errors = sum(counts)
        refined = bler_bound("refined", config.params, config.pattern, noise.sigma2, config.model, partition)
        gallager = bler_bound("gallager", config.params, config.pattern, noise.sigma2, config.model)
        point = SimPoint(snr, noise.sigma2, errors, config.trials, wilson_interval(errors, config.trials),
                         refined.p_e, gallager.p_e)
        log.info("%s snr=%.2f dB: %d/%d errors, refined bound %.3e",
                 config.model.label, snr, errors, config.trials, refined.p_e)
        points.append(point)
    return SimResult(config, tuple(points))


def derive_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def sweep(configs, workers: int = 1, seed: int | None = None) -> list[SimResult]:
    """Run configs in order.  With ``seed`` given, config ``i`` runs under a seed
    derived from ``(seed, i)``; a failing config is reported, not raised."""
    results = []
    for i, cfg in enumerate(configs):
        if seed is not None:
            cfg = replace(cfg, seed=derive_seed(seed, i))
        try:
            results.append(estimate_bler(cfg, workers))
        except (ValueError, RuntimeError) as exc:
            log.warning("config %d failed: %s", i, exc)
            results.append(SimResult(cfg, (), str(exc)))
    return results

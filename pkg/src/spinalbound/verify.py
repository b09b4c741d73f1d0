"""Property suite behind ``spinalbound verify``.

Each check returns a :class:`Check` carrying the worst measured deviation next
to the tolerance it was held to, so a report says how close a pass was.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .bounds import (BoundEvaluator, ThetaPartition, craig_q, pair_expectation, refined_F,
                     spectrum_for)
from .channel import FadingModel, fading_modulus_pdf
from .codec import CodeParams, hash_step
from .pattern import TransmissionPattern

FAULTS = ("rician-sign",)

D2_GRID = (0.1, 1.0, 10.0)
SIGMA2_GRID = (0.1, 1.0)
SIN2_GRID = (0.25, 1.0)
M_GRID = (0.5, 1.0, 2.0, 5.0)
K_GRID = (0.0, 1.0, 5.0, 20.0)
OMEGA_GRID = (0.5, 1.0, 2.0)
SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0)
L_GRID = (6, 12, 18, 24)

REFERENCE_N = 100_000

Expectation = Callable[[FadingModel, float, float, float], float]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: measured {self.measured:.3e}, tolerance {self.tolerance:.3e}"
        return f"{text} ({self.detail})" if self.detail else text


def fig3_params() -> CodeParams:
    return CodeParams(n=8, k=2, c=8, v=32, flavor="complex")


def fig3_families(omega: float = 1.0) -> tuple[FadingModel, ...]:
    return (FadingModel.rayleigh(omega), FadingModel.nakagami(2.0, omega), FadingModel.rician(1.0, omega))


def channel_grid():
    """Every non-AWGN model on the channel test grid."""
    for omega in OMEGA_GRID:
        yield FadingModel.rayleigh(omega)
        for m in M_GRID:
            yield FadingModel.nakagami(m, omega)
        for k in K_GRID:
            yield FadingModel.rician(k, omega)


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else abs(a)


def faulty_expectation(fault: str) -> Expectation:
    """A deliberately wrong ``pair_expectation`` used as a negative control."""
    if fault != "rician-sign":
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")

    def expectation(model, d2, sigma2, sin2theta):
        if model.family != "rician":
            return pair_expectation(model, d2, sigma2, sin2theta)
        x = model.omega * d2 / (4 * sigma2 * sin2theta)
        k1 = model.kfactor + 1.0
        return k1 / (x + k1) * math.exp(+model.kfactor * x / (x + k1))

    return expectation


def _split_points(model: FadingModel) -> list[float]:
    root = math.sqrt(model.omega)
    return [0.0, 0.5 * root, root, 2.0 * root, 4.0 * root]


def _quad_half_line(fn, model: FadingModel) -> float:
    edges = _split_points(model)
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        total += integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return total + integrate.quad(fn, edges[-1], np.inf, epsabs=0.0, epsrel=1e-12, limit=200)[0]


def quadrature_expectation(model: FadingModel, d2: float, sigma2: float, sin2theta: float) -> float:
    """``int exp(-r^2 d2 / (4 sigma2 sin2theta)) f_R(r) dr`` by adaptive quadrature."""
    a = d2 / (4.0 * sigma2 * sin2theta)
    return _quad_half_line(lambda r: math.exp(-a * r * r) * float(fading_modulus_pdf(model, r)), model)


def check_quadrature(expectation: Expectation = pair_expectation, tol: float = 1e-6) -> Check:
    worst, where = 0.0, ""
    for model in channel_grid():
        for d2, s2, s in itertools.product(D2_GRID, SIGMA2_GRID, SIN2_GRID):
            err = rel_err(float(expectation(model, d2, s2, s)), quadrature_expectation(model, d2, s2, s))
            if err > worst:
                worst, where = err, f"{model.label} d2={d2} sigma2={s2} sin2={s}"
    return Check("closed form vs quadrature", worst <= tol, worst, tol, f"worst at {where}")


def check_pdf_normalisation(tol: float = 1e-9) -> Check:
    worst = 0.0
    for model in channel_grid():
        mass = _quad_half_line(lambda r: float(fading_modulus_pdf(model, r)), model)
        worst = max(worst, abs(mass - 1.0))
    return Check("modulus pdf integrates to 1", worst <= tol, worst, tol)


def check_reductions(tol: float = 1e-12) -> Check:
    worst = 0.0
    for omega in OMEGA_GRID:
        ray = FadingModel.rayleigh(omega)
        for other in (FadingModel.nakagami(1.0, omega), FadingModel.rician(0.0, omega)):
            for d2, s2, s in itertools.product(D2_GRID, SIGMA2_GRID, SIN2_GRID):
                worst = max(worst, rel_err(pair_expectation(other, d2, s2, s), pair_expectation(ray, d2, s2, s)))
    return Check("Nakagami m=1 and Rician K=0 reduce to Rayleigh", worst <= tol, worst, tol)


def _strictly_decreasing(models) -> tuple[bool, float]:
    """Smallest relative step down across the sequence (negative if it rises)."""
    worst = math.inf
    for d2, s2, s in itertools.product(D2_GRID, SIGMA2_GRID, SIN2_GRID):
        vals = [pair_expectation(mdl, d2, s2, s) for mdl in models]
        worst = min(worst, min((a - b) / a for a, b in zip(vals, vals[1:])))
    return worst > 0, worst


def check_monotone_m() -> Check:
    ok, step = _strictly_decreasing([FadingModel.nakagami(m) for m in (0.5, 1, 2, 5, 10, 100)])
    return Check("pair expectation decreasing in m", ok, step, 0.0, "smallest relative decrease")


def check_monotone_k() -> Check:
    ok, step = _strictly_decreasing([FadingModel.rician(k) for k in (0, 1, 5, 20, 100)])
    return Check("pair expectation decreasing in K", ok, step, 0.0, "smallest relative decrease")


def awgn_relative_gaps(model: FadingModel) -> list[float]:
    awgn = FadingModel.awgn(model.omega)
    return [rel_err(pair_expectation(model, d2, s2, s), pair_expectation(awgn, d2, s2, s))
            for d2, s2, s in itertools.product(D2_GRID, SIGMA2_GRID, SIN2_GRID)]


def check_awgn_rate(tol: float = 0.05) -> Check:
    """The gap to the AWGN expectation shrinks like C/m (and C/K).

    Scaling the parameter by ten must scale every relative gap down by ten,
    to within ``tol``.
    """
    worst = 0.0
    for make in (FadingModel.nakagami, FadingModel.rician):
        coarse = awgn_relative_gaps(make(1e5))
        fine = awgn_relative_gaps(make(1e6))
        worst = max(worst, max(abs(10 * f / c - 1.0) for c, f in zip(coarse, fine)))
    return Check("AWGN limit approached at rate 1/m and 1/K", worst <= tol, worst, tol,
                 "relative deviation of gap(1e6)*10/gap(1e5) from 1")


def riemann_grid():
    spec = spectrum_for(8, "complex")
    for model in fig3_families():
        for snr in SNR_GRID:
            sigma2 = model.omega / 10 ** (snr / 10)
            for L in L_GRID:
                yield model, snr, sigma2, L, spec


def check_riemann_domination(ns=(1, 5, 20, 100)) -> Check:
    ref_part = ThetaPartition.uniform(REFERENCE_N)
    parts = [ThetaPartition.uniform(n) for n in ns]
    worst = math.inf
    for model, _snr, sigma2, L, spec in riemann_grid():
        ref = refined_F(L, sigma2, model, spec, ref_part)
        for part in parts:
            worst = min(worst, refined_F(L, sigma2, model, spec, part) / ref - 1.0)
    return Check(f"right Riemann sum dominates reference for N in {list(ns)}", worst >= 0, worst, 0.0,
                 "smallest relative excess over N=1e5")


def check_craig(tol: float = 1e-6) -> Check:
    xs = np.round(np.arange(0, 51) * 0.1, 10)
    worst = max(rel_err(craig_q(x), float(stats.norm.sf(x))) for x in xs)
    return Check("Craig form vs Gaussian tail on [0, 5]", worst < tol, worst, tol)


def lemma3_frequency(v: np.ndarray, sigma2: float, draws: int, rng: np.random.Generator) -> float:
    noise = math.sqrt(sigma2 / 2) * (rng.standard_normal((draws, v.size)) + 1j * rng.standard_normal((draws, v.size)))
    stat = np.real(np.sum(v * np.conj(v + 2 * noise), axis=1))
    return float(np.mean(stat <= 0))


def check_lemma3(draws: int = 100_000, seed: int = 3) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for length, sigma2 in ((1, 1.0), (6, 2.0), (24, 6.0)):
        v = rng.standard_normal(length) + 1j * rng.standard_normal(length)
        p = float(stats.norm.sf(np.linalg.norm(v) / math.sqrt(2 * sigma2)))
        freq = lemma3_frequency(v, sigma2, draws, rng)
        worst = max(worst, abs(freq - p) / math.sqrt(p * (1 - p) / draws))
    return Check("noise projection frequency vs Q(|v|/(sqrt2 sigma))", worst <= 3.0, worst, 3.0,
                 "standard errors")


def collision_rate(v: int = 16, pairs: int = 1_000_000, seed: int = 5) -> float:
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 2**63, size=(pairs, 2), dtype=np.uint64)
    m = rng.integers(0, 256, size=(pairs, 2), dtype=np.uint64)
    distinct = (s[:, 0] != s[:, 1]) | (m[:, 0] != m[:, 1])
    h0 = hash_step(s[:, 0], m[:, 0], v)
    h1 = hash_step(s[:, 1], m[:, 1], v)
    return float(np.count_nonzero((h0 == h1) & distinct)) / float(np.count_nonzero(distinct))


def check_hash_collisions(v: int = 16) -> Check:
    ratio = collision_rate(v) * 2**v
    return Check(f"hash collision rate at v={v}", 0.5 <= ratio <= 2.0, ratio, 2.0,
                 "rate / 2^-v, must lie in [0.5, 2]")


def check_weight_sum(ns=(1, 5, 20, 100)) -> Check:
    sums = [math.fsum(ThetaPartition.uniform(n).weights) for n in ns]
    worst = max(abs(s - 0.5) for s in sums)
    return Check(f"theta weights sum to 1/2 for N in {list(ns)}", worst == 0.0, worst, 0.0)


def check_epsilon_monotone() -> Check:
    params = fig3_params()
    part = ThetaPartition.uniform()
    L = np.arange(1, 51)
    worst = -math.inf
    for model in fig3_families():
        for snr in SNR_GRID:
            sigma2 = model.omega / 10 ** (snr / 10)
            for kind in ("refined", "gallager"):
                ev = BoundEvaluator(kind, params, model, sigma2, part if kind == "refined" else None)
                for a in range(1, params.spines + 1):
                    eps = np.exp(np.minimum(0.0, ev._log_mult[a - 1] + ev.log_f(L)))
                    worst = max(worst, float(np.max(np.diff(eps))))
    return Check("epsilon_a nonincreasing over L_a in [1, 50]", worst <= 0.0, worst, 0.0, "largest increase")


def check_theorem3_ordering() -> Check:
    params = fig3_params()
    part = ThetaPartition.uniform()
    pattern = TransmissionPattern.uniform(6, params.spines)
    tails = np.asarray(pattern.tails)
    worst = -math.inf
    for model in fig3_families():
        for snr in SNR_GRID:
            sigma2 = model.omega / 10 ** (snr / 10)
            ref = BoundEvaluator("refined", params, model, sigma2, part)
            gal = BoundEvaluator("gallager", params, model, sigma2)
            gap = (ref._log_mult + ref.log_f(tails)) - (gal._log_mult + gal.log_f(tails))
            worst = max(worst, float(np.max(gap)))
            if ref.p_e(pattern) >= gal.p_e(pattern):
                worst = max(worst, 0.0)
    return Check("refined below Gallager variant", worst < 0.0, worst, 0.0,
                 "largest log ratio of unclamped epsilons")


def bound_curve(model: FadingModel, snrs=SNR_GRID) -> list[float]:
    params = fig3_params()
    part = ThetaPartition.uniform()
    pattern = TransmissionPattern.uniform(6, params.spines)
    return [BoundEvaluator("refined", params, model, model.omega / 10 ** (s / 10), part).p_e(pattern)
            for s in snrs]


def check_bound_sweeps() -> Check:
    awgn = bound_curve(FadingModel.awgn())
    worst = -math.inf
    for curves in ([bound_curve(FadingModel.nakagami(m)) for m in (1, 2, 5, 10)],
                   [bound_curve(FadingModel.rician(k)) for k in (0, 1, 5, 20)]):
        for a, b in zip(curves, curves[1:]):
            worst = max(worst, max(y - x for x, y in zip(a, b)))
        for c in curves:
            worst = max(worst, max(lo - y for lo, y in zip(awgn, c)))
    return Check("bound nonincreasing in m and K, above the AWGN curve", worst <= 0.0, worst, 0.0,
                 "largest violation")


def run_checks(fault: str | None = None) -> list[Check]:
    expectation = faulty_expectation(fault) if fault else pair_expectation
    return [
        check_quadrature(expectation),
        check_pdf_normalisation(),
        check_reductions(),
        check_monotone_m(),
        check_monotone_k(),
        check_awgn_rate(),
        check_riemann_domination(),
        check_craig(),
        check_lemma3(),
        check_hash_collisions(),
        check_weight_sum(),
        check_epsilon_monotone(),
        check_theorem3_ordering(),
        check_bound_sweeps(),
    ]

"""Closed-form BLER upper bounds for ML-decoded Spinal codes over fading channels.

Two bound families share the product form ``P_e <= 1 - prod_a (1 - eps_a)``:

* ``gallager``: a rho = 1 Gallager random-coding bound averaged over the fading,
  ``eps_a = 2^{k(n/k - a + 1)} * S(1)^{L_a}``;
* ``refined``: a union bound over wrong messages with Craig's form of the Q
  function, upper-bounded by a right Riemann sum over theta,
  ``eps_a = min(1, (2^k - 1) 2^{n - ak} * sum_t b_t S(sin^2 theta_t)^{L_a})``;

where ``S(s) = 2^{-2c} sum_{beta_i, beta_j} E_R[exp(-R^2 |beta_i - beta_j|^2 / (4 sigma^2 s))]``.
Both depend on the constellation only through its pairwise distance spectrum.
Real-valued channels use the same expressions with ``sigma^2`` doubled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate

from .channel import FadingModel
from .codec import CodeParams, Constellation, build_constellation
from .pattern import TransmissionPattern

BoundKind = Literal["gallager", "refined"]
DEFAULT_THETA_N = 20


@dataclass(frozen=True)
class ThetaPartition:
    """Grid ``0 = theta_0 < ... < theta_N = pi/2`` with weights ``(theta_t - theta_{t-1}) / pi``."""

    thetas: tuple[float, ...]

    def __post_init__(self):
        th = tuple(float(t) for t in self.thetas)
        if len(th) < 2:
            raise ValueError("a partition needs at least the two endpoints")
        if th[0] != 0.0 or th[-1] != math.pi / 2:
            raise ValueError("partition must start at 0 and end at pi/2 exactly")
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ValueError("partition must be strictly increasing")
        object.__setattr__(self, "thetas", th)

    @classmethod
    def uniform(cls, n: int = DEFAULT_THETA_N) -> "ThetaPartition":
        if n < 1:
            raise ValueError("need at least one interval")
        inner = [t * math.pi / (2 * n) for t in range(1, n)]
        return cls((0.0, *inner, math.pi / 2))

    @property
    def n(self) -> int:
        return len(self.thetas) - 1

    @property
    def weights(self) -> np.ndarray:
        return np.diff(np.asarray(self.thetas)) / math.pi

    @property
    def right_sin2(self) -> np.ndarray:
        """``sin^2`` at the right endpoint of each interval."""
        return np.sin(np.asarray(self.thetas[1:])) ** 2


@dataclass(frozen=True)
class PairwiseDistanceSpectrum:
    """Distinct squared distances over ordered constellation pairs, with multiplicities."""

    d2: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    c: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / float(1 << (2 * self.c))


def distance_spectrum(constellation: Constellation) -> PairwiseDistanceSpectrum:
    """Collapse the ``2^{2c}`` pair sum using the integer grid coordinates (exact grouping)."""
    coords = constellation.coords.reshape(constellation.size, -1)
    diff = coords[:, None, :] - coords[None, :, :]
    sq = np.sum(diff * diff, axis=-1).ravel()
    uniq, counts = np.unique(sq, return_counts=True)
    return PairwiseDistanceSpectrum(constellation.scale ** 2 * uniq.astype(float), counts, constellation.c)


@lru_cache(maxsize=32)
def spectrum_for(c: int, flavor: str) -> PairwiseDistanceSpectrum:
    return distance_spectrum(build_constellation(c, flavor))


def pair_expectation(model: FadingModel, d2, sigma2, sin2theta):
    """``E_R[exp(-R^2 d2 / (4 sigma2 sin2theta))]`` in closed form (broadcasts).

    For AWGN the gain is deterministic with ``R^2 = omega``.
    """
    d2 = np.asarray(d2, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    s = np.asarray(sin2theta, dtype=float)
    if np.any(d2 < 0) or np.any(sigma2 <= 0) or np.any((s <= 0) | (s > 1)):
        raise ValueError("need d2 >= 0, sigma2 > 0 and sin2theta in (0, 1]")
    w = 4.0 * sigma2 * s
    x = model.omega * d2 / w  # mean faded pair SNR
    if model.family == "awgn":
        out = np.exp(-x)
    elif model.family == "rayleigh":
        out = 1.0 / (1.0 + x)
    elif model.family == "nakagami":
        out = np.exp(-model.m * np.log1p(x / model.m))
    else:
        k1 = model.kfactor + 1.0
        out = k1 / (x + k1) * np.exp(-model.kfactor * x / (x + k1))
    return out if out.ndim else float(out)


def base_sum(spectrum: PairwiseDistanceSpectrum, model: FadingModel, sigma2, sin2theta):
    """Pair-averaged expectation ``S(sin2theta)``; vectorised over ``sin2theta``."""
    s = np.asarray(sin2theta, dtype=float)
    vals = pair_expectation(model, spectrum.d2, sigma2, s[..., None])
    out = np.asarray(vals) @ spectrum.probabilities
    return out if out.ndim else float(out)


def _log_base(spectrum, model, sigma2, sin2):
    return np.log(base_sum(spectrum, model, sigma2, sin2))


def refined_F(L_a: int, sigma2: float, model: FadingModel, spectrum: PairwiseDistanceSpectrum,
              partition: ThetaPartition) -> float:
    """Right Riemann sum ``sum_t b_t S(sin^2 theta_t)^{L_a}``, evaluated in log space."""
    if L_a < 1:
        raise ValueError("L_a must be >= 1")
    logs = _log_base(spectrum, model, sigma2, partition.right_sin2)
    return float(partition.weights @ np.exp(L_a * logs))


def craig_q(x: float) -> float:
    """Gaussian tail via ``(1/pi) int_0^{pi/2} exp(-x^2 / (2 sin^2 theta)) dtheta``."""
    x2 = float(x) ** 2

    def integrand(theta):
        s = math.sin(theta)
        return math.exp(-x2 / (2 * s * s)) if s > 0 else 0.0

    val, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-12, limit=200)
    return val / math.pi


def _multiplier_log(kind: BoundKind, a: int, params: CodeParams) -> float:
    if kind == "refined":
        return math.log(2 ** params.k - 1) + (params.n - a * params.k) * math.log(2)
    return params.k * (params.spines - a + 1) * math.log(2)


def _effective_sigma2(sigma2: float, flavor: str) -> float:
    # Real channels: F(L, sigma) -> F(L, sqrt(2) sigma)
    return 2.0 * sigma2 if flavor == "real" else sigma2


class BoundEvaluator:
    """Caches ``log S`` on the theta grid so many patterns can be scored cheaply.

    The greedy and brute-force pattern searches evaluate thousands of patterns
    for one (code, channel, noise) triple; only the tail sums change.
    """

    def __init__(self, kind: BoundKind, params: CodeParams, model: FadingModel, sigma2: float,
                 partition: ThetaPartition | None = None,
                 spectrum: PairwiseDistanceSpectrum | None = None):
        if kind not in ("gallager", "refined"):
            raise ValueError(f"unknown bound kind {kind!r}")
        if kind == "refined" and partition is None:
            raise ValueError("the refined bound needs a theta partition")
        if model.flavor != params.flavor:
            raise ValueError(f"channel flavor {model.flavor!r} does not match code flavor {params.flavor!r}")
        if not sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        self.kind = kind
        self.params = params
        self.model = model
        self.sigma2 = sigma2
        self.partition = partition if kind == "refined" else None
        self.spectrum = spectrum or spectrum_for(params.c, params.flavor)
        s2 = _effective_sigma2(sigma2, params.flavor)
        if kind == "refined":
            self._log_w = np.log(self.partition.weights)
            self._log_s = _log_base(self.spectrum, model, s2, self.partition.right_sin2)
        else:
            self._log_w = np.zeros(1)
            self._log_s = np.atleast_1d(_log_base(self.spectrum, model, s2, 1.0))
        self._log_mult = np.array([_multiplier_log(kind, a, params) for a in range(1, params.spines + 1)])

    def log_f(self, L_a):
        """``log F(L_a)`` (refined) or ``L_a log S(1)`` (gallager), vectorised over ``L_a``."""
        L = np.asarray(L_a, dtype=float)
        terms = self._log_w + L[..., None] * self._log_s
        top = terms.max(axis=-1, keepdims=True)
        return (top + np.log(np.exp(terms - top).sum(axis=-1, keepdims=True)))[..., 0]

    def epsilons(self, pattern: TransmissionPattern) -> np.ndarray:
        if len(pattern) != self.params.spines:
            raise ValueError(f"pattern has {len(pattern)} entries, code has {self.params.spines} spines")
        tails = np.asarray(pattern.tails)
        if np.any(tails < 1):
            raise ValueError("every tail sum L_a must be >= 1")
        return np.exp(np.minimum(0.0, self._log_mult + self.log_f(tails)))

    def p_e(self, pattern: TransmissionPattern) -> float:
        return p_e_from_epsilons(self.epsilons(pattern))


def p_e_from_epsilons(eps) -> float:
    eps = np.asarray(eps, dtype=float)
    if np.any(eps >= 1.0):
        return 1.0
    return float(-np.expm1(np.sum(np.log1p(-eps))))


def epsilon_refined(a: int, params: CodeParams, pattern: TransmissionPattern, sigma2: float,
                    model: FadingModel, spectrum: PairwiseDistanceSpectrum | None = None,
                    partition: ThetaPartition | None = None) -> float:
    """``min(1, (2^k - 1) 2^{n - ak} F(L_a))`` for segment ``a`` (1-based)."""
    _check_segment(a, params, pattern)
    ev = BoundEvaluator("refined", params, model, sigma2, partition or ThetaPartition.uniform(), spectrum)
    return float(ev.epsilons(pattern)[a - 1])


def epsilon_gallager(a: int, params: CodeParams, pattern: TransmissionPattern, sigma2: float,
                     model: FadingModel, spectrum: PairwiseDistanceSpectrum | None = None) -> float:
    """``min(1, 2^{k(n/k - a + 1)} S(1)^{L_a})`` for segment ``a`` (1-based)."""
    _check_segment(a, params, pattern)
    ev = BoundEvaluator("gallager", params, model, sigma2, None, spectrum)
    return float(ev.epsilons(pattern)[a - 1])


def _check_segment(a, params, pattern):
    if not 1 <= a <= params.spines:
        raise ValueError(f"segment index must lie in [1, {params.spines}]")
    if pattern.tails[a - 1] < 1:
        raise ValueError(f"L_{a} = 0 makes the bound vacuous")


@dataclass(frozen=True)
class BlerBoundReport:
    kind: BoundKind
    epsilons: tuple[float, ...]
    p_e: float
    params: CodeParams
    model: FadingModel
    sigma2: float
    pattern: TransmissionPattern
    partition: ThetaPartition | None = None


def bler_bound(kind: BoundKind, params: CodeParams, pattern: TransmissionPattern, sigma2: float,
               model: FadingModel, partition: ThetaPartition | None = None,
               spectrum: PairwiseDistanceSpectrum | None = None) -> BlerBoundReport:
    if kind == "gallager" and partition is not None:
        raise ValueError("the Gallager-variant bound takes no theta partition")
    ev = BoundEvaluator(kind, params, model, sigma2, partition, spectrum)
    eps = ev.epsilons(pattern)
    return BlerBoundReport(kind, tuple(float(e) for e in eps), p_e_from_epsilons(eps),
                           params, model, sigma2, pattern, ev.partition)

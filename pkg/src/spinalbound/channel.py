"""Flat fast fading channel with perfect CSI at the receiver.

Each transmitted point sees its own i.i.d. coefficient ``h`` and additive
Gaussian noise: ``y = h * x + n``.  Randomness always comes from an explicit
``numpy.random.Generator``; :func:`trial_rng` derives a counter-based Philox
stream per trial so runs are reproducible and order independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal, NamedTuple

import numpy as np
from scipy import special

Family = Literal["awgn", "rayleigh", "nakagami", "rician"]
FAMILIES = ("awgn", "rayleigh", "nakagami", "rician")


@dataclass(frozen=True)
class FadingModel:
    family: Family
    omega: float = 1.0
    m: float | None = None
    kfactor: float | None = None
    flavor: Literal["real", "complex"] = "complex"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown fading family {self.family!r}")
        if self.flavor not in ("real", "complex"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.family == "nakagami":
            if self.m is None or not self.m >= 0.5:
                raise ValueError("Nakagami shape m must be >= 0.5")
        elif self.m is not None:
            raise ValueError("m only applies to the Nakagami family")
        if self.family == "rician":
            if self.kfactor is None or not self.kfactor >= 0:
                raise ValueError("Rician factor K must be >= 0")
        elif self.kfactor is not None:
            raise ValueError("kfactor only applies to the Rician family")

    @classmethod
    def awgn(cls, omega=1.0, flavor="complex"):
        """Unit-gain channel; ``omega`` only enters the bound as a deterministic power gain."""
        return cls("awgn", omega, flavor=flavor)

    @classmethod
    def rayleigh(cls, omega=1.0, flavor="complex"):
        return cls("rayleigh", omega, flavor=flavor)

    @classmethod
    def nakagami(cls, m, omega=1.0, flavor="complex"):
        return cls("nakagami", omega, m=float(m), flavor=flavor)

    @classmethod
    def rician(cls, kfactor, omega=1.0, flavor="complex"):
        return cls("rician", omega, kfactor=float(kfactor), flavor=flavor)

    def with_flavor(self, flavor) -> "FadingModel":
        return FadingModel(self.family, self.omega, self.m, self.kfactor, flavor)

    @property
    def label(self) -> str:
        if self.family == "nakagami":
            return f"nakagami(m={self.m:g})"
        if self.family == "rician":
            return f"rician(K={self.kfactor:g})"
        return self.family


@dataclass(frozen=True)
class NoiseSpec:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("noise variance must be positive")

    @classmethod
    def from_snr_db(cls, snr_db: float, omega: float = 1.0) -> "NoiseSpec":
        """SNR = omega * E|f(x)|^2 / sigma^2 with a unit-energy constellation."""
        return cls(omega / 10.0 ** (snr_db / 10.0))


def sigma2_from_snr_db(snr_db: float, omega: float = 1.0) -> float:
    return NoiseSpec.from_snr_db(snr_db, omega).sigma2


def trial_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (global seed, stream id); both are 64-bit."""
    key = ((int(seed) & (2**64 - 1)) << 64) | (int(stream) & (2**64 - 1))
    return np.random.Generator(np.random.Philox(key=key))


def _sample_modulus(model: FadingModel, rng: np.random.Generator, size):
    if model.family == "rayleigh":
        g = rng.normal(0.0, np.sqrt(model.omega / 2), size=(2,) + _shape(size))
        return np.hypot(g[0], g[1])
    if model.family == "nakagami":
        return np.sqrt(rng.gamma(model.m, model.omega / model.m, size=size))
    # Rician: |LOS + scattered| with K = LOS power / scattered power
    los = np.sqrt(model.kfactor * model.omega / (model.kfactor + 1))
    g = rng.normal(0.0, np.sqrt(model.omega / (2 * (model.kfactor + 1))), size=(2,) + _shape(size))
    return np.hypot(los + g[0], g[1])


def _shape(size):
    if size is None:
        return ()
    return (size,) if np.isscalar(size) else tuple(size)


def sample_fading(model: FadingModel, rng: np.random.Generator, size=None):
    """Fading coefficients: modulus from the family law, uniform phase (complex)
    or a uniform +/-1 sign (real).  AWGN returns exactly 1."""
    if model.family == "awgn":
        one = np.ones(_shape(size), dtype=complex if model.flavor == "complex" else float)
        return one if size is not None else one.item()
    r = _sample_modulus(model, rng, size)
    if model.flavor == "complex":
        h = r * np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=size))
    else:
        h = r * rng.choice((-1.0, 1.0), size=size)
    return h


def sample_noise(noise: NoiseSpec, rng: np.random.Generator, size, flavor="complex"):
    if flavor == "complex":
        g = rng.normal(0.0, np.sqrt(noise.sigma2 / 2), size=(2,) + _shape(size))
        return g[0] + 1j * g[1]
    return rng.normal(0.0, np.sqrt(noise.sigma2), size=size)


class ChannelObservation(NamedTuple):
    y: complex
    h: complex


@dataclass(frozen=True)
class Observations:
    """Received points and the (perfectly known) fading coefficients."""

    y: np.ndarray
    h: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, i) -> ChannelObservation:
        return ChannelObservation(self.y[i], self.h[i])

    def __iter__(self) -> Iterator[ChannelObservation]:
        return (ChannelObservation(y, h) for y, h in zip(self.y, self.h))

    def scaled(self, factor: float) -> "Observations":
        return Observations(self.y * factor, self.h * factor)


def transmit(points, model: FadingModel, noise: NoiseSpec, rng: np.random.Generator) -> Observations:
    x = np.asarray(points)
    if x.size == 0:
        raise ValueError("nothing to transmit")
    h = sample_fading(model, rng, size=x.shape)
    n = sample_noise(noise, rng, x.shape, model.flavor)
    return Observations(h * x + n, h)


def fading_modulus_pdf(model: FadingModel, r):
    """Density of the fading modulus ``R = |h|`` at ``r >= 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("modulus density is defined for r >= 0")
    om = model.omega
    if model.family == "awgn":
        raise ValueError("AWGN has a deterministic unit gain, not a modulus distribution")
    if model.family == "rayleigh":
        out = 2 * r / om * np.exp(-r * r / om)
    elif model.family == "nakagami":
        m = model.m
        logc = np.log(2.0) + m * np.log(m) - special.gammaln(m) - m * np.log(om)
        with np.errstate(divide="ignore"):
            out = np.exp(logc + special.xlogy(2 * m - 1, r) - m * r * r / om)
    else:
        k = model.kfactor
        arg = 2 * np.sqrt(k * (k + 1) / om) * r
        # i0e(x) = exp(-x) I0(x) keeps the Bessel factor finite for large K
        out = (2 * (k + 1) * r / om) * np.exp(-k - (k + 1) * r * r / om + arg) * special.i0e(arg)
    return out if out.ndim else float(out)

"""Spinal encoder: segmentation, hash chain, RNG expansion, constellation mapping.

All integer words are handled MSB-first: segment 1 is the top ``k`` bits of
the message, and the first ``c``-bit word of a 64-bit RNG block is its top
``c`` bits.  Every function here is vectorised over numpy ``uint64`` arrays so
the decoder can build the full codebook in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .pattern import TransmissionPattern

Flavor = Literal["real", "complex"]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_HASH_KEY = np.uint64(0x243F6A8885A308D3)
_SEGMENT_KEY = np.uint64(0x13198A2E03707344)
_RNG_KEY = np.uint64(0xA4093822299F31D0)


def _mix64(z):
    """splitmix64 finaliser; bijective on 64-bit words."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def _mask(bits: int) -> np.uint64:
    return _MASK64 if bits >= 64 else np.uint64((1 << bits) - 1)


def _unwrap(x, scalar: bool):
    return int(x) if scalar else x


@dataclass(frozen=True)
class CodeParams:
    """A Spinal code instance: message bits ``n``, segment bits ``k``,
    symbol bits ``c``, spine bits ``v``, and real or complex mapping."""

    n: int
    k: int
    c: int
    v: int = 32
    flavor: Flavor = "complex"
    key: int = 0

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError("n and k must be positive")
        if self.n % self.k:
            raise ValueError(f"k={self.k} must divide n={self.n}")
        if self.n > 64:
            raise ValueError("messages are handled as 64-bit words; n must be <= 64")
        if not 1 <= self.v <= 64:
            raise ValueError("spine width v must lie in [1, 64]")
        if not 1 <= self.c <= 16:
            raise ValueError("symbol width c must lie in [1, 16]")
        if self.flavor not in ("real", "complex"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.flavor == "complex" and self.c % 2:
            raise ValueError("complex mapping needs an even c (c/2 bits per I/Q rail)")
        if not 0 <= self.key < 2**64:
            raise ValueError("key must be a 64-bit word")

    @property
    def spines(self) -> int:
        return self.n // self.k


def _keyed(base: np.uint64, key: int) -> np.uint64:
    return base ^ _mix64(np.uint64(key))[()]


def hash_step(state, segment, v: int = 32, key: int = 0):
    """One link of the hash chain: ``s_i = H(s_{i-1}, m_i)`` truncated to ``v`` bits.

    Accepts Python ints or ``uint64`` arrays (broadcast together).  ``key``
    selects a member of the hash family; 0 is the default code.
    """
    scalar = np.isscalar(state) and np.isscalar(segment)
    s = np.asarray(state, dtype=np.uint64)
    m = np.asarray(segment, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64(_mix64(s ^ _keyed(_HASH_KEY, key)) ^ (m * _GOLDEN + _SEGMENT_KEY))
    return _unwrap(z & _mask(v), scalar)


def _rng_blocks(spine, blocks, key: int = 0):
    """Counter-mode RNG: block ``b`` of spine ``s`` is ``mix(mix(s ^ key) + (b+1)*golden)``."""
    s = np.asarray(spine, dtype=np.uint64)[..., None]
    b = np.asarray(blocks, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(_mix64(s ^ _keyed(_RNG_KEY, key)) + (b + np.uint64(1)) * _GOLDEN)


def symbol_words(spine, js, c: int, key: int = 0):
    """The ``c``-bit words at (0-based) positions ``js`` of each spine's stream.

    Random access: word ``j`` lives in block ``j // (64 // c)``, so the stream is
    prefix stable by construction.  Returns shape ``spine.shape + (len(js),)``.
    """
    js = np.asarray(js, dtype=np.int64)
    per_block = 64 // c
    blocks = _rng_blocks(spine, js // per_block, key)
    shift = (64 - c * (js % per_block + 1)).astype(np.uint64)
    return (blocks >> shift) & _mask(c)


def expand_symbols(spine: int, count: int, c: int, key: int = 0) -> list[int]:
    """First ``count`` c-bit words of the RNG seeded by ``spine``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return [int(x) for x in symbol_words(np.uint64(spine), np.arange(count), c, key)]


def segments(message, params: CodeParams):
    """Split messages (int or uint64 array) into their ``n/k`` segments, MSB first.

    Returns an array with a trailing axis of length ``n/k``.
    """
    msg = np.asarray(message, dtype=np.uint64)
    shifts = np.array([params.n - (i + 1) * params.k for i in range(params.spines)], dtype=np.uint64)
    return (msg[..., None] >> shifts) & _mask(params.k)


@dataclass(frozen=True)
class SpineChain:
    spines: tuple[int, ...]
    seed_spine: int = 0


def spine_chain(message: int, params: CodeParams) -> SpineChain:
    if not 0 <= message < (1 << params.n):
        raise ValueError(f"message must be an {params.n}-bit word")
    s = 0
    out = []
    for seg in segments(message, params):
        s = hash_step(s, int(seg), params.v, params.key)
        out.append(s)
    return SpineChain(tuple(out))


def spine_tree(params: CodeParams) -> list[np.ndarray]:
    """Spine values for every message prefix, level by level.

    ``tree[i][p]`` is the spine after absorbing the ``i+1`` segments whose
    concatenation is the integer ``p``.  Candidates sharing a prefix share the
    hash invocation, so the whole codebook costs about ``2^n`` hashes.
    """
    width = 1 << params.k
    level = np.zeros(1, dtype=np.uint64)
    tree = []
    for _ in range(params.spines):
        parents = np.repeat(level, width)
        segs = np.tile(np.arange(width, dtype=np.uint64), level.size)
        level = hash_step(parents, segs, params.v, params.key)
        tree.append(level)
    return tree


@dataclass(frozen=True)
class Constellation:
    """Uniform PAM (real) or square QAM (complex) grid at unit average energy.

    ``coords`` are the odd integer grid coordinates (shape ``(2^c,)`` for real,
    ``(2^c, 2)`` for complex); ``points = scale * coords`` folded to complex.
    """

    c: int
    flavor: Flavor
    coords: np.ndarray = field(repr=False)
    scale: float

    @property
    def size(self) -> int:
        return 1 << self.c

    @property
    def points(self) -> np.ndarray:
        if self.flavor == "real":
            return self.scale * self.coords.astype(float)
        return self.scale * (self.coords[:, 0] + 1j * self.coords[:, 1])

    @property
    def avg_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def map(self, words):
        return self.points[np.asarray(words, dtype=np.int64)]


def build_constellation(c: int, flavor: Flavor = "complex") -> Constellation:
    if c < 1:
        raise ValueError("c must be >= 1")
    if flavor == "complex":
        if c % 2:
            raise ValueError(f"complex constellation needs even c, got {c}")
        side = 1 << (c // 2)
        rail = 2 * np.arange(side) - (side - 1)
        idx = np.arange(1 << c)
        coords = np.stack([rail[idx >> (c // 2)], rail[idx & (side - 1)]], axis=1)
        energy = 2 * (side * side - 1) / 3
    elif flavor == "real":
        size = 1 << c
        coords = 2 * np.arange(size) - (size - 1)
        energy = (size * size - 1) / 3
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    return Constellation(c, flavor, coords.astype(np.int64), float(1.0 / np.sqrt(energy)))


def symbol_stream(message: int, params: CodeParams, pattern: TransmissionPattern) -> list[list[int]]:
    """The c-bit words ``x_{i,j}`` emitted for one message, grouped by spine."""
    chain = spine_chain(message, params)
    return [
        [int(w) for w in symbol_words(np.uint64(s), np.arange(ell), params.c, params.key)] if ell else []
        for s, ell in zip(chain.spines, pattern)
    ]


def _check_pattern(params: CodeParams, pattern: TransmissionPattern):
    if len(pattern) != params.spines:
        raise ValueError(f"pattern has {len(pattern)} entries, code has {params.spines} spines")
    if pattern.ells[-1] < 1:
        raise ValueError("the last spine must transmit at least one symbol (every tail sum must be >= 1)")


def codebook_words(params: CodeParams, pattern: TransmissionPattern, messages=None) -> np.ndarray:
    """c-bit words for many messages at once, shape ``(len(messages), total)``.

    With ``messages=None`` the full ``2^n`` codebook is built via the spine tree.
    """
    _check_pattern(params, pattern)
    if messages is None:
        tree = spine_tree(params)
        count = 1 << params.n
        msgs = np.arange(count, dtype=np.uint64)
    else:
        msgs = np.atleast_1d(np.asarray(messages, dtype=np.uint64))
        tree = None
    out = np.empty((msgs.size, pattern.total), dtype=np.uint64)
    segs = segments(msgs, params)
    state = np.zeros(msgs.size, dtype=np.uint64)
    col = 0
    for i, ell in enumerate(pattern):
        if tree is not None:
            prefix = msgs >> np.uint64(params.n - (i + 1) * params.k)
            level = tree[i]
            if ell:
                words = symbol_words(level, np.arange(ell), params.c, params.key)
                out[:, col:col + ell] = words[prefix.astype(np.int64)]
        else:
            state = hash_step(state, segs[:, i], params.v, params.key)
            if ell:
                out[:, col:col + ell] = symbol_words(state, np.arange(ell), params.c, params.key)
        col += ell
    return out


def encode(params: CodeParams, message: int, pattern: TransmissionPattern,
           constellation: Constellation | None = None) -> np.ndarray:
    """Channel points for one message, spine-major: all of spine 1, then spine 2, ..."""
    if not 0 <= message < (1 << params.n):
        raise ValueError(f"message must be an {params.n}-bit word")
    constellation = constellation or build_constellation(params.c, params.flavor)
    words = codebook_words(params, pattern, [message])[0]
    return constellation.map(words)

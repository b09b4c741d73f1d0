import numpy as np
import pytest
from scipy import stats

from spinalbound.bounds import ThetaPartition, bler_bound
from spinalbound.channel import FadingModel, NoiseSpec, Observations, transmit, trial_rng
from spinalbound.codec import CodeParams, build_constellation, codebook_words, encode
from spinalbound.decoder import codebook, decoding_cost, ml_decode, ml_decode_batch
from spinalbound.pattern import TransmissionPattern
from spinalbound.verify import lemma3_frequency

SMALL = CodeParams(n=8, k=2, c=4)
PATTERN = TransmissionPattern.uniform(2, 4)


def noisy(msg, params=SMALL, pattern=PATTERN, model=FadingModel.rayleigh(), sigma2=0.3, seed=0):
    return transmit(encode(params, msg, pattern), model, NoiseSpec(sigma2), trial_rng(seed, msg))


def test_noiseless_awgn_has_zero_cost_and_decodes():
    x = encode(SMALL, 0x9D, PATTERN)
    obs = Observations(x, np.ones_like(x))
    assert decoding_cost(0x9D, obs, SMALL, PATTERN) == 0.0
    res = ml_decode(obs, SMALL, PATTERN)
    assert (res.message, res.cost, res.tie) == (0x9D, 0.0, False)


def test_true_message_cost_is_noise_energy():
    x = encode(SMALL, 0x42, PATTERN)
    rng = trial_rng(1)
    h = rng.normal(size=x.size) + 1j * rng.normal(size=x.size)
    n = 0.2 * (rng.normal(size=x.size) + 1j * rng.normal(size=x.size))
    obs = Observations(h * x + n, h)
    assert decoding_cost(0x42, obs, SMALL, PATTERN) == pytest.approx(float(np.sum(np.abs(n) ** 2)), rel=1e-12)


def test_cost_invariant_under_consistent_permutation():
    obs = noisy(0x11)
    perm = np.random.default_rng(2).permutation(len(obs))
    x = build_constellation(SMALL.c, SMALL.flavor).map(codebook_words(SMALL, PATTERN, [0x37])[0])
    direct = np.sum(np.abs(obs.y - obs.h * x) ** 2)
    shuffled = np.sum(np.abs(obs.y[perm] - obs.h[perm] * x[perm]) ** 2)
    assert direct == pytest.approx(shuffled, rel=1e-12)
    assert decoding_cost(0x37, obs, SMALL, PATTERN) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("msg", [0, 7, 0x80, 0xFF])
def test_decoder_is_exhaustive(msg):
    obs = noisy(msg, sigma2=2.0)
    res = ml_decode(obs, SMALL, PATTERN)
    costs = [decoding_cost(m, obs, SMALL, PATTERN) for m in range(256)]
    assert res.cost == pytest.approx(min(costs), rel=1e-12)
    assert res.message == int(np.argmin(costs))


def test_decoder_exhaustive_at_twelve_bits():
    params = CodeParams(n=12, k=3, c=4)
    pattern = TransmissionPattern.of([1, 1, 2, 2])
    obs = noisy(0xABC, params, pattern, sigma2=1.0)
    res = ml_decode(obs, params, pattern)
    book = build_constellation(4, "complex").map(codebook_words(params, pattern))
    costs = np.sum(np.abs(obs.y[None] - obs.h[None] * book) ** 2, axis=1)
    assert res.message == int(np.argmin(costs))
    assert res.cost <= costs.min() * (1 + 1e-12)


def test_chunked_path_matches_cached_path():
    params = CodeParams(n=18, k=3, c=4)
    pattern = TransmissionPattern.of([2, 2, 2, 2, 2, 4])
    obs = noisy(0x2A5F1, params, pattern, sigma2=0.5)
    chunked = ml_decode(obs, params, pattern, constellation=build_constellation(4, "complex"))
    book = build_constellation(4, "complex").map(codebook_words(params, pattern))
    costs = np.sum(np.abs(obs.y[None] - obs.h[None] * book) ** 2, axis=1)
    assert chunked.message == int(np.argmin(costs))
    assert not chunked.tie


def test_ties_go_to_smallest_word():
    # all-zero observations make every candidate cost sum |0 - 0 * x|^2 = 0
    total = PATTERN.total
    obs = Observations(np.zeros(total, dtype=complex), np.zeros(total, dtype=complex))
    res = ml_decode(obs, SMALL, PATTERN)
    assert (res.message, res.tie) == (0, True)


def test_positive_scaling_does_not_change_decision():
    obs = noisy(0x5C, sigma2=1.0)
    assert ml_decode(obs, SMALL, PATTERN).message == ml_decode(obs.scaled(3.7), SMALL, PATTERN).message


def test_decoding_is_repeatable_and_batch_consistent():
    observations = [noisy(m, sigma2=1.5) for m in (3, 99, 250)]
    single = [ml_decode(o, SMALL, PATTERN).message for o in observations]
    assert single == [ml_decode(o, SMALL, PATTERN).message for o in observations]
    y = np.stack([o.y for o in observations])
    h = np.stack([o.h for o in observations])
    assert ml_decode_batch(y, h, SMALL, PATTERN).tolist() == single


def test_real_flavor_round_trip():
    params = CodeParams(n=8, k=2, c=3, flavor="real")
    obs = noisy(0x6E, params, PATTERN, FadingModel.rayleigh(flavor="real"), sigma2=1e-4)
    assert ml_decode(obs, params, PATTERN).message == 0x6E


def test_guards():
    big = CodeParams(n=25, k=5, c=2)
    pattern = TransmissionPattern.uniform(1, 5)
    obs = Observations(np.zeros(5, dtype=complex), np.ones(5, dtype=complex))
    with pytest.raises(ValueError, match="25"):
        ml_decode(obs, big, pattern)
    with pytest.raises(ValueError):
        codebook(big, pattern)
    with pytest.raises(ValueError):
        ml_decode(Observations(np.zeros(3), np.ones(3)), SMALL, PATTERN)


def test_codebook_is_read_only():
    book = codebook(SMALL, PATTERN)
    assert book.shape == (256, PATTERN.total)
    with pytest.raises(ValueError):
        book[0, 0] = 0


@pytest.mark.parametrize("length,sigma2", [(1, 0.5), (4, 1.0), (10, 4.0)])
def test_noise_projection_probability(length, sigma2):
    rng = np.random.default_rng(length)
    v = rng.normal(size=length) + 1j * rng.normal(size=length)
    p = float(stats.norm.sf(np.linalg.norm(v) / np.sqrt(2 * sigma2)))
    draws = 100_000
    freq = lemma3_frequency(v, sigma2, draws, rng)
    assert abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / draws)


@pytest.mark.slow
def test_high_snr_bler_below_bound():
    # Rayleigh, 20 dB, six passes: no errors expected in 10^4 trials
    from spinalbound.sim import SimConfig, estimate_bler
    params = CodeParams(n=8, k=2, c=8)
    pattern = TransmissionPattern.uniform(6, 4)
    res = estimate_bler(SimConfig(params, pattern, FadingModel.rayleigh(), [20.0], trials=10_000, seed=3))
    point = res.points[0]
    bound = bler_bound("refined", params, pattern, point.sigma2, FadingModel.rayleigh(), ThetaPartition.uniform())
    assert point.bler <= bound.p_e

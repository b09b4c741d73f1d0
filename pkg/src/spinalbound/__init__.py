"""BLER upper bounds, exact ML simulation and transmission-pattern search for
Spinal codes over Rayleigh, Nakagami-m and Rician fading channels."""

from .bounds import (BlerBoundReport, ThetaPartition, bler_bound, craig_q, epsilon_gallager,
                     epsilon_refined, pair_expectation, refined_F)
from .channel import FadingModel, NoiseSpec, sample_fading, transmit
from .codec import CodeParams, build_constellation, encode
from .decoder import DecodeResult, decoding_cost, ml_decode
from .optimizer import brute_force_best_pattern, greedy_pattern, ttp_pattern
from .pattern import TransmissionPattern
from .sim import SimConfig, SimResult, estimate_bler, sweep

__version__ = "0.1.0"

__all__ = [
    "BlerBoundReport", "CodeParams", "DecodeResult", "FadingModel", "NoiseSpec", "SimConfig",
    "SimResult", "ThetaPartition", "TransmissionPattern", "bler_bound", "brute_force_best_pattern",
    "build_constellation", "craig_q", "decoding_cost", "encode", "epsilon_gallager", "epsilon_refined",
    "estimate_bler", "greedy_pattern", "ml_decode", "pair_expectation", "refined_F", "sample_fading",
    "sweep", "transmit", "ttp_pattern",
]

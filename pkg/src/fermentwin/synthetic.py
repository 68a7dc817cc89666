"""Synthetic data with a known ground truth.

Stands in for the confidential experimental dataset: a seeded generator
network defines the true response surface, and observation records are
sampled from its Gompertz curves with Gaussian noise. Tests and demos use
this to score the pipeline against an oracle.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .data import FeatureBounds, RawRecord
from .growth import _od_array
from .network import (
    DEFAULT_TOPOLOGY,
    NetworkState,
    NetworkTopology,
    OutputRanges,
    PriorSpec,
    forward,
)

__all__ = [
    "make_true_state",
    "condition_grid",
    "grid_bounds",
    "generate_records",
    "informative_prior",
    "SYNTHETIC_RANGES",
]

# Ranges used for synthetic studies: growth completes within a day or two,
# so observations on a 0-24 h grid carry real curve information.
SYNTHETIC_RANGES = OutputRanges(
    d_range=(0.2, 2.5), mu_range=(0.05, 1.0), lambda_range=(0.0, 8.0)
)

# Generator weight spread: large enough that conditions matter, small
# enough that the squashed outputs stay away from the range edges.
TRUE_WEIGHT_SCALE = 2.0


def make_true_state(
    seed: int,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
    weight_scale: float = TRUE_WEIGHT_SCALE,
    noise_sd: float = 0.05,
) -> NetworkState:
    """Seeded ground-truth network; its log noise sd matches the
    observation noise used when sampling records from it."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    weights = weight_scale * rng.standard_normal(topology.n_weights)
    return NetworkState(weights=weights, log_noise_sd=math.log(noise_sd))


def condition_grid(
    duties: Sequence[float], frequencies_hz: Sequence[float], temperatures_c: Sequence[float]
) -> list[tuple[float, float, float]]:
    """Full factorial (duty, frequency, temperature) grid, row-major."""
    return [
        (float(d), float(f), float(c))
        for d in duties
        for f in frequencies_hz
        for c in temperatures_c
    ]


def grid_bounds(conditions: Sequence[tuple[float, float, float]]) -> FeatureBounds:
    """The bounds min-max normalization will compute from these conditions."""
    duties = [c[0] for c in conditions]
    freqs = [c[1] for c in conditions]
    temps = [c[2] for c in conditions]
    return FeatureBounds(
        temperature=(min(temps), max(temps)),
        frequency=(min(freqs), max(freqs)),
        duty=(min(duties), max(duties)),
    )


def generate_records(
    true_state: NetworkState,
    conditions: Sequence[tuple[float, float, float]],
    times: Sequence[float],
    n0: float = 0.5,
    noise_sd: float = 0.05,
    seed: int = 0,
    ranges: OutputRanges = SYNTHETIC_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
    od_floor: float = 0.05,
) -> list[RawRecord]:
    """Sample one noisy growth curve per (duty, frequency, temperature)
    condition at the given times.

    Features are normalized with the grid's own min-max bounds, which is
    exactly what dataset normalization recomputes from these records, so
    the generator and the fitted model see the same response surface.
    """
    if not conditions:
        raise ValueError("need at least one condition")
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(times < 0.0):
        raise ValueError("times must be non-negative and non-empty")
    bounds = grid_bounds(conditions)
    rng = np.random.default_rng(seed)
    records = []
    for duty, freq, temp in conditions:
        features = bounds.normalize(temp, freq, duty)
        params = forward(true_state, features, ranges, topology)
        clean = _od_array(times, n0, params.d, params.mu, params.lam)
        noisy = clean + noise_sd * rng.standard_normal(times.size)
        for t, od in zip(times, noisy):
            records.append(
                RawRecord(
                    duty_cycle=duty,
                    frequency_hz=freq,
                    duration_h=float(t),
                    temperature_c=temp,
                    n0=n0,
                    t=float(t),
                    od=max(float(od), od_floor),
                )
            )
    return records


def informative_prior(
    true_state: NetworkState,
    weight_sd: float = 0.5,
    noise_sd_sd: float = 0.5,
) -> PriorSpec:
    """A prior centered on a known generator: what a practitioner with
    strong biological knowledge would encode."""
    return PriorSpec(
        weight_means=true_state.weights.copy(),
        weight_sds=np.full(true_state.weights.size, weight_sd),
        noise_log_sd_mean=true_state.log_noise_sd,
        noise_log_sd_sd=noise_sd_sd,
    )

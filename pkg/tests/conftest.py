"""Shared fixtures: the frozen hand-checked network state and a small
synthetic benchmark dataset with a known generator."""

from __future__ import annotations

import numpy as np
import pytest

import fermentwin as fw
from fermentwin.synthetic import (
    SYNTHETIC_RANGES,
    condition_grid,
    generate_records,
    grid_bounds,
    informative_prior,
    make_true_state,
)

# Weight vector whose forward pass was verified against an independent
# high-precision (40-digit) matrix-sigmoid computation before the build.
ORACLE_WEIGHTS = np.array(
    [
        0.4, -0.3, 0.8, 1.1, 0.05, -0.6, -0.2, 0.7, 0.35,   # input -> hidden
        0.1, -0.4, 0.25,                                     # hidden biases
        0.9, -1.2, 0.3, -0.5, 0.6, -0.15, 0.2, 0.45, -0.7,   # hidden -> output
        -0.3, 0.5, 0.05,                                     # output biases
    ]
)

BENCH_DUTIES = (0.2, 0.5, 0.8)
BENCH_FREQS = (25_000.0, 35_000.0, 45_000.0)
BENCH_TEMPS = (20.0, 30.0)
BENCH_TIMES = (2.0, 4.0, 8.0, 12.0, 18.0, 24.0)
BENCH_N0 = 0.5
BENCH_NOISE_SD = 0.05
BENCH_TRUTH_SEED = 12


@pytest.fixture
def oracle_state() -> fw.NetworkState:
    return fw.NetworkState(weights=ORACLE_WEIGHTS.copy(), log_noise_sd=-2.5)


@pytest.fixture(scope="session")
def bench_truth() -> fw.NetworkState:
    return make_true_state(seed=BENCH_TRUTH_SEED)


@pytest.fixture(scope="session")
def bench_conditions():
    return condition_grid(BENCH_DUTIES, BENCH_FREQS, BENCH_TEMPS)


@pytest.fixture(scope="session")
def bench_records(bench_truth, bench_conditions):
    return generate_records(
        bench_truth,
        bench_conditions,
        BENCH_TIMES,
        n0=BENCH_N0,
        noise_sd=BENCH_NOISE_SD,
        seed=BENCH_TRUTH_SEED,
    )


@pytest.fixture(scope="session")
def bench_dataset(bench_records):
    return fw.normalize(bench_records)


@pytest.fixture(scope="session")
def bench_prior(bench_truth):
    return informative_prior(bench_truth)


@pytest.fixture(scope="session")
def bench_bounds(bench_conditions):
    return grid_bounds(bench_conditions)


def quick_sampler_config(seed: int = 0, dim: int = 25) -> fw.SamplerConfig:
    """Short schedule for unit tests; acceptance uses the spec schedules."""
    scales = np.full(dim, 0.1)
    scales[-1] = 0.05
    return fw.SamplerConfig(
        burn_in=2_000, iterations=6_000, thin=20, proposal_scales=scales, seed=seed
    )


@pytest.fixture(scope="session")
def bench_model(bench_dataset, bench_prior) -> fw.GrowthModel:
    """One fitted model on the benchmark set, shared across test modules."""
    return fw.fit_growth_model(
        bench_dataset, bench_prior, quick_sampler_config(seed=77), SYNTHETIC_RANGES
    )

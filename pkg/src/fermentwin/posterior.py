"""Posterior density over network states given a growth dataset, and the
fit routine that samples it with Random Walk Metropolis.

The likelihood treats observations as the group's Gompertz curve (with
parameters produced by the network at the group's normalized conditions)
plus i.i.d. Gaussian noise whose sd is sampled jointly on the log scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .data import FeatureBounds, GrowthDataset
from .network import (
    DEFAULT_RANGES,
    DEFAULT_TOPOLOGY,
    LOG2PI,
    NetworkState,
    NetworkTopology,
    OutputRanges,
    PriorSpec,
    log_prior,
)
from .sampler import PosteriorChain, SamplerConfig, run_chain

__all__ = [
    "GrowthModel",
    "log_likelihood",
    "log_posterior",
    "make_log_posterior",
    "default_proposal_scales",
    "initial_state",
    "fit_posterior",
    "fit_growth_model",
]

# Default per-dimension proposal scales: one for every weight, a tighter
# one for the log noise sd.
WEIGHT_PROPOSAL_SCALE = 0.1
NOISE_PROPOSAL_SCALE = 0.05

_INNER_CLIP = 700.0


@dataclass(frozen=True)
class _PackedData:
    """Dataset flattened into arrays for fast repeated likelihood evaluation."""

    features: np.ndarray      # (G, n_inputs)
    n0: np.ndarray            # (G,)
    obs_t: np.ndarray         # (N,)
    obs_od: np.ndarray        # (N,)
    obs_group: np.ndarray     # (N,) int index into groups

    @classmethod
    def from_dataset(cls, dataset: GrowthDataset) -> "_PackedData":
        if not dataset.groups:
            raise ValueError("dataset has no groups")
        features = np.stack([g.features for g in dataset.groups])
        n0 = np.array([g.n0 for g in dataset.groups])
        obs_t, obs_od, obs_group = [], [], []
        for gi, group in enumerate(dataset.groups):
            for point in group.observations:
                obs_t.append(point.t)
                obs_od.append(point.od)
                obs_group.append(gi)
        return cls(
            features=features,
            n0=n0,
            obs_t=np.array(obs_t),
            obs_od=np.array(obs_od),
            obs_group=np.array(obs_group, dtype=np.intp),
        )


def _predict_packed(
    weights: np.ndarray,
    packed: _PackedData,
    ranges: OutputRanges,
    topology: NetworkTopology,
) -> np.ndarray:
    """Predicted od for every observation under one weight vector."""
    i, h, o = topology.n_inputs, topology.n_hidden, topology.n_outputs
    ih = i * h
    w1 = weights[:ih].reshape(i, h)
    b1 = weights[ih : ih + h]
    w2 = weights[ih + h : ih + h + h * o].reshape(h, o)
    b2 = weights[ih + h + h * o :]
    hidden = expit(packed.features @ w1 + b1)
    params = ranges.lows + ranges.spans * expit(hidden @ w2 + b2)
    d = params[packed.obs_group, 0]
    mu = params[packed.obs_group, 1]
    lam = params[packed.obs_group, 2]
    inner = 1.0 + mu * math.e * (lam - packed.obs_t) / d
    return packed.n0[packed.obs_group] + d * np.exp(
        -np.exp(np.minimum(inner, _INNER_CLIP))
    )


def _gaussian_loglik(residuals: np.ndarray, log_sd: float) -> float:
    n = residuals.size
    sd2 = math.exp(2.0 * log_sd)
    return -0.5 * n * LOG2PI - n * log_sd - 0.5 * float(residuals @ residuals) / sd2


def log_likelihood(
    state: NetworkState,
    dataset: GrowthDataset,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> float:
    """Gaussian log likelihood of all observations under one network state."""
    packed = _PackedData.from_dataset(dataset)
    if state.weights.size != topology.n_weights:
        raise ValueError(
            f"state has {state.weights.size} weights, topology needs {topology.n_weights}"
        )
    predicted = _predict_packed(state.weights, packed, ranges, topology)
    return _gaussian_loglik(packed.obs_od - predicted, state.log_noise_sd)


def log_posterior(
    state: NetworkState,
    dataset: GrowthDataset,
    prior: PriorSpec,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> float:
    """Unnormalized log posterior: log_prior + log_likelihood."""
    return log_prior(state, prior) + log_likelihood(state, dataset, ranges, topology)


def make_log_posterior(
    dataset: GrowthDataset,
    prior: PriorSpec,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> Callable[[np.ndarray], float]:
    """Build the sampler target over flat state vectors (weights then
    log noise sd), packing the dataset once."""
    packed = _PackedData.from_dataset(dataset)
    if prior.weight_means.size != topology.n_weights:
        raise ValueError(
            f"prior covers {prior.weight_means.size} weights, topology needs "
            f"{topology.n_weights}"
        )
    means = prior.weight_means
    sds = prior.weight_sds
    log_sds_sum = float(np.sum(np.log(sds)))
    n_w = topology.n_weights
    nm, ns = prior.noise_log_sd_mean, prior.noise_log_sd_sd

    def target(vector: np.ndarray) -> float:
        weights = vector[:-1]
        log_noise_sd = vector[-1]
        z = (weights - means) / sds
        lp = -0.5 * float(z @ z) - log_sds_sum - 0.5 * LOG2PI * n_w
        zn = (log_noise_sd - nm) / ns
        lp += -0.5 * zn * zn - math.log(ns) - 0.5 * LOG2PI
        predicted = _predict_packed(weights, packed, ranges, topology)
        return lp + _gaussian_loglik(packed.obs_od - predicted, log_noise_sd)

    return target


def default_proposal_scales(topology: NetworkTopology = DEFAULT_TOPOLOGY) -> np.ndarray:
    scales = np.full(topology.state_dim, WEIGHT_PROPOSAL_SCALE)
    scales[-1] = NOISE_PROPOSAL_SCALE
    return scales


def initial_state(
    prior: PriorSpec, seed: int, topology: NetworkTopology = DEFAULT_TOPOLOGY
) -> np.ndarray:
    """Draw the chain start from the prior, on a stream separate from the
    chain's own proposal stream."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    weights = prior.weight_means + prior.weight_sds * rng.standard_normal(topology.n_weights)
    log_noise_sd = prior.noise_log_sd_mean + prior.noise_log_sd_sd * rng.standard_normal()
    return np.concatenate([weights, [log_noise_sd]])


def fit_posterior(
    dataset: GrowthDataset,
    prior: PriorSpec,
    config: SamplerConfig,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> PosteriorChain:
    """Sample the posterior over network states for one dataset."""
    target = make_log_posterior(dataset, prior, ranges, topology)
    init = initial_state(prior, config.seed, topology)
    return run_chain(init, target, config)


@dataclass(frozen=True)
class GrowthModel:
    """A fitted model artifact: the posterior chain plus everything needed
    to map raw conditions to predictions (and nothing more, so it can
    round-trip through a chain file)."""

    chain: PosteriorChain
    bounds: FeatureBounds
    ranges: OutputRanges
    topology: NetworkTopology
    group_key_mode: str = "four_field"

    def weight_samples(self) -> np.ndarray:
        return self.chain.samples[:, :-1]


def fit_growth_model(
    dataset: GrowthDataset,
    prior: PriorSpec,
    config: SamplerConfig,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> GrowthModel:
    """fit_posterior plus the bookkeeping needed downstream."""
    chain = fit_posterior(dataset, prior, config, ranges, topology)
    return GrowthModel(
        chain=chain,
        bounds=dataset.bounds,
        ranges=ranges,
        topology=topology,
        group_key_mode=dataset.group_key_mode,
    )

"""Random Walk Metropolis over real vectors: burn-in, thinning, optional
burn-in-only scale adaptation, and per-chain deterministic seeding.

Draw order is fixed so a chain is reproducible from its seed alone: each
step consumes exactly ``dim`` standard normals (the proposal) followed by
one uniform (the acceptance draw), whether or not the step is accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "SamplerConfig",
    "PosteriorChain",
    "SamplerError",
    "rwm_step",
    "run_chain",
    "adapt_scales",
]

# Acceptance band targeted by burn-in adaptation.
TARGET_ACCEPTANCE = (0.2, 0.5)

# Burn-in steps between scale adjustments.
ADAPT_WINDOW = 100


class SamplerError(RuntimeError):
    """The target density misbehaved (NaN) at a proposed state."""


@dataclass(frozen=True)
class SamplerConfig:
    """Chain schedule: burn-in and sampling lengths, thinning stride,
    per-dimension proposal scales, and the seed all randomness flows from."""

    burn_in: int
    iterations: int
    thin: int
    proposal_scales: np.ndarray
    seed: int
    adapt_during_burn_in: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "proposal_scales", np.array(self.proposal_scales, dtype=float)
        )
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be non-negative, got {self.burn_in}")
        if self.thin < 1:
            raise ValueError(f"thin must be at least 1, got {self.thin}")
        if self.iterations < self.thin:
            raise ValueError(
                f"iterations ({self.iterations}) must be at least thin ({self.thin})"
            )
        if self.iterations % self.thin != 0:
            raise ValueError(
                f"iterations ({self.iterations}) must be a multiple of thin ({self.thin})"
            )
        if self.proposal_scales.ndim != 1 or self.proposal_scales.size == 0:
            raise ValueError("proposal_scales must be a non-empty vector")
        if not np.all(np.isfinite(self.proposal_scales)) or np.any(
            self.proposal_scales <= 0.0
        ):
            raise ValueError("proposal_scales must be positive and finite")

    @property
    def n_samples(self) -> int:
        return self.iterations // self.thin


@dataclass(frozen=True)
class PosteriorChain:
    """Thinned retained samples (rows are flat state vectors), their log
    densities, the post-burn-in acceptance rate, and the config used."""

    samples: np.ndarray
    log_densities: np.ndarray
    acceptance_rate: float
    config: SamplerConfig

    def __post_init__(self):
        if len(self.samples) != len(self.log_densities):
            raise ValueError("samples and log_densities must have equal length")
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError(f"acceptance_rate must lie in [0, 1], got {self.acceptance_rate}")

    def __len__(self) -> int:
        return len(self.samples)


def rwm_step(
    current: np.ndarray,
    current_logp: float,
    target: Callable[[np.ndarray], float],
    scales: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float, bool]:
    """One Metropolis step with an independent Gaussian proposal per
    dimension; returns (state, logp, accepted).

    Consumes dim normals then one uniform from ``rng`` regardless of the
    outcome, so the draw sequence depends only on the step count.
    """
    proposal = current + scales * rng.standard_normal(current.size)
    proposal_logp = float(target(proposal))
    if math.isnan(proposal_logp):
        raise SamplerError(f"target returned NaN at state {proposal.tolist()}")
    u = rng.uniform()
    if u < math.exp(min(proposal_logp - current_logp, 0.0)):
        return proposal, proposal_logp, True
    return current, current_logp, False


def adapt_scales(acceptance_rate: float, scales: np.ndarray) -> np.ndarray:
    """Halve the scales when accepting too rarely, double them when
    accepting too often, leave them alone inside the target band."""
    if acceptance_rate < TARGET_ACCEPTANCE[0]:
        return scales * 0.5
    if acceptance_rate > TARGET_ACCEPTANCE[1]:
        return scales * 2.0
    return scales.copy()


def run_chain(
    init: np.ndarray,
    target: Callable[[np.ndarray], float],
    config: SamplerConfig,
) -> PosteriorChain:
    """Run one chain: burn-in (discarded, optionally adapting the proposal
    scales), then the sampling phase retaining every thin-th state.

    The acceptance rate is reported over the sampling phase only; the
    scales are frozen once burn-in ends.
    """
    current = np.array(init, dtype=float)
    if current.ndim != 1 or current.size != config.proposal_scales.size:
        raise ValueError(
            f"init must be a vector of length {config.proposal_scales.size}, "
            f"got shape {current.shape}"
        )
    if not np.all(np.isfinite(current)):
        raise ValueError("init must be finite")
    current_logp = float(target(current))
    if not math.isfinite(current_logp):
        raise ValueError(f"target must be finite at init, got {current_logp}")

    rng = np.random.default_rng(config.seed)
    scales = config.proposal_scales.copy()

    window_accepts = 0
    for i in range(config.burn_in):
        current, current_logp, accepted = rwm_step(current, current_logp, target, scales, rng)
        if config.adapt_during_burn_in:
            window_accepts += accepted
            if (i + 1) % ADAPT_WINDOW == 0:
                scales = adapt_scales(window_accepts / ADAPT_WINDOW, scales)
                window_accepts = 0

    n_kept = config.n_samples
    samples = np.empty((n_kept, current.size))
    log_densities = np.empty(n_kept)
    accepts = 0
    kept = 0
    for i in range(1, config.iterations + 1):
        current, current_logp, accepted = rwm_step(current, current_logp, target, scales, rng)
        accepts += accepted
        if i % config.thin == 0:
            samples[kept] = current
            log_densities[kept] = current_logp
            kept += 1

    return PosteriorChain(
        samples=samples,
        log_densities=log_densities,
        acceptance_rate=accepts / config.iterations,
        config=config,
    )

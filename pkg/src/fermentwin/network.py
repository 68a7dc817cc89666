"""Single-hidden-layer sigmoid network mapping environmental conditions
to Gompertz parameters, with Gaussian priors on its weights.

Inputs are the normalized (temperature, frequency, duty cycle) triple;
outputs are squashed into configurable biological ranges so every
sampled network yields a valid parameter set.

Weight vector layout (row-major):
    [0 : I*H]                 hidden weights, w[i*H + j] = input i -> hidden j
    [I*H : (I+1)*H]           hidden biases
    [(I+1)*H : (I+1)*H + H*O] output weights, v[j*O + k] = hidden j -> output k
    [-O :]                    output biases
with outputs ordered (d, mu, lam).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .growth import GompertzParams

__all__ = [
    "NetworkTopology",
    "NetworkState",
    "PriorSpec",
    "OutputRanges",
    "DEFAULT_TOPOLOGY",
    "DEFAULT_RANGES",
    "forward",
    "forward_many",
    "log_prior",
    "noninformative_prior",
    "load_prior",
    "save_prior",
]

LOG2PI = math.log(2.0 * math.pi)

# Default prior on the log observation-noise sd (OD600 units).
DEFAULT_NOISE_LOG_SD_MEAN = math.log(0.05)
DEFAULT_NOISE_LOG_SD_SD = 1.0


@dataclass(frozen=True)
class NetworkTopology:
    """Layer sizes; three inputs (temperature, frequency, duty cycle)
    and three outputs (d, mu, lam) unless overridden."""

    n_inputs: int = 3
    n_hidden: int = 3
    n_outputs: int = 3

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_hidden < 1 or self.n_outputs < 1:
            raise ValueError("all layer sizes must be at least 1")

    @property
    def n_weights(self) -> int:
        return (self.n_inputs + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_outputs

    @property
    def state_dim(self) -> int:
        """Weights plus the jointly sampled log noise sd."""
        return self.n_weights + 1


DEFAULT_TOPOLOGY = NetworkTopology()


@dataclass(frozen=True)
class NetworkState:
    """One posterior sample: weight vector plus log observation-noise sd."""

    weights: np.ndarray
    log_noise_sd: float

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", weights)
        if weights.ndim != 1:
            raise ValueError("weights must be a one-dimensional vector")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        if not math.isfinite(self.log_noise_sd):
            raise ValueError(f"log_noise_sd must be finite, got {self.log_noise_sd!r}")

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "NetworkState":
        """Split a flat sampler state (weights then log noise sd)."""
        vector = np.asarray(vector, dtype=float)
        return cls(weights=vector[:-1], log_noise_sd=float(vector[-1]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.weights, [self.log_noise_sd]])


@dataclass(frozen=True)
class PriorSpec:
    """Independent Gaussian priors: one per weight, one on log noise sd."""

    weight_means: np.ndarray
    weight_sds: np.ndarray
    noise_log_sd_mean: float = DEFAULT_NOISE_LOG_SD_MEAN
    noise_log_sd_sd: float = DEFAULT_NOISE_LOG_SD_SD

    def __post_init__(self):
        means = np.asarray(self.weight_means, dtype=float)
        sds = np.asarray(self.weight_sds, dtype=float)
        object.__setattr__(self, "weight_means", means)
        object.__setattr__(self, "weight_sds", sds)
        if means.shape != sds.shape or means.ndim != 1:
            raise ValueError("weight_means and weight_sds must be equal-length vectors")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(sds))):
            raise ValueError("prior means and sds must be finite")
        if np.any(sds <= 0.0):
            raise ValueError("prior sds must be positive")
        if not math.isfinite(self.noise_log_sd_mean):
            raise ValueError("noise_log_sd_mean must be finite")
        if not (math.isfinite(self.noise_log_sd_sd) and self.noise_log_sd_sd > 0.0):
            raise ValueError("noise_log_sd_sd must be positive and finite")


@dataclass(frozen=True)
class OutputRanges:
    """(min, max) squashing ranges for each Gompertz parameter."""

    d_range: tuple[float, float] = (0.01, 4.0)
    mu_range: tuple[float, float] = (0.01, 2.0)
    lambda_range: tuple[float, float] = (0.0, 48.0)

    def __post_init__(self):
        for name, (lo, hi) in (
            ("d_range", self.d_range),
            ("mu_range", self.mu_range),
            ("lambda_range", self.lambda_range),
        ):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} must satisfy min < max, got {(lo, hi)}")
        if self.d_range[0] <= 0.0:
            raise ValueError("d_range minimum must be positive")
        if self.mu_range[0] <= 0.0:
            raise ValueError("mu_range minimum must be positive")
        if self.lambda_range[0] < 0.0:
            raise ValueError("lambda_range minimum must be non-negative")

    @property
    def lows(self) -> np.ndarray:
        return np.array([self.d_range[0], self.mu_range[0], self.lambda_range[0]])

    @property
    def spans(self) -> np.ndarray:
        return np.array(
            [
                self.d_range[1] - self.d_range[0],
                self.mu_range[1] - self.mu_range[0],
                self.lambda_range[1] - self.lambda_range[0],
            ]
        )


DEFAULT_RANGES = OutputRanges()


def _split_weights(weights: np.ndarray, topology: NetworkTopology):
    i, h, o = topology.n_inputs, topology.n_hidden, topology.n_outputs
    ih = i * h
    w1 = weights[..., :ih].reshape(*weights.shape[:-1], i, h)
    b1 = weights[..., ih : ih + h]
    w2 = weights[..., ih + h : ih + h + h * o].reshape(*weights.shape[:-1], h, o)
    b2 = weights[..., ih + h + h * o :]
    return w1, b1, w2, b2


def forward_many(
    weights: np.ndarray,
    features: np.ndarray,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> np.ndarray:
    """Forward pass for a batch of weight vectors over a batch of inputs.

    weights: (S, n_weights), features: (G, n_inputs) in [0, 1].
    Returns (S, G, 3) squashed (d, mu, lam) values.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if weights.shape[1] != topology.n_weights:
        raise ValueError(
            f"weight vector length {weights.shape[1]} does not match "
            f"topology ({topology.n_weights} expected)"
        )
    if features.shape[1] != topology.n_inputs:
        raise ValueError(
            f"feature dimension {features.shape[1]} does not match "
            f"topology ({topology.n_inputs} inputs expected)"
        )
    w1, b1, w2, b2 = _split_weights(weights, topology)
    hidden = expit(np.einsum("gi,sih->sgh", features, w1) + b1[:, None, :])
    raw = np.einsum("sgh,sho->sgo", hidden, w2) + b2[:, None, :]
    return ranges.lows + ranges.spans * expit(raw)


def forward(
    state: NetworkState,
    features: np.ndarray,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> GompertzParams:
    """Map one normalized feature triple to Gompertz parameters.

    Features must lie in [0, 1]^n_inputs (the network's training cube).
    """
    features = np.asarray(features, dtype=float)
    if features.shape != (topology.n_inputs,):
        raise ValueError(
            f"features must be a length-{topology.n_inputs} vector, got shape {features.shape}"
        )
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    if np.any(features < 0.0) or np.any(features > 1.0):
        raise ValueError(f"features must lie in [0, 1], got {features.tolist()}")
    out = forward_many(state.weights[None, :], features[None, :], ranges, topology)[0, 0]
    return GompertzParams(d=float(out[0]), mu=float(out[1]), lam=float(out[2]))


def log_prior(state: NetworkState, prior: PriorSpec) -> float:
    """Sum of Gaussian log densities over all weights and the log noise sd."""
    if state.weights.shape != prior.weight_means.shape:
        raise ValueError(
            f"state has {state.weights.size} weights but the prior specifies "
            f"{prior.weight_means.size}"
        )
    z = (state.weights - prior.weight_means) / prior.weight_sds
    lp = -0.5 * (z @ z) - np.sum(np.log(prior.weight_sds)) - 0.5 * LOG2PI * state.weights.size
    zn = (state.log_noise_sd - prior.noise_log_sd_mean) / prior.noise_log_sd_sd
    lp += -0.5 * zn * zn - math.log(prior.noise_log_sd_sd) - 0.5 * LOG2PI
    return float(lp)


def noninformative_prior(
    topology: NetworkTopology = DEFAULT_TOPOLOGY, weight_sd: float = 10.0
) -> PriorSpec:
    """Weakly informative N(0, 10^2) preset on every weight."""
    n = topology.n_weights
    return PriorSpec(weight_means=np.zeros(n), weight_sds=np.full(n, weight_sd))


def save_prior(path: str | Path, prior: PriorSpec) -> None:
    """Write a prior as CSV: one (mean, sd) row per weight, final row the
    log-noise-sd prior."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mean", "sd"])
        for m, s in zip(prior.weight_means, prior.weight_sds):
            writer.writerow(["%.17g" % m, "%.17g" % s])
        writer.writerow(["%.17g" % prior.noise_log_sd_mean, "%.17g" % prior.noise_log_sd_sd])


def load_prior(path: str | Path, topology: NetworkTopology = DEFAULT_TOPOLOGY) -> PriorSpec:
    """Read a prior CSV written by save_prior; row count must match the
    topology (weights plus one noise row)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["mean", "sd"]:
            raise ValueError(f"prior file {path}: expected header 'mean,sd', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"prior file {path} line {lineno}: expected 2 cells")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ValueError(
                    f"prior file {path} line {lineno}: could not parse {row!r}"
                ) from None
    if len(rows) != topology.n_weights + 1:
        raise ValueError(
            f"prior file {path} has {len(rows)} rows but topology needs "
            f"{topology.n_weights} weight rows plus one noise row"
        )
    means = np.array([m for m, _ in rows[:-1]])
    sds = np.array([s for _, s in rows[:-1]])
    return PriorSpec(
        weight_means=means,
        weight_sds=sds,
        noise_log_sd_mean=rows[-1][0],
        noise_log_sd_sd=rows[-1][1],
    )

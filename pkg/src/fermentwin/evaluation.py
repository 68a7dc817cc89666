"""Error metrics, posterior prediction, and the grouped k-fold
cross-validation harness.

The point prediction averages the Gompertz parameters over all retained
posterior samples; the uncertainty band takes pointwise empirical
quantiles of the per-sample curves.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import FoldAssignment, GrowthDataset
from .growth import GompertzParams, _od_array
from .network import (
    DEFAULT_RANGES,
    DEFAULT_TOPOLOGY,
    NetworkTopology,
    OutputRanges,
    PriorSpec,
    forward_many,
)
from .posterior import fit_posterior
from .sampler import PosteriorChain, SamplerConfig

__all__ = [
    "MetricsReport",
    "PredictiveCurve",
    "PredictionPair",
    "mape",
    "median_ape",
    "mse",
    "posterior_params",
    "predictive_curve",
    "cross_validate",
]


def _check_pair(observed, predicted) -> tuple[np.ndarray, np.ndarray]:
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if observed.shape != predicted.shape or observed.ndim != 1:
        raise ValueError(
            f"observed and predicted must be equal-length vectors, got shapes "
            f"{observed.shape} and {predicted.shape}"
        )
    if observed.size == 0:
        raise ValueError("metrics need at least one point")
    return observed, predicted


def mape(observed, predicted) -> float:
    """Mean absolute percentage error, in percent."""
    observed, predicted = _check_pair(observed, predicted)
    if np.any(observed <= 0.0):
        raise ValueError("MAPE requires strictly positive observed values")
    return float(100.0 * np.mean(np.abs(observed - predicted) / observed))


def median_ape(observed, predicted) -> float:
    """Median absolute percentage error (even counts average the central
    pair), in percent."""
    observed, predicted = _check_pair(observed, predicted)
    if np.any(observed <= 0.0):
        raise ValueError("median APE requires strictly positive observed values")
    return float(np.median(100.0 * np.abs(observed - predicted) / observed))


def mse(observed, predicted) -> float:
    """Mean squared error (OD600 squared)."""
    observed, predicted = _check_pair(observed, predicted)
    return float(np.mean((observed - predicted) ** 2))


@dataclass(frozen=True)
class MetricsReport:
    """Cross-validation metrics: headline values average the per-fold
    triples; pooled values treat all test points as one set."""

    mape: float
    median_ape: float
    mse: float
    per_fold: tuple[tuple[float, float, float], ...]
    n_test_points: int
    pooled_mape: float
    pooled_median_ape: float
    pooled_mse: float


@dataclass(frozen=True)
class PredictiveCurve:
    """Parameter-averaged mean curve with a pointwise quantile band."""

    times: np.ndarray
    mean_od: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    quantile_pair: tuple[float, float]

    def __post_init__(self):
        if not (
            len(self.times) == len(self.mean_od) == len(self.lower) == len(self.upper)
        ):
            raise ValueError("curve arrays must have equal length")
        if np.any(self.lower > self.upper):
            raise ValueError("lower band must not exceed upper band")


@dataclass(frozen=True)
class PredictionPair:
    """One test point for scatter output: observed vs predicted od."""

    fold: int
    group_key: tuple
    t: float
    observed: float
    predicted: float


def posterior_params(
    chain: PosteriorChain,
    features: np.ndarray,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> GompertzParams:
    """Average the Gompertz parameters produced by every retained network."""
    if len(chain) == 0:
        raise ValueError("chain has no retained samples")
    features = np.asarray(features, dtype=float)
    per_sample = forward_many(chain.samples[:, :-1], features[None, :], ranges, topology)
    mean = per_sample[:, 0, :].mean(axis=0)
    return GompertzParams(d=float(mean[0]), mu=float(mean[1]), lam=float(mean[2]))


def _sample_curves(
    chain: PosteriorChain,
    features: np.ndarray,
    n0: float,
    times: np.ndarray,
    ranges: OutputRanges,
    topology: NetworkTopology,
) -> np.ndarray:
    """(S, T) od values: one curve per retained sample."""
    params = forward_many(chain.samples[:, :-1], features[None, :], ranges, topology)[:, 0, :]
    d = params[:, [0]]
    mu = params[:, [1]]
    lam = params[:, [2]]
    inner = 1.0 + mu * math.e * (lam - times[None, :]) / d
    return n0 + d * np.exp(-np.exp(np.minimum(inner, 700.0)))


def predictive_curve(
    chain: PosteriorChain,
    features: np.ndarray,
    n0: float,
    times: Sequence[float],
    quantile_pair: tuple[float, float] = (0.025, 0.975),
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> PredictiveCurve:
    """Mean curve from the averaged parameters, band from pointwise
    empirical quantiles (inverse-CDF convention) of per-sample curves."""
    if len(chain) == 0:
        raise ValueError("chain has no retained samples")
    lo_q, hi_q = quantile_pair
    if not (0.0 < lo_q < hi_q < 1.0):
        raise ValueError(
            f"quantile_pair must satisfy 0 < low < high < 1, got {quantile_pair}"
        )
    times = np.asarray(times, dtype=float)
    if times.size and np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing")
    features = np.asarray(features, dtype=float)
    params = posterior_params(chain, features, ranges, topology)
    mean_od = _od_array(times, n0, params.d, params.mu, params.lam)
    curves = _sample_curves(chain, features, n0, times, ranges, topology)
    lower = np.quantile(curves, lo_q, axis=0, method="inverted_cdf")
    upper = np.quantile(curves, hi_q, axis=0, method="inverted_cdf")
    return PredictiveCurve(
        times=times, mean_od=mean_od, lower=lower, upper=upper, quantile_pair=quantile_pair
    )


def cross_validate(
    dataset: GrowthDataset,
    folds: FoldAssignment,
    prior: PriorSpec,
    sampler_config: SamplerConfig,
    ranges: OutputRanges = DEFAULT_RANGES,
    topology: NetworkTopology = DEFAULT_TOPOLOGY,
) -> tuple[MetricsReport, list[PredictionPair]]:
    """Grouped k-fold CV: fit one chain per fold on the training groups
    (per-fold seed = base seed + fold index), predict every observation of
    the held-out groups, and average the metrics across folds.

    Returns the report plus all (observed, predicted) pairs for scatter
    plots.
    """
    if len(folds.assignment) != len(dataset.groups):
        raise ValueError(
            f"fold assignment covers {len(folds.assignment)} groups, dataset has "
            f"{len(dataset.groups)}"
        )
    per_fold = []
    pairs: list[PredictionPair] = []
    for fold in range(folds.k):
        train_idx = folds.train_groups(fold)
        test_idx = folds.fold_groups(fold)
        if not train_idx or not test_idx:
            raise ValueError(f"fold {fold} has an empty train or test side")
        train_ds = dataset.subset(train_idx)
        fold_config = dataclasses.replace(sampler_config, seed=sampler_config.seed + fold)
        chain = fit_posterior(train_ds, prior, fold_config, ranges, topology)
        observed, predicted = [], []
        for gi in test_idx:
            group = dataset.groups[gi]
            params = posterior_params(chain, group.features, ranges, topology)
            preds = _od_array(group.times, group.n0, params.d, params.mu, params.lam)
            observed.extend(group.ods.tolist())
            predicted.extend(preds.tolist())
            for t, obs, pred in zip(group.times, group.ods, preds):
                pairs.append(
                    PredictionPair(
                        fold=fold,
                        group_key=group.key,
                        t=float(t),
                        observed=float(obs),
                        predicted=float(pred),
                    )
                )
        per_fold.append((mape(observed, predicted), median_ape(observed, predicted),
                         mse(observed, predicted)))

    all_obs = np.array([p.observed for p in pairs])
    all_pred = np.array([p.predicted for p in pairs])
    fold_arr = np.array(per_fold)
    report = MetricsReport(
        mape=float(fold_arr[:, 0].mean()),
        median_ape=float(fold_arr[:, 1].mean()),
        mse=float(fold_arr[:, 2].mean()),
        per_fold=tuple(tuple(row) for row in per_fold),
        n_test_points=len(pairs),
        pooled_mape=mape(all_obs, all_pred),
        pooled_median_ape=median_ape(all_obs, all_pred),
        pooled_mse=mse(all_obs, all_pred),
    )
    return report, pairs

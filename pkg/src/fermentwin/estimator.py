"""scikit-learn style estimator wrapping the Bayesian Gompertz pipeline.

Rows of X describe one observation's full experimental condition in the
same order as the CSV schema (without the target):

    duty_cycle, frequency_hz, duration_h, temperature_c, n0_od600, t_h

and y is the observed od600. fit() normalizes features, groups rows into
biological growths and samples the posterior; predict() returns the
posterior-mean growth curve value for each row.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import FeatureBounds, RawRecord, normalize
from .evaluation import PredictiveCurve, posterior_params, predictive_curve
from .growth import _od_array
from .network import (
    NetworkTopology,
    OutputRanges,
    PriorSpec,
    noninformative_prior,
)
from .posterior import (
    NOISE_PROPOSAL_SCALE,
    WEIGHT_PROPOSAL_SCALE,
    fit_growth_model,
)
from .sampler import SamplerConfig

__all__ = ["BayesGompertzRegressor", "records_to_xy"]

X_COLUMNS = ["duty_cycle", "frequency_hz", "duration_h", "temperature_c", "n0_od600", "t_h"]


def records_to_xy(records) -> tuple[np.ndarray, np.ndarray]:
    """Flatten RawRecords into the estimator's (X, y) layout."""
    X = np.array(
        [
            [r.duty_cycle, r.frequency_hz, r.duration_h, r.temperature_c, r.n0, r.t]
            for r in records
        ]
    )
    y = np.array([r.od for r in records])
    return X, y


class BayesGompertzRegressor(BaseEstimator, RegressorMixin):
    """Gompertz growth model with network-inferred parameters, fitted by
    Random Walk Metropolis over the network weights.

    Parameters mirror the sampler schedule and model configuration; all
    randomness flows from ``seed``. ``prior=None`` selects the weakly
    informative N(0, 10^2) preset. ``bounds`` pins the feature
    normalization (otherwise computed from the training data).
    """

    def __init__(
        self,
        n_hidden: int = 3,
        prior: PriorSpec | None = None,
        ranges: OutputRanges | None = None,
        burn_in: int = 10_000,
        iterations: int = 30_000,
        thin: int = 50,
        seed: int = 0,
        weight_proposal_scale: float = WEIGHT_PROPOSAL_SCALE,
        noise_proposal_scale: float = NOISE_PROPOSAL_SCALE,
        adapt_during_burn_in: bool = True,
        group_key: str = "four_field",
        bounds: FeatureBounds | None = None,
    ):
        self.n_hidden = n_hidden
        self.prior = prior
        self.ranges = ranges
        self.burn_in = burn_in
        self.iterations = iterations
        self.thin = thin
        self.seed = seed
        self.weight_proposal_scale = weight_proposal_scale
        self.noise_proposal_scale = noise_proposal_scale
        self.adapt_during_burn_in = adapt_during_burn_in
        self.group_key = group_key
        self.bounds = bounds

    def _records(self, X: np.ndarray, y: np.ndarray) -> list[RawRecord]:
        records = []
        for i, (row, od) in enumerate(zip(X, y)):
            try:
                records.append(
                    RawRecord(
                        duty_cycle=float(row[0]),
                        frequency_hz=float(row[1]),
                        duration_h=float(row[2]),
                        temperature_c=float(row[3]),
                        n0=float(row[4]),
                        t=float(row[5]),
                        od=float(od),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"row {i}: {exc}") from None
        return records

    def fit(self, X, y):
        """Sample the posterior over network states for these observations."""
        X, y = check_X_y(X, y)
        if X.shape[1] != len(X_COLUMNS):
            raise ValueError(
                f"X must have exactly {len(X_COLUMNS)} columns {X_COLUMNS}, "
                f"got {X.shape[1]}"
            )
        records = self._records(X, y)
        dataset = normalize(records, group_key=self.group_key, bounds=self.bounds)
        topology = NetworkTopology(n_hidden=self.n_hidden)
        prior = self.prior if self.prior is not None else noninformative_prior(topology)
        ranges = self.ranges if self.ranges is not None else OutputRanges()
        scales = np.full(topology.state_dim, self.weight_proposal_scale)
        scales[-1] = self.noise_proposal_scale
        config = SamplerConfig(
            burn_in=self.burn_in,
            iterations=self.iterations,
            thin=self.thin,
            proposal_scales=scales,
            seed=self.seed,
            adapt_during_burn_in=self.adapt_during_burn_in,
        )
        self.model_ = fit_growth_model(dataset, prior, config, ranges, topology)
        self.chain_ = self.model_.chain
        self.dataset_ = dataset
        self.records_ = records
        self.prior_ = prior
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Posterior-mean od for each (condition, n0, t) row."""
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != len(X_COLUMNS):
            raise ValueError(
                f"X must have exactly {len(X_COLUMNS)} columns {X_COLUMNS}, "
                f"got {X.shape[1]}"
            )
        model = self.model_
        out = np.empty(len(X))
        cache: dict[tuple, object] = {}
        for i, row in enumerate(X):
            key = (row[3], row[1], row[0])
            params = cache.get(key)
            if params is None:
                features = model.bounds.normalize(*key)
                params = posterior_params(
                    self.chain_, features, model.ranges, model.topology
                )
                cache[key] = params
            out[i] = _od_array(np.array([row[5]]), row[4], params.d, params.mu, params.lam)[0]
        return out

    def predict_curve(
        self,
        temperature_c: float,
        frequency_hz: float,
        duty_cycle: float,
        n0: float,
        times,
        quantile_pair: tuple[float, float] = (0.025, 0.975),
    ) -> PredictiveCurve:
        """Full predictive growth curve with a posterior quantile band."""
        check_is_fitted(self, "model_")
        model = self.model_
        features = model.bounds.normalize(temperature_c, frequency_hz, duty_cycle)
        return predictive_curve(
            self.chain_, features, n0, times, quantile_pair, model.ranges, model.topology
        )

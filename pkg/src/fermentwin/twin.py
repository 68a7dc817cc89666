"""Closed sense -> model -> predict -> act loop against a synthetic
fermentation plant.

The plant hides a ground-truth network; the loop senses quantized
temperature, observes noisy optical density, folds the new data into a
rolling dataset, periodically refits the posterior, and picks the
ultrasonic setting whose predicted growth is best.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import FeatureBounds, RawRecord, normalize
from .growth import GompertzParams, gompertz_eval
from .network import NetworkState, NetworkTopology, OutputRanges, PriorSpec, forward
from .posterior import GrowthModel, fit_growth_model
from .sampler import PosteriorChain, SamplerConfig, SamplerError
from .evaluation import posterior_params, predictive_curve

__all__ = [
    "DEFAULT_FREQUENCY_BAND",
    "TEMPERATURE_RESOLUTION_C",
    "ActuatorSetting",
    "SensorReading",
    "PlantConfig",
    "PlantState",
    "TwinSchedule",
    "TwinLogEntry",
    "TwinLog",
    "TwinLoopError",
    "sense_temperature",
    "plant_observe",
    "act_select",
    "run_twin_loop",
]

# Ultrasonic band the transducer is rated for.
DEFAULT_FREQUENCY_BAND = (20_000.0, 50_000.0)

# 12-bit immersion probe step.
TEMPERATURE_RESOLUTION_C = 0.0625

DEFAULT_PROBE_RANGE = (-10.0, 85.0)

OBJECTIVES = ("max_density", "min_time")


@dataclass(frozen=True)
class ActuatorSetting:
    """One ultrasonic actuation choice: carrier frequency, duty cycle,
    and the low-frequency burst rate realizing the duty cycle."""

    frequency_hz: float
    duty_cycle: float
    burst_modulation_hz: float = 150.0
    band: tuple[float, float] = DEFAULT_FREQUENCY_BAND

    def __post_init__(self):
        lo, hi = self.band
        if not lo <= self.frequency_hz <= hi:
            raise ValueError(
                f"frequency {self.frequency_hz} Hz outside admissible band [{lo}, {hi}]"
            )
        if not 0.0 <= self.duty_cycle <= 1.0:
            raise ValueError(f"duty_cycle must lie in [0, 1], got {self.duty_cycle}")
        if not 0.0 < self.burst_modulation_hz < self.frequency_hz:
            raise ValueError(
                "burst modulation must be positive and below the carrier frequency, "
                f"got {self.burst_modulation_hz} Hz against {self.frequency_hz} Hz"
            )


@dataclass(frozen=True)
class SensorReading:
    """Quantized probe output."""

    temperature_c: float
    timestamp_h: float = 0.0

    def __post_init__(self):
        steps = self.temperature_c / TEMPERATURE_RESOLUTION_C
        if steps != round(steps):
            raise ValueError(
                f"temperature {self.temperature_c} is not a multiple of "
                f"{TEMPERATURE_RESOLUTION_C} degC"
            )


def sense_temperature(
    true_temp_c: float,
    timestamp_h: float = 0.0,
    probe_range: tuple[float, float] = DEFAULT_PROBE_RANGE,
) -> SensorReading:
    """Quantize to the probe's 0.0625 degC grid, ties toward even multiples."""
    lo, hi = probe_range
    if not (math.isfinite(true_temp_c) and lo <= true_temp_c <= hi):
        raise ValueError(
            f"sensor error: temperature {true_temp_c} outside probe range [{lo}, {hi}]"
        )
    quantized = round(true_temp_c / TEMPERATURE_RESOLUTION_C) * TEMPERATURE_RESOLUTION_C
    return SensorReading(temperature_c=quantized, timestamp_h=timestamp_h)


@dataclass(frozen=True)
class PlantConfig:
    """The hidden ground truth: generator network, its normalization
    convention, observation noise, growth-induced temperature drift, and
    the culture's start point."""

    true_state: NetworkState
    ranges: OutputRanges
    bounds: FeatureBounds
    topology: NetworkTopology
    n0: float
    ambient_temp_c: float
    observation_noise_sd: float = 0.0
    temperature_drift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.observation_noise_sd < 0.0:
            raise ValueError("observation noise sd must be non-negative")
        if self.temperature_drift < 0.0:
            raise ValueError("temperature drift must be non-negative")
        if self.n0 < 0.0:
            raise ValueError("n0 must be non-negative")

    def initial_state(self) -> "PlantState":
        return PlantState(config=self, temp_c=self.ambient_temp_c, od=self.n0)


@dataclass
class PlantState:
    """Mutable culture state advanced by the twin loop."""

    config: PlantConfig
    temp_c: float
    od: float


def _true_params(plant: PlantState, setting: ActuatorSetting) -> GompertzParams:
    features = plant.config.bounds.normalize(
        plant.temp_c, setting.frequency_hz, setting.duty_cycle
    )
    return forward(
        plant.config.true_state, features, plant.config.ranges, plant.config.topology
    )


def _observation_rng(seed: int, t: float) -> np.random.Generator:
    # keyed on (seed, bit pattern of t): repeated observations at one time
    # return the same value.
    t_bits = int(np.float64(t).view(np.uint64))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t_bits,)))


def plant_observe(plant: PlantState, setting: ActuatorSetting, t: float) -> float:
    """Noisy optical density of the hidden culture at time t under the
    current conditions; deterministic per (seed, t), never negative."""
    if t < 0.0:
        raise ValueError(f"observation time must be non-negative, got {t}")
    params = _true_params(plant, setting)
    clean = gompertz_eval(t, plant.config.n0, params)
    sd = plant.config.observation_noise_sd
    if sd > 0.0:
        clean += sd * float(_observation_rng(plant.config.seed, t).standard_normal())
    return max(clean, 0.0)


def _time_to_od(params: GompertzParams, n0: float, target: float) -> float:
    """Smallest t >= 0 with od(t) >= target; inf if the curve never gets there."""
    r = (target - n0) / params.d
    if r <= 0.0:
        return 0.0
    if r >= 1.0:
        return math.inf
    t = params.lam + params.d * (1.0 - math.log(-math.log(r))) / (params.mu * math.e)
    return max(t, 0.0)


def act_select(
    chain: PosteriorChain,
    candidates: Sequence[ActuatorSetting],
    current_temp_c: float,
    n0: float,
    horizon_h: float,
    objective: str = "max_density",
    *,
    bounds: FeatureBounds,
    ranges: OutputRanges,
    topology: NetworkTopology,
    target_od: float | None = None,
) -> ActuatorSetting:
    """Score every candidate with the posterior-mean Gompertz parameters
    and return the best one (ties keep the earliest candidate).

    max_density maximizes predicted od at the horizon; min_time minimizes
    the predicted time to reach target_od.
    """
    if not candidates:
        raise ValueError("candidate list must not be empty")
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if objective == "min_time" and target_od is None:
        raise ValueError("min_time objective needs target_od")

    best = None
    best_score = None
    for setting in candidates:
        features = bounds.normalize(current_temp_c, setting.frequency_hz, setting.duty_cycle)
        params = posterior_params(chain, features, ranges, topology)
        if objective == "max_density":
            score = gompertz_eval(horizon_h, n0, params)
        else:
            score = -_time_to_od(params, n0, target_od)
        if best_score is None or score > best_score:
            best, best_score = setting, score
    return best


@dataclass(frozen=True)
class TwinSchedule:
    """Loop timing: observation stride, total run length, refit cadence
    (in steps; 0 disables refitting)."""

    step_h: float
    total_h: float
    refit_every: int = 0

    def __post_init__(self):
        if self.step_h <= 0.0 or self.total_h <= 0.0:
            raise ValueError("step_h and total_h must be positive")
        if self.step_h >= self.total_h:
            raise ValueError("step_h must be smaller than total_h")
        if self.refit_every < 0:
            raise ValueError("refit_every must be non-negative")
        n = round(self.total_h / self.step_h)
        if abs(n * self.step_h - self.total_h) > 1e-9:
            raise ValueError("total_h must be an integer number of steps")

    @property
    def n_steps(self) -> int:
        return round(self.total_h / self.step_h)


@dataclass(frozen=True)
class TwinLogEntry:
    t_h: float
    temp_c_sensed: float
    frequency_hz: float
    duty_cycle: float
    od_observed: float
    od_predicted_mean: float
    od_predicted_lo: float
    od_predicted_hi: float


@dataclass(frozen=True)
class TwinLog:
    entries: tuple[TwinLogEntry, ...]

    def __post_init__(self):
        ts = [e.t_h for e in self.entries]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("log times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(
                "t_h,temp_c_sensed,freq_hz,duty,od_observed,"
                "od_predicted_mean,od_predicted_lo,od_predicted_hi\n"
            )
            for e in self.entries:
                fh.write(
                    ",".join(
                        "%.17g" % v
                        for v in (
                            e.t_h,
                            e.temp_c_sensed,
                            e.frequency_hz,
                            e.duty_cycle,
                            e.od_observed,
                            e.od_predicted_mean,
                            e.od_predicted_lo,
                            e.od_predicted_hi,
                        )
                    )
                    + "\n"
                )


class TwinLoopError(RuntimeError):
    """Loop aborted mid-run; carries the partial log for persistence."""

    def __init__(self, message: str, partial_log: TwinLog):
        super().__init__(message)
        self.partial_log = partial_log


def run_twin_loop(
    plant: PlantConfig,
    model: GrowthModel,
    records: Sequence[RawRecord],
    prior: PriorSpec,
    sampler_config: SamplerConfig,
    candidates: Sequence[ActuatorSetting],
    schedule: TwinSchedule,
    objective: str = "max_density",
    horizon_h: float = 24.0,
    target_od: float | None = None,
    quantile_pair: tuple[float, float] = (0.025, 0.975),
) -> TwinLog:
    """Drive the closed loop for schedule.n_steps observations.

    Each step senses the (possibly drifting) temperature, observes the
    plant, appends the observation to the rolling dataset under the
    setting that actually produced it, refits when due, then selects the
    next setting. The logged prediction is the chosen setting's curve at
    the decision horizon.
    """
    if not candidates:
        raise ValueError("candidate list must not be empty")
    state = plant.initial_state()
    setting = candidates[0]
    rolling = list(records)
    current = model
    entries: list[TwinLogEntry] = []
    refits = 0

    for k in range(1, schedule.n_steps + 1):
        t = k * schedule.step_h
        if plant.temperature_drift > 0.0:
            d_true = _true_params(state, setting).d
            state.temp_c = plant.ambient_temp_c + plant.temperature_drift * (
                state.od - plant.n0
            ) / d_true
        reading = sense_temperature(state.temp_c, timestamp_h=t)
        od = plant_observe(state, setting, t)
        rolling.append(
            RawRecord(
                duty_cycle=setting.duty_cycle,
                frequency_hz=setting.frequency_hz,
                duration_h=t,
                temperature_c=reading.temperature_c,
                n0=plant.n0,
                t=t,
                od=od,
            )
        )
        state.od = od

        if schedule.refit_every and k % schedule.refit_every == 0:
            refits += 1
            refit_config = dataclasses.replace(
                sampler_config, seed=sampler_config.seed + refits
            )
            dataset = normalize(rolling, model.group_key_mode, bounds=model.bounds)
            try:
                current = fit_growth_model(
                    dataset, prior, refit_config, model.ranges, model.topology
                )
            except SamplerError as exc:
                raise TwinLoopError(
                    f"sampler failed during refit at t={t} h: {exc}",
                    TwinLog(entries=tuple(entries)),
                ) from exc

        setting = act_select(
            current.chain,
            candidates,
            reading.temperature_c,
            plant.n0,
            horizon_h,
            objective,
            bounds=model.bounds,
            ranges=model.ranges,
            topology=model.topology,
            target_od=target_od,
        )
        features = model.bounds.normalize(
            reading.temperature_c, setting.frequency_hz, setting.duty_cycle
        )
        curve = predictive_curve(
            current.chain,
            features,
            plant.n0,
            [horizon_h],
            quantile_pair,
            model.ranges,
            model.topology,
        )
        entries.append(
            TwinLogEntry(
                t_h=t,
                temp_c_sensed=reading.temperature_c,
                frequency_hz=setting.frequency_hz,
                duty_cycle=setting.duty_cycle,
                od_observed=od,
                od_predicted_mean=float(curve.mean_od[0]),
                od_predicted_lo=float(curve.lower[0]),
                od_predicted_hi=float(curve.upper[0]),
            )
        )

    return TwinLog(entries=tuple(entries))

"""Command-line entry point: fit, crossval, predict, simulate.

A run is described by one INI-style config file (flat key=value under
section headers); a handful of flags override individual keys. All
numeric output is written with 17 significant digits so repeated runs
are byte-comparable.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chainio import load_model, save_model
from .data import load_records, normalize, round_robin_folds
from .evaluation import cross_validate, predictive_curve
from .network import (
    NetworkTopology,
    OutputRanges,
    load_prior,
    noninformative_prior,
)
from .posterior import (
    NOISE_PROPOSAL_SCALE,
    WEIGHT_PROPOSAL_SCALE,
    fit_growth_model,
)
from .sampler import SamplerConfig
from .synthetic import make_true_state
from .twin import (
    ActuatorSetting,
    PlantConfig,
    TwinLoopError,
    TwinSchedule,
    run_twin_loop,
)

PRIOR_PRESETS = ("informative", "noninformative")


def _fmt(x: float) -> str:
    return "%.17g" % x


class ConfigError(ValueError):
    pass


class _Config:
    """Typed access to the INI file with diagnostics naming the field."""

    def __init__(self, path: str):
        self.path = Path(path)
        if not self.path.exists():
            raise ConfigError(f"config file not found: {path}")
        self.parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            self.parser.read(self.path)
        except configparser.Error as exc:
            raise ConfigError(f"config file {path}: {exc}") from None

    def get(self, section: str, key: str, kind=str, default=None):
        if not self.parser.has_option(section, key):
            if default is not None:
                return default
            raise ConfigError(f"config [{section}] {key}: missing required key")
        raw = self.parser.get(section, key).strip()
        try:
            if kind is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            return kind(raw)
        except ValueError:
            raise ConfigError(
                f"config [{section}] {key}: could not parse {raw!r} as {kind.__name__}"
            ) from None

    def get_floats(self, section: str, key: str, default=None):
        if not self.parser.has_option(section, key):
            if default is not None:
                return default
            raise ConfigError(f"config [{section}] {key}: missing required key")
        raw = self.parser.get(section, key)
        try:
            return [float(tok) for tok in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(
                f"config [{section}] {key}: could not parse {raw!r} as a number list"
            ) from None


def _load_dataset(cfg: _Config):
    path = cfg.get("dataset", "path")
    if not Path(path).exists():
        raise ConfigError(f"config [dataset] path: file not found: {path}")
    group_key = cfg.get("dataset", "group_key", default="four_field")
    records = load_records(path)
    if not records:
        raise ConfigError(f"config [dataset] path: {path} holds no data rows")
    return records, normalize(records, group_key=group_key)


def _ranges(cfg: _Config) -> OutputRanges:
    return OutputRanges(
        d_range=(cfg.get("ranges", "d_min", float, 0.01), cfg.get("ranges", "d_max", float, 4.0)),
        mu_range=(
            cfg.get("ranges", "mu_min", float, 0.01),
            cfg.get("ranges", "mu_max", float, 2.0),
        ),
        lambda_range=(
            cfg.get("ranges", "lambda_min", float, 0.0),
            cfg.get("ranges", "lambda_max", float, 48.0),
        ),
    )


def _topology(cfg: _Config, args) -> NetworkTopology:
    n_hidden = args.hidden if args.hidden is not None else cfg.get("network", "n_hidden", int, 3)
    return NetworkTopology(n_hidden=n_hidden)


def _prior(cfg: _Config, args, topology: NetworkTopology):
    preset = args.prior if args.prior is not None else cfg.get(
        "prior", "preset", default="noninformative"
    )
    if preset not in PRIOR_PRESETS:
        raise ConfigError(f"config [prior] preset: must be one of {PRIOR_PRESETS}, got {preset!r}")
    if preset == "noninformative":
        return noninformative_prior(topology)
    path = cfg.get("prior", "informative_path")
    if not Path(path).exists():
        raise ConfigError(f"config [prior] informative_path: file not found: {path}")
    return load_prior(path, topology)


def _sampler_config(cfg: _Config, args, topology: NetworkTopology) -> SamplerConfig:
    seed = args.seed if args.seed is not None else cfg.get("sampler", "seed", int, 0)
    scales = np.full(
        topology.state_dim, cfg.get("sampler", "initial_scale", float, WEIGHT_PROPOSAL_SCALE)
    )
    scales[-1] = cfg.get("sampler", "noise_scale", float, NOISE_PROPOSAL_SCALE)
    return SamplerConfig(
        burn_in=cfg.get("sampler", "burn_in", int, 100_000),
        iterations=cfg.get("sampler", "iterations", int, 300_000),
        thin=cfg.get("sampler", "thin", int, 500),
        proposal_scales=scales,
        seed=seed,
        adapt_during_burn_in=cfg.get("sampler", "adapt_during_burn_in", bool, True),
    )


def _out_dir(cfg: _Config, args) -> Path:
    out = args.out_dir if args.out_dir is not None else cfg.get("output", "dir", default="out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_fit(args) -> int:
    cfg = _Config(args.config)
    records, dataset = _load_dataset(cfg)
    topology = _topology(cfg, args)
    prior = _prior(cfg, args, topology)
    ranges = _ranges(cfg)
    sampler_config = _sampler_config(cfg, args, topology)
    out = _out_dir(cfg, args)

    model = fit_growth_model(dataset, prior, sampler_config, ranges, topology)
    chain_path = out / "chain.txt"
    save_model(chain_path, model)
    summary_path = out / "fit_summary.txt"
    with open(summary_path, "w", newline="\n") as fh:
        fh.write(f"samples={len(model.chain)}\n")
        fh.write(f"acceptance_rate={_fmt(model.chain.acceptance_rate)}\n")
        fh.write(f"final_log_density={_fmt(model.chain.log_densities[-1])}\n")
        fh.write(f"n_groups={len(dataset.groups)}\n")
        fh.write(f"n_observations={dataset.n_observations}\n")
        fh.write(f"chain={chain_path}\n")
    print(f"wrote {chain_path} and {summary_path} ({len(model.chain)} samples)")
    return 0


def cmd_crossval(args) -> int:
    cfg = _Config(args.config)
    records, dataset = _load_dataset(cfg)
    topology = _topology(cfg, args)
    prior = _prior(cfg, args, topology)
    ranges = _ranges(cfg)
    sampler_config = _sampler_config(cfg, args, topology)
    k = args.k if args.k is not None else cfg.get("crossval", "k", int, 5)
    out = _out_dir(cfg, args)

    folds = round_robin_folds(dataset, k)
    report, pairs = cross_validate(dataset, folds, prior, sampler_config, ranges, topology)

    metrics_path = out / "metrics.txt"
    with open(metrics_path, "w", newline="\n") as fh:
        fh.write(f"k={k}\n")
        fh.write(f"n_test_points={report.n_test_points}\n")
        fh.write(f"mape={_fmt(report.mape)}\n")
        fh.write(f"median_ape={_fmt(report.median_ape)}\n")
        fh.write(f"mse={_fmt(report.mse)}\n")
        fh.write(f"pooled_mape={_fmt(report.pooled_mape)}\n")
        fh.write(f"pooled_median_ape={_fmt(report.pooled_median_ape)}\n")
        fh.write(f"pooled_mse={_fmt(report.pooled_mse)}\n")
        for fold, (m, md, ms) in enumerate(report.per_fold):
            fh.write(f"fold_{fold}_mape={_fmt(m)}\n")
            fh.write(f"fold_{fold}_median_ape={_fmt(md)}\n")
            fh.write(f"fold_{fold}_mse={_fmt(ms)}\n")

    scatter_path = out / "scatter.csv"
    with open(scatter_path, "w", newline="\n") as fh:
        fh.write("fold,group_key,t_h,observed_od600,predicted_od600\n")
        for p in pairs:
            key = "|".join(_fmt(v) for v in p.group_key)
            fh.write(
                f"{p.fold},{key},{_fmt(p.t)},{_fmt(p.observed)},{_fmt(p.predicted)}\n"
            )
    print(
        f"wrote {metrics_path} and {scatter_path} "
        f"(MAPE {report.mape:.3f}%, median APE {report.median_ape:.3f}%, MSE {report.mse:.5f})"
    )
    return 0


def cmd_predict(args) -> int:
    cfg = _Config(args.config)
    out = _out_dir(cfg, args)
    chain_path = Path(args.chain) if args.chain else out / "chain.txt"
    model = load_model(chain_path)

    if args.t_max <= 0 or args.t_step <= 0:
        raise ConfigError("--t-max and --t-step must be positive")
    n = int(round(args.t_max / args.t_step))
    times = np.linspace(0.0, n * args.t_step, n + 1)
    features = model.bounds.normalize(args.temperature_c, args.frequency_hz, args.duty)
    curve = predictive_curve(
        model.chain,
        features,
        args.n0,
        times,
        (args.quantile_lo, args.quantile_hi),
        model.ranges,
        model.topology,
    )
    curve_path = out / "curve.csv"
    with open(curve_path, "w", newline="\n") as fh:
        fh.write("t_h,od_mean,od_lo,od_hi\n")
        for t, m, lo, hi in zip(curve.times, curve.mean_od, curve.lower, curve.upper):
            fh.write(f"{_fmt(t)},{_fmt(m)},{_fmt(lo)},{_fmt(hi)}\n")
    print(f"wrote {curve_path} ({len(times)} points)")
    return 0


def cmd_simulate(args) -> int:
    cfg = _Config(args.config)
    records, dataset = _load_dataset(cfg)
    topology = _topology(cfg, args)
    prior = _prior(cfg, args, topology)
    ranges = _ranges(cfg)
    sampler_config = _sampler_config(cfg, args, topology)
    out = _out_dir(cfg, args)

    model = fit_growth_model(dataset, prior, sampler_config, ranges, topology)

    band = (
        cfg.get("twin", "freq_band_min_hz", float, 20_000.0),
        cfg.get("twin", "freq_band_max_hz", float, 50_000.0),
    )
    burst = cfg.get("twin", "burst_modulation_hz", float, 150.0)
    candidates = [
        ActuatorSetting(frequency_hz=f, duty_cycle=d, burst_modulation_hz=burst, band=band)
        for f in cfg.get_floats("twin", "frequencies_hz")
        for d in cfg.get_floats("twin", "duties")
    ]
    plant = PlantConfig(
        true_state=make_true_state(cfg.get("twin", "plant_seed", int, 0), topology),
        ranges=ranges,
        bounds=dataset.bounds,
        topology=topology,
        n0=cfg.get("twin", "plant_n0", float, 0.5),
        ambient_temp_c=cfg.get("twin", "ambient_temp_c", float, 25.0),
        observation_noise_sd=cfg.get("twin", "observation_noise_sd", float, 0.0),
        temperature_drift=cfg.get("twin", "temperature_drift", float, 0.0),
        seed=cfg.get("twin", "plant_seed", int, 0),
    )
    schedule = TwinSchedule(
        step_h=cfg.get("twin", "step_h", float, 1.0),
        total_h=cfg.get("twin", "total_h", float, 12.0),
        refit_every=cfg.get("twin", "refit_every", int, 0),
    )
    objective = cfg.get("twin", "objective", default="max_density")
    target_od = (
        cfg.get("twin", "target_od", float) if objective == "min_time" else None
    )
    log_path = out / "twinlog.csv"
    try:
        log = run_twin_loop(
            plant,
            model,
            records,
            prior,
            sampler_config,
            candidates,
            schedule,
            objective=objective,
            horizon_h=cfg.get("twin", "horizon_h", float, 24.0),
            target_od=target_od,
            quantile_pair=(
                cfg.get("twin", "quantile_lo", float, 0.025),
                cfg.get("twin", "quantile_hi", float, 0.975),
            ),
        )
    except TwinLoopError as exc:
        exc.partial_log.save_csv(log_path)
        print(f"error: {exc} (partial log persisted to {log_path})", file=sys.stderr)
        return 1
    log.save_csv(log_path)
    print(f"wrote {log_path} ({len(log)} steps)")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to the run config file")
    sub.add_argument("--seed", type=int, default=None, help="override [sampler] seed")
    sub.add_argument("--out-dir", default=None, help="override [output] dir")
    sub.add_argument(
        "--prior", choices=PRIOR_PRESETS, default=None, help="override [prior] preset"
    )
    sub.add_argument("--hidden", type=int, default=None, help="override [network] n_hidden")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermentwin",
        description="Bayesian Gompertz digital twin for ultrasound-assisted fermentation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the posterior on the full dataset")
    _add_common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_cv = sub.add_parser("crossval", help="grouped k-fold cross-validation")
    _add_common(p_cv)
    p_cv.add_argument("--k", type=int, default=None, help="override [crossval] k")
    p_cv.set_defaults(func=cmd_crossval)

    p_pred = sub.add_parser("predict", help="predictive curve from a fitted chain")
    _add_common(p_pred)
    p_pred.add_argument("--chain", default=None, help="chain file (default <out>/chain.txt)")
    p_pred.add_argument("--temperature-c", type=float, required=True)
    p_pred.add_argument("--frequency-hz", type=float, required=True)
    p_pred.add_argument("--duty", type=float, required=True)
    p_pred.add_argument("--n0", type=float, required=True)
    p_pred.add_argument("--t-max", type=float, default=24.0)
    p_pred.add_argument("--t-step", type=float, default=0.5)
    p_pred.add_argument("--quantile-lo", type=float, default=0.025)
    p_pred.add_argument("--quantile-hi", type=float, default=0.975)
    p_pred.set_defaults(func=cmd_predict)

    p_sim = sub.add_parser("simulate", help="closed-loop twin simulation")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

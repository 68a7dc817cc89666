"""Chain persistence: one header line of key=value pairs (topology,
schedule, seed, acceptance rate, normalization bounds, output ranges)
followed by one line per retained sample holding the state vector and its
log density as 17-significant-digit decimals. Byte-stable given the same
fit, and lossless on round trip.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import FeatureBounds
from .network import NetworkTopology, OutputRanges
from .posterior import GrowthModel
from .sampler import PosteriorChain, SamplerConfig

__all__ = ["save_model", "load_model"]

_FORMAT = "fermentwin-chain-v1"


def _fmt(x: float) -> str:
    return "%.17g" % x


def save_model(path: str | Path, model: GrowthModel) -> None:
    chain = model.chain
    config = chain.config
    header = {
        "format": _FORMAT,
        "n_inputs": model.topology.n_inputs,
        "n_hidden": model.topology.n_hidden,
        "n_outputs": model.topology.n_outputs,
        "burn_in": config.burn_in,
        "iterations": config.iterations,
        "thin": config.thin,
        "seed": config.seed,
        "adapt_during_burn_in": int(config.adapt_during_burn_in),
        "proposal_scales": ",".join(_fmt(s) for s in config.proposal_scales),
        "acceptance_rate": _fmt(chain.acceptance_rate),
        "group_key_mode": model.group_key_mode,
        "temp_min": _fmt(model.bounds.temperature[0]),
        "temp_max": _fmt(model.bounds.temperature[1]),
        "freq_min": _fmt(model.bounds.frequency[0]),
        "freq_max": _fmt(model.bounds.frequency[1]),
        "duty_min": _fmt(model.bounds.duty[0]),
        "duty_max": _fmt(model.bounds.duty[1]),
        "d_min": _fmt(model.ranges.d_range[0]),
        "d_max": _fmt(model.ranges.d_range[1]),
        "mu_min": _fmt(model.ranges.mu_range[0]),
        "mu_max": _fmt(model.ranges.mu_range[1]),
        "lambda_min": _fmt(model.ranges.lambda_range[0]),
        "lambda_max": _fmt(model.ranges.lambda_range[1]),
    }
    with open(path, "w", newline="\n") as fh:
        fh.write(" ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        for sample, logp in zip(chain.samples, chain.log_densities):
            fields = [_fmt(v) for v in sample]
            fields.append(_fmt(logp))
            fh.write(" ".join(fields) + "\n")


def load_model(path: str | Path) -> GrowthModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"chain file not found: {path}")
    with open(path) as fh:
        header_line = fh.readline().strip()
        meta = {}
        for token in header_line.split():
            if "=" not in token:
                raise ValueError(f"chain file {path}: malformed header token {token!r}")
            key, _, value = token.partition("=")
            meta[key] = value
        if meta.get("format") != _FORMAT:
            raise ValueError(
                f"chain file {path}: unsupported format {meta.get('format')!r}"
            )
        topology = NetworkTopology(
            n_inputs=int(meta["n_inputs"]),
            n_hidden=int(meta["n_hidden"]),
            n_outputs=int(meta["n_outputs"]),
        )
        n_fields = topology.state_dim + 1
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != n_fields:
                raise ValueError(
                    f"chain file {path} line {lineno}: {len(tokens)} fields, expected "
                    f"{n_fields} (state vector plus log density)"
                )
            try:
                rows.append([float(tok) for tok in tokens])
            except ValueError:
                raise ValueError(
                    f"chain file {path} line {lineno}: non-numeric sample entry"
                ) from None

    if not rows:
        raise ValueError(f"chain file {path} holds no samples")
    data = np.array(rows)
    config = SamplerConfig(
        burn_in=int(meta["burn_in"]),
        iterations=int(meta["iterations"]),
        thin=int(meta["thin"]),
        proposal_scales=np.array([float(s) for s in meta["proposal_scales"].split(",")]),
        seed=int(meta["seed"]),
        adapt_during_burn_in=bool(int(meta["adapt_during_burn_in"])),
    )
    chain = PosteriorChain(
        samples=data[:, :-1],
        log_densities=data[:, -1],
        acceptance_rate=float(meta["acceptance_rate"]),
        config=config,
    )
    bounds = FeatureBounds(
        temperature=(float(meta["temp_min"]), float(meta["temp_max"])),
        frequency=(float(meta["freq_min"]), float(meta["freq_max"])),
        duty=(float(meta["duty_min"]), float(meta["duty_max"])),
    )
    ranges = OutputRanges(
        d_range=(float(meta["d_min"]), float(meta["d_max"])),
        mu_range=(float(meta["mu_min"]), float(meta["mu_max"])),
        lambda_range=(float(meta["lambda_min"]), float(meta["lambda_max"])),
    )
    return GrowthModel(
        chain=chain,
        bounds=bounds,
        ranges=ranges,
        topology=topology,
        group_key_mode=meta.get("group_key_mode", "four_field"),
    )

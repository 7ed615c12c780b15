"""Python front end for the astm solver core."""

import json

from ._astm import (
    ConfigError,
    DomainError,
    batch_size,
    bregman,
    calibrate_sigma_gaussian,
    cli_main,
    compute_alpha,
    derive_params,
    dual_norm,
    norm,
    soft_threshold,
)
from . import _astm


def default_config(which="noiseless"):
    """Built-in experiment config as a dict ("noiseless" or "stochastic")."""
    return json.loads(_astm._default_config(which))


def solve(config):
    """Single run. Returns (summary dict, trace CSV text, final x)."""
    summary, trace, x = _astm._solve(json.dumps(config))
    return json.loads(summary), trace, x


def ensemble(config):
    """Seeded Monte Carlo ensemble; returns the report dict."""
    return json.loads(_astm._ensemble(json.dumps(config)))


__all__ = [
    "ConfigError",
    "DomainError",
    "batch_size",
    "bregman",
    "calibrate_sigma_gaussian",
    "cli_main",
    "compute_alpha",
    "default_config",
    "derive_params",
    "dual_norm",
    "ensemble",
    "norm",
    "soft_threshold",
    "solve",
]

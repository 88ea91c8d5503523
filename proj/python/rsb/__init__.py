"""Schrodinger bridge experiments on synthetic inverse problems.

Thin wrapper over the C++ core. Configs are passed as JSON text or dicts;
subcommands return the CSV they wrote.
"""

import json

from . import _rsb_core as core
from ._rsb_core import (
    CheckpointError,
    ConfigError,
    DivergenceError,
    NoiseSchedule,
    checkpoint_hash,
    coefficients,
    mixture_posterior_mean,
    perception_distance,
    perturbed_target,
    si_sdr,
    sigma2,
)


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def validate_config(config):
    return json.loads(core.validate_config(_text(config)))


def train(config, out, seed=None):
    return core.train(_text(config), str(out), seed)


def sweep_steps(config, out, checkpoints=(), steps=(), seed=None):
    return core.sweep_steps(_text(config), str(out), [str(c) for c in checkpoints], list(steps), seed)


def exposure_bias(config, out, checkpoints=(), seed=None):
    return core.exposure_bias(_text(config), str(out), [str(c) for c in checkpoints], seed)


def strategies(config, out, seed=None):
    return core.strategies(_text(config), str(out), seed)


def ablation(config, out, seed=None):
    return core.ablation(_text(config), str(out), seed)


def dump(config, out, count=1000, seed=None):
    return core.dump(_text(config), str(out), count, seed)

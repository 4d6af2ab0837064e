"""Python front end for the lensopt solver.

Configs are accepted as dicts, JSON text or file paths. Commands return the run manifest as a dict.
"""

import json
import os

from . import _lensopt
from ._lensopt import ConfigError, LensoptError, bspline_basis, lens_domain_summary, reference_lens_dmin

__version__ = _lensopt.version()


def _text(config):
    if config is None:
        return "{}"
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, (str, os.PathLike)) and os.path.isfile(config):
        with open(config) as f:
            return f.read()
    return str(config)


def normalize_config(config=None):
    return json.loads(_lensopt.normalize_config(_text(config)))


def config_hash(config=None):
    return _lensopt.config_hash(_text(config))


def simulate(config, out_dir, deterministic=False):
    return json.loads(_lensopt.simulate(_text(config), str(out_dir), deterministic))


def optimize(config, out_dir, deterministic=False):
    return json.loads(_lensopt.optimize(_text(config), str(out_dir), deterministic))


def make_target(config, out_dir):
    return json.loads(_lensopt.make_target(_text(config), str(out_dir)))


def gradcheck(config, out_dir, n_dofs=3, taus=(1e-5, 5e-6)):
    return json.loads(_lensopt.gradcheck(_text(config), str(out_dir), n_dofs, list(taus)))


__all__ = [
    "ConfigError",
    "LensoptError",
    "bspline_basis",
    "config_hash",
    "gradcheck",
    "lens_domain_summary",
    "make_target",
    "normalize_config",
    "optimize",
    "reference_lens_dmin",
    "simulate",
]

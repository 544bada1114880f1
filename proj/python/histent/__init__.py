"""Entropy of coarse-grained histories of classical stochastic processes."""

import json

from . import _core
from ._core import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    Error,
    InvariantViolation,
    entropy_functional,
    urn_coefficients,
    urn_exact_prob,
)

__version__ = _core.__version__


def _dump(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def exact_entropy(model, graining=None):
    """Exact entropy report for a model config and graining spec (dicts)."""
    return json.loads(_core.exact_entropy(_dump(model), _dump(graining or {})))


def mc_entropy(model, graining=None, count=10000, seed=1, workers=0, resamples=200):
    """Plug-in S_hs from sampled trajectories with a bootstrap interval."""
    return json.loads(_core.mc_entropy(_dump(model), _dump(graining or {}), count, seed, workers, resamples))


def sweep(model, dx=(), dt=(), count=10000, seed=1, workers=0, exact=False):
    """Entropy over a (dx, dt) grid; returns the sweep as a dict with one entry per row."""
    return json.loads(_core.sweep(_dump(model), list(dx), list(dt), count, seed, workers, exact))


def urn_surface(balls=30, n0=30, steps=3, t1=range(0, 61), m=range(1, 61)):
    return json.loads(_core.urn_surface(balls, n0, steps, list(t1), list(m)))


def urn_curves(balls=30, n0=30, steps=3, t1=range(0, 61), k=(1, 2, 3)):
    return json.loads(_core.urn_curves(balls, n0, steps, list(t1), list(k)))


def maxent_report(model, graining=None):
    """S_ic, S_dc and S_hs with the solver diagnostics."""
    return json.loads(_core.maxent_report(_dump(model), _dump(graining or {})))


def run_cli(*args):
    """Run the command-line tool in-process; returns its exit status."""
    return _core.run_cli([str(a) for a in args])

"""Kinetic and particle solvers for self-propelled swarms."""

from ._swarmkin import *  # noqa: F401,F403
from ._swarmkin import __doc__  # noqa: F401


def run_config(path=None, **overrides):
    """Load a run configuration and apply ``key=value`` overrides."""
    cfg = load_config(path) if path else RunConfig()  # noqa: F405
    for key, value in overrides.items():
        cfg.set(key, str(value))
    cfg.params.validate()
    return cfg

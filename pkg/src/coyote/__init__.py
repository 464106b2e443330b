"""Short-time release dynamics of a hanging spring-mass chain."""

__version__ = "0.1.0"

from .core import ChainConfig, ConfigError, LumpingPolicy, NondimSystem, effective_masses, load_config, nondimensionalize
from .equilibrium import EquilibriumState, equilibrium_positions

__all__ = [
    "ChainConfig",
    "ConfigError",
    "EquilibriumState",
    "LumpingPolicy",
    "NondimSystem",
    "effective_masses",
    "equilibrium_positions",
    "load_config",
    "nondimensionalize",
]

"""Static hanging equilibrium of the chain before release."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChainConfig, effective_masses


@dataclass(frozen=True)
class EquilibriumState:
    positions: np.ndarray  # x_j(0), gauge x_1(0) = 0, downward negative
    extensions: np.ndarray  # stretch of each spring, cm


def equilibrium_positions(config: ChainConfig) -> EquilibriumState:
    """Hanging rest geometry with the top mass fixed at the origin.

    Each spring carries the weight of everything below it, so the
    extensions follow from a single backward cumulative sum.  Rest lengths
    are left out; they only shift positions by constants.
    """
    m = effective_masses(config)
    k = np.array(config.spring_constants)
    weight_below = config.g * np.cumsum(m[::-1])[::-1][1:]
    extensions = weight_below / k
    positions = np.concatenate([[0.0], -np.cumsum(extensions)])
    return EquilibriumState(positions=positions, extensions=extensions)


def stiffness_matrix(config: ChainConfig) -> np.ndarray:
    """Singular chain stiffness matrix (first row is ``k1, -k1``)."""
    k = np.array(config.spring_constants)
    n = config.n
    K = np.zeros((n, n))
    for j, kj in enumerate(k):
        K[j, j] += kj
        K[j + 1, j + 1] += kj
        K[j, j + 1] -= kj
        K[j + 1, j] -= kj
    return K


def support_loads(config: ChainConfig) -> np.ndarray:
    """Right-hand side balancing ``stiffness_matrix @ positions``.

    Row 1 carries the weight hanging below the top mass; the remaining rows
    carry each mass's own weight, negative because down is negative.
    """
    m = effective_masses(config)
    loads = -config.g * m
    loads[0] = config.g * m[1:].sum()
    return loads

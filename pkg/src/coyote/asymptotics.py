"""Short- and long-time laws for the released chain and the hang-time.

Mass ``j`` (1-based) leaves rest as ``z_j(t) ~ -Q_j t**(2j) / (2j)!``.  The
two-term form multiplies this by ``1 - c_j tau**2 / ((2j+2)(2j+1))`` where
``tau = t / T`` and ``c_j`` is the trace of ``A(0)`` minus the trace of the
block below mass ``j``; for the bottom mass ``c_n`` is the full trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ChainConfig, LumpingPolicy, effective_masses, nondimensionalize
from .spectral import trace_at_rest

VALIDITY_RATIO = 0.1


@dataclass(frozen=True)
class AsymptoticPrediction:
    j: int
    Q: float  # cm / s**(2j)
    power: int
    correction_coeff: float
    validity_hint: float  # s, where the correction reaches VALIDITY_RATIO of the leading term


@dataclass(frozen=True)
class HangTimeReport:
    L_p: float
    t_h: float
    Q: float
    n: int


@dataclass(frozen=True)
class FreeFall:
    """What remains of a two-mass chain once the top mass is removed."""

    mass: float
    g: float


@dataclass(frozen=True)
class BoulderLimit:
    m1: np.ndarray
    Q: np.ndarray
    Q_limit: float


def _check_index(config: ChainConfig, j: int):
    if not 1 <= j <= config.n:
        raise IndexError(f"mass index {j} outside 1..{config.n}")


def prefactor(masses, springs, g: float, j: int) -> float:
    """``Q_j = prod(k_1..k_{j-1}) * sum(m) * g / prod(m_1..m_j)``."""
    masses = np.asarray(masses, dtype=float)
    springs = np.asarray(springs, dtype=float)
    return float(np.prod(springs[: j - 1]) * masses.sum() * g / np.prod(masses[:j]))


def short_time_prefactor(config: ChainConfig, j: int) -> AsymptoticPrediction:
    _check_index(config, j)
    m = effective_masses(config)
    sys = nondimensionalize(config)
    c = trace_at_rest(sys) - trace_at_rest(sys, start=j)
    tau_hint = math.sqrt(VALIDITY_RATIO * (2 * j + 2) * (2 * j + 1) / c)
    return AsymptoticPrediction(
        j=j,
        Q=prefactor(m, config.spring_constants, config.g, j),
        power=2 * j,
        correction_coeff=c,
        validity_hint=tau_hint * sys.T,
    )


@dataclass(frozen=True)
class ShortTimeLaw:
    """Evaluable one- or two-term short-time displacement of one mass."""

    prediction: AsymptoticPrediction
    order: int
    T: float

    @property
    def j(self) -> int:
        return self.prediction.j

    def leading(self, t):
        p = self.prediction
        t = np.asarray(t, dtype=float)
        return -p.Q * t**p.power / math.factorial(p.power)

    def correction_ratio(self, t):
        """Size of the second term relative to the first."""
        p = self.prediction
        tau = np.asarray(t, dtype=float) / self.T
        return p.correction_coeff * tau**2 / ((p.power + 2) * (p.power + 1))

    def __call__(self, t):
        if self.order == 1:
            return self.leading(t)
        return self.leading(t) * (1.0 - self.correction_ratio(t))

    def caveat(self, t):
        """True where the two-term correction is no longer small."""
        return np.asarray(t) > self.prediction.validity_hint

    @property
    def turnaround_time(self) -> float:
        """Time at which the truncated two-term bracket vanishes."""
        p = self.prediction
        return self.T * math.sqrt((p.power + 2) * (p.power + 1) / p.correction_coeff)


def short_time_series(config: ChainConfig, j: int, order: int = 1) -> ShortTimeLaw:
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    pred = short_time_prefactor(config, j)
    return ShortTimeLaw(prediction=pred, order=order, T=nondimensionalize(config).T)


def hang_time(config: ChainConfig, L_p: float) -> HangTimeReport:
    """Time for the bottom mass's leading-order law to reach ``L_p``."""
    if not L_p > 0:
        raise ValueError(f"detection threshold must be positive, got {L_p}")
    n = config.n
    Q = short_time_prefactor(config, n).Q
    t_h = (L_p * math.factorial(2 * n) / Q) ** (1.0 / (2 * n))
    return HangTimeReport(L_p=L_p, t_h=t_h, Q=Q, n=n)


def long_time_asymptote(config: ChainConfig, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    return -0.5 * config.g * t**2


def equal_template_q(m1: float, m: float, k: float, g: float, n: int) -> float:
    return (1.0 + (n - 1) * m / m1) * k ** (n - 1) * g / m ** (n - 1)


def boulder_limit(config: ChainConfig, m1_values) -> BoulderLimit:
    """Bottom-mass prefactor as the effective top mass is varied.

    Equal-mass, equal-spring templates use the closed form; anything else is
    evaluated from the general prefactor with ``m1`` substituted.
    """
    m = effective_masses(config)
    k = np.array(config.spring_constants)
    n, g = config.n, config.g
    m1_values = np.asarray(m1_values, dtype=float)
    limit = float(np.prod(k) * g / np.prod(m[1:]))
    if np.all(m[1:] == m[1]) and np.all(k == k[0]):
        Q = np.array([equal_template_q(x, m[1], k[0], g, n) for x in m1_values])
    else:
        Q = np.array([prefactor(np.concatenate([[x], m[1:]]), k, g, n) for x in m1_values])
    return BoulderLimit(m1=m1_values, Q=Q, Q_limit=limit)


def with_top_mass(config: ChainConfig, m1: float) -> ChainConfig:
    """Copy of ``config`` whose effective top mass is ``m1``."""
    bare = list(config.bare_masses)
    if config.lumping_policy is LumpingPolicy.ADD_ABOVE:
        bare[0] = m1 - config.spring_masses[0]
    else:
        bare[0] = m1
    return replace(config, bare_masses=tuple(bare))


def vanishing_mass_reduction(config: ChainConfig) -> ChainConfig | FreeFall:
    """Drop the top mass and top spring, the limit of a negligible ``m1``."""
    if config.n == 2:
        return FreeFall(mass=float(effective_masses(config)[1]), g=config.g)
    lengths = None if config.natural_lengths is None else config.natural_lengths[1:]
    return ChainConfig(
        bare_masses=config.bare_masses[1:],
        spring_constants=config.spring_constants[1:],
        spring_masses=config.spring_masses[1:],
        lumping_policy=config.lumping_policy,
        g=config.g,
        natural_lengths=lengths,
    )

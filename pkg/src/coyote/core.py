"""Chain configuration, spring-mass lumping and nondimensionalization.

Units are cgs throughout: grams, centimetres, seconds, dynes.  Positions
follow a downward-negative convention.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Raised for malformed or physically invalid chain configurations."""


class LumpingPolicy(str, Enum):
    ADD_ABOVE = "add-above"
    NONE = "none"


@dataclass(frozen=True)
class ChainConfig:
    """A vertical chain of ``n`` masses joined by ``n - 1`` Hookean springs.

    ``bare_masses[0]`` is the top mass (the one held before release).
    ``natural_lengths`` holds the per-spring cut-off thresholds used by the
    cutoff model only.
    """

    bare_masses: tuple[float, ...]
    spring_constants: tuple[float, ...]
    spring_masses: tuple[float, ...] = ()
    lumping_policy: LumpingPolicy = LumpingPolicy.ADD_ABOVE
    g: float = 981.0
    natural_lengths: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "bare_masses", tuple(float(m) for m in self.bare_masses))
        object.__setattr__(self, "spring_constants", tuple(float(k) for k in self.spring_constants))
        springs = self.spring_masses or (0.0,) * len(self.spring_constants)
        object.__setattr__(self, "spring_masses", tuple(float(m) for m in springs))
        object.__setattr__(self, "lumping_policy", LumpingPolicy(self.lumping_policy))
        object.__setattr__(self, "g", float(self.g))
        if self.natural_lengths is not None:
            object.__setattr__(self, "natural_lengths", tuple(float(x) for x in self.natural_lengths))
        self._validate()

    def _validate(self):
        n = len(self.bare_masses)
        if n < 2:
            raise ConfigError("chain requires at least two masses")
        if len(self.spring_constants) != n - 1:
            raise ConfigError(f"expected {n - 1} spring constants, got {len(self.spring_constants)}")
        if len(self.spring_masses) != n - 1:
            raise ConfigError(f"expected {n - 1} spring masses, got {len(self.spring_masses)}")
        values = self.bare_masses + self.spring_constants + self.spring_masses + (self.g,)
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("configuration contains non-finite values")
        for j, k in enumerate(self.spring_constants, start=1):
            if k <= 0:
                raise ConfigError(f"spring constant k{j} must be positive, got {k}")
        if any(m < 0 for m in self.spring_masses):
            raise ConfigError("spring masses must be non-negative")
        if any(m < 0 for m in self.bare_masses):
            raise ConfigError("bare masses must be non-negative")
        if self.g <= 0:
            raise ConfigError("gravitational acceleration must be positive")
        if self.natural_lengths is not None:
            if len(self.natural_lengths) != n - 1:
                raise ConfigError(f"expected {n - 1} natural lengths, got {len(self.natural_lengths)}")
            if any(not (x > 0) for x in self.natural_lengths):
                raise ConfigError("natural lengths must be positive")

    @property
    def n(self) -> int:
        return len(self.bare_masses)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "bare_masses_g": list(self.bare_masses),
            "spring_constants_dyn_per_cm": list(self.spring_constants),
            "spring_masses_g": list(self.spring_masses),
            "lumping_policy": self.lumping_policy.value,
            "g_cm_s2": self.g,
        }
        if self.natural_lengths is not None:
            out["natural_lengths_cm"] = list(self.natural_lengths)
        return out

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_REQUIRED_KEYS = ("n", "bare_masses_g", "spring_constants_dyn_per_cm", "spring_masses_g")
_OPTIONAL_KEYS = ("lumping_policy", "g_cm_s2", "natural_lengths_cm", "units", "name", "description")


def config_from_dict(data: dict) -> ChainConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS))
    if unknown:
        # unit-suffixed keys in other systems land here instead of being converted
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if data.get("units", "cgs") != "cgs":
        raise ConfigError(f"unsupported units {data['units']!r}; only 'cgs' is accepted")
    for key in _REQUIRED_KEYS:
        if key not in data:
            raise ConfigError(f"missing field {key!r}")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigError("field 'n' must be an integer")
    if n < 2:
        raise ConfigError("chain requires at least two masses")
    if len(data["bare_masses_g"]) != n:
        raise ConfigError(f"bare_masses_g must have length n={n}")
    try:
        return ChainConfig(
            bare_masses=data["bare_masses_g"],
            spring_constants=data["spring_constants_dyn_per_cm"],
            spring_masses=data["spring_masses_g"],
            lumping_policy=data.get("lumping_policy", "add-above"),
            g=data.get("g_cm_s2", 981.0),
            natural_lengths=data.get("natural_lengths_cm"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(source: str | Path) -> ChainConfig:
    """Parse a JSON config given either as text or as a path to a file."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return config_from_dict(data)


def effective_masses(config: ChainConfig) -> np.ndarray:
    """Masses seen by the dynamics after lumping spring masses.

    Under ``add-above`` each spring's mass is added to the mass it hangs from.
    """
    m = np.array(config.bare_masses, dtype=float)
    if config.lumping_policy is LumpingPolicy.ADD_ABOVE:
        m[:-1] += np.array(config.spring_masses)
    if np.any(m <= 0):
        j = int(np.argmax(m <= 0)) + 1
        raise ConfigError(f"effective mass m{j} must be positive, got {m[j - 1]}")
    return m


@dataclass(frozen=True)
class NondimSystem:
    """Rescaled coupling constants with the time and length scales used.

    ``alphas[i]`` is alpha_{i+2} and ``betas[i]`` is beta_{i+2}, so both start
    at the second mass.
    """

    alphas: np.ndarray
    betas: np.ndarray
    T: float
    L: float

    @property
    def n(self) -> int:
        return len(self.alphas) + 1

    def mass_ratios(self) -> np.ndarray:
        """m_j / m_1 for j = 1..n, recovered from the couplings alone."""
        ratios = [1.0]
        k_ratio = 1.0  # k_{j-1} / k_1
        for i, a in enumerate(self.alphas):
            ratios.append(k_ratio / a)
            if i < len(self.betas):
                k_ratio *= self.betas[i] / a
        return np.array(ratios)

    def to_nondim(self, t, z):
        return np.asarray(t) / self.T, np.asarray(z) / self.L

    def to_dim(self, tau, y):
        return np.asarray(tau) * self.T, np.asarray(y) * self.L


def nondimensionalize(config: ChainConfig) -> NondimSystem:
    m = effective_masses(config)
    k = np.array(config.spring_constants)
    m1, k1 = m[0], k[0]
    alphas = (m1 / m[1:]) * (k / k1)
    betas = (m1 / m[1:-1]) * (k[1:] / k1)
    T = math.sqrt(m1 / k1)
    L = T * T * m.sum() * config.g / m1
    return NondimSystem(alphas=alphas, betas=betas, T=T, L=L)

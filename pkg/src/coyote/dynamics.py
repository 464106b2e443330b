"""Time integration of the released chain.

State vectors are ``[z_1..z_n, v_1..v_n]`` in local coordinates: each mass's
displacement from its hanging equilibrium, so everything starts at zero.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import bisect

from .core import ChainConfig, effective_masses, nondimensionalize
from .equilibrium import equilibrium_positions

EVENT_TOL = 1e-9


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray  # shape (n, len(times))
    velocities: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)
    error_estimate: float | None = None
    events: tuple = ()  # (time, spring index 1-based, engaged after event)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def mass(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.n:
            raise IndexError(f"mass index {j} outside 1..{self.n}")
        return self.positions[j - 1]


@dataclass(frozen=True)
class CutoffSpec:
    """Per-spring cut-off thresholds.

    A spring pulls while its stretch coordinate ``e_j + z_j - z_{j+1}`` (the
    separation of its ends with rest length left out) stays at or above
    ``natural_lengths[j]``.
    """

    natural_lengths: tuple[float, ...]
    extensions: tuple[float, ...]
    reengage: bool = False

    def __post_init__(self):
        if len(self.natural_lengths) != len(self.extensions):
            raise ValueError("one threshold per spring required")
        if any(not (x > 0) for x in self.natural_lengths):
            raise ValueError("cut-off lengths must be positive")

    @classmethod
    def from_config(cls, config: ChainConfig, natural_lengths=None, reengage: bool = False):
        lengths = natural_lengths if natural_lengths is not None else config.natural_lengths
        if lengths is None:
            raise ValueError("cutoff model needs natural lengths")
        ext = equilibrium_positions(config).extensions
        return cls(tuple(float(x) for x in lengths), tuple(float(e) for e in ext), reengage)


def rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _ChainForces:
    """Affine right-hand side ``A @ y + b`` of the released chain.

    Disengaged springs drop out of ``A`` and their equilibrium tension moves
    into ``b``; the matrices are rebuilt only when the engaged set changes.
    """

    def __init__(self, config: ChainConfig):
        self.n = config.n
        self.m = effective_masses(config)
        self.k = np.array(config.spring_constants)
        self.g = config.g
        self.weight = self.m.sum() * config.g
        self.rest_tension = self.k * equilibrium_positions(config).extensions
        self.set_engaged(np.ones(self.n - 1, dtype=bool))

    def set_engaged(self, engaged):
        n = self.n
        self.engaged = np.array(engaged, dtype=bool)
        K = np.zeros((n, n))
        f = np.zeros(n)
        f[0] -= self.weight
        for j in range(n - 1):
            if self.engaged[j]:
                K[j, j] -= self.k[j]
                K[j, j + 1] += self.k[j]
                K[j + 1, j] += self.k[j]
                K[j + 1, j + 1] -= self.k[j]
            else:
                # a cut spring loses its equilibrium tension too
                f[j] += self.rest_tension[j]
                f[j + 1] -= self.rest_tension[j]
        self.A = np.zeros((2 * n, 2 * n))
        self.A[:n, n:] = np.eye(n)
        self.A[n:, :n] = K / self.m[:, None]
        self.b = np.concatenate([np.zeros(n), f / self.m])

    def __call__(self, y):
        return self.A @ y + self.b

    def stretch(self, y, extensions):
        z = y[: self.n]
        return extensions + z[:-1] - z[1:]


def _check_step(config: ChainConfig, t_end: float, dt: float) -> int:
    if not t_end >= 0:
        raise ValueError("t_end must be non-negative")
    if not dt > 0:
        raise ValueError("dt must be positive")
    T = nondimensionalize(config).T
    if dt > T / 50:
        raise ValueError(f"step {dt:g} s too large; need dt <= T/50 = {T / 50:.6g} s")
    if dt > T / 200:
        warnings.warn(f"step {dt:g} s is coarser than T/200 = {T / 200:.6g} s", stacklevel=3)
    return int(round(t_end / dt))


def _integrate_fixed(rhs, n_state: int, steps: int, dt: float) -> np.ndarray:
    out = np.zeros((steps + 1, n_state))
    y = out[0].copy()
    for i in range(steps):
        y = rk4_step(rhs, y, dt)
        if not np.all(np.isfinite(y)):
            raise SimulationError(f"non-finite state at t = {(i + 1) * dt:g} s")
        out[i + 1] = y
    return out


def _trajectory(config, states, dt, **extra) -> Trajectory:
    n = config.n
    steps = states.shape[0] - 1
    meta = {"config": config.fingerprint(), "n": n}
    meta.update(extra.pop("meta", {}))
    return Trajectory(
        times=np.arange(steps + 1) * dt,
        positions=states[:, :n].T.copy(),
        velocities=states[:, n:].T.copy(),
        dt=dt,
        meta=meta,
        **extra,
    )


def simulate_linear(config: ChainConfig, t_end: float, dt: float, *, error_estimate: bool = True) -> Trajectory:
    """Integrate the released linear chain with classical RK4 at fixed step.

    With ``error_estimate`` the run is repeated at ``dt/2`` and the
    Richardson estimate of the position error is attached.
    """
    steps = _check_step(config, t_end, dt)
    rhs = _ChainForces(config)
    states = _integrate_fixed(rhs, 2 * config.n, steps, dt)
    err = None
    if error_estimate and steps > 0:
        fine = _integrate_fixed(rhs, 2 * config.n, 2 * steps, dt / 2)[::2]
        n = config.n
        err = float(np.max(np.abs(states[:, :n] - fine[:, :n]))) * 16.0 / 15.0
    return _trajectory(config, states, dt, error_estimate=err, meta={"model": "linear"})


def _integrate_with_events(rhs: _ChainForces, cutoff: CutoffSpec, steps: int, dt: float):
    n = rhs.n
    thresholds = np.array(cutoff.natural_lengths)
    ext = np.array(cutoff.extensions)
    out = np.zeros((steps + 1, 2 * n))
    events = []
    y = out[0].copy()
    rhs.set_engaged(rhs.stretch(y, ext) >= thresholds)
    for i, on in enumerate(rhs.engaged):
        if not on:
            events.append((0.0, i + 1, False))

    def switching(state):
        phi = rhs.stretch(state, ext) - thresholds
        flips = (rhs.engaged & (phi < 0)) | (cutoff.reengage & ~rhs.engaged & (phi > 0))
        return phi, flips

    free_fall_from = None
    for i in range(steps):
        t0 = i * dt
        t, h_left = t0, dt
        while True:
            y_try = rk4_step(rhs, y, h_left)
            _, flips = switching(y_try)
            if not flips.any():
                y = y_try
                break
            # earliest crossing among flipped springs, localized by bisection
            t_hit, spring = h_left, -1
            for s_idx in np.flatnonzero(flips):
                was_on = rhs.engaged[s_idx]

                def crossed(theta, s_idx=s_idx, was_on=was_on):
                    phi = rhs.stretch(rk4_step(rhs, y, theta), ext)[s_idx] - thresholds[s_idx]
                    return phi < 0 if was_on else phi > 0

                lo, hi = 0.0, h_left
                while hi - lo > EVENT_TOL:
                    mid = 0.5 * (lo + hi)
                    if crossed(mid):
                        hi = mid
                    else:
                        lo = mid
                if spring < 0 or hi < t_hit:
                    t_hit, spring = hi, s_idx
            y = rk4_step(rhs, y, t_hit)
            flipped = rhs.engaged.copy()
            flipped[spring] = not flipped[spring]
            rhs.set_engaged(flipped)
            t += t_hit
            h_left -= t_hit
            events.append((t, spring + 1, bool(rhs.engaged[spring])))
            if h_left <= 0:
                break
        if not np.all(np.isfinite(y)):
            raise SimulationError(f"non-finite state at t = {(i + 1) * dt:g} s")
        out[i + 1] = y
        if not cutoff.reengage and not rhs.engaged.any():
            free_fall_from = i + 1
            break

    if free_fall_from is not None:
        # no spring can act again; the remaining motion is exact free fall
        k0 = free_fall_from
        elapsed = (np.arange(k0, steps + 1) - k0) * dt
        z0, v0 = out[k0, :n], out[k0, n:]
        out[k0:, :n] = z0 + np.outer(elapsed, v0) - 0.5 * rhs.g * elapsed[:, None] ** 2
        out[k0:, n:] = v0 - rhs.g * elapsed[:, None]
    return out, tuple(events)


def simulate_cutoff(config: ChainConfig, cutoff: CutoffSpec, t_end: float, dt: float) -> Trajectory:
    """Integrate the chain with springs that switch off below a threshold.

    Switching instants are bracketed by sign changes over a step and located
    by bisection to ``EVENT_TOL`` seconds; integration restarts from each
    event so the output stays on the uniform ``dt`` grid.
    """
    if len(cutoff.natural_lengths) != config.n - 1:
        raise ValueError("cutoff spec does not match chain size")
    steps = _check_step(config, t_end, dt)
    states, events = _integrate_with_events(_ChainForces(config), cutoff, steps, dt)
    return _trajectory(
        config,
        states,
        dt,
        events=events,
        meta={"model": "cutoff", "reengage": cutoff.reengage},
    )


@dataclass(frozen=True)
class TwoMassSolution:
    x: np.ndarray  # top mass position
    y: np.ndarray  # bottom mass position
    t_star: float | None  # None when the spring never reaches the threshold

    @property
    def cutoff_reached(self) -> bool:
        return self.t_star is not None


def _two_mass_linear(m, k, g, t):
    amp = m * g / (2 * k)
    w = math.sqrt(2 * k / m)
    x = -amp - 0.5 * g * t**2 + amp * np.cos(w * t)
    vx = -g * t - amp * w * np.sin(w * t)
    y = -m * g / k - g * t**2 - x
    vy = -2 * g * t - vx
    return x, y, vx, vy


def two_mass_cutoff_time(m: float, k: float, g: float, L_s: float) -> float | None:
    """First time the spring separation ``x - y`` drops to ``L_s``."""
    w = math.sqrt(2 * k / m)

    def gap(t):
        x, y, _, _ = _two_mass_linear(m, k, g, t)
        return x - y - L_s

    if gap(0.0) <= 0:
        return 0.0
    t_hi = math.pi / w  # separation is monotone down to its minimum here
    if gap(t_hi) > 0:
        return None
    return bisect(gap, 0.0, t_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def two_mass_analytic(m: float, k: float, g: float, L_s: float, t) -> TwoMassSolution:
    """Piecewise closed-form motion of two equal masses with a cut-off spring.

    Before the cut-off the spring is linear and the separation oscillates;
    after it both masses fall freely from the state at ``t_star``.
    """
    if min(m, k, g) <= 0:
        raise ValueError("m, k and g must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    x, y, _, _ = _two_mass_linear(m, k, g, t)
    t_star = two_mass_cutoff_time(m, k, g, L_s)
    if t_star is None:
        return TwoMassSolution(x=x, y=y, t_star=None)
    xs, ys, vxs, vys = _two_mass_linear(m, k, g, t_star)
    dt = t - t_star
    after = t >= t_star
    x = np.where(after, xs + vxs * dt - 0.5 * g * dt**2, x)
    y = np.where(after, ys + vys * dt - 0.5 * g * dt**2, y)
    return TwoMassSolution(x=x, y=y, t_star=t_star)


def _hermite(z0, z1, v0, v1, h, theta):
    s = theta / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * z0 + h10 * h * v0 + h01 * z1 + h11 * h * v1


def detect_threshold_crossing(traj: Trajectory, j: int, L_p: float) -> float | None:
    """Earliest time at which ``|z_j|`` reaches ``L_p``.

    The bracketing samples are joined by the cubic Hermite interpolant of
    position and velocity and the crossing is bisected on it.
    """
    if not L_p > 0:
        raise ValueError("threshold must be positive")
    z = traj.mass(j)
    v = traj.velocities[j - 1]
    hits = np.flatnonzero(np.abs(z) >= L_p)
    if hits.size == 0:
        return None
    i = int(hits[0])
    if i == 0:
        return float(traj.times[0])
    h = traj.times[i] - traj.times[i - 1]
    args = (z[i - 1], z[i], v[i - 1], v[i], h)
    lo, hi = 0.0, h
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if abs(_hermite(*args, mid)) >= L_p:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, traj.times[i]):
            break
    return float(traj.times[i - 1] + hi)


@dataclass(frozen=True)
class ConservedSeries:
    times: np.ndarray
    center_of_mass_residual: np.ndarray  # cm
    energy_residual: np.ndarray  # erg
    initial_elastic_energy: float


def conserved_quantities(traj: Trajectory, config: ChainConfig) -> ConservedSeries:
    """Centre-of-mass and energy residuals of a linear-model trajectory."""
    m = effective_masses(config)
    k = np.array(config.spring_constants)
    ext = equilibrium_positions(config).extensions
    z, v, t = traj.positions, traj.velocities, traj.times
    com = (m @ z) / m.sum() + 0.5 * config.g * t**2
    stretch = ext[:, None] + z[:-1] - z[1:]
    energy = 0.5 * (m @ v**2) + 0.5 * (k @ stretch**2) + config.g * (m @ z)
    elastic0 = 0.5 * float(k @ ext**2)
    return ConservedSeries(
        times=t,
        center_of_mass_residual=com - com[0],
        energy_residual=energy - energy[0],
        initial_elastic_energy=elastic0,
    )


def trajectory_header(n: int) -> list[str]:
    return ["t"] + [f"z{j}" for j in range(1, n + 1)] + [f"v{j}" for j in range(1, n + 1)]


def write_trajectory_csv(traj: Trajectory, path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trajectory_header(traj.n))
        block = np.vstack([traj.times[None, :], traj.positions, traj.velocities]).T
        for row in block:
            writer.writerow([format(x, ".17g") for x in row])


def read_trajectory_csv(path: str | Path) -> Trajectory:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t" or len(header) % 2 != 1:
            raise ValueError(f"{path}: not a trajectory file (header t,z1..zn,v1..vn)")
        n = (len(header) - 1) // 2
        if header != trajectory_header(n):
            raise ValueError(f"{path}: unexpected header {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    data = np.array(rows)
    if data.shape[0] < 1:
        raise ValueError(f"{path}: no samples")
    times = data[:, 0]
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return Trajectory(
        times=times,
        positions=data[:, 1 : n + 1].T.copy(),
        velocities=data[:, n + 1 :].T.copy(),
        dt=dt,
        meta={"source": str(path)},
    )


def fit_power_law(t, z, lo: float, hi: float) -> tuple[float, float]:
    """Least-squares slope and prefactor of ``|z| = C t**p`` where ``lo <= |z| <= hi``."""
    t = np.asarray(t)
    a = np.abs(np.asarray(z))
    w = (a >= lo) & (a <= hi) & (t > 0)
    if w.sum() < 3:
        raise ValueError("too few samples inside the fit window")
    slope, intercept = np.polyfit(np.log(t[w]), np.log(a[w]), 1)
    return float(slope), float(math.exp(intercept))

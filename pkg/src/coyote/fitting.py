"""Spring calibration fits and comparison against measured tracks."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import Trajectory, detect_threshold_crossing

DEFAULT_SHIFT_WINDOW = 0.05


class FitError(ValueError):
    pass


class TrackError(ValueError):
    pass


@dataclass(frozen=True)
class SpringFit:
    k: float  # dyn/cm
    intercept: float  # dyn
    r_squared: float
    residuals: np.ndarray


def fit_spring_constant(displacements, forces) -> SpringFit:
    """Ordinary least squares of force on displacement; the slope is ``k``."""
    x = np.asarray(displacements, dtype=float)
    f = np.asarray(forces, dtype=float)
    if x.shape != f.shape or x.ndim != 1:
        raise FitError("displacements and forces must be equal-length 1-D sequences")
    if len(np.unique(x)) < 2:
        raise FitError("degenerate data: need at least two distinct displacements")
    design = np.column_stack([x, np.ones_like(x)])
    (k, b), *_ = np.linalg.lstsq(design, f, rcond=None)
    residuals = f - (k * x + b)
    ss_res = float(residuals @ residuals)
    ss_tot = float(((f - f.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return SpringFit(k=float(k), intercept=float(b), r_squared=min(1.0, max(0.0, r2)), residuals=residuals)


def _read_numeric_csv(path, header: list[str], error=TrackError):
    path = Path(path)
    if not path.is_file():
        raise error(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or [h.strip() for h in got] != header:
            raise error(f"{path}: expected header {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise error(f"{path}: row {lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise error(f"{path}: row {lineno}: non-numeric value in {row!r}") from None
    return np.array(rows, dtype=float).reshape(-1, len(header))


def load_calibration_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = _read_numeric_csv(path, ["displacement_cm", "force_dyn"], error=FitError)
    return data[:, 0], data[:, 1]


@dataclass(frozen=True)
class Track:
    times: np.ndarray  # s
    heights: np.ndarray  # cm, displacement of the tracked mass
    label: str = ""

    def __post_init__(self):
        if len(self.times) != len(self.heights):
            raise TrackError("times and heights differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise TrackError("track times must be strictly increasing")


def load_track_csv(path, label: str | None = None) -> Track:
    data = _read_numeric_csv(path, ["t", "z"])
    if len(data) == 0:
        raise TrackError(f"{path}: no samples")
    diffs = np.diff(data[:, 0])
    if np.any(diffs <= 0):
        row = int(np.argmax(diffs <= 0)) + 3
        raise TrackError(f"{path}: row {row}: time not strictly increasing")
    return Track(times=data[:, 0], heights=data[:, 1], label=label or Path(path).stem)


@dataclass(frozen=True)
class TrackComparison:
    rms: float
    max_abs: float
    shift: float
    hang_time_obs: float | None
    hang_time_model: float | None
    n_points: int


def _first_crossing(t, z, L_p):
    hits = np.flatnonzero(np.abs(z) >= L_p)
    if hits.size == 0:
        return None
    i = int(hits[0])
    if i == 0:
        return float(t[0])
    a0, a1 = abs(z[i - 1]), abs(z[i])
    return float(t[i - 1] + (L_p - a0) / (a1 - a0) * (t[i] - t[i - 1]))


def _model_on(traj: Trajectory, j: int, times):
    # the chain is at rest before release
    z = traj.mass(j)
    return np.interp(times, traj.times, z, left=0.0, right=np.nan)


def _residuals(track: Track, traj: Trajectory, j: int, shift: float):
    model = _model_on(traj, j, track.times - shift)
    keep = np.isfinite(model)
    return track.heights[keep] - model[keep]


def compare_track(
    track: Track,
    traj: Trajectory,
    j: int,
    alignment: str = "release-time",
    *,
    L_p: float = 0.05,
    window: float = DEFAULT_SHIFT_WINDOW,
) -> TrackComparison:
    """Residuals between a measured track and mass ``j`` of a model run.

    The model is linearly interpolated onto track times.  With
    ``best-shift`` the release time is searched over ``[-window, window]``
    on the model's step grid; a positive shift means the track lags.
    """
    if alignment not in ("release-time", "best-shift"):
        raise ValueError(f"unknown alignment {alignment!r}")
    traj.mass(j)
    if len(track.times) > 1 and traj.dt > np.min(np.diff(track.times)) * (1 + 1e-9):
        raise TrackError("model must be sampled at least as finely as the track")
    shift = 0.0
    if alignment == "best-shift":
        steps = int(round(window / traj.dt)) if traj.dt > 0 else 0
        best = None
        for i in range(-steps, steps + 1):
            s = i * traj.dt
            r = _residuals(track, traj, j, s)
            if r.size == 0:
                continue
            score = float(np.sqrt(np.mean(r**2)))
            if best is None or score < best[0]:
                best = (score, s)
        if best is None:
            raise TrackError("track and model do not overlap in time")
        shift = best[1]
    r = _residuals(track, traj, j, shift)
    if r.size == 0:
        raise TrackError("track and model do not overlap in time")
    obs = _first_crossing(track.times, track.heights, L_p)
    return TrackComparison(
        rms=float(np.sqrt(np.mean(r**2))),
        max_abs=float(np.max(np.abs(r))),
        shift=shift,
        hang_time_obs=None if obs is None else obs - shift,
        hang_time_model=detect_threshold_crossing(traj, j, L_p),
        n_points=int(r.size),
    )

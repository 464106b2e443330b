"""Command-line interface: ``coyote <subcommand> ...``.

Exit status is 0 on success, 1 for domain errors (bad config, failed
validation, missing files) and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    boulder_limit,
    hang_time,
    short_time_prefactor,
    short_time_series,
    with_top_mass,
)
from .core import ChainConfig, ConfigError, load_config, nondimensionalize
from .dynamics import (
    CutoffSpec,
    SimulationError,
    detect_threshold_crossing,
    read_trajectory_csv,
    simulate_cutoff,
    simulate_linear,
    two_mass_analytic,
    two_mass_cutoff_time,
    write_trajectory_csv,
)
from .fitting import FitError, TrackError, compare_track, fit_spring_constant, load_calibration_csv, load_track_csv
from .plotting import PlotStyle, Series, save_plot

SCHEMA_VERSION = 1


@dataclass
class RunManifest:
    subcommand: str
    config: dict | None
    overrides: dict
    outputs: list[str] = field(default_factory=list)
    tool_version: str = __version__
    started_utc: str = ""
    elapsed_s: float = 0.0
    argv: list[str] = field(default_factory=list)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_json(path: Path | None, payload: dict):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _write_csv(path: Path | None, header: list[str], rows):
    fh = sys.stdout if path is None else open(path, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if path is not None:
            fh.close()


def _clock():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        return datetime.fromtimestamp(int(epoch), timezone.utc).isoformat(), True
    return datetime.now(timezone.utc).isoformat(), False


def _write_manifest(primary: Path, manifest: RunManifest, started: float, pinned: bool):
    manifest.elapsed_s = 0.0 if pinned else round(time.perf_counter() - started, 6)
    path = primary.with_name(primary.name + ".manifest.json")
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _plot_path(args, default_from: Path | None) -> Path | None:
    if getattr(args, "no_plot", False):
        return None
    if getattr(args, "plot", None):
        return Path(args.plot)
    if default_from is not None:
        return default_from.with_suffix(".svg")
    return None


# subcommands -------------------------------------------------------------


def cmd_simulate(args, manifest: RunManifest) -> list[Path]:
    config = load_config(args.config)
    manifest.config = config.to_dict()
    traj = simulate_linear(config, args.t_end, args.dt, error_estimate=not args.no_error_estimate)
    out = Path(args.out)
    write_trajectory_csv(traj, out)
    written = [out]
    if args.export_track:
        j = args.export_track
        track_path = out.with_name(f"{out.stem}_track_z{j}.csv")
        _write_csv(track_path, ["t", "z"], zip(traj.times, traj.mass(j)))
        written.append(track_path)
    plot = _plot_path(args, out)
    if plot:
        written.append(_plot_trajectory(traj, config, plot, args.loglog))
    return written


def _plot_trajectory(traj, config, path, loglog, title="Released chain"):
    series = [Series(f"z{j}", traj.times, np.abs(traj.mass(j)) if loglog else traj.mass(j)) for j in range(1, traj.n + 1)]
    if loglog:
        for j in range(2, config.n + 1):
            law = short_time_series(config, j, order=1)
            series.append(Series(f"-Q{j} t^{2 * j}/({2 * j})!", traj.times, np.abs(law(traj.times)), linestyle="--"))
        style = PlotStyle(title=title, xlabel="t (s)", ylabel="|z| (cm)", loglog=True)
    else:
        style = PlotStyle(title=title, xlabel="t (s)", ylabel="z (cm)")
    return save_plot(path, series, style)


def cmd_simulate_cutoff(args, manifest: RunManifest) -> list[Path]:
    config = load_config(args.config)
    manifest.config = config.to_dict()
    cutoff = CutoffSpec.from_config(config, natural_lengths=args.ls, reengage=args.reengage)
    traj = simulate_cutoff(config, cutoff, args.t_end, args.dt)
    out = Path(args.out)
    write_trajectory_csv(traj, out)
    written = [out]
    if traj.events:
        events_path = out.with_name(out.stem + "_events.csv")
        _write_csv(events_path, ["t", "spring", "engaged"], [(t, s, int(e)) for t, s, e in traj.events])
        written.append(events_path)
    plot = _plot_path(args, out)
    if plot:
        written.append(_plot_trajectory(traj, config, plot, False, title="Chain with spring cut-off"))
    return written


def cmd_hangtime(args, manifest: RunManifest) -> list[Path]:
    config = load_config(args.config)
    manifest.config = config.to_dict()
    report = hang_time(config, args.lp)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "hangtime",
        "config_fingerprint": config.fingerprint(),
        "n": report.n,
        "L_p": report.L_p,
        "Q": report.Q,
        "t_h": report.t_h,
    }
    if args.verify_dt:
        traj = simulate_linear(config, 1.5 * report.t_h, args.verify_dt, error_estimate=False)
        payload["t_h_simulated"] = detect_threshold_crossing(traj, config.n, args.lp)
    out = Path(args.out) if args.out else None
    _write_json(out, payload)
    written = [out] if out else []
    plot = _plot_path(args, out)
    if plot:
        lp = np.geomspace(args.lp / 100, args.lp * 100, 200)
        th = [hang_time(config, x).t_h for x in lp]
        style = PlotStyle(title="Hang-time", xlabel="L_p (cm)", ylabel="t_h (s)", loglog=True)
        written.append(save_plot(plot, [Series(f"t_h, n={config.n}", lp, np.array(th))], style))
    return written


def cmd_asympt(args, manifest: RunManifest) -> list[Path]:
    config = load_config(args.config)
    manifest.config = config.to_dict()
    rows = []
    for j in range(1, config.n + 1):
        p = short_time_prefactor(config, j)
        law = short_time_series(config, j, order=2)
        rows.append((j, p.power, p.Q, p.correction_coeff, p.validity_hint, law.turnaround_time))
    out = Path(args.out) if args.out else None
    _write_csv(out, ["j", "power", "Q", "correction_coeff", "validity_hint_s", "turnaround_s"], rows)
    written = [out] if out else []
    plot = _plot_path(args, out)
    if plot:
        T = nondimensionalize(config).T
        t = np.geomspace(T / 100, 10 * T, 200)
        series = [Series(f"j={j}", t, -short_time_series(config, j)(t)) for j in range(1, config.n + 1)]
        style = PlotStyle(title="Leading short-time laws", xlabel="t (s)", ylabel="|z| (cm)", loglog=True)
        written.append(save_plot(plot, series, style))
    return written


def cmd_fit_springs(args, manifest: RunManifest) -> list[Path]:
    results, series = [], []
    for i, name in enumerate(args.data, start=1):
        x, f = load_calibration_csv(name)
        fit = fit_spring_constant(x, f)
        results.append(
            {"file": str(name), "k": fit.k, "intercept": fit.intercept, "r_squared": fit.r_squared, "n_points": len(x)}
        )
        series.append(Series(f"spring {i} data", x, f, linestyle="", marker="o"))
        xs = np.array([x.min(), x.max()])
        series.append(Series(f"k={fit.k:.6g} dyn/cm", xs, fit.k * xs + fit.intercept, linestyle="--"))
    out = Path(args.out) if args.out else None
    _write_json(out, {"schema_version": SCHEMA_VERSION, "command": "fit-springs", "springs": results})
    written = [out] if out else []
    plot = _plot_path(args, out)
    if plot:
        style = PlotStyle(title="Spring calibration", xlabel="displacement (cm)", ylabel="force (dyn)")
        written.append(save_plot(plot, series, style))
    return written


def cmd_compare(args, manifest: RunManifest) -> list[Path]:
    track = load_track_csv(args.track)
    if args.traj:
        traj = read_trajectory_csv(args.traj)
        config = None
    else:
        config = load_config(args.config)
        manifest.config = config.to_dict()
        frame = float(np.min(np.diff(track.times))) if len(track.times) > 1 else track.times[0]
        dt = args.dt or min(nondimensionalize(config).T / 200, frame)
        t_end = args.t_end or float(track.times[-1]) + args.window
        traj = simulate_linear(config, t_end, dt, error_estimate=False)
    result = compare_track(track, traj, args.mass, args.alignment, L_p=args.lp, window=args.window)
    payload = {"schema_version": SCHEMA_VERSION, "command": "compare", "mass": args.mass, "alignment": args.alignment}
    payload.update(asdict(result))
    out = Path(args.out) if args.out else None
    _write_json(out, payload)
    written = [out] if out else []
    plot = _plot_path(args, out)
    if plot:
        series = [
            Series(f"track {track.label}", track.times, track.heights, linestyle="", marker="."),
            Series(f"model z{args.mass}", traj.times + result.shift, traj.mass(args.mass)),
        ]
        if config is not None:
            law = short_time_series(config, args.mass)
            t = traj.times[traj.times > 0]
            series.append(Series("leading short-time law", t + result.shift, law(t), linestyle="--"))
        style = PlotStyle(title="Track comparison", xlabel="t (s)", ylabel="z (cm)")
        written.append(save_plot(plot, series, style))
    return written


def _sweep_point(config: ChainConfig, param: str, value: float, lp: float):
    if param == "m1":
        cfg = with_top_mass(config, value)
        rep = hang_time(cfg, lp)
        return (value, rep.Q, rep.t_h)
    rep = hang_time(config, value)
    return (value, rep.Q, rep.t_h)


def cmd_sweep(args, manifest: RunManifest) -> list[Path]:
    config = load_config(args.config)
    manifest.config = config.to_dict()
    if args.values:
        values = [float(v) for v in args.values]
    else:
        start, stop, num = args.geom
        values = list(np.geomspace(float(start), float(stop), int(num)))
    threads = max(1, int(os.environ.get("COYOTE_THREADS", "1") or 1))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda v: _sweep_point(config, args.param, v, args.lp), values))
    header = ["m1_g" if args.param == "m1" else "L_p_cm", "Q", "t_h_s"]
    out = Path(args.out) if args.out else None
    _write_csv(out, header, rows)
    written = [out] if out else []
    plot = _plot_path(args, out)
    if plot:
        x = np.array([r[0] for r in rows])
        y = np.array([r[2] for r in rows])
        style = PlotStyle(title=f"Hang-time sweep over {args.param}", xlabel=header[0], ylabel="t_h (s)", loglog=True)
        written.append(save_plot(plot, [Series("t_h", x, y, marker="o")], style))
    if args.param == "m1":
        limit = boulder_limit(config, [1.0]).Q_limit
        sys.stderr.write(f"large-m1 limit of Q: {_fmt(limit)}\n")
    return written


def cmd_demo_two_mass(args, manifest: RunManifest) -> list[Path]:
    # nondimensional units: m = k = g = 1, so lengths are in mg/k and times in sqrt(m/k)
    config = ChainConfig(bare_masses=(1.0, 1.0), spring_constants=(1.0,), g=1.0, natural_lengths=(args.ls,))
    manifest.config = config.to_dict()
    t_star = two_mass_cutoff_time(1.0, 1.0, 1.0, args.ls)
    t_end = args.t_end or (2 * t_star if t_star else 3.0)
    cut = simulate_cutoff(config, CutoffSpec.from_config(config), t_end, args.dt)
    lin = simulate_linear(config, t_end, args.dt, error_estimate=False)
    exact = two_mass_analytic(1.0, 1.0, 1.0, args.ls, cut.times)
    y0 = -1.0  # bottom mass rests one unit below the top
    y_cut = y0 + cut.mass(2)
    rows = zip(cut.times, y_cut, exact.y, y0 + lin.mass(2), -1.0 - cut.times**4 / 12)
    out = Path(args.out)
    _write_csv(out, ["t", "y_cutoff", "y_analytic", "y_linear", "y_short_time"], rows)
    written = [out]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "demo-two-mass",
        "L_s": args.ls,
        "t_star": t_star,
        "max_abs_error": float(np.max(np.abs(y_cut - exact.y))),
    }
    _write_json(None, summary)
    plot = _plot_path(args, out)
    if plot:
        series = [
            Series("cut-off (numerical)", cut.times, y_cut),
            Series("linear", lin.times, y0 + lin.mass(2), linestyle="--"),
            Series("-1 - t^4/12", cut.times, -1.0 - cut.times**4 / 12, linestyle=":"),
        ]
        style = PlotStyle(title=f"Two masses, L_s = {args.ls:g}", xlabel="t", ylabel="y")
        written.append(save_plot(plot, series, style))
    return written


# parser ------------------------------------------------------------------


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coyote", description="Hang-time of a released hanging spring-mass chain.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def plot_flags(p):
        p.add_argument("--plot", help="SVG figure path (default: next to --out)")
        p.add_argument("--no-plot", action="store_true", help="skip the figure")

    p = sub.add_parser("simulate", help="integrate the released linear chain")
    p.add_argument("--config", required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=_positive, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--loglog", action="store_true", help="log-log figure with short-time laws")
    p.add_argument("--export-track", type=int, metavar="J", help="also write t,z for mass J")
    p.add_argument("--no-error-estimate", action="store_true", help="skip the half-step rerun")
    plot_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("simulate-cutoff", help="integrate the chain with spring cut-offs")
    p.add_argument("--config", required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=_positive, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ls", type=_positive, nargs="+", help="cut-off lengths per spring (cm)")
    p.add_argument("--reengage", action="store_true", help="let springs switch back on")
    plot_flags(p)
    p.set_defaults(func=cmd_simulate_cutoff)

    p = sub.add_parser("hangtime", help="predicted hang-time of the bottom mass")
    p.add_argument("--config", required=True)
    p.add_argument("--lp", type=_positive, required=True, help="detection threshold (cm)")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    p.add_argument("--verify-dt", type=_positive, help="also simulate at this step and report the crossing")
    plot_flags(p)
    p.set_defaults(func=cmd_hangtime)

    p = sub.add_parser("asympt", help="per-mass short-time prefactors and validity windows")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV path (default: stdout)")
    plot_flags(p)
    p.set_defaults(func=cmd_asympt)

    p = sub.add_parser("fit-springs", help="fit spring constants from calibration CSVs")
    p.add_argument("--data", nargs="+", required=True, help="CSV files with displacement_cm,force_dyn")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    plot_flags(p)
    p.set_defaults(func=cmd_fit_springs)

    p = sub.add_parser("compare", help="compare a measured track with the model")
    p.add_argument("--track", required=True, help="CSV with t,z")
    p.add_argument("--mass", type=int, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="simulate from this config")
    src.add_argument("--traj", help="use an existing trajectory CSV")
    p.add_argument("--t-end", type=_positive)
    p.add_argument("--dt", type=_positive)
    p.add_argument("--alignment", choices=["release-time", "best-shift"], default="release-time")
    p.add_argument("--lp", type=_positive, default=0.05, help="hang-time threshold (cm)")
    p.add_argument("--window", type=_positive, default=0.05, help="best-shift search half-width (s)")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    plot_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="hang-time over a grid of top masses or thresholds")
    p.add_argument("--config", required=True)
    p.add_argument("--param", choices=["m1", "lp"], required=True)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--values", type=_positive, nargs="+")
    grid.add_argument("--geom", nargs=3, metavar=("START", "STOP", "NUM"), type=float)
    p.add_argument("--lp", type=_positive, default=0.05, help="threshold for m1 sweeps (cm)")
    p.add_argument("--out", help="CSV path (default: stdout)")
    plot_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo-two-mass", help="two equal masses with a cut-off spring (nondimensional)")
    p.add_argument("--ls", type=_positive, default=0.5)
    p.add_argument("--t-end", type=_positive)
    p.add_argument("--dt", type=_positive, default=1e-4)
    p.add_argument("--out", default="two_mass.csv")
    plot_flags(p)
    p.set_defaults(func=cmd_demo_two_mass)
    return parser


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    stamp, pinned = _clock()
    overrides = {k: v for k, v in vars(args).items() if k not in ("func", "command") and v not in (None, False)}
    manifest = RunManifest(subcommand=args.command, config=None, overrides=overrides, started_utc=stamp, argv=argv)
    try:
        written = [Path(p) for p in args.func(args, manifest)]
    except (ConfigError, FitError, TrackError, SimulationError, ValueError, IndexError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    if written:
        manifest.outputs = [str(p) for p in written]
        _write_manifest(written[0], manifest, started, pinned)
    return 0


def main():
    sys.exit(run())

import csv
import json

import pytest

from coyote.cli import run

from conftest import TRIAL1


def _read_json(path):
    return json.loads(path.read_text())


def test_hangtime_report(tmp_path):
    out = tmp_path / "h.json"
    assert run(["hangtime", "--config", str(TRIAL1), "--lp", "0.05", "--out", str(out)]) == 0
    report = _read_json(out)
    assert report["schema_version"] == 1
    assert report["t_h"] == pytest.approx(0.101, abs=1e-3)
    assert (tmp_path / "h.svg").exists()
    assert (tmp_path / "h.json.manifest.json").exists()


def test_hangtime_stdout(capsys):
    assert run(["hangtime", "--config", str(TRIAL1), "--lp", "0.05"]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 4


def test_simulate_row_count(tmp_path):
    out = tmp_path / "traj.csv"
    code = run(
        ["simulate", "--config", str(TRIAL1), "--t-end", "0.25", "--dt", "1e-5", "--out", str(out),
         "--no-error-estimate", "--no-plot"]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,z1,z2,z3,z4,v1,v2,v3,v4"
    assert len(lines) - 1 == 25001


def test_demo_two_mass(tmp_path, capsys):
    out = tmp_path / "demo.csv"
    assert run(["demo-two-mass", "--ls", "0.5", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["max_abs_error"] < 1e-6
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    near = next(r for r in rows if abs(float(r["t"]) - 0.3) < 1e-9)
    assert float(near["y_cutoff"]) == pytest.approx(-1 - 0.3**4 / 12, rel=1e-4)
    assert (tmp_path / "demo.svg").exists()


def _run_all(outdir):
    outdir.mkdir()
    cfg = str(TRIAL1)
    cmds = [
        ["simulate", "--config", cfg, "--t-end", "0.02", "--dt", "1e-5", "--out", str(outdir / "traj.csv"), "--loglog"],
        ["asympt", "--config", cfg, "--out", str(outdir / "asympt.csv")],
        ["hangtime", "--config", cfg, "--lp", "0.02", "--out", str(outdir / "h.json")],
        ["sweep", "--config", cfg, "--param", "m1", "--geom", "4.44", "4440", "5", "--out", str(outdir / "sweep.csv")],
        ["demo-two-mass", "--out", str(outdir / "demo.csv"), "--dt", "1e-3"],
    ]
    for cmd in cmds:
        assert run(cmd) == 0, cmd
    return {p.name: p.read_bytes() for p in outdir.iterdir() if not p.name.endswith(".manifest.json")}


def test_outputs_are_deterministic(tmp_path, monkeypatch):
    first = _run_all(tmp_path / "a")
    second = _run_all(tmp_path / "b")
    assert first.keys() == second.keys()
    assert any(name.endswith(".svg") for name in first)
    for name in first:
        assert first[name] == second[name], name


def test_manifest_pinned_by_source_date_epoch(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    texts = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        out.mkdir()
        assert run(["asympt", "--config", str(TRIAL1), "--out", str(out / "q.csv"), "--no-plot"]) == 0
        texts.append((out / "q.csv.manifest.json").read_text().replace(f"/{sub}/", "/"))
    assert texts[0] == texts[1]
    manifest = json.loads(texts[0])
    assert manifest["subcommand"] == "asympt"
    assert manifest["config"]["n"] == 4
    assert manifest["started_utc"].startswith("1970-01-01")


def test_simulate_then_compare_round_trip(tmp_path):
    traj = tmp_path / "traj.csv"
    assert run(
        ["simulate", "--config", str(TRIAL1), "--t-end", "0.15", "--dt", "1e-5", "--out", str(traj),
         "--export-track", "4", "--no-plot", "--no-error-estimate"]
    ) == 0
    track = tmp_path / "traj_track_z4.csv"
    report = tmp_path / "cmp.json"
    assert run(["compare", "--traj", str(traj), "--track", str(track), "--mass", "4", "--out", str(report)]) == 0
    result = _read_json(report)
    assert result["rms"] == 0.0
    assert result["hang_time_obs"] == pytest.approx(result["hang_time_model"], abs=1e-5)


def test_compare_against_config(tmp_path):
    track = tmp_path / "track.csv"
    track.write_text("t,z\n0.0,0.0\n0.001,0.0\n0.002,0.0\n")
    report = tmp_path / "cmp.json"
    assert run(["compare", "--config", str(TRIAL1), "--track", str(track), "--mass", "4", "--out", str(report)]) == 0
    assert _read_json(report)["rms"] < 1e-9


def test_fit_springs(tmp_path):
    data = tmp_path / "k1.csv"
    data.write_text("displacement_cm,force_dyn\n1,13761\n2,27522\n3,41283\n")
    out = tmp_path / "fit.json"
    assert run(["fit-springs", "--data", str(data), "--out", str(out)]) == 0
    assert _read_json(out)["springs"][0]["k"] == pytest.approx(13761.0)


def test_simulate_cutoff(tmp_path):
    out = tmp_path / "cut.csv"
    code = run(
        ["simulate-cutoff", "--config", str(TRIAL1), "--t-end", "0.05", "--dt", "1e-5", "--ls", "0.2", "0.2", "0.2",
         "--out", str(out)]
    )
    assert code == 0
    assert (tmp_path / "cut_events.csv").read_text().startswith("t,spring,engaged")


def test_sweep_threads_do_not_change_output(tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("COYOTE_THREADS", threads)
        out = tmp_path / f"s{threads}.csv"
        assert run(["sweep", "--config", str(TRIAL1), "--param", "lp", "--values", "0.01", "0.02", "0.05",
                    "--out", str(out), "--no-plot"]) == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]
    assert outs[0].splitlines()[0] == "L_p_cm,Q,t_h_s"


@pytest.mark.parametrize(
    "argv, code",
    [
        (["hangtime", "--config", str(TRIAL1)], 2),
        (["simulate", "--bogus"], 2),
        (["nope"], 2),
        (["hangtime", "--config", "/no/such/file.json", "--lp", "0.05"], 1),
        (["hangtime", "--config", str(TRIAL1), "--lp", "-1"], 2),
        (["simulate", "--config", str(TRIAL1), "--t-end", "0.1", "--dt", "0.01", "--out", "x.csv"], 1),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert run(argv) == code
    err = capsys.readouterr().err
    assert err.strip()
    if code == 1:
        assert err.startswith("error: ") and err.count("\n") == 1


def test_invalid_config_is_domain_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 1, "bare_masses_g": [1], "spring_constants_dyn_per_cm": [], "spring_masses_g": []}))
    assert run(["asympt", "--config", str(bad)]) == 1
    assert "at least two masses" in capsys.readouterr().err

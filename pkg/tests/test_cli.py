import csv

import numpy as np
import pytest

from lgmd import ingest
from lgmd.cli import EXIT_ALERT, EXIT_ERROR, EXIT_OK, main


def run_cli(*argv):
    return main([str(a) for a in argv])


def summary_of(text):
    out = {}
    for line in text.strip().splitlines():
        key, value = line.split(None, 1)
        out[key] = value.strip()
    return out


def test_synth_grating_120_frames(tmp_path, capsys):
    out = tmp_path / "g"
    assert run_cli("synth", "--kind", "grating", "--sf", 0.05, "--tf", 2, "--fps", 30, "--duration", 4, "--out", out) == EXIT_OK
    assert capsys.readouterr().out.strip() == "120"
    assert len(list(out.glob("frame_*.pgm"))) == 120
    assert (out / "frame_000119.pgm").exists()
    meta = ingest.read_metadata(out / "metadata.txt")
    assert meta["kind"] == "grating" and float(meta["fps"]) == 30 and meta["collision_frame"] == "none"


def test_synth_loom_records_collision(tmp_path, capsys):
    out = tmp_path / "l"
    assert run_cli("synth", "--kind", "looming_in_grating", "--polarity", "light", "--sf-background", 60, "--out", out) == EXIT_OK
    meta = ingest.read_metadata(out / "metadata.txt")
    n = int(capsys.readouterr().out)
    assert int(meta["collision_frame"]) == n - 1
    assert meta["object_polarity"] == "light" and float(meta["spatial_frequency"]) == 60


@pytest.mark.parametrize("flags", [["--tf", "0"], ["--sf", "-1"], ["--polarity", "grey"], ["--kind", "spiral"], ["--fps", "abc"]])
def test_synth_rejects_bad_flags(tmp_path, capsys, flags):
    assert run_cli("synth", *flags, "--out", tmp_path / "x") == EXIT_ERROR
    assert "error" in capsys.readouterr().err


def test_synth_translate_too_long(tmp_path, capsys):
    assert run_cli("synth", "--kind", "panoramic_translate", "--duration", 8, "--out", tmp_path / "x") == EXIT_ERROR
    assert "leaves the view" in capsys.readouterr().err


def test_run_static_scene(tmp_path, capsys):
    ingest.write_frames(tmp_path / "s", [np.full((20, 30), 90, np.uint8)] * 15, {"fps": 30, "kind": "static", "collision_frame": None})
    code = run_cli("run", tmp_path / "s", "--out-csv", tmp_path / "t.csv")
    s = summary_of(capsys.readouterr().out)
    assert code == EXIT_OK
    assert s["total_frames"] == "15" and s["total_spikes"] == "0" and s["first_alert_frame"] == "-"
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 16


def test_run_light_loom_alerts_early(tmp_path, capsys):
    run_cli("synth", "--kind", "looming_in_grating", "--polarity", "light", "--out", tmp_path / "l")
    capsys.readouterr()
    code = run_cli("run", tmp_path / "l", "--out-csv", tmp_path / "t.csv")
    s = summary_of(capsys.readouterr().out)
    assert code == EXIT_ALERT
    assert int(s["first_alert_frame"]) < int(s["collision_frame_truth"])
    assert float(s["lead_time_ms"]) > 0
    rows = list(csv.DictReader(open(tmp_path / "t.csv")))
    assert rows[int(s["first_alert_frame"])]["collision"] == "1"


def test_run_translate_t_sf_15_quiet(tmp_path, capsys):
    run_cli("synth", "--kind", "panoramic_translate", "--out", tmp_path / "t")
    capsys.readouterr()
    assert run_cli("run", tmp_path / "t", "--t-sf", 15) == EXIT_OK
    assert summary_of(capsys.readouterr().out)["alert_frames"] == "0"


def test_run_needs_fps(tmp_path, capsys):
    ingest.write_frames(tmp_path / "s", [np.zeros((4, 4), np.uint8)] * 3)
    assert run_cli("run", tmp_path / "s") == EXIT_ERROR
    assert "--fps" in capsys.readouterr().err
    assert run_cli("run", tmp_path / "s", "--fps", 18) == EXIT_OK


def test_run_dimension_drift(tmp_path, capsys):
    d = tmp_path / "s"
    ingest.write_frames(d, [np.zeros((4, 4), np.uint8)] * 3, {"fps": 30})
    ingest.write_pgm(d / "frame_000003.pgm", np.zeros((5, 4)))
    assert run_cli("run", d) == EXIT_ERROR
    assert "frame 3" in capsys.readouterr().err


def test_run_config_and_env(tmp_path, capsys, monkeypatch):
    d = tmp_path / "s"
    frames = np.zeros((12, 16, 16), np.uint8)
    for t in range(12):
        h = 1 + t
        frames[t, 8 - h // 2 : 8 + (h + 1) // 2, 8 - h // 2 : 8 + (h + 1) // 2] = 255
    ingest.write_frames(d, frames, {"fps": 30})
    cfg = tmp_path / "p.txt"
    cfg.write_text("T_sf = 100000\n")
    monkeypatch.setenv("LGMD_CONFIG", str(cfg))
    assert run_cli("run", d) == EXIT_OK
    capsys.readouterr()
    bad = tmp_path / "bad.txt"
    bad.write_text("sigmaa = 1\n")
    assert run_cli("run", d, "--config", bad) == EXIT_ERROR
    assert "sigmaa" in capsys.readouterr().err


def test_run_bit_reproducible(tmp_path, capsys):
    run_cli("synth", "--kind", "panoramic_loom", "--duration", 1, "--out", tmp_path / "p")
    run_cli("run", tmp_path / "p", "--out-csv", tmp_path / "a.csv")
    run_cli("run", tmp_path / "p", "--out-csv", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_grating_grid(tmp_path, capsys):
    code = run_cli(
        "sweep", "--kind", "grating", "--sf-list", "0.02,0.1", "--tf-list", "1,4", "--duration", 1, "--width", 120, "--height", 90, "--out", tmp_path
    )
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert len(rows) == 4
    assert {(r["spatial_frequency"], r["temporal_frequency"]) for r in rows} == {("0.02", "1.0"), ("0.02", "4.0"), ("0.1", "1.0"), ("0.1", "4.0")}
    assert all(r["total_spikes"] == "0" and r["error"] == "" for r in rows)


def test_sweep_records_cell_errors(tmp_path, capsys):
    code = run_cli("sweep", "--kind", "panoramic_translate", "--polarity-list", "dark,light", "--duration", 9, "--out", tmp_path)
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert code == EXIT_ERROR and len(rows) == 2
    assert all("leaves the view" in r["error"] for r in rows)


@pytest.mark.parametrize("axis", ["--sf-list", "--tf-list", "--polarity-list"])
def test_sweep_empty_axis(tmp_path, capsys, axis):
    assert run_cli("sweep", "--kind", "grating", axis, "", "--out", tmp_path) == EXIT_ERROR
    assert "empty" in capsys.readouterr().err


def test_sweep_needs_an_axis(tmp_path, capsys):
    assert run_cli("sweep", "--kind", "grating", "--out", tmp_path) == EXIT_ERROR


def test_suite_command(tmp_path, capsys):
    suite = tmp_path / "s.txt"
    suite.write_text(
        "[flat]\nexpectation = silent\nstimulus.kind = grating\nstimulus.width = 40\nstimulus.height = 30\nstimulus.duration = 1\n"
    )
    assert run_cli("suite", suite, "--out-csv", tmp_path / "r.csv") == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert rows[0]["name"] == "flat" and rows[0]["verdict"] == "pass"


def test_sweep_full_grating_grid_silent(tmp_path, capsys):
    assert run_cli("sweep", "--kind", "grating", "--sf-list", "0.02,0.05,0.1", "--tf-list", "1,2,4", "--out", tmp_path) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert len(rows) == 9 and all(r["total_spikes"] == "0" for r in rows)


def test_sweep_loom_grid_all_alert(tmp_path, capsys):
    code = run_cli("sweep", "--kind", "looming_in_grating", "--polarity-list", "dark,light", "--sf-list", "40,60,80", "--out", tmp_path)
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert code == EXIT_OK and len(rows) == 6
    assert all(r["first_alert_frame"] != "" and int(r["first_alert_frame"]) < int(r["collision_frame_truth"]) for r in rows)

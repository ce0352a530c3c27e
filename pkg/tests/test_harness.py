import csv

import numpy as np
import pytest

from lgmd.harness import ExperimentSpec, load_suite, oracle_process, parse_suite, run_experiment, run_suite, write_report
from lgmd.harness.corpus import random_sequence
from lgmd.harness.oracle import ORACLE_FIELDS
from lgmd.ingest import ConfigError
from lgmd.model import run_sequence
from lgmd.params import ModelParams
from lgmd.stimuli import default_spec

P0 = ModelParams()


def max_gap(core, oracle):
    return max(abs(float(getattr(c, f)) - float(o[f])) for c, o in zip(core, oracle) for f in ORACLE_FIELDS)


def test_oracle_static_scene_quiet():
    frames = np.full((6, 5, 5), 42.0)
    for r in oracle_process(frames.tolist(), P0):
        assert r["f_raw"] == 0 and r["K_potential"] == 0.5 and r["spikes"] == 0 and not r["collision"]


def test_oracle_random_16x16():
    frames = np.random.default_rng(7).uniform(0, 255, (20, 16, 16))
    core = run_sequence(frames, P0)
    assert max_gap(core, oracle_process(frames.tolist(), P0)) <= 1e-9


def test_oracle_delta_impulse():
    frames = np.zeros((3, 9, 9))
    frames[1, 4, 4] = 255.0
    core = run_sequence(frames, P0)
    orc = oracle_process(frames.tolist(), P0)
    assert max_gap(core, orc) <= 1e-9
    assert core[1].f_raw == pytest.approx(255 / 81)


@pytest.mark.parametrize("seed", [3, 11])
def test_oracle_non_default_params(seed):
    p = ModelParams(n_p=3, T_de=5.0, alpha_sfa=0.6, W=((0, 0.5, 0), (0.25, 1, 0.25), (0, 0.5, 0.125)), theta3=0.5, N_ts=4)
    frames = random_sequence(seed, shape=(12, 10), n_frames=25)
    assert max_gap(run_sequence(frames, p), oracle_process(frames.tolist(), p)) <= 1e-9


def test_oracle_rejects_what_core_rejects():
    with pytest.raises(ValueError):
        oracle_process([[[300.0]]], P0)
    with pytest.raises(ValueError):
        oracle_process([[[1.0, 2.0]], [[1.0]]], P0)


def test_corpus_deterministic_and_in_range():
    a, b = random_sequence(5), random_sequence(5)
    assert np.array_equal(a, b) and a.shape == (50, 32, 32)
    assert a.min() >= 0 and a.max() <= 255


def _small(kind, **kw):
    return default_spec(kind, width=60, height=40, duration=1.0, **kw)


def test_silent_grating_passes():
    r = run_experiment(ExperimentSpec("g", _small("grating", spatial_frequency=0.05, temporal_frequency=2), expectation="silent"))
    assert r.passed and r.total_spikes == 0


def test_ordering_light_over_dark():
    spec = default_spec("looming_in_grating", object_polarity="light")
    r = run_experiment(ExperimentSpec("c", spec, expectation="ordering", other=spec.replace(object_polarity="dark")))
    assert r.passed and r.peak_frequency > r.other_peak


def test_recede_brief_onset():
    p = P0.replace(T_sf=15)
    r = run_experiment(ExperimentSpec("r", default_spec("panoramic_recede", object_polarity="light"), p, expectation="brief_onset_only"))
    assert r.passed and (r.last_alert is None or r.last_alert < 0.25 * r.n_frames)


def test_failing_expectation_reported():
    # a loom is not silent
    r = run_experiment(ExperimentSpec("x", default_spec("looming_in_grating", object_polarity="light"), expectation="silent"))
    assert r.verdict == "fail" and r.total_spikes > 0


def test_render_error_becomes_error_row():
    bad = ExperimentSpec("bad", default_spec("panoramic_translate", duration=9.0), expectation="no_alert")
    good = ExperimentSpec("good", _small("grating"), expectation="silent")
    results = run_suite([bad, good])
    assert [r.verdict for r in results] == ["error", "pass"]
    assert "leaves the view" in results[0].detail


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("o", _small("grating"), expectation="ordering")
    with pytest.raises(ValueError):
        ExperimentSpec("o", _small("grating"), expectation="loud")


SUITE = """
# two quick experiments
[flat]
expectation = silent
max_potential = 0.7
stimulus.kind = grating
stimulus.width = 50
stimulus.height = 20
stimulus.duration = 1

[pair]
expectation = ordering
stimulus.kind = looming_in_grating
stimulus.object_polarity = light
other.object_polarity = dark
params.T_sf = 30
"""


def test_parse_suite():
    flat, pair = parse_suite(SUITE)
    assert flat.name == "flat" and flat.max_potential == 0.7 and flat.stimulus.width == 50
    assert pair.other.object_polarity == "dark" and pair.stimulus.object_polarity == "light"
    assert pair.other.focal_px == pair.stimulus.focal_px


@pytest.mark.parametrize(
    "text, match",
    [
        ("expectation = silent\n", "outside"),
        ("[a]\nexpectation = silent\n[a]\nexpectation = silent\n", "duplicate"),
        ("[a]\nstimulus.colour = red\n", "colour"),
        ("[a]\nparams.tau = 3\n", "tau"),
        ("[a]\nfoo = 1\n", "foo"),
        ("[a]\nexpectation = ordering\n", "second stimulus"),
    ],
)
def test_parse_suite_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_suite(text)


def test_bundled_suite_covers_acceptance_grid():
    specs = load_suite("acceptance")
    names = [s.name for s in specs]
    assert sum(n.startswith("grating_") for n in names) == 9
    assert sum(n.startswith("loom_") for n in names) == 6
    assert all(s.params.T_sf == 15 for s in specs if s.name.startswith("pano_"))


def test_report_csv_deterministic(tmp_path):
    specs = parse_suite(SUITE)[:1]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_report(run_suite(specs), a)
    write_report(run_suite(specs), b)
    assert a.read_bytes() == b.read_bytes()
    row = next(csv.DictReader(open(a)))
    assert row["verdict"] == "pass" and row["first_alert"] == ""

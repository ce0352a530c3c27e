"""Experiment specs, pass/fail predicates and suite reports.

A suite file is a list of ``[name]`` sections, each holding ``key = value``
lines::

    [light_loom_sf60]
    expectation = alert_before_collision
    stimulus.kind = looming_in_grating
    stimulus.object_polarity = light
    params.T_sf = 30

``stimulus.*`` keys go to the StimulusSpec (kind-specific defaults apply),
``params.*`` to ModelParams, ``other.*`` to the second stimulus of an
``ordering`` experiment (it starts as a copy of ``stimulus``). Remaining
keys are the tolerance fields of :class:`ExperimentSpec`.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ..ingest import ConfigError, params_from_mapping, parse_kv
from ..model import FrameReport, run_sequence
from ..params import ModelParams
from ..stimuli import StimulusSpec, render, spec_from_mapping
from ..summary import longest_alert_run, summarize

EXPECTATIONS = ("silent", "no_alert", "alert_before_collision", "alert_sustained", "brief_onset_only", "ordering")

SUITE_DIR = Path(__file__).with_name("suites")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    stimulus: StimulusSpec
    params: ModelParams = field(default_factory=ModelParams)
    expectation: str = "silent"
    other: Optional[StimulusSpec] = None  # ordering: stimulus must peak above other
    max_potential: Optional[float] = None  # silent: K stays strictly below this
    min_run: int = 10  # alert_sustained
    tail_fraction: float = 0.2  # alert_sustained: run must lie in this final share
    onset_fraction: float = 0.25  # brief_onset_only: alerts confined to this first share

    def __post_init__(self):
        if self.expectation not in EXPECTATIONS:
            raise ValueError(f"{self.name}: unknown expectation {self.expectation!r}")
        if self.expectation == "ordering" and self.other is None:
            raise ValueError(f"{self.name}: ordering needs a second stimulus")
        if not 0 < self.tail_fraction <= 1 or not 0 < self.onset_fraction <= 1:
            raise ValueError(f"{self.name}: fractions must be in (0, 1]")
        if self.min_run < 1:
            raise ValueError(f"{self.name}: min_run must be >= 1")


@dataclass
class ExperimentResult:
    name: str
    expectation: str
    verdict: str  # pass | fail | error
    kind: str = ""
    n_frames: int = 0
    total_spikes: int = 0
    peak_frequency: float = 0.0
    first_alert: Optional[int] = None
    last_alert: Optional[int] = None
    alert_frames: int = 0
    collision_frame: Optional[int] = None
    max_potential: float = 0.5
    tail_run: Optional[int] = None
    other_peak: Optional[float] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


REPORT_COLUMNS = [f.name for f in dataclasses.fields(ExperimentResult)]


def _measure(spec: StimulusSpec, params: ModelParams):
    stim = render(spec)
    p = params.with_fps(spec.fps)
    reports = run_sequence(stim.frames, p)
    return stim, reports, p


def _fill(result: ExperimentResult, stim, reports: Sequence[FrameReport], p: ModelParams) -> None:
    s = summarize(reports, p.tau_i, stim.collision_frame)
    alerts = [i for i, r in enumerate(reports) if r.collision]
    result.kind = stim.metadata["kind"]
    result.n_frames = s.total_frames
    result.total_spikes = s.total_spikes
    result.peak_frequency = s.peak_spike_frequency
    result.first_alert = s.first_alert_frame
    result.last_alert = alerts[-1] if alerts else None
    result.alert_frames = s.alert_frames
    result.collision_frame = stim.collision_frame
    result.max_potential = max((r.K_potential for r in reports), default=0.5)


def evaluate(spec: ExperimentSpec) -> ExperimentResult:
    result = ExperimentResult(spec.name, spec.expectation, "fail")
    stim, reports, p = _measure(spec.stimulus, spec.params)
    _fill(result, stim, reports, p)
    n = result.n_frames
    e = spec.expectation

    if e == "silent":
        ok = result.total_spikes == 0
        result.detail = f"{result.total_spikes} spikes"
        if spec.max_potential is not None:
            ok = ok and result.max_potential < spec.max_potential
            result.detail += f", max K {result.max_potential:.6f} (limit {spec.max_potential})"
    elif e == "no_alert":
        ok = result.alert_frames == 0
        result.detail = f"peak {result.peak_frequency:.6g} spikes/s vs threshold {p.T_sf}"
    elif e == "alert_before_collision":
        truth = result.collision_frame
        ok = truth is not None and result.first_alert is not None and result.first_alert < truth
        result.detail = f"first alert {result.first_alert}, collision {truth}"
    elif e == "alert_sustained":
        start = int(math.ceil((1.0 - spec.tail_fraction) * n))
        result.tail_run = longest_alert_run(reports, start)
        ok = result.tail_run >= spec.min_run
        result.detail = f"longest run from frame {start}: {result.tail_run} (need {spec.min_run})"
    elif e == "brief_onset_only":
        limit = spec.onset_fraction * n
        ok = result.last_alert is None or result.last_alert < limit
        result.detail = f"last alert {result.last_alert}, limit < {limit:g}"
    else:  # ordering
        _, other_reports, _ = _measure(spec.other, spec.params)
        result.other_peak = max((r.spike_frequency for r in other_reports), default=0.0)
        ok = result.peak_frequency > result.other_peak
        result.detail = f"peak {result.peak_frequency:.6g} vs {result.other_peak:.6g}"
    result.verdict = "pass" if ok else "fail"
    return result


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Evaluate one experiment; failures to render or run become ``error`` rows."""
    try:
        return evaluate(spec)
    except Exception as exc:  # suite keeps going
        detail = f"{type(exc).__name__}: {exc}"
        return ExperimentResult(spec.name, spec.expectation, "error", kind=spec.stimulus.kind, detail=detail)


def run_suite(specs: Sequence[ExperimentSpec], jobs: int = 1) -> List[ExperimentResult]:
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_experiment, specs))
    return [run_experiment(s) for s in specs]


# -- suite files ---------------------------------------------------------------

_SECTION = re.compile(r"^\s*\[([^\]]+)\]\s*(#.*)?$")
_TOLERANCES = {"max_potential": float, "min_run": int, "tail_fraction": float, "onset_fraction": float}


def parse_suite(text: str, source: str = "<suite>") -> List[ExperimentSpec]:
    sections: List[tuple] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION.match(line)
        if m:
            sections.append((m.group(1).strip(), lineno, []))
        elif line.split("#", 1)[0].strip():
            if not sections:
                raise ConfigError(f"{source}:{lineno}: key outside of a [section]")
            sections[-1][2].append(line)
        elif sections:
            sections[-1][2].append("")
    names = [s[0] for s in sections]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ConfigError(f"{source}: duplicate experiment names {sorted(dupes)}")
    return [_section_spec(name, parse_kv("\n".join(body), f"{source}[{name}]"), f"{source}:{lineno}") for name, lineno, body in sections]


def _section_spec(name: str, kv: Dict[str, str], where: str) -> ExperimentSpec:
    stim: Dict[str, str] = {}
    other: Dict[str, str] = {}
    params: Dict[str, str] = {}
    extra: Dict[str, object] = {}
    for key, value in kv.items():
        prefix, _, rest = key.partition(".")
        if rest and prefix == "stimulus":
            stim[rest] = value
        elif rest and prefix == "other":
            other[rest] = value
        elif rest and prefix == "params":
            params[rest] = value
        elif key == "expectation":
            extra[key] = value
        elif key in _TOLERANCES:
            try:
                extra[key] = _TOLERANCES[key](value)
            except ValueError:
                raise ConfigError(f"{where}: {key}: cannot parse {value!r}") from None
        else:
            raise ConfigError(f"{where}: unknown key {key!r} in [{name}]")
    try:
        spec = spec_from_mapping(stim)
        other_spec = spec_from_mapping({**stim, **other}) if other else None
        return ExperimentSpec(name=name, stimulus=spec, params=params_from_mapping(params), other=other_spec, **extra)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: [{name}]: {exc}") from None


def load_suite(path) -> List[ExperimentSpec]:
    path = Path(path)
    if not path.exists() and (SUITE_DIR / f"{path}.txt").exists():
        path = SUITE_DIR / f"{path}.txt"
    return parse_suite(path.read_text(encoding="utf-8"), str(path))


def write_report(results: Sequence[ExperimentResult], destination) -> None:
    with open(destination, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in results:
            row = []
            for col in REPORT_COLUMNS:
                v = getattr(r, col)
                row.append("" if v is None else format(v, ".9g") if isinstance(v, float) else v)
            w.writerow(row)

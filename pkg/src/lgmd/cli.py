"""``lgmd`` command line: synth, run, sweep, suite.

Exit codes: 0 no alert, 2 an alert fired (run only), 1 any error,
including bad flags.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import ingest
from .ingest import ConfigError, FrameLoadError, TraceError
from .model import LGMD, DimensionError, FrameError
from .params import ParamError
from .stimuli import KINDS, PANORAMIC_KINDS, StimulusError, default_spec, render
from .summary import RunSummary, summarize

EXIT_OK, EXIT_ERROR, EXIT_ALERT = 0, 1, 2
CONFIG_ENV = "LGMD_CONFIG"

# alert level when neither flag nor config sets T_sf
PANORAMIC_T_SF = 15.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 means "alert" here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return v

    return conv


def _list_of(conv):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if not items:
            raise argparse.ArgumentTypeError("list is empty")
        return [conv(t) for t in items]

    return parse


def _polarity(text):
    if text not in ("dark", "light"):
        raise argparse.ArgumentTypeError(f"polarity must be dark or light, got {text!r}")
    return text


def _stimulus_flags(p: argparse.ArgumentParser, grid: bool = False) -> None:
    p.add_argument("--kind", choices=KINDS, default="grating")
    if not grid:
        p.add_argument("--sf", type=_positive(float), help="grating spatial frequency, cycles/px")
        p.add_argument("--tf", type=_positive(float), help="grating temporal frequency, Hz")
        p.add_argument("--sf-background", type=_positive(float), help="background grating SF behind a loom, cycles/m")
        p.add_argument("--polarity", type=_polarity, help="dark or light object")
        p.add_argument("--seed", type=int, help="panorama texture seed")
    p.add_argument("--fps", type=_positive(float), default=30.0)
    p.add_argument("--duration", type=_positive(float), default=4.0, help="seconds")
    p.add_argument("--speed", type=_positive(float), help="object speed, m/s")
    p.add_argument("--width", type=_positive(int))
    p.add_argument("--height", type=_positive(int))
    p.add_argument("--shift", type=float, help="panorama shift, px/frame")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lgmd", description="LGMD collision detector with feed-forward inhibition mediation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="render a stimulus to a PGM sequence")
    _stimulus_flags(s)
    s.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("run", help="run the model over a frame directory or PNM stream")
    r.add_argument("input")
    r.add_argument("--config", default=None, help=f"key = value parameter file (default ${CONFIG_ENV})")
    r.add_argument("--fps", type=_positive(float), help="frame rate; overrides the metadata sidecar")
    r.add_argument("--t-sf", type=float, help="alert threshold, spikes/s")
    r.add_argument("--out-csv", help="trace CSV destination")

    w = sub.add_parser("sweep", help="render and run every cell of a stimulus grid")
    _stimulus_flags(w, grid=True)
    w.add_argument("--sf-list", type=_list_of(_positive(float)), help="SF axis (cycles/px for gratings, cycles/m behind looms)")
    w.add_argument("--tf-list", type=_list_of(_positive(float)), help="TF axis, Hz")
    w.add_argument("--polarity-list", type=_list_of(_polarity))
    w.add_argument("--seed", type=int)
    w.add_argument("--config", default=None)
    w.add_argument("--t-sf", type=float)
    w.add_argument("--jobs", type=_positive(int), default=1)
    w.add_argument("--out", required=True, help="output directory for sweep.csv")

    u = sub.add_parser("suite", help="run an experiment suite and write a CSV report")
    u.add_argument("suite", nargs="?", default="acceptance", help="suite file or bundled suite name")
    u.add_argument("--jobs", type=_positive(int), default=1)
    u.add_argument("--out-csv", default="suite_report.csv")
    return parser


# -- helpers -------------------------------------------------------------------


def _spec_from_args(args, **axes):
    values = dict(
        fps=args.fps,
        duration=args.duration,
        width=args.width,
        height=args.height,
        shift_speed=args.shift,
        seed=args.seed,
        object_speed=args.speed,
    )
    if not axes:
        sf = args.sf_background if args.kind == "looming_in_grating" else args.sf
        values.update(spatial_frequency=sf, temporal_frequency=args.tf, object_polarity=args.polarity)
    values.update(axes)
    spec = default_spec(args.kind, **values)
    spec.validate()
    return spec


def _params(config: Optional[str], t_sf: Optional[float], kind: Optional[str]):
    config = config if config is not None else os.environ.get(CONFIG_ENV) or None
    params = ingest.load_params(config)
    configured = config is not None and "T_sf" in ingest.read_metadata(config)
    if t_sf is not None:
        params = params.replace(T_sf=t_sf)
    elif not configured and kind in PANORAMIC_KINDS:
        params = params.replace(T_sf=PANORAMIC_T_SF)
    return params


def run_frames(frames, params, trace_path=None, collision_truth=None) -> RunSummary:
    model = LGMD(params)
    reports = []
    writer = ingest.TraceWriter(trace_path) if trace_path else None
    try:
        for i, frame in enumerate(frames):
            try:
                rep = model.step(frame)
            except (DimensionError, FrameError) as exc:
                raise FrameLoadError(f"frame {i}: {exc}") from None
            reports.append(rep)
            if writer:
                writer.write(ingest.TraceRecord(i, i * params.tau_i, rep))
    finally:
        if writer:
            writer.close()
    return summarize(reports, params.tau_i, collision_truth)


# -- commands ------------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = _spec_from_args(args)
    stim = render(spec)
    meta = dict(stim.metadata)
    ordered = {k: meta.pop(k) for k in ("kind", "fps", "collision_frame")}
    ordered.update(meta)
    n = ingest.write_frames(args.out, stim.frames, ordered)
    print(n)
    return EXIT_OK


def cmd_run(args) -> int:
    source = ingest.open_source(args.input, fps=args.fps)
    if source.fps is None:
        raise UsageError("frame rate unknown: pass --fps (no fps in the metadata sidecar)")
    params = _params(args.config, args.t_sf, source.metadata.get("kind")).with_fps(source.fps)
    truth = ingest.metadata_int(source.metadata, "collision_frame")
    summary = run_frames(ingest.iter_frames(source), params, args.out_csv, truth)
    print(summary.format())
    return EXIT_ALERT if summary.alert_frames else EXIT_OK


def _sweep_axes(args):
    if args.kind == "grating":
        axes = dict(spatial_frequency=args.sf_list, temporal_frequency=args.tf_list)
    elif args.kind == "looming_in_grating":
        axes = dict(object_polarity=args.polarity_list, spatial_frequency=args.sf_list, temporal_frequency=args.tf_list)
    else:
        axes = dict(object_polarity=args.polarity_list)
    given = {k: v for k, v in axes.items() if v is not None}
    if not given:
        raise UsageError(f"sweep --kind {args.kind}: give at least one of --sf-list/--tf-list/--polarity-list")
    return given


SWEEP_AXIS_COLUMNS = ("kind", "spatial_frequency", "temporal_frequency", "object_polarity")


def _sweep_cell(job):
    args, cell = job
    row = {"kind": args.kind, **cell}
    try:
        spec = _spec_from_args(args, **cell)
        row.update({k: getattr(spec, k) for k in SWEEP_AXIS_COLUMNS})
        stim = render(spec)
        params = _params(args.config, args.t_sf, args.kind).with_fps(spec.fps)
        summary = run_frames(stim.frames, params, None, stim.collision_frame)
        row.update(summary.as_dict())
        row["error"] = ""
    except Exception as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args) -> int:
    axes = _sweep_axes(args)
    names = list(axes)
    cells = [dict(zip(names, combo)) for combo in itertools.product(*axes.values())]
    jobs = [(args, c) for c in cells]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    columns = list(SWEEP_AXIS_COLUMNS) + RunSummary.field_names() + ["error"]
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} cells, {failed} errored -> {out / 'sweep.csv'}")
    return EXIT_ERROR if failed else EXIT_OK


def cmd_suite(args) -> int:
    from .harness import load_suite, run_suite, write_report

    results = run_suite(load_suite(args.suite), jobs=args.jobs)
    write_report(results, args.out_csv)
    for r in results:
        print(f"{r.verdict.upper():5s} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_ERROR


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "sweep": cmd_sweep, "suite": cmd_suite}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, ParamError, StimulusError, FrameLoadError, TraceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

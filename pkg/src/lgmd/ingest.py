"""Frames, configs and traces on disk.

Frame sequences live in a directory as binary PGM files named
``frame_%06d.pgm``; a single file holding several concatenated PNM images
(what ``ffmpeg -i clip.mp4 -f image2pipe -vcodec pgm -`` emits) is accepted
as a raw stream. Colour PPM input is reduced to luminance with the Rec. 601
weights. To get PGM frames out of any video::

    ffmpeg -i clip.mp4 -vf format=gray frames/frame_%06d.pgm
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .model import FrameReport
from .params import INT_FIELDS, ModelParams, ParamError

PathLike = Union[str, os.PathLike]

FRAME_PATTERN = "frame_%06d.pgm"
METADATA_NAME = "metadata.txt"
FRAME_SUFFIXES = (".pgm", ".ppm", ".pnm", ".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

TRACE_HEADER = (
    "frame",
    "time_ms",
    "F",
    "F_hat",
    "w",
    "tau_g_hat",
    "k",
    "K",
    "K_adapted",
    "spikes",
    "spike_freq",
    "collision",
)
# CSV column -> FrameReport attribute
_TRACE_FIELDS = (
    ("F", "f_raw"),
    ("F_hat", "f_hat"),
    ("w", "w_bias"),
    ("tau_g_hat", "tau_g_hat"),
    ("k", "k_pool"),
    ("K", "K_potential"),
    ("K_adapted", "K_adapted"),
)


class FrameLoadError(ValueError):
    """A frame file is missing, undecodable or has the wrong dimensions."""


class ConfigError(ValueError):
    """Malformed ``key = value`` text or an unknown key."""


class TraceError(ValueError):
    pass


# -- PNM codec ---------------------------------------------------------------


def _header(data: bytes, pos: int, count: int) -> Tuple[List[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens: List[bytes] = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise FrameLoadError("truncated PNM header")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def decode_pnm(data: bytes, pos: int = 0) -> Tuple[np.ndarray, int]:
    """Decode one P2/P3/P5/P6 image starting at ``pos``.

    Returns a float64 luminance grid and the offset just past the image.
    8-bit maxval-255 input comes back bit-exact; other maxvals are rescaled
    to [0, 255].
    """
    tokens, pos = _header(data, pos, 1)
    magic = tokens[0]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise FrameLoadError(f"unsupported image magic {magic[:8]!r}")
    (w, h, maxval), pos = _header(data, pos, 3)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FrameLoadError(f"bad PNM header: {exc}") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise FrameLoadError(f"bad PNM header: {width}x{height} maxval {maxval}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels

    if magic in (b"P5", b"P6"):
        pos += 1  # single whitespace byte after maxval
        depth = 1 if maxval < 256 else 2
        end = pos + count * depth
        if end > len(data):
            raise FrameLoadError(f"truncated pixel data: need {count * depth} bytes, have {len(data) - pos}")
        dtype = np.uint8 if depth == 1 else np.dtype(">u2")
        values = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(np.float64)
        pos = end
    else:
        tokens, pos = _header(data, pos, count)
        values = np.array([int(t) for t in tokens], dtype=np.float64)

    if values.max(initial=0) > maxval:
        raise FrameLoadError(f"sample exceeds maxval {maxval}")
    if maxval != 255:
        values = values * (255.0 / maxval)
    if channels == 3:
        rgb = values.reshape(height, width, 3)
        r, g, b = LUMA_WEIGHTS
        return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2], pos
    return values.reshape(height, width), pos


def encode_pgm(frame) -> bytes:
    """Binary 8-bit PGM. Values are rounded and clipped to [0, 255]."""
    grid = np.asarray(frame)
    if grid.ndim != 2:
        raise ValueError(f"PGM frames are 2-D, got shape {grid.shape}")
    if grid.dtype != np.uint8:
        grid = np.clip(np.rint(grid), 0, 255).astype(np.uint8)
    h, w = grid.shape
    return b"P5\n%d %d\n255\n" % (w, h) + grid.tobytes()


def read_image(path: PathLike) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if data[:1] == b"P":
        frame, _ = decode_pnm(data)
        return frame
    return _read_with_pillow(path)


def _read_with_pillow(path: Path) -> np.ndarray:
    # optional: PNG/JPEG frames when Pillow is around
    try:
        from PIL import Image
    except ImportError:
        raise FrameLoadError(f"{path.name}: not a PNM file and Pillow is not installed") from None
    with Image.open(path) as img:
        if img.mode in ("L", "I;16", "I"):
            arr = np.asarray(img, dtype=np.float64)
            if img.mode != "L":
                arr = arr * (255.0 / 65535.0)
            return arr
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    r, g, b = LUMA_WEIGHTS
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


def write_pgm(path: PathLike, frame) -> None:
    Path(path).write_bytes(encode_pgm(frame))


# -- frame sources -----------------------------------------------------------


@dataclass
class FrameSource:
    path: Path
    fps: Optional[float] = None
    frame_count: Optional[int] = None  # None for a stream of unknown length
    dimensions: Optional[Tuple[int, int]] = None  # (width, height)
    metadata: Dict[str, str] = dataclasses.field(default_factory=dict)

    @property
    def is_directory(self) -> bool:
        return self.path.is_dir()

    @property
    def tau_i(self) -> float:
        if self.fps is None:
            raise FrameLoadError("frame rate unknown: pass --fps or add fps to the metadata sidecar")
        return 1000.0 / self.fps


def frame_files(directory: PathLike) -> List[Path]:
    directory = Path(directory)
    names = sorted(p.name for p in directory.iterdir() if p.is_file() and p.suffix.lower() in FRAME_SUFFIXES)
    return [directory / n for n in names]


def metadata_path(path: PathLike) -> Path:
    """Sidecar location: ``metadata.txt`` inside a directory, ``<file>.meta`` for a stream."""
    path = Path(path)
    if path.is_dir():
        return path / METADATA_NAME
    return path.with_name(path.name + ".meta")


def open_source(path: PathLike, fps: Optional[float] = None) -> FrameSource:
    """Describe a frame directory or raw-stream file.

    ``fps`` overrides the sidecar's value. Dimensions come from the first frame.
    """
    path = Path(path)
    if not path.exists():
        raise FrameLoadError(f"{path}: no such file or directory")
    meta_path = metadata_path(path)
    metadata = read_metadata(meta_path) if meta_path.exists() else {}
    if fps is None and "fps" in metadata:
        fps = float(metadata["fps"])
    if fps is not None and not (math.isfinite(fps) and fps > 0):
        raise FrameLoadError(f"fps must be > 0, got {fps!r}")

    count = None
    dims = None
    if path.is_dir():
        files = frame_files(path)
        count = len(files)
        if files:
            first = _load_one(files[0], 0)
            dims = (first.shape[1], first.shape[0])
    return FrameSource(path=path, fps=fps, frame_count=count, dimensions=dims, metadata=metadata)


def _load_one(path: Path, index: int) -> np.ndarray:
    try:
        return read_image(path)
    except FrameLoadError as exc:
        raise FrameLoadError(f"frame {index} ({path.name}): {exc}") from None
    except Exception as exc:  # Pillow raises various things
        raise FrameLoadError(f"frame {index} ({path.name}): cannot decode: {exc}") from None


def iter_frames(source: Union[FrameSource, PathLike]) -> Iterator[np.ndarray]:
    """Yield float64 luminance grids in filename order (or stream order)."""
    if not isinstance(source, FrameSource):
        source = FrameSource(path=Path(source))
    shape = None
    if source.path.is_dir():
        items = ((i, p.name, lambda p=p, i=i: _load_one(p, i)) for i, p in enumerate(frame_files(source.path)))
    else:
        items = _stream_items(source.path)
    for index, name, load in items:
        frame = load()
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise FrameLoadError(
                f"frame {index} ({name}): dimensions {frame.shape[1]}x{frame.shape[0]} "
                f"differ from {shape[1]}x{shape[0]}"
            )
        yield frame


def _stream_items(path: Path):
    data = path.read_bytes()
    pos, index = 0, 0
    while True:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            return
        start = pos
        try:
            frame, pos = decode_pnm(data, pos)
        except FrameLoadError as exc:
            raise FrameLoadError(f"frame {index} ({path.name} @ byte {start}): {exc}") from None
        yield index, f"{path.name}#{index}", (lambda f=frame: f)
        index += 1


def load_frames(source: Union[FrameSource, PathLike]) -> List[np.ndarray]:
    return list(iter_frames(source))


def write_frames(directory: PathLike, frames: Iterable, metadata: Optional[Dict[str, object]] = None) -> int:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = 0
    for n, frame in enumerate(frames, start=1):
        write_pgm(directory / (FRAME_PATTERN % (n - 1)), frame)
    if metadata is not None:
        write_metadata(directory / METADATA_NAME, metadata)
    return n


# -- key = value text ----------------------------------------------------------


def parse_kv(text: str, source: str = "<config>") -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_kv(items: Dict[str, object]) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in items.items())


def read_metadata(path: PathLike) -> Dict[str, str]:
    path = Path(path)
    return parse_kv(path.read_text(encoding="utf-8"), str(path))


def write_metadata(path: PathLike, metadata: Dict[str, object]) -> None:
    Path(path).write_text(format_kv(metadata), encoding="utf-8")


def metadata_int(metadata: Dict[str, str], key: str) -> Optional[int]:
    value = metadata.get(key)
    if value is None or value.lower() in ("none", ""):
        return None
    return int(value)


# -- model params ----------------------------------------------------------------


def _parse_number(key: str, text: str):
    try:
        if key in INT_FIELDS:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a {'integer' if key in INT_FIELDS else 'number'}, got {text!r}") from None


def params_from_mapping(values: Dict[str, str], base: Optional[ModelParams] = None) -> ModelParams:
    known = set(ModelParams.field_names())
    changes: Dict[str, object] = {}
    for key, text in values.items():
        if key not in known:
            raise ConfigError(f"unknown parameter {key!r}")
        if key == "W":
            parts = [p for p in text.replace(",", " ").split() if p]
            if len(parts) != 9:
                raise ConfigError(f"W: expected 9 numbers (row-major 3x3), got {len(parts)}")
            nums = [_parse_number("W", p) for p in parts]
            changes["W"] = tuple(tuple(nums[r * 3 : r * 3 + 3]) for r in range(3))
        else:
            changes[key] = _parse_number(key, text)
    return dataclasses.replace(base or ModelParams(), **changes)


def load_params(config: Optional[PathLike]) -> ModelParams:
    """ModelParams from a ``key = value`` file; missing keys keep the defaults.

    ``None`` yields the defaults. Raises ConfigError for syntax problems and
    unknown keys, ParamError for out-of-range values.
    """
    if config is None:
        return ModelParams()
    path = Path(config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        return params_from_mapping(parse_kv(text, str(path)))
    except ParamError as exc:
        raise ParamError(f"{path}: {exc}") from None


def dump_params(params: ModelParams) -> str:
    lines = []
    for name in ModelParams.field_names():
        value = getattr(params, name)
        if name == "W":
            value = ", ".join(repr(v) for row in value for v in row)
        lines.append(f"{name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


# -- traces --------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    frame_index: int
    timestamp_ms: float
    report: FrameReport


def trace_records(reports: Sequence[FrameReport], tau_i: float, start: int = 0) -> List[TraceRecord]:
    return [TraceRecord(start + i, (start + i) * tau_i, r) for i, r in enumerate(reports)]


def _g9(x: float) -> str:
    return format(float(x), ".9g")


def trace_row(rec: TraceRecord) -> List[str]:
    r = rec.report
    row = [str(rec.frame_index), _g9(rec.timestamp_ms)]
    row += [_g9(getattr(r, attr)) for _, attr in _TRACE_FIELDS]
    row += [str(int(r.spikes)), _g9(r.spike_frequency), "1" if r.collision else "0"]
    return row


class TraceWriter:
    """Streaming CSV writer; usable as a context manager."""

    def __init__(self, destination: PathLike):
        self.path = Path(destination)
        try:
            self._fh = open(self.path, "w", newline="", encoding="utf-8")
        except OSError as exc:
            raise TraceError(f"cannot write trace {self.path}: {exc.strerror or exc}") from None
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(TRACE_HEADER)

    def write(self, rec: TraceRecord) -> None:
        self._csv.writerow(trace_row(rec))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trace(records: Iterable[TraceRecord], destination: PathLike) -> None:
    with TraceWriter(destination) as w:
        for rec in records:
            w.write(rec)


def read_trace(path: PathLike) -> List[TraceRecord]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise TraceError(f"{path}: unexpected trace header {header!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_HEADER):
                raise TraceError(f"{path}:{lineno}: expected {len(TRACE_HEADER)} columns, got {len(row)}")
            cols = dict(zip(TRACE_HEADER, row))
            report = FrameReport(
                **{attr: float(cols[col]) for col, attr in _TRACE_FIELDS},
                spikes=int(cols["spikes"]),
                spike_frequency=float(cols["spike_freq"]),
                collision=cols["collision"] == "1",
            )
            out.append(TraceRecord(int(cols["frame"]), float(cols["time_ms"]), report))
    return out

"""Synthetic grayscale stimulus sequences.

Every renderer is a pure function of a :class:`StimulusSpec`; frames come
back as a ``(T, H, W)`` uint8 array together with a metadata dict that is
written next to the PGM sequence as a ``key = value`` sidecar.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

KINDS = (
    "grating",
    "looming_in_grating",
    "panoramic_loom",
    "panoramic_recede",
    "panoramic_translate",
    "panoramic_shift_only",
)
LOOMING_KINDS = ("looming_in_grating", "panoramic_loom", "panoramic_recede")
PANORAMIC_KINDS = tuple(k for k in KINDS if k.startswith("panoramic"))

GRATING_SIZE = (380, 334)
PANORAMIC_SIZE = (540, 270)

# Per-kind defaults used by default_spec(). Looming-in-grating backgrounds are
# a dim, low-contrast grating so a light square has more contrast than a dark
# one; the panorama is smooth enough that its shift alone stays sub-threshold.
KIND_DEFAULTS: Dict[str, Dict[str, object]] = {
    "grating": dict(width=380, height=334, spatial_frequency=0.05, temporal_frequency=2.0),
    "looming_in_grating": dict(
        width=380,
        height=334,
        spatial_frequency=60.0,
        temporal_frequency=1.0,
        grating_mean=64.0,
        grating_amplitude=32.0,
        focal_px=120.0,
    ),
}
for _kind in ("panoramic_loom", "panoramic_recede", "panoramic_translate", "panoramic_shift_only"):
    KIND_DEFAULTS[_kind] = dict(width=540, height=270, focal_px=160.0, translate_size=24, shift_speed=2.0)


class StimulusError(ValueError):
    pass


@dataclass(frozen=True)
class StimulusSpec:
    """Parametric description of one stimulus sequence.

    ``spatial_frequency`` is in cycles/pixel for plain gratings and in
    cycles/metre (scaled by ``pixels_per_meter``) for grating backgrounds
    behind a looming square. ``object_speed`` is the approach speed for
    looming kinds and, scaled the same way, the horizontal speed of the
    translating square.
    """

    kind: str = "grating"
    width: int = GRATING_SIZE[0]
    height: int = GRATING_SIZE[1]
    fps: float = 30.0
    duration: float = 4.0
    spatial_frequency: float = 0.05
    temporal_frequency: float = 1.0
    object_polarity: str = "dark"
    object_speed: float = 0.108
    background_image: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    shift_speed: float = 2.0
    seed: int = 0
    pixels_per_meter: float = 1000.0
    # perspective: half-size = focal_px * object_size / 2 / distance
    object_size: float = 0.04
    focal_px: float = 40.0
    start_distance: Optional[float] = None
    translate_size: int = 40
    texture_contrast: float = 0.25
    texture_exponent: float = 1.5
    grating_mean: float = 127.5
    grating_amplitude: float = 127.5

    @property
    def n_frames(self) -> int:
        return int(round(self.fps * self.duration))

    def replace(self, **changes) -> "StimulusSpec":
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise StimulusError(f"unknown stimulus kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.width <= 0 or self.height <= 0:
            raise StimulusError("width and height must be positive")
        if self.fps <= 0 or self.duration <= 0:
            raise StimulusError("fps and duration must be positive")
        if self.n_frames < 1:
            raise StimulusError("spec renders no frames")
        if self.grating_amplitude < 0 or self.grating_mean - self.grating_amplitude < 0 or self.grating_mean + self.grating_amplitude > 255:
            raise StimulusError("grating mean +/- amplitude must stay within [0, 255]")
        if self.object_polarity not in ("dark", "light"):
            raise StimulusError(f"polarity must be 'dark' or 'light', got {self.object_polarity!r}")
        if self.kind in ("grating", "looming_in_grating"):
            if self.spatial_frequency <= 0:
                raise StimulusError("spatial frequency must be positive")
            if self.temporal_frequency <= 0:
                raise StimulusError("temporal frequency must be positive")
        if self.kind in LOOMING_KINDS or self.kind == "panoramic_translate":
            if self.object_speed <= 0:
                raise StimulusError("object speed must be positive")
        if self.kind in LOOMING_KINDS and self.start_distance is not None and self.start_distance <= 0:
            raise StimulusError("start distance must be positive")

    def metadata(self) -> Dict[str, object]:
        out: Dict[str, object] = {}
        for f in dataclasses.fields(self):
            if f.name == "background_image":
                continue
            out[f.name] = getattr(self, f.name)
        out["start_distance"] = self.approach_start_distance()
        return out

    def approach_start_distance(self) -> float:
        """Default start distance puts the collision on the final frame."""
        if self.start_distance is not None:
            return self.start_distance
        return self.object_speed * (self.n_frames - 1) / self.fps


@dataclass
class Stimulus:
    frames: np.ndarray
    metadata: Dict[str, object]

    @property
    def collision_frame(self) -> Optional[int]:
        return self.metadata.get("collision_frame")

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)


def default_spec(kind: str, **overrides) -> "StimulusSpec":
    """StimulusSpec with the defaults tuned for ``kind``, then ``overrides``."""
    if kind not in KIND_DEFAULTS:
        raise StimulusError(f"unknown stimulus kind {kind!r}; expected one of {', '.join(KINDS)}")
    values = dict(KIND_DEFAULTS[kind])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return StimulusSpec(kind=kind, **values)


def _to_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)


def temporal_phase(tf: float, frame: int, fps: float) -> float:
    """Grating phase in cycles at ``frame``, reduced so whole periods repeat bit-exactly."""
    return math.fmod(tf * frame, fps) / fps


def grating_frame(
    width: int, height: int, sf: float, phase: float, mean: float = 127.5, amplitude: float = 127.5
) -> np.ndarray:
    """Horizontal sinusoid, ``sf`` in cycles/pixel, shifted by ``phase`` cycles."""
    x = np.arange(width, dtype=np.float64)
    row = mean + amplitude * np.sin(2.0 * np.pi * (sf * x - phase))
    return np.broadcast_to(row, (height, width))


def render_grating(spec: StimulusSpec) -> Stimulus:
    spec.validate()
    if spec.kind != "grating":
        raise StimulusError(f"render_grating needs kind 'grating', got {spec.kind!r}")
    frames = np.stack(
        [
            _to_u8(
                grating_frame(
                    spec.width,
                    spec.height,
                    spec.spatial_frequency,
                    temporal_phase(spec.temporal_frequency, i, spec.fps),
                    spec.grating_mean,
                    spec.grating_amplitude,
                )
            )
            for i in range(spec.n_frames)
        ]
    )
    meta = spec.metadata()
    meta["collision_frame"] = None
    return Stimulus(frames, meta)


def natural_texture(width: int, height: int, seed: int, contrast: float = 0.25, exponent: float = 1.5) -> np.ndarray:
    """1/f^exponent amplitude-spectrum noise, mean 127.5, std ``contrast * 255``, clipped to [0, 255]."""
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((height, width))
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.rfftfreq(width)[None, :]
    radius = np.hypot(fx, fy)
    radius[0, 0] = 1.0
    spectrum = np.fft.rfft2(white) / radius**exponent
    spectrum[0, 0] = 0.0
    tex = np.fft.irfft2(spectrum, s=(height, width))
    tex = tex / tex.std()
    return np.clip(127.5 + contrast * 255.0 * tex, 0.0, 255.0)


def panorama_for(spec: StimulusSpec) -> np.ndarray:
    """Background source wide enough for the whole shift."""
    needed = spec.width + int(math.ceil(abs(spec.shift_speed) * (spec.n_frames - 1)))
    if spec.background_image is None:
        return natural_texture(needed + 1, spec.height, spec.seed, spec.texture_contrast, spec.texture_exponent)
    image = np.asarray(spec.background_image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != spec.height:
        raise StimulusError(f"background must be a grayscale image {spec.height} rows high, got shape {image.shape}")
    if image.shape[1] <= needed:
        raise StimulusError(f"background is {image.shape[1]} px wide; needs more than {needed} px for this shift")
    return image


def _viewport(panorama: np.ndarray, width: int, offset: float) -> np.ndarray:
    cols = (np.arange(width) + int(round(offset))) % panorama.shape[1]
    return panorama[:, cols]


def _square_box(width: int, height: int, half: float, cx: float, cy: float) -> Tuple[int, int, int, int]:
    """Clipped pixel bounds (top, bottom, left, right) of a square, half-open."""
    if not math.isfinite(half):
        return 0, height, 0, width
    left = int(round(cx - half))
    right = int(round(cx + half))
    top = int(round(cy - half))
    bottom = int(round(cy + half))
    return max(0, top), min(height, bottom), max(0, left), min(width, right)


def looming_half_sizes(spec: StimulusSpec) -> Tuple[np.ndarray, Optional[int]]:
    """Perspective half-size in pixels per frame and the collision frame.

    The collision frame is the first frame where the square fills the whole
    view (or the object reaches the eye); the sequence stops there.
    """
    d0 = spec.approach_start_distance()
    half_m = spec.object_size / 2.0
    fill = max(spec.width, spec.height) / 2.0
    sizes = []
    collision = None
    for i in range(spec.n_frames):
        d = d0 - spec.object_speed * i / spec.fps
        h = math.inf if d <= 0 else spec.focal_px * half_m / d
        sizes.append(h)
        if h >= fill:
            collision = i
            break
    return np.asarray(sizes), collision


def _backgrounds(spec: StimulusSpec, n: int):
    if spec.kind == "looming_in_grating":
        sf = spec.spatial_frequency / spec.pixels_per_meter
        for i in range(n):
            phase = temporal_phase(spec.temporal_frequency, i, spec.fps)
            yield grating_frame(spec.width, spec.height, sf, phase, spec.grating_mean, spec.grating_amplitude)
    else:
        pano = panorama_for(spec)
        for i in range(n):
            yield _viewport(pano, spec.width, spec.shift_speed * i)


def render_looming_square(spec: StimulusSpec) -> Stimulus:
    spec.validate()
    if spec.kind not in LOOMING_KINDS:
        raise StimulusError(f"render_looming_square needs a looming kind, got {spec.kind!r}")
    sizes, collision = looming_half_sizes(spec)
    shade = 0.0 if spec.object_polarity == "dark" else 255.0
    cx, cy = spec.width / 2.0, spec.height / 2.0
    frames = []
    for h, bg in zip(sizes, _backgrounds(spec, len(sizes))):
        frame = np.array(bg, dtype=np.float64)
        top, bottom, left, right = _square_box(spec.width, spec.height, h, cx, cy)
        frame[top:bottom, left:right] = shade
        frames.append(_to_u8(frame))
    frames = np.stack(frames)

    meta = spec.metadata()
    meta["n_rendered"] = len(frames)
    if spec.kind == "panoramic_recede":
        # exact time reversal of the matching approach
        frames = frames[::-1].copy()
        meta["collision_frame"] = None
        meta["reversed_collision_frame"] = collision
    else:
        meta["collision_frame"] = collision
    if collision is not None:
        meta["collision_half_size"] = float(sizes[collision])
    return Stimulus(frames, meta)


def render_panoramic(spec: StimulusSpec) -> Stimulus:
    spec.validate()
    if spec.kind not in PANORAMIC_KINDS:
        raise StimulusError(f"render_panoramic needs a panoramic kind, got {spec.kind!r}")
    if spec.kind in ("panoramic_loom", "panoramic_recede"):
        return render_looming_square(spec)

    pano = panorama_for(spec)
    n = spec.n_frames
    shade = 0.0 if spec.object_polarity == "dark" else 255.0
    step = spec.object_speed * spec.pixels_per_meter / spec.fps
    side = spec.translate_size
    travel = int(round((n - 1) * step))
    if spec.kind == "panoramic_translate" and travel + side > spec.width:
        raise StimulusError(f"translating square leaves the view ({travel + side} > {spec.width} px)")
    top = (spec.height - side) // 2
    start = (spec.width - side - travel) // 2
    frames = []
    for i in range(n):
        frame = np.array(_viewport(pano, spec.width, spec.shift_speed * i))
        if spec.kind == "panoramic_translate":
            left = start + int(round(i * step))
            frame[top:top + side, left:left + side] = shade
        frames.append(_to_u8(frame))
    meta = spec.metadata()
    meta["collision_frame"] = None
    if spec.kind == "panoramic_translate":
        meta["translate_step_px"] = step
    return Stimulus(np.stack(frames), meta)


def render(spec: StimulusSpec) -> Stimulus:
    if spec.kind == "grating":
        return render_grating(spec)
    if spec.kind == "looming_in_grating":
        return render_looming_square(spec)
    return render_panoramic(spec)


def _spec_converters() -> Dict[str, object]:
    conv: Dict[str, object] = {}
    for f in dataclasses.fields(StimulusSpec):
        if f.name == "background_image":
            continue
        if f.name == "start_distance":
            conv[f.name] = lambda s: None if s.lower() == "none" else float(s)
        elif isinstance(f.default, bool) or isinstance(f.default, str):
            conv[f.name] = str
        elif isinstance(f.default, int):
            conv[f.name] = int
        else:
            conv[f.name] = float
    return conv


def spec_from_mapping(values: Dict[str, str]) -> StimulusSpec:
    """Build a spec from text values; ``kind`` selects the per-kind defaults."""
    conv = _spec_converters()
    typed: Dict[str, object] = {}
    for key, text in values.items():
        if key not in conv:
            raise StimulusError(f"unknown stimulus field {key!r}")
        try:
            typed[key] = conv[key](text)
        except ValueError:
            raise StimulusError(f"{key}: cannot parse {text!r}") from None
    kind = typed.pop("kind", "grating")
    spec = default_spec(kind, **typed)
    spec.validate()
    return spec

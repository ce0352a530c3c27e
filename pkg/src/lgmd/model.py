"""Per-frame LGMD pipeline with feed-forward inhibition mediation.

A frame is a 2-D float64 array of luminance in [0, 255], indexed
``[row, column]``. All layer operations are plain functions over numpy
arrays; :func:`process_frame` composes them and owns the state update.
:class:`LGMD` is a small convenience wrapper that binds params and state.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Iterable, Iterator, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .params import ModelParams


class DimensionError(ValueError):
    """Frame or grid shape does not match the model state."""


class FrameError(ValueError):
    """Luminance grid violates the frame invariants."""


def as_frame(luminance) -> np.ndarray:
    """Validate a luminance grid and return it as a float64 array."""
    frame = np.asarray(luminance, dtype=np.float64)
    if frame.ndim != 2 or frame.size == 0:
        raise FrameError(f"frame must be a non-empty 2-D grid, got shape {frame.shape}")
    if not np.all(np.isfinite(frame)):
        raise FrameError("frame contains non-finite luminance")
    if frame.min() < 0.0 or frame.max() > 255.0:
        raise FrameError("frame luminance outside [0, 255]")
    return frame


@dataclass
class ModelState:
    shape: Tuple[int, int]
    prev_luminance: Optional[np.ndarray] = None
    p_history: Deque[np.ndarray] = field(default_factory=deque)  # newest first
    ffi_hat: float = 0.0
    e_on_hat: np.ndarray = None
    e_off_hat: np.ndarray = None
    g_delayed: np.ndarray = None
    tau_g_current: float = 0.0
    tau2_current: float = 0.0
    sfa_prev_k: Optional[float] = None
    sfa_prev_adapted: Optional[float] = None
    spike_window: Deque[int] = field(default_factory=deque)
    frame_index: int = 0

    @classmethod
    def initial(cls, shape: Tuple[int, int], params: ModelParams) -> "ModelState":
        rows, cols = (int(shape[0]), int(shape[1]))
        if rows <= 0 or cols <= 0:
            raise DimensionError(f"frame dimensions must be positive, got {shape}")
        zeros = lambda: np.zeros((rows, cols))  # noqa: E731
        return cls(
            shape=(rows, cols),
            p_history=deque(maxlen=params.n_p),
            e_on_hat=zeros(),
            e_off_hat=zeros(),
            g_delayed=zeros(),
            tau_g_current=params.tau_g_base,
            tau2_current=params.tau2_max,
            spike_window=deque(maxlen=params.N_ts),
        )

    @property
    def n_cell(self) -> int:
        return self.shape[0] * self.shape[1]


@dataclass(frozen=True)
class FrameReport:
    f_raw: float
    f_hat: float
    w_bias: float
    tau_g_hat: float
    k_pool: float
    K_potential: float
    K_adapted: float
    spikes: int
    spike_frequency: float
    collision: bool


def low_pass(previous, value, tau: float, dt: float):
    """One step of y <- y + a (x - y) with a = dt / (dt + tau)."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    alpha = dt / (dt + tau)
    return previous + alpha * (value - previous)


def _require_shape(grid: np.ndarray, shape: Tuple[int, int], what: str) -> None:
    if grid.shape != tuple(shape):
        raise DimensionError(f"{what} has shape {grid.shape}, state expects {tuple(shape)}")


# -- layers ------------------------------------------------------------------


def photoreceptor_step(current: np.ndarray, state: ModelState, params: ModelParams) -> np.ndarray:
    """Luminance change plus decaying persistence of past changes."""
    current = np.asarray(current, dtype=np.float64)
    _require_shape(current, state.shape, "frame")
    if state.prev_luminance is None:
        p = np.zeros(state.shape)
    else:
        p = current - state.prev_luminance
    for a_i, past in zip(params.persistence, state.p_history):
        p = p + a_i * past
    if params.n_p:
        state.p_history.appendleft(p)
    state.prev_luminance = current.copy()
    return p


def ffi_step(p: np.ndarray, state: ModelState, params: ModelParams, dt: float) -> Tuple[float, float]:
    f = float(np.abs(p).sum()) / p.size
    state.ffi_hat = float(low_pass(state.ffi_hat, f, params.tau1, dt))
    return f, state.ffi_hat


def ffi_mediate(f_hat: float, params: ModelParams, state: Optional[ModelState] = None) -> Tuple[float, float, float]:
    """Inhibition bias, grouping latency and excitation delay from F_hat."""
    ratio = f_hat / params.T_f
    w = max(params.sigma1, ratio)
    tau_g = params.tau_g_base * max(params.sigma2, 1.0 - ratio)
    tau2 = params.tau2_max - (params.tau2_max - params.tau2_min) * min(1.0, ratio)
    tau2 = min(params.tau2_max, max(params.tau2_min, tau2))
    if state is not None:
        state.tau_g_current = tau_g
        state.tau2_current = tau2
    return w, tau_g, tau2


def rectify(p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return np.maximum(p, 0.0), -np.minimum(p, 0.0)


def excitation_step(p_pol: np.ndarray, e_hat_prev: np.ndarray, tau2: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    if p_pol.shape != e_hat_prev.shape:
        raise DimensionError(f"excitation {p_pol.shape} vs delayed excitation {e_hat_prev.shape}")
    return p_pol, low_pass(e_hat_prev, p_pol, tau2, dt)


def inhibition_convolve(e_hat: np.ndarray, W) -> np.ndarray:
    """3x3 spatial spread of delayed excitation; outside the grid counts as zero.

    ``W[i + 1][j + 1]`` weights the neighbour at row offset ``i`` and column
    offset ``j``, so this is a correlation rather than a flipped convolution.
    """
    return ndimage.correlate(e_hat, np.asarray(W, dtype=np.float64), mode="constant", cval=0.0)


def s_layer(e: np.ndarray, i: np.ndarray, w_bias: float) -> np.ndarray:
    return np.maximum(e - w_bias * i, 0.0)


def combine_on_off(s_on: np.ndarray, s_off: np.ndarray, params: ModelParams) -> np.ndarray:
    return params.theta1 * s_on + params.theta2 * s_off + params.theta3 * s_on * s_off


_BOX = np.full((3, 3), 1.0 / 9.0)


def group_layer(s: np.ndarray, params: ModelParams) -> np.ndarray:
    """Amplify clustered excitation and cull isolated responses."""
    ce = ndimage.correlate(s, _BOX, mode="constant", cval=0.0)
    omega = params.delta_c + ce.max() / params.C_w
    g = s * ce / omega
    g[g * params.C_de < params.T_de] = 0.0
    return g


def group_delay(g: np.ndarray, state: ModelState, tau_g_hat: float, dt: float) -> np.ndarray:
    state.g_delayed = low_pass(state.g_delayed, g, tau_g_hat, dt)
    return state.g_delayed


# the sigmoid rounds to exactly 1.0 once k / n_cell passes ~37; keep K < 1
_K_MAX = math.nextafter(1.0, 0.0)


def lgmd_pool(g_delayed: np.ndarray, params: ModelParams) -> Tuple[float, float]:
    k = float(g_delayed.sum())
    big_k = 1.0 / (1.0 + math.exp(-k / (g_delayed.size * params.sigma3)))
    return k, min(big_k, _K_MAX)


def sfa_step(big_k: float, state: ModelState, params: ModelParams) -> float:
    """Rising potentials pass; flat or falling ones decay toward 0.5."""
    if state.sfa_prev_k is None:
        adapted = big_k
    else:
        delta = big_k - state.sfa_prev_k
        if delta > 0:
            adapted = big_k
        else:
            adapted = max(0.5, params.alpha_sfa * (state.sfa_prev_adapted + delta))
    state.sfa_prev_k = big_k
    state.sfa_prev_adapted = adapted
    return adapted


def spike_emit(k_adapted: float, params: ModelParams) -> int:
    return int(math.floor(math.exp(params.sigma4 * (k_adapted - params.T_sp))))


def collision_decide(spikes: int, state: ModelState, params: ModelParams) -> Tuple[float, bool]:
    if state.spike_window.maxlen != params.N_ts:
        state.spike_window = deque(state.spike_window, maxlen=params.N_ts)
    state.spike_window.append(int(spikes))
    frequency = sum(state.spike_window) * 1000.0 / (params.N_ts * params.tau_i)
    return frequency, frequency >= params.T_sf


# -- composition -------------------------------------------------------------


def process_frame(current, state: ModelState, params: ModelParams) -> FrameReport:
    """Advance the network by one frame (interval ``params.tau_i``)."""
    frame = as_frame(current)
    _require_shape(frame, state.shape, f"frame {state.frame_index}")
    dt = params.tau_i

    p = photoreceptor_step(frame, state, params)
    f, f_hat = ffi_step(p, state, params, dt)
    w, tau_g, tau2 = ffi_mediate(f_hat, params, state)

    p_on, p_off = rectify(p)
    e_on, state.e_on_hat = excitation_step(p_on, state.e_on_hat, tau2, dt)
    e_off, state.e_off_hat = excitation_step(p_off, state.e_off_hat, tau2, dt)
    s_on = s_layer(e_on, inhibition_convolve(state.e_on_hat, params.W), w)
    s_off = s_layer(e_off, inhibition_convolve(state.e_off_hat, params.W), w)
    s = combine_on_off(s_on, s_off, params)

    g = group_delay(group_layer(s, params), state, tau_g, dt)
    k, big_k = lgmd_pool(g, params)
    adapted = sfa_step(big_k, state, params)
    spikes = spike_emit(adapted, params)
    frequency, collision = collision_decide(spikes, state, params)
    state.frame_index += 1

    return FrameReport(
        f_raw=f,
        f_hat=f_hat,
        w_bias=w,
        tau_g_hat=tau_g,
        k_pool=k,
        K_potential=big_k,
        K_adapted=adapted,
        spikes=spikes,
        spike_frequency=frequency,
        collision=bool(collision),
    )


class LGMD:
    """Binds one parameter set to one frame stream."""

    def __init__(self, params: Optional[ModelParams] = None, shape: Optional[Tuple[int, int]] = None):
        self.params = params or ModelParams()
        self.state = ModelState.initial(shape, self.params) if shape is not None else None

    def reset(self) -> None:
        if self.state is not None:
            self.state = ModelState.initial(self.state.shape, self.params)

    def step(self, frame) -> FrameReport:
        frame = as_frame(frame)
        if self.state is None:
            self.state = ModelState.initial(frame.shape, self.params)
        return process_frame(frame, self.state, self.params)

    def run(self, frames: Iterable) -> Iterator[FrameReport]:
        for frame in frames:
            yield self.step(frame)


def run_sequence(frames: Iterable, params: Optional[ModelParams] = None) -> List[FrameReport]:
    return list(LGMD(params).run(frames))

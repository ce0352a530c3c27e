"""Model constants for the LGMD network with feed-forward inhibition mediation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Tuple

Kernel = Tuple[Tuple[float, float, float], Tuple[float, float, float], Tuple[float, float, float]]

DEFAULT_W: Kernel = (
    (1 / 8, 1 / 4, 1 / 8),
    (1 / 4, 1.0, 1 / 4),
    (1 / 8, 1 / 4, 1 / 8),
)


class ParamError(ValueError):
    """A parameter value is outside its admissible range."""


@dataclass(frozen=True)
class ModelParams:
    """Every constant of the pipeline. Times are in milliseconds.

    The defaults reproduce the published constants; the grouping layer,
    persistence depth, excitation-delay law and adaptation rate fill gaps
    the model description leaves open.
    """

    # photoreceptors
    n_p: int = 2
    u: float = 1.0
    # FFI / FFI-M
    tau1: float = 10.0
    tau2_min: float = 60.0
    tau2_max: float = 180.0
    T_f: float = 20.0
    sigma1: float = 0.5
    sigma2: float = 0.01
    tau_g_base: float = 10.0
    # ON/OFF
    W: Kernel = DEFAULT_W
    theta1: float = 1.0
    theta2: float = 1.0
    theta3: float = 1.0
    # grouping layer
    delta_c: float = 0.01
    C_w: float = 4.0
    C_de: float = 0.5
    T_de: float = 60.0
    # LGMD cell, adaptation and spiking
    sigma3: float = 1.0
    alpha_sfa: float = 0.8
    sigma4: float = 10.0
    T_sp: float = 0.7
    N_ts: int = 6
    T_sf: float = 30.0
    tau_i: float = field(default=1000.0 / 30.0)

    def __post_init__(self) -> None:
        w = tuple(tuple(float(v) for v in row) for row in self.W)
        object.__setattr__(self, "W", w)
        for name, value in self.scalar_items():
            if not math.isfinite(value):
                raise ParamError(f"{name}: must be finite, got {value!r}")
        for row in w:
            if len(row) != 3 or not all(math.isfinite(v) for v in row):
                raise ParamError("W: must be a finite 3x3 kernel")
        if len(w) != 3:
            raise ParamError("W: must be a finite 3x3 kernel")

        _check(self, "n_p", self.n_p >= 0, ">= 0")
        _check(self, "N_ts", self.N_ts >= 1, ">= 1")
        for name in ("tau1", "tau2_min", "tau2_max", "tau_g_base", "tau_i", "T_f", "sigma3", "C_w"):
            _check(self, name, getattr(self, name) > 0, "> 0")
        _check(self, "tau2_max", self.tau2_min <= self.tau2_max, ">= tau2_min")
        _check(self, "sigma1", 0 < self.sigma1 <= 1, "in (0, 1]")
        _check(self, "sigma2", 0 < self.sigma2 < 1, "in (0, 1)")
        _check(self, "T_sp", 0.5 < self.T_sp < 1, "in (0.5, 1)")
        _check(self, "alpha_sfa", 0 < self.alpha_sfa < 1, "in (0, 1)")
        _check(self, "T_sf", self.T_sf >= 0, ">= 0")
        _check(self, "delta_c", self.delta_c > 0, "> 0")
        _check(self, "C_de", self.C_de > 0, "> 0")
        _check(self, "T_de", self.T_de >= 0, ">= 0")
        _check(self, "sigma4", self.sigma4 > 0, "> 0")

    @property
    def persistence(self) -> Tuple[float, ...]:
        """Decay coefficients a_i = 1 / (1 + exp(u * i)) for i = 1..n_p."""
        return tuple(1.0 / (1.0 + math.exp(self.u * i)) for i in range(1, self.n_p + 1))

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    def scalar_items(self):
        for f in dataclasses.fields(self):
            if f.name != "W":
                yield f.name, getattr(self, f.name)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def with_fps(self, fps: float) -> "ModelParams":
        if fps <= 0:
            raise ParamError(f"fps: must be > 0, got {fps!r}")
        return self.replace(tau_i=1000.0 / fps)


INT_FIELDS = frozenset({"n_p", "N_ts"})


def _check(params: ModelParams, name: str, ok: bool, bound: str) -> None:
    if not ok:
        raise ParamError(f"{name}: must be {bound}, got {getattr(params, name)!r}")

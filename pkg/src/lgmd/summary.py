"""Reduce a trace to the numbers people actually look at."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import List, Optional, Sequence

from .model import FrameReport


@dataclass(frozen=True)
class RunSummary:
    total_frames: int
    total_spikes: int
    peak_spike_frequency: float
    first_alert_frame: Optional[int]
    alert_frames: int
    collision_frame_truth: Optional[int]
    lead_time_ms: Optional[float]  # truth - first alert; positive means early warning

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return asdict(self)

    def format(self) -> str:
        width = max(len(n) for n in self.field_names())
        lines = []
        for name, value in self.as_dict().items():
            if value is None:
                text = "-"
            elif isinstance(value, float):
                text = f"{value:.6g}"
            else:
                text = str(value)
            lines.append(f"{name.ljust(width)}  {text}")
        return "\n".join(lines)


def summarize(reports: Sequence[FrameReport], tau_i: float, collision_truth: Optional[int] = None) -> RunSummary:
    alerts = [i for i, r in enumerate(reports) if r.collision]
    first = alerts[0] if alerts else None
    lead = None
    if first is not None and collision_truth is not None:
        lead = (collision_truth - first) * tau_i
    return RunSummary(
        total_frames=len(reports),
        total_spikes=int(sum(r.spikes for r in reports)),
        peak_spike_frequency=max((r.spike_frequency for r in reports), default=0.0),
        first_alert_frame=first,
        alert_frames=len(alerts),
        collision_frame_truth=collision_truth,
        lead_time_ms=lead,
    )


def longest_alert_run(reports: Sequence[FrameReport], start: int = 0) -> int:
    """Longest run of consecutive alert frames among frames ``start`` onward."""
    best = run = 0
    for r in reports[start:]:
        run = run + 1 if r.collision else 0
        best = max(best, run)
    return best

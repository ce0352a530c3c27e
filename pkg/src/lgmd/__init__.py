"""LGMD looming detector with adaptive feed-forward inhibition."""

from .model import LGMD, FrameReport, ModelState, process_frame, run_sequence
from .params import ModelParams
from .stimuli import StimulusSpec, render

__all__ = ["LGMD", "FrameReport", "ModelParams", "ModelState", "StimulusSpec", "process_frame", "render", "run_sequence"]

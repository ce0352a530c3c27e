"""Seeded random frame sequences for oracle regression.

Pure white noise drives the inhibition bias so high that nothing survives
the S layer, which makes for a dull comparison. Each sequence instead mixes
a smooth drifting background, an expanding or shrinking square of random
polarity, occasional static frames and pixel noise, so spiking, adaptation
and the grouping cull are all exercised.
"""

from __future__ import annotations

import numpy as np


def random_sequence(seed: int, shape=(32, 32), n_frames: int = 50) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rows, cols = shape
    yy, xx = np.mgrid[0:rows, 0:cols].astype(np.float64)

    base = rng.uniform(40, 200)
    amp = rng.uniform(0, 30)
    kx, ky = rng.uniform(-0.4, 0.4, size=2)
    drift = rng.uniform(-0.5, 0.5)
    noise = rng.choice([0.0, 0.0, 1.0, 4.0])
    shade = rng.choice([0.0, 255.0])
    cy, cx = rng.uniform(0.3, 0.7, size=2) * (rows, cols)
    h0 = rng.uniform(0.5, 3.0)
    growth = rng.uniform(-0.05, 0.6) * max(rows, cols) / n_frames
    onset = int(rng.integers(0, n_frames // 3 + 1))

    frames = np.empty((n_frames, rows, cols))
    hold = False
    for t in range(n_frames):
        if t and rng.random() < 0.1:
            hold = not hold
        if hold and t:
            frames[t] = frames[t - 1]
            continue
        bg = base + amp * np.sin(kx * xx + ky * yy + drift * t)
        if t >= onset:
            h = max(0.0, h0 + growth * (t - onset))
            inside = (np.abs(yy - cy) <= h) & (np.abs(xx - cx) <= h)
            bg = np.where(inside, shade, bg)
        if noise:
            bg = bg + rng.normal(0, noise, size=shape)
        frames[t] = np.clip(bg, 0, 255)
    return frames

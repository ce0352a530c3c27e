"""Slow, literal re-implementation of the LGMD pipeline.

Plain nested lists and loops, no numpy and no imports from the optimized
model, so the two can be checked against each other. Only
:class:`~lgmd.params.ModelParams` is shared (it is data, not behaviour).
Reports come back as dicts keyed like the fields of ``FrameReport``.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence

ORACLE_FIELDS = (
    "f_raw",
    "f_hat",
    "w_bias",
    "tau_g_hat",
    "k_pool",
    "K_potential",
    "K_adapted",
    "spikes",
    "spike_frequency",
    "collision",
)


def _grid(rows, cols, value=0.0):
    return [[value for _ in range(cols)] for _ in range(rows)]


def _lp(prev, x, tau, dt):
    # first-order low-pass, y_t = y_{t-1} + dt/(dt+tau) * (x_t - y_{t-1})
    return prev + (dt / (dt + tau)) * (x - prev)


def _neighbourhood_sum(grid, weights, r, c):
    rows, cols = len(grid), len(grid[0])
    total = 0.0
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            rr, cc = r + di, c + dj
            if 0 <= rr < rows and 0 <= cc < cols:
                total += grid[rr][cc] * weights[di + 1][dj + 1]
    return total


_ONE_NINTH = [[1.0 / 9.0] * 3 for _ in range(3)]


def _check_frame(frame, shape):
    rows = len(frame)
    if rows == 0:
        raise ValueError("empty frame")
    cols = len(frame[0])
    for row in frame:
        if len(row) != cols:
            raise ValueError("ragged frame")
        for v in row:
            if not (v == v) or v in (math.inf, -math.inf) or v < 0 or v > 255:
                raise ValueError("luminance outside [0, 255]")
    if shape is not None and (rows, cols) != shape:
        raise ValueError(f"frame shape {(rows, cols)} != {shape}")
    return rows, cols


def oracle_process(frames: Sequence, params) -> List[Dict[str, object]]:
    """Run ``frames`` (each a 2-D sequence of luminance) through the model."""
    p = params
    dt = p.tau_i
    n_p = p.n_p
    a = [1.0 / (1.0 + math.exp(p.u * i)) for i in range(1, n_p + 1)]

    shape = None
    prev_L = None
    history = []  # history[0] = P(t-1), history[1] = P(t-2), ...
    F_hat = 0.0
    Eon_hat = Eoff_hat = G_hat = None
    prev_K = None
    prev_Ka = None
    window = []
    out = []

    for raw in frames:
        L = [[float(v) for v in row] for row in raw]
        shape = _check_frame(L, shape)
        R, C = shape
        n_cell = R * C
        if Eon_hat is None:
            Eon_hat, Eoff_hat, G_hat = _grid(R, C), _grid(R, C), _grid(R, C)

        # photoreceptors
        P = _grid(R, C)
        for r in range(R):
            for c in range(C):
                v = 0.0 if prev_L is None else L[r][c] - prev_L[r][c]
                for i in range(min(n_p, len(history))):
                    v += a[i] * history[i][r][c]
                P[r][c] = v
        if n_p > 0:
            history.insert(0, P)
            del history[n_p:]
        prev_L = L

        # feed-forward inhibition
        F = 0.0
        for r in range(R):
            for c in range(C):
                F += abs(P[r][c])
        F = F / n_cell
        F_hat = _lp(F_hat, F, p.tau1, dt)

        # mediation
        w = F_hat / p.T_f
        if w < p.sigma1:
            w = p.sigma1
        shrink = 1.0 - F_hat / p.T_f
        if shrink < p.sigma2:
            shrink = p.sigma2
        tau_g = p.tau_g_base * shrink
        frac = F_hat / p.T_f
        if frac > 1.0:
            frac = 1.0
        tau2 = p.tau2_max - (p.tau2_max - p.tau2_min) * frac
        if tau2 < p.tau2_min:
            tau2 = p.tau2_min
        if tau2 > p.tau2_max:
            tau2 = p.tau2_max

        # ON / OFF
        Pon, Poff = _grid(R, C), _grid(R, C)
        for r in range(R):
            for c in range(C):
                v = P[r][c]
                Pon[r][c] = v if v > 0 else 0.0
                Poff[r][c] = -v if v < 0 else 0.0
        for r in range(R):
            for c in range(C):
                Eon_hat[r][c] = _lp(Eon_hat[r][c], Pon[r][c], tau2, dt)
                Eoff_hat[r][c] = _lp(Eoff_hat[r][c], Poff[r][c], tau2, dt)

        S = _grid(R, C)
        for r in range(R):
            for c in range(C):
                Ion = _neighbourhood_sum(Eon_hat, p.W, r, c)
                Ioff = _neighbourhood_sum(Eoff_hat, p.W, r, c)
                son = Pon[r][c] - w * Ion
                soff = Poff[r][c] - w * Ioff
                son = son if son > 0 else 0.0
                soff = soff if soff > 0 else 0.0
                S[r][c] = p.theta1 * son + p.theta2 * soff + p.theta3 * son * soff

        # grouping
        Ce = _grid(R, C)
        ce_max = -math.inf
        for r in range(R):
            for c in range(C):
                Ce[r][c] = _neighbourhood_sum(S, _ONE_NINTH, r, c)
                if Ce[r][c] > ce_max:
                    ce_max = Ce[r][c]
        omega = p.delta_c + ce_max / p.C_w
        k = 0.0
        for r in range(R):
            for c in range(C):
                g = S[r][c] * Ce[r][c] / omega
                if g * p.C_de < p.T_de:
                    g = 0.0
                G_hat[r][c] = _lp(G_hat[r][c], g, tau_g, dt)
                k += G_hat[r][c]

        # LGMD cell
        K = 1.0 / (1.0 + math.exp(-k / (n_cell * p.sigma3)))
        if prev_K is None:
            Ka = K
        elif K - prev_K > 0:
            Ka = K
        else:
            Ka = p.alpha_sfa * (prev_Ka + (K - prev_K))
            if Ka < 0.5:
                Ka = 0.5
        prev_K, prev_Ka = K, Ka

        spikes = int(math.floor(math.exp(p.sigma4 * (Ka - p.T_sp))))
        window.append(spikes)
        if len(window) > p.N_ts:
            window.pop(0)
        freq = sum(window) * 1000.0 / (p.N_ts * p.tau_i)

        out.append(
            dict(
                f_raw=F,
                f_hat=F_hat,
                w_bias=w,
                tau_g_hat=tau_g,
                k_pool=k,
                K_potential=K,
                K_adapted=Ka,
                spikes=spikes,
                spike_frequency=freq,
                collision=freq >= p.T_sf,
            )
        )
    return out

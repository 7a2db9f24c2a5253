"""NumPy implementations of the batched scalar kernels (fallback backend)."""
from __future__ import annotations

import numpy as np

_MAX_NEWTON = 200
_MAX_BISECT = 200


def block_threshold(blocks: np.ndarray, th: float) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=float)
    return (blocks.sum(axis=1) >= blocks.shape[1] * th).astype(float)


def power_multipliers(weights: np.ndarray, sq: np.ndarray, budget: float) -> np.ndarray:
    """Per row, the t >= 0 with sum_i w_i s_i / (1 + t w_i)^2 = budget (0 if slack)."""
    w = np.asarray(weights, dtype=float)
    s = np.asarray(sq, dtype=float)
    ws = w * s
    t = np.zeros(w.shape[0])
    active = ws.sum(axis=1) > budget
    for _ in range(_MAX_NEWTON):
        if not active.any():
            break
        d = 1.0 + t[active, None] * w[active]
        f = (ws[active] / d**2).sum(axis=1) - budget
        fp = -2.0 * (ws[active] * w[active] / d**3).sum(axis=1)
        step = -f / fp
        t_new = t[active] + step
        done = np.abs(step) <= 1e-15 * np.maximum(1.0, t_new)
        t[active] = t_new
        idx = np.flatnonzero(active)
        active[idx[done | (f <= 0)]] = False
    return t


def box_halfspace_multipliers(v0: np.ndarray, w: np.ndarray, bound: np.ndarray) -> np.ndarray:
    """Per row, the nu >= 0 with w . clip(v0 - nu w, 0, 1) <= bound, tight when nu > 0."""
    v0 = np.asarray(v0, dtype=float)
    w = np.asarray(w, dtype=float)
    bound = np.broadcast_to(np.asarray(bound, dtype=float), (v0.shape[0],))

    def g(nu):
        return (w * np.clip(v0 - nu[:, None] * w, 0.0, 1.0)).sum(axis=1) - bound

    lo = np.zeros(v0.shape[0])
    active = g(lo) > 0
    hi = np.where(active, 1.0, 0.0)
    for _ in range(200):
        grow = active & (g(hi) > 0)
        if not grow.any():
            break
        hi[grow] *= 2.0
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0
        lo = np.where(active & pos, mid, lo)
        hi = np.where(active & ~pos, mid, hi)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, hi)):
            break
    return np.where(active, hi, 0.0)

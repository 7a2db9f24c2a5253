"""Threshold recovery of binary user-scheduling vectors."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import block_threshold
from .metrics import PrimalState, RateThresholds, cue_rates


@dataclass
class ScheduleMatrix:
    rho: np.ndarray  # (K, M) in {0, 1}
    threshold: float

    @property
    def links(self) -> int:
        return int(self.rho.sum())

    def to_json(self) -> str:
        return json.dumps({"threshold": self.threshold, "rho": self.rho.astype(int).tolist()})

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "m", "established"])
            K, M = self.rho.shape
            for k in range(K):
                for m in range(M):
                    w.writerow([k, m, int(self.rho[k, m])])


def recover(p, th: float = 0.5, N: int | None = None, M: int | None = None):
    """Set each length-N block of p_k to all ones iff its sum is >= N*th.

    ``p`` is either (K, N, M) or (K, N*M) in the column-major layout; the
    returned array has the input's shape.
    """
    if not 0.0 < th < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    p = np.asarray(p, dtype=float)
    flat = p.ndim == 2
    if flat:
        if N is None:
            raise ValueError("N is required for flattened input")
        K = p.shape[0]
        M = p.shape[1] // N
        blocks = p.reshape(K, M, N)
    else:
        K, N, M = p.shape
        blocks = np.swapaxes(p, 1, 2)
    rho = block_threshold(np.ascontiguousarray(blocks.reshape(K * M, N)), th).reshape(K, M)
    out = np.repeat(rho[:, :, None], N, axis=2)  # (K, M, N)
    out = out.reshape(K, M * N) if flat else np.swapaxes(out, 1, 2).copy()
    return out, ScheduleMatrix(rho, th)


def consistency_pass(state: PrimalState, schedule: ScheduleMatrix) -> PrimalState:
    """Zero the beams of every link that was not established."""
    out = state.copy()
    out.F *= schedule.rho[:, None, :]
    return out


def _project_rows(X: np.ndarray, budget: float) -> np.ndarray:
    power = np.sum(np.abs(X) ** 2, axis=-1, keepdims=True)
    scale = np.where(power > budget, np.sqrt(budget / np.maximum(power, 1e-300)), 1.0)
    return X * scale


def repair_shares(C: np.ndarray, rho: np.ndarray, common: np.ndarray, R2: float, sweeps: int = 50) -> np.ndarray:
    """Nudge the common-rate shares C (K, M) onto the polyhedron
    {C >= 0, sum_m rho C <= Rc_k, sum_k rho C >= R2} by alternating scalings."""
    C = np.maximum(C, 0.0) * rho
    for _ in range(sweeps):
        served = (rho * C).sum(axis=0)
        need = served < R2
        if np.any(need):
            short = need & (rho.sum(axis=0) > 0)
            for m in np.flatnonzero(short):
                ks = rho[:, m] > 0
                if served[m] <= 0:
                    C[ks, m] = R2 / ks.sum()
                else:
                    C[ks, m] *= R2 / served[m]
        load = (rho * C).sum(axis=1)
        over = load > common
        for k in np.flatnonzero(over):
            C[k] *= max(common[k], 0.0) / load[k]
        served = (rho * C).sum(axis=0)
        load = (rho * C).sum(axis=1)
        if np.all(served >= R2 * (1 - 1e-12)) and np.all(load <= common * (1 + 1e-12) + 1e-15):
            break
    return C


def finalize(channels, state: PrimalState, thresholds: RateThresholds, th: float = 0.5):
    """Recover a binary schedule and make the state consistent with it.

    Relaxed scheduling weights are folded into the beams (``F o p`` is what
    every metric sees), unserved columns are zeroed, rows are scaled back to
    the per-element budget, and the common-rate shares are repaired. Returns
    ``(state, schedule)``.
    """
    p_bin, sched = recover(state.p, th)
    rho = sched.rho
    out = state.copy()
    out.F = state.F * state.p
    out.F = consistency_pass(out, sched).F
    out.p = p_bin
    out.F = _project_rows(out.F, thresholds.P_t)
    out.W = _project_rows(out.W, thresholds.P_t)
    common = np.array([cue_rates(channels, out, k)[0] for k in range(out.K)])
    C = repair_shares(state.c[:, 0, :].copy(), rho, common, thresholds.R2)
    out.c = np.repeat(C[:, None, :], out.N, axis=1)
    return out, sched

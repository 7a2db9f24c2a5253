"""Index vectors, column-major vectorization and block expansion helpers.

All length-``N*(K+1)`` and length-``N*M`` vectors use one layout: the
column-major ``vec`` of an ``N x C`` matrix, so block ``j`` (1-based) holds
column ``j`` at positions ``(j-1)*N .. j*N-1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class IndexKind(str, Enum):
    A = "A"  # precoder column i in N(K+1)
    B = "B"  # DUE block m in NM
    C = "C"  # element row n across the K+1 precoder columns
    D = "D"  # element row n across the M columns of F_k
    E = "E"  # leading entry of block m


@dataclass(frozen=True)
class IndexVector:
    kind: IndexKind
    index: int
    length: int
    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def vec(X) -> np.ndarray:
    """Stack the columns of ``X`` (``X`` may carry leading batch axes)."""
    X = np.asarray(X)
    if X.ndim <= 2:
        return X.reshape(-1, order="F")
    # batch: (..., N, C) -> (..., N*C) with columns stacked
    return np.swapaxes(X, -1, -2).reshape(X.shape[:-2] + (-1,))


def unvec(v, rows: int) -> np.ndarray:
    """Inverse of :func:`vec` for a vector (or batch) with ``rows`` rows."""
    v = np.asarray(v)
    cols = v.shape[-1] // rows
    if v.shape[-1] != rows * cols:
        raise ValueError(f"length {v.shape[-1]} is not a multiple of {rows}")
    return np.swapaxes(v.reshape(v.shape[:-1] + (cols, rows)), -1, -2)


def _block_count(kind: IndexKind, K_or_M: int) -> int:
    return K_or_M + 1 if kind in (IndexKind.A, IndexKind.C) else K_or_M


def make_index(kind, index, N: int, K_or_M: int) -> IndexVector:
    """Build one of the five binary position-index vectors.

    ``index`` is 1-based. For kind ``A`` the common stream is ``"c"`` (or 0)
    and private stream ``i`` is ``i``; kind ``A``/``C`` vectors have length
    ``N*(K+1)``, kinds ``B``/``D``/``E`` have length ``N*M``.
    """
    kind = IndexKind(kind)
    if N < 1 or K_or_M < 1:
        raise ValueError("N and K/M must be positive")
    blocks = _block_count(kind, K_or_M)
    length = N * blocks
    if kind is IndexKind.A and index == "c":
        index = 0
    if not isinstance(index, (int, np.integer)):
        raise ValueError(f"invalid index {index!r} for kind {kind.value}")
    index = int(index)
    lo = 0 if kind is IndexKind.A else 1
    hi = N if kind in (IndexKind.C, IndexKind.D) else K_or_M
    if not lo <= index <= hi:
        raise IndexError(f"index {index} out of range [{lo}, {hi}] for kind {kind.value}")

    e = np.zeros(length)
    if kind is IndexKind.A:
        e[index * N:(index + 1) * N] = 1.0
    elif kind is IndexKind.B:
        e[(index - 1) * N:index * N] = 1.0
    elif kind in (IndexKind.C, IndexKind.D):
        e[index - 1::N] = 1.0
    else:
        e[(index - 1) * N] = 1.0
    return IndexVector(kind, index, length, e)


def vec_hadamard(mask, X) -> np.ndarray:
    """Return ``vec(mask * X)``, identical to ``diag(vec(mask)) @ vec(X)``."""
    mask = np.asarray(mask)
    X = np.asarray(X)
    if mask.shape != X.shape:
        raise ValueError(f"shape mismatch: mask {mask.shape} vs X {X.shape}")
    return vec(mask * X)


def expand(v, copies: int, mode: str = "channel") -> np.ndarray:
    """Block expansion used for the extended channels and scheduling vectors.

    ``mode="channel"`` stacks ``copies`` verbatim repeats of ``v`` (or, when
    ``v`` is 2-D, stacks its rows as distinct blocks). ``mode="schedule"``
    turns ``rho`` (length M) into the length ``copies*M`` vector whose block
    ``m`` repeats ``rho[m]`` ``copies`` times.
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    v = np.asarray(v)
    if mode == "channel":
        if v.ndim == 2:
            return v.reshape(-1)
        return np.tile(np.atleast_1d(v), copies)
    if mode == "schedule":
        return np.repeat(np.atleast_1d(v), copies)
    raise ValueError(f"unknown expansion mode {mode!r}")


def collapse(p, N: int, th: float = 0.0) -> np.ndarray:
    """Read block-wise indicators from an N-fold expanded vector.

    A block maps to 1 when its entry sum is at least ``N*th``; with
    ``th=0`` a block maps to its first entry (exact inverse of
    ``expand(rho, N, "schedule")`` for block-constant input).
    """
    blocks = np.asarray(p, dtype=float).reshape(-1, N)
    if th <= 0.0:
        return blocks[:, 0].copy()
    return (blocks.sum(axis=1) >= N * th).astype(float)

"""Communication and sensing metrics and the P0 constraint report.

Every formula here is written with the index masks from
:mod:`coopisac.tensorops`; the test-suite cross-checks each one against a
plain column-slicing implementation.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import ChannelSet
from .tensorops import make_index, vec

RATE_TOL = 1e-3
POWER_TOL = 1e-6


@dataclass
class PrimalState:
    """Decision variables.

    ``W`` is N x (K+1) with columns ``[w_c, w_1 .. w_K]``; ``F``, ``c`` and
    ``p`` are stacked per CUE with shape (K, N, M), i.e. ``vec(F[k])`` is the
    NM-vector of the k-th CUE and block ``m`` of ``vec(c[k])`` holds
    ``C_{m,k}``.
    """

    W: np.ndarray
    F: np.ndarray
    c: np.ndarray
    p: np.ndarray
    gamma: float = 0.0

    @property
    def K(self) -> int:
        return self.F.shape[0]

    @property
    def N(self) -> int:
        return self.F.shape[1]

    @property
    def M(self) -> int:
        return self.F.shape[2]

    def copy(self) -> "PrimalState":
        return replace(self, W=self.W.copy(), F=self.F.copy(), c=self.c.copy(), p=self.p.copy())

    @classmethod
    def zeros(cls, N: int, K: int, M: int) -> "PrimalState":
        return cls(
            W=np.zeros((N, K + 1), complex),
            F=np.zeros((K, N, M), complex),
            c=np.zeros((K, N, M)),
            p=np.zeros((K, N, M)),
        )

    def schedule(self) -> np.ndarray:
        """rho_{k,m} read from the first entry of each block of p_k."""
        return self.p[:, 0, :].copy()


@dataclass(frozen=True)
class RateThresholds:
    R1: float = 0.1
    R2: float = 0.1
    R3: float = 0.1
    P_t: float = 1.0

    def __post_init__(self):
        for name in ("R1", "R2", "R3"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"thresholds.{name} must be finite and >= 0")
        if not np.isfinite(self.P_t) or self.P_t <= 0:
            raise ValueError("thresholds.P_t must be finite and > 0")


def _precoder_terms(channels: ChannelSet, W: np.ndarray, k: int) -> np.ndarray:
    """|h~_k^H (vec(W) o a_i)|^2 for i = c, 1..K."""
    N, K = channels.N, channels.K
    hk = channels.h_ext(k)
    vw = vec(W)
    out = np.empty(K + 1)
    for i in range(K + 1):
        a = make_index("A", i, N, K).entries
        out[i] = abs(np.vdot(hk, vw * a)) ** 2
    return out


def cue_rates(channels: ChannelSet, state: PrimalState, k: int) -> tuple[float, float]:
    """(common-stream rate, private-stream rate) at CUE ``k`` in bits/s/Hz."""
    t = _precoder_terms(channels, state.W, k)
    s2 = channels.noise_cue
    common = np.log2(1.0 + t[0] / (t[1:].sum() + s2))
    others = t[1:].sum() - t[k + 1]
    private = np.log2(1.0 + t[k + 1] / (others + s2))
    return float(common), float(private)


def _due_amplitudes(channels: ChannelSet, state: PrimalState, rx: int) -> np.ndarray:
    """sum_k g~_{k,rx}^H (vec(F_k) o b_j o p_k) for every stream j."""
    N, K, M = channels.N, channels.K, channels.M
    amps = np.zeros(M, complex)
    for j in range(M):
        b = make_index("B", j + 1, N, M).entries
        for k in range(K):
            amps[j] += np.vdot(channels.g_ext(k, rx), vec(state.F[k]) * b * vec(state.p[k]))
    return amps


def common_share(state: PrimalState, m: int) -> float:
    """sum_k (p_k o e_m)^H c_k."""
    N, M = state.N, state.M
    e = make_index("E", m + 1, N, M).entries
    return float(sum(np.dot(vec(state.p[k]) * e, vec(state.c[k])) for k in range(state.K)))


def due_rates(channels: ChannelSet, state: PrimalState, m: int, *, literal: bool = False) -> tuple[float, float]:
    """(C_m, R_{d,m}) at DUE ``m``.

    ``C_m`` is the log(1 + SINR) rate of stream m. ``literal=True`` instead
    evaluates the ratio whose numerator sums every DUE's own desired power,
    kept only for comparison.
    """
    s2 = channels.noise_due
    amps = _due_amplitudes(channels, state, m)
    p_all = np.abs(amps) ** 2
    interference = p_all.sum() - p_all[m]
    if literal:
        own = sum(abs(_due_amplitudes(channels, state, j)[j]) ** 2 for j in range(channels.M))
        C = np.log2((own + s2) / (interference + s2))
    else:
        C = np.log2(1.0 + p_all[m] / (interference + s2))
    return float(C), float(min(common_share(state, m), C))


def sensing_amplitude(channels: ChannelSet, state: PrimalState, u: int) -> complex:
    N, K, M = channels.N, channels.K, channels.M
    total = 0j
    for k in range(K):
        zk = channels.z_ext(k, u)
        fp = vec(state.F[k]) * vec(state.p[k])
        for m in range(M):
            total += np.vdot(zk, fp * make_index("B", m + 1, N, M).entries)
    return total


def rmi(channels: ChannelSet, state: PrimalState, u: int) -> float:
    """Radar mutual information at sensing receiver ``u`` in bits."""
    return float(np.log2(1.0 + abs(sensing_amplitude(channels, state, u)) ** 2 / channels.noise_sense))


def objective(channels: ChannelSet, state: PrimalState) -> float:
    return min(rmi(channels, state, u) for u in range(channels.K))


def sum_rate(channels: ChannelSet, state: PrimalState) -> float:
    """sum_k R_{r,k} + sum_m R_{d,m}."""
    cue = sum(cue_rates(channels, state, k)[1] for k in range(channels.K))
    due = sum(due_rates(channels, state, m)[1] for m in range(channels.M))
    return float(cue + due)


def link_count(state: PrimalState) -> int:
    return int(np.round(state.schedule()).sum())


@dataclass
class ConstraintEntry:
    constraint_id: str
    indices: tuple
    slack: float
    satisfied: bool


@dataclass
class ConstraintReport:
    entries: list = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)

    def violations(self) -> list:
        return [e for e in self.entries if not e.satisfied]

    def min_slack(self, prefix: str = "") -> float:
        s = [e.slack for e in self.entries if e.constraint_id.startswith(prefix)]
        return min(s) if s else float("inf")

    def to_json(self) -> str:
        return json.dumps([{**asdict(e), "indices": list(e.indices)} for e in self.entries])


def check_feasibility(
    channels: ChannelSet,
    state: PrimalState,
    thresholds: RateThresholds,
    rate_tol: float = RATE_TOL,
    power_tol: float = POWER_TOL,
) -> ConstraintReport:
    """Signed slack (>= 0 means satisfied) for every P0 constraint."""
    N, K, M = state.N, state.K, state.M
    P = thresholds.P_t
    rep = ConstraintReport()

    def add(cid, idx, slack, tol):
        rep.entries.append(ConstraintEntry(cid, idx, float(slack), bool(slack >= -tol)))

    vw = vec(state.W)
    for n in range(N):
        cn = make_index("C", n + 1, N, K).entries
        add("bs_power", (n,), P - np.sum(np.abs(vw * cn) ** 2), power_tol)
    for k in range(K):
        vf, vp = vec(state.F[k]), vec(state.p[k])
        for n in range(N):
            dn = make_index("D", n + 1, N, M).entries
            add("cue_power", (k, n), P - np.sum(np.abs(vf * dn * vp) ** 2), power_tol)
    common = []
    for k in range(K):
        Rc, Rr = cue_rates(channels, state, k)
        common.append(Rc)
        add("private_rate", (k,), Rr - thresholds.R1, rate_tol)
        add("common_rate", (k,), Rc - thresholds.R3, rate_tol)
    for m in range(M):
        add("due_rate", (m,), due_rates(channels, state, m)[1] - thresholds.R2, rate_tol)
    d1 = make_index("D", 1, N, M).entries
    for k in range(K):
        vc, vp = vec(state.c[k]), vec(state.p[k])
        add("share_nonneg", (k,), vc.min(), rate_tol)
        add("common_split", (k,), common[k] - np.dot(vp * d1, vc), rate_tol)
        for m in range(M):
            b = make_index("B", m + 1, N, M).entries
            add("link_null", (k, m), -np.max(np.abs((1.0 - vp) * vec(state.F[k]) * b)), power_tol)
        add("schedule_box", (k,), min(vp.min(), (1.0 - vp).min()), power_tol)
    return rep

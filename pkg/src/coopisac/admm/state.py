"""Solver configuration, consensus copies, duals and the normalized problem data."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..channel import ChannelSet
from ..metrics import PrimalState, RateThresholds

MULTIPLIER_RULES = ("exact", "ascent")

# Step-size families. Every multiplier family gets its own schedule
# step0 / (1 + r); entries in SolverConfig.steps override step0 per family.
STEP_FAMILIES = (
    "lambda", "theta", "iota", "delta", "mu", "pi", "tau", "omega",
    "varpi", "o", "sigma", "chi", "nu", "zeta", "Omega",
)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the consensus-ADMM solver.

    Parameters
    ----------
    rho : float
        Penalty factor of the augmented terms.
    step0 : float
        Base dual-ascent step; family ``f`` uses ``steps.get(f, step0) / (1 + r)``.
    max_iter : int
        Outer iteration cap.
    eps : float
        Fractional objective change that ends the loop.
    consensus_tol : float
        Largest allowed relative copy-master gap at termination.
    threshold : float
        Recovery threshold ``th`` of the scheduling blocks.
    multiplier_rule : {"exact", "ascent"}
        ``"exact"`` solves each block's multipliers to complementary
        slackness; ``"ascent"`` runs projected dual ascent.
    printed_forms : bool
        Use the printed update variants that fail the stationarity check
        (kept for comparison, see SIGNS.md).
    freeze_multipliers : bool
        Keep every inequality multiplier at zero (pure consensus run).
    sensing_scale : float
        Radar channels are normalized by ``sensing_scale`` times the smallest
        initial sensing SNR. Smaller values weigh the objective more.
    sca_reference : {"copy", "master"}
        Expansion point of the linearized sensing constraint: the previous
        copy or the current master.
    init : {"sensing", "link"}
        Beam initialization, see :func:`coopisac.admm.initial_state`.
    relaxation : float
        Over-relaxation factor in (0, 2) applied to the copies before the
        error and master updates; 1 is the plain iteration.
    """

    rho: float = 1.0
    step0: float = 0.1
    steps: dict = field(default_factory=dict)
    max_iter: int = 100
    min_iter: int = 3
    eps: float = 1e-3
    consensus_tol: float = 1e-2
    threshold: float = 0.5
    multiplier_rule: str = "exact"
    printed_forms: bool = False
    freeze_multipliers: bool = False
    sensing_scale: float = 0.5
    sca_reference: str = "master"
    init: str = "sensing"
    relaxation: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("solver.rho must be > 0")
        if not self.eps > 0:
            raise ValueError("solver.eps must be > 0")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("solver.threshold must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("solver.max_iter must be >= 1")
        if self.multiplier_rule not in MULTIPLIER_RULES:
            raise ValueError(f"solver.multiplier_rule must be one of {MULTIPLIER_RULES}")
        if self.step0 <= 0 or any(v <= 0 for v in self.steps.values()):
            raise ValueError("solver.step0 and solver.steps must be > 0")
        if self.sensing_scale <= 0:
            raise ValueError("solver.sensing_scale must be > 0")
        if self.sca_reference not in ("copy", "master"):
            raise ValueError("solver.sca_reference must be 'copy' or 'master'")
        if self.init not in ("sensing", "link"):
            raise ValueError("solver.init must be 'sensing' or 'link'")
        if not 0.0 < self.relaxation < 2.0:
            raise ValueError("solver.relaxation must lie in (0, 2)")
        unknown = set(self.steps) - set(STEP_FAMILIES)
        if unknown:
            raise ValueError(f"solver.steps has unknown families {sorted(unknown)}")

    def step(self, family: str, r: int) -> float:
        return self.steps.get(family, self.step0) / (1.0 + r)


@dataclass
class Problem:
    """Channels scaled so every noise power is one.

    ``hn[k]`` is h_k / sigma_k, ``gn[k, m]`` is g_{k,m} / sigma_m and
    ``zn[k, m, u]`` is z_{k,m,u} / (sigma_u sqrt(s_ref)).
    """

    hn: np.ndarray
    gn: np.ndarray
    zn: np.ndarray
    thresholds: RateThresholds
    s_ref: float

    @property
    def K(self) -> int:
        return self.hn.shape[0]

    @property
    def N(self) -> int:
        return self.hn.shape[1]

    @property
    def M(self) -> int:
        return self.gn.shape[1]

    @property
    def U(self) -> int:
        return self.zn.shape[2]

    @property
    def Rb(self) -> tuple[float, float, float]:
        t = self.thresholds
        return 2.0**t.R1 - 1.0, 2.0**t.R2 - 1.0, 2.0**t.R3 - 1.0

    def sensing_weights(self) -> np.ndarray:
        """a[u, k] = conj(z~_{k,u}) laid out as N x M, so is_u = |sum a o V o x|^2."""
        return np.conj(np.transpose(self.zn, (2, 0, 3, 1)))

    @classmethod
    def from_channels(cls, channels: ChannelSet, thresholds: RateThresholds, s_ref: float = 1.0) -> "Problem":
        return cls(
            hn=channels.h / np.sqrt(channels.noise_cue),
            gn=channels.g / np.sqrt(channels.noise_due),
            zn=channels.z / np.sqrt(channels.noise_sense * s_ref),
            thresholds=thresholds,
            s_ref=float(s_ref),
        )


@dataclass
class ConsensusState:
    """All consensus copies.

    Shapes (index order first, then the copied matrix): ``eta`` (U,),
    ``Psi`` (K, N, K+1), ``Gam`` (N, N, K+1), ``T`` and ``phi`` (K, N, N, M),
    ``D``, ``y`` and ``f`` (K, M, N, M), ``V`` and ``x`` (K, U, N, M),
    ``q`` and ``r`` (K, N, M).
    """

    eta: np.ndarray
    Psi: np.ndarray
    Gam: np.ndarray
    T: np.ndarray
    D: np.ndarray
    V: np.ndarray
    q: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    x: np.ndarray
    r: np.ndarray
    f: np.ndarray

    def copy(self) -> "ConsensusState":
        return ConsensusState(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    @classmethod
    def from_masters(cls, st: PrimalState, eta: np.ndarray, U: int) -> "ConsensusState":
        K, N, M = st.K, st.N, st.M
        W, F, c, p = st.W, st.F, st.c, st.p
        return cls(
            eta=np.array(eta, dtype=float),
            Psi=np.repeat(W[None], K, axis=0),
            Gam=np.repeat(W[None], N, axis=0),
            T=np.repeat(F[:, None], N, axis=1),
            D=np.repeat(F[:, None], M, axis=1),
            V=np.repeat(F[:, None], U, axis=1),
            q=p.copy(),
            y=np.repeat(p[:, None], M, axis=1),
            phi=np.repeat(p[:, None], N, axis=1),
            x=np.repeat(p[:, None], U, axis=1),
            r=c.copy(),
            f=np.repeat(c[:, None], M, axis=1),
        )


# error term of each copy family, named after the copy it belongs to
ERROR_OF = {
    "eta": "xi", "Psi": "Lam", "Gam": "Xi", "T": "O", "D": "B", "V": "E",
    "q": "l", "y": "u", "phi": "Pi", "x": "Delta", "r": "m", "f": "n",
}


@dataclass
class DualState:
    """Scaled consensus duals (error terms) and inequality multipliers.

    Error terms carry the shape of their copy. Multipliers: ``lam`` (U,)
    for the sensing constraint (shared by the eta, V and x blocks of the
    same receiver), ``theta`` (N,), ``iota``/``delta`` (K, N), ``mu``/``pi``
    /``chi``/``nu`` (K,), ``tau``/``o``/``sigma`` (K, M), ``omega``/``varpi``
    (K, M, N) on the link-nulling entries, ``zeta``/``Omega`` (K, N, M).
    """

    xi: np.ndarray
    Lam: np.ndarray
    Xi: np.ndarray
    O: np.ndarray
    B: np.ndarray
    E: np.ndarray
    l: np.ndarray
    u: np.ndarray
    Pi: np.ndarray
    Delta: np.ndarray
    m: np.ndarray
    n: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    iota: np.ndarray
    delta: np.ndarray
    mu: np.ndarray
    pi: np.ndarray
    tau: np.ndarray
    omega: np.ndarray
    varpi: np.ndarray
    o: np.ndarray
    sigma: np.ndarray
    chi: np.ndarray
    nu: np.ndarray
    zeta: np.ndarray
    Omega: np.ndarray

    MULTIPLIERS = ("lam", "theta", "iota", "delta", "mu", "pi", "tau", "omega",
                   "varpi", "o", "sigma", "chi", "nu", "zeta", "Omega")

    def copy(self) -> "DualState":
        return replace(self, **{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def multipliers(self) -> dict:
        return {k: getattr(self, k) for k in self.MULTIPLIERS}

    @classmethod
    def zeros_like(cls, cons: ConsensusState) -> "DualState":
        K, N, M = cons.q.shape
        U = cons.eta.shape[0]
        errs = {ERROR_OF[name]: np.zeros_like(getattr(cons, name)) for name in ERROR_OF}
        return cls(
            **errs,
            lam=np.zeros(U), theta=np.zeros(N), iota=np.zeros((K, N)), delta=np.zeros((K, N)),
            mu=np.zeros(K), pi=np.zeros(K), tau=np.zeros((K, M)), omega=np.zeros((K, M, N)),
            varpi=np.zeros((K, M, N)), o=np.zeros((K, M)), sigma=np.zeros((K, M)),
            chi=np.zeros(K), nu=np.zeros(K), zeta=np.zeros((K, N, M)), Omega=np.zeros((K, N, M)),
        )

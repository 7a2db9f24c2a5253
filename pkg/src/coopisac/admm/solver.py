"""Outer consensus-ADMM loop: masters, copies, error terms, recovery."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..channel import ChannelSet
from ..metrics import PrimalState, RateThresholds, check_feasibility, objective
from ..recovery import finalize
from . import updates as up
from .state import ERROR_OF, ConsensusState, DualState, Problem, SolverConfig

FAMILIES = tuple(ERROR_OF)
RATE_CONSTRAINTS = ("private_rate", "common_rate", "due_rate", "common_split")


@dataclass
class ConvergenceTrace:
    """Per-iteration record of the run.

    ``to_csv`` writes the deterministic columns only; wall-clock times go to
    ``to_timing_csv`` so that identical runs give identical trace files.
    """

    rows: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    converged: bool = False
    status: str = "not_converged"

    COLUMNS = ("iteration", "objective_bits", "max_residual",
               *(f"res_{f}" for f in FAMILIES), "min_rate_slack")

    def append(self, row: dict, wall_ms: float) -> None:
        self.rows.append(row)
        self.wall_ms.append(wall_ms)

    @property
    def objective(self) -> np.ndarray:
        return np.array([r["objective_bits"] for r in self.rows])

    @property
    def max_residual(self) -> np.ndarray:
        return np.array([r["max_residual"] for r in self.rows])

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([r["iteration"], *(repr(float(r[c])) for c in self.COLUMNS[1:])])

    def to_timing_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "wall_time_ms"])
            for r, t in zip(self.rows, self.wall_ms):
                w.writerow([r["iteration"], f"{t:.3f}"])


def initial_state(channels: ChannelSet, thresholds: RateThresholds, beams: str = "sensing",
                  rounds: int = 10) -> PrimalState:
    """Unit-modulus matched beams at full per-element power, all links on.

    ``beams="link"`` points column m of F_k along g_{k,m}. ``beams="sensing"``
    co-phases F with a weighted sum of the radar channels instead and
    reweights the receivers ``rounds`` times toward the weakest one,
    keeping the best max-min start.
    """
    K, M, N, P = channels.K, channels.M, channels.N, thresholds.P_t
    W = np.empty((N, K + 1), complex)
    W[:, 1:] = np.exp(1j * np.angle(channels.h.T)) * np.sqrt(P / (K + 1))
    combined = np.sum(np.exp(1j * np.angle(channels.h)), axis=0)
    W[:, 0] = np.exp(1j * np.angle(combined)) * np.sqrt(P / (K + 1))
    F = np.exp(1j * np.angle(np.transpose(channels.g, (0, 2, 1)))) * np.sqrt(P / M)
    st = PrimalState(W=W, F=F, c=np.full((K, N, M), thresholds.R2 / K), p=np.ones((K, N, M)))
    if beams == "link":
        return st
    if beams != "sensing":
        raise ValueError("solver.init must be 'sensing' or 'link'")
    z = channels.z
    w = 1.0 / np.sqrt(np.sum(np.abs(z) ** 2, axis=(0, 1, 3)))
    best = -np.inf
    for _ in range(max(rounds, 1)):
        trial = st.copy()
        trial.F = np.exp(1j * np.angle(np.einsum("kmun,u->knm", z, w))) * np.sqrt(P / M)
        s = raw_sensing_power(channels, trial)
        if s.min() > best:
            best, F = s.min(), trial.F
        w = w / np.sqrt(np.maximum(s, 1e-300))
        w /= w.sum()
    st.F = F
    return st


def raw_sensing_power(channels: ChannelSet, st: PrimalState) -> np.ndarray:
    """|sum_k sum_m z_{k,m,u}^H (F_k[:, m] p_k[:, m])|^2 / sigma_u^2 for every u."""
    amp = np.einsum("kmun,knm->u", np.conj(channels.z), st.F * st.p)
    return np.abs(amp) ** 2 / channels.noise_sense


def residuals(master: PrimalState, cons: ConsensusState) -> dict:
    """Largest ||copy - master|| / (1 + ||master||) of every copy family."""
    def rel(copies, ref, axes):
        diff = np.sqrt(np.sum(np.abs(copies - ref) ** 2, axis=axes))
        return float(np.max(diff) / (1.0 + np.sqrt(np.sum(np.abs(ref) ** 2))))

    W, F, c, p = master.W, master.F, master.c, master.p
    mat = (-2, -1)
    out = {"eta": float(np.max(np.abs(cons.eta - master.gamma)) / (1.0 + abs(master.gamma)))}
    out["Psi"] = rel(cons.Psi, W[None], mat)
    out["Gam"] = rel(cons.Gam, W[None], mat)
    for name, ref, src in (("q", p, cons.q), ("r", c, cons.r)):
        out[name] = max(rel(src[k], ref[k], mat) for k in range(ref.shape[0]))
    for name, ref in (("T", F), ("D", F), ("V", F), ("y", p), ("phi", p), ("x", p), ("f", c)):
        src = getattr(cons, name)
        out[name] = max(rel(src[k], ref[k][None], mat) for k in range(ref.shape[0]))
    return {f: out[f] for f in FAMILIES}


class Solver:
    """One consensus-ADMM run; :func:`solve` is the usual entry point."""

    def __init__(self, channels: ChannelSet, thresholds: RateThresholds, config: SolverConfig,
                 start: PrimalState | None = None):
        self.channels = channels
        self.thresholds = thresholds
        self.cfg = config
        st = initial_state(channels, thresholds, config.init) if start is None else start.copy()
        is0 = raw_sensing_power(channels, st)
        s_ref = config.sensing_scale * float(max(np.min(is0), 1e-30))
        self.prob = Problem.from_channels(channels, thresholds, s_ref)
        self.a = self.prob.sensing_weights()
        eta0 = is0 / s_ref
        st.gamma = float(np.min(eta0))
        self.master = st
        self.cons = ConsensusState.from_masters(st, eta0, self.prob.U)
        self.duals = DualState.zeros_like(self.cons)
        self._blend = self.cons
        self.r = 0

    # ------------------------------------------------------------------
    def relaxed(self) -> ConsensusState:
        """Copies blended with the current masters, alpha * copy + (1 - alpha) * master."""
        a = self.cfg.relaxation
        if a == 1.0:
            return self.cons
        c, st = self.cons, self.master
        ref = {
            "eta": st.gamma, "Psi": st.W[None], "Gam": st.W[None], "T": st.F[:, None],
            "D": st.F[:, None], "V": st.F[:, None], "q": st.p, "y": st.p[:, None],
            "phi": st.p[:, None], "x": st.p[:, None], "r": st.c, "f": st.c[:, None],
        }
        return ConsensusState(**{k: a * getattr(c, k) + (1.0 - a) * v for k, v in ref.items()})

    def update_masters(self) -> None:
        st = self.master
        st.gamma, st.W, st.F, st.c, st.p = up.masters_closed(self._blend, self.duals, self.cfg.rho)

    def update_copies(self) -> None:
        cfg, prob, st, d = self.cfg, self.prob, self.master, self.duals
        old = self.cons
        new = old.copy()
        exact = cfg.multiplier_rule == "exact" and not cfg.freeze_multipliers
        ascent = cfg.multiplier_rule == "ascent" and not cfg.freeze_multipliers
        printed = cfg.printed_forms
        P = prob.thresholds.P_t
        R2 = prob.thresholds.R2
        Rb1, Rb2, Rb3 = prob.Rb
        step = lambda fam: cfg.step(fam, self.r)  # noqa: E731

        # sensing block (eta_u, V_uk, x_uk)
        eta0 = st.gamma - d.xi
        V0 = st.F[:, None] - d.E
        x0 = st.p[:, None] - d.Delta
        Vr, xr = self._sca_reference(old.V, old.x, st.F[:, None], st.p[:, None])
        if exact:
            d.lam = up.sensing_multiplier(eta0, V0, x0, Vr, xr, self.a)
        new.eta, new.V, new.x = up.sensing_closed(eta0, V0, x0, Vr, xr, self.a, d.lam, printed)
        new.x = np.real(new.x)

        # per-element power blocks
        G0 = st.W[None] - d.Xi
        if exact:
            d.theta = up.gam_multipliers(G0, P)
        new.Gam = up.gam_closed(G0, d.theta)
        T0 = st.F[:, None] - d.O
        if exact:
            d.iota = up.t_multipliers(T0, old.phi, P)
        new.T = up.t_closed(T0, old.phi, d.iota, printed)
        phi0 = st.p[:, None] - d.Pi
        if exact:
            d.delta = up.phi_multipliers(phi0, old.T, P)
        new.phi = up.phi_closed(phi0, old.T, d.delta)

        # CUE rate block
        Psi0 = st.W[None] - d.Lam
        if exact:
            d.mu, d.pi = up.psi_multipliers(Psi0, prob.hn, old.Psi, Rb1, Rb3)
        new.Psi = up.psi_closed(Psi0, prob.hn, old.Psi, d.mu, d.pi, Rb1, Rb3)

        # DUE block (D_mk, y_mk, f_mk)
        D0 = st.F[:, None] - d.B
        y0 = st.p[:, None] - d.u
        f0 = st.c[:, None] - d.n
        if exact:
            d.tau, d.o, d.sigma = up.dy_multipliers(D0, y0, prob.gn, old.D, old.y, old.f, f0,
                                                    d.omega, d.varpi, Rb2, R2)
        new.D = up.d_closed(D0, prob.gn, old.D, old.y, d.tau, d.omega, Rb2, printed)
        new.y = np.real(up.y_closed(y0, prob.gn, old.D, old.y, old.f, d.o, d.varpi, d.sigma, Rb2, printed))
        new.f = up.f_closed(f0, old.y, d.sigma, printed)

        # common-split block (r_kk, q_kk)
        Rc = up.common_rates(old.Psi, prob.hn)
        r0 = st.c - d.m
        if exact:
            d.chi = up.r_multipliers(r0, old.q, Rc)
        new.r = up.r_closed(r0, old.q, d.chi)
        q0 = st.p - d.l
        if exact:
            d.nu, d.zeta, d.Omega = up.q_multipliers(q0, old.r, Rc)
        new.q = up.q_closed(q0, old.r, d.nu, d.zeta, d.Omega)

        if not cfg.freeze_multipliers:
            d.omega = up.ascend(d.omega, up.link_violation(new.D, old.y), step("omega"))
            d.varpi = up.ascend(d.varpi, up.link_violation(old.D, new.y), step("varpi"))
        if ascent:
            self._ascent_step(new, old, Rc, step, printed)
        self.cons = new

    def _sca_reference(self, *pairs):
        if self.cfg.sca_reference == "copy":
            return pairs[: len(pairs) // 2]
        return tuple(np.broadcast_to(x, c.shape) for c, x in zip(pairs[: len(pairs) // 2], pairs[len(pairs) // 2:]))

    def _ascent_step(self, new, old, Rc, step, printed) -> None:
        d, prob = self.duals, self.prob
        P = prob.thresholds.P_t
        Rb1, Rb2, Rb3 = prob.Rb
        K, M = prob.K, prob.M
        g_sense = new.eta - up.sensing_power(new.V, new.x, self.a)
        d.lam = up.ascend(d.lam, g_sense, step("lambda"), printed)
        d.theta = up.ascend(d.theta, up.row_power_excess(up.gam_rows(new.Gam), P), step("theta"), printed)
        d.iota = up.ascend(d.iota, up.row_power_excess(up._diag_rows(new.T) * up._diag_rows(old.phi), P),
                           step("iota"), printed)
        d.delta = up.ascend(d.delta, up.row_power_excess(up._diag_rows(old.T) * up._diag_rows(new.phi), P),
                            step("delta"), printed)
        g1, g2 = up.psi_constraints(up.psi_amplitudes(new.Psi, prob.hn), up.psi_amplitudes(old.Psi, prob.hn), Rb1, Rb3)
        d.mu = up.ascend(d.mu, g1, step("mu"), printed)
        d.pi = up.ascend(d.pi, g2, step("pi"), printed)
        sinr = np.broadcast_to(up.due_sinr_constraint(prob.gn, new.D, new.y, Rb2)[None], (K, M))
        d.tau = up.ascend(d.tau, sinr, step("tau"), printed)
        d.o = up.ascend(d.o, sinr, step("o"), printed)
        share = np.broadcast_to(up.share_constraint(new.y, new.f, prob.thresholds.R2)[None], (K, M))
        d.sigma = up.ascend(d.sigma, share, step("sigma"), printed)
        d.chi = up.ascend(d.chi, up.split_constraint(old.q, new.r, Rc), step("chi"), printed)
        d.nu = up.ascend(d.nu, up.split_constraint(new.q, old.r, Rc), step("nu"), printed)
        d.zeta = up.ascend(d.zeta, -new.q, step("zeta"), printed)
        d.Omega = up.ascend(d.Omega, new.q - 1.0, step("Omega"), printed)

    def update_errors(self) -> None:
        c, d, st = self._blend, self.duals, self.master
        d.xi += c.eta - st.gamma
        d.Lam += c.Psi - st.W[None]
        d.Xi += c.Gam - st.W[None]
        d.O += c.T - st.F[:, None]
        d.B += c.D - st.F[:, None]
        d.E += c.V - st.F[:, None]
        d.l += c.q - st.p
        d.u += c.y - st.p[:, None]
        d.Pi += c.phi - st.p[:, None]
        d.Delta += c.x - st.p[:, None]
        d.m += c.r - st.c
        d.n += c.f - st.c[:, None]

    def step(self) -> dict:
        """One outer iteration; returns the consensus residuals."""
        self.update_masters()
        self.update_copies()
        self._blend = self.relaxed()
        self.update_errors()
        self.r += 1
        return residuals(self.master, self.cons)

    # ------------------------------------------------------------------
    def raw_master(self) -> PrimalState:
        st = self.master.copy()
        st.gamma = self.master.gamma * self.prob.s_ref
        return st

    def trial(self):
        """Recovered copy of the current masters, its objective and rate slack."""
        out, sched = finalize(self.channels, self.raw_master(), self.thresholds, self.cfg.threshold)
        rep = check_feasibility(self.channels, out, self.thresholds)
        slack = min(rep.min_slack(p) for p in RATE_CONSTRAINTS)
        return out, sched, objective(self.channels, out), slack, rep


def solve(channels: ChannelSet, thresholds: RateThresholds, config: SolverConfig | None = None,
          start: PrimalState | None = None):
    """Run the distributed algorithm to termination.

    Returns ``(state, trace)`` where ``state`` carries the recovered binary
    schedule. The loop stops once the fractional objective change drops
    below ``eps`` with every consensus residual under ``consensus_tol`` and
    the recovered iterate feasible;
    otherwise it stops at ``max_iter`` with ``trace.status ==
    "not_converged"`` and returns the best feasible trial iterate.
    """
    cfg = config or SolverConfig()
    solver = Solver(channels, thresholds, cfg, start)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    res = residuals(solver.master, solver.cons)
    out, _, obj, slack, rep = solver.trial()
    trace.append(_row(0, obj, res, slack), 0.0)
    best = (obj if rep.satisfied else -np.inf, out)
    prev = obj
    for it in range(1, cfg.max_iter + 1):
        res = solver.step()
        out, _, obj, slack, rep = solver.trial()
        trace.append(_row(it, obj, res, slack), 1e3 * (time.perf_counter() - t0))
        if rep.satisfied and obj > best[0]:
            best = (obj, out)
        change = abs(obj - prev) / max(abs(prev), 1e-12)
        prev = obj
        if (it >= cfg.min_iter and change < cfg.eps and max(res.values()) <= cfg.consensus_tol
                and rep.satisfied):
            trace.converged = True
            trace.status = "converged"
            return out, trace
    final = best[1] if np.isfinite(best[0]) else out
    return final, trace


def _row(it: int, obj: float, res: dict, slack: float) -> dict:
    row = {"iteration": it, "objective_bits": obj, "max_residual": max(res.values())}
    row.update({f"res_{f}": v for f, v in res.items()})
    row["min_rate_slack"] = slack
    return row

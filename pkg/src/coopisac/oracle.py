"""Independent numerical checks of the closed-form updates and metrics.

Each block update of :mod:`coopisac.admm.updates` claims to be the
stationary point of a small Lagrangian. Here those Lagrangians are written
out again from scratch with plain loops and slicing, and a central
finite-difference gradient is taken at the closed-form point. Real and
imaginary parts are treated as independent real coordinates throughout,
so no Wirtinger convention is involved.

The metric formulas get the same treatment: :func:`metric_reference`
recomputes every rate and power from explicit column slices.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .admm import updates as up
from .admm.state import ERROR_OF, ConsensusState, DualState
from .channel import ChannelSet
from .metrics import PrimalState

UPDATE_IDS = tuple(f"P{i}" for i in range(2, 19))
UPDATE_NAMES = {
    "P2": "gamma", "P3": "W", "P4": "F", "P5": "c", "P6": "p", "P7": "eta",
    "P8": "Gamma", "P9": "T", "P10": "Psi", "P11": "D", "P12": "y", "P13": "r",
    "P14": "f", "P15": "q", "P16": "phi", "P17": "x", "P18": "V",
}
# updates whose Lagrangian carries a linearized (SCA) term
SCA_BEARING = frozenset({"P7", "P10", "P11", "P12", "P17", "P18"})
# updates with a printed variant kept behind ``printed_forms``
PRINTED = frozenset({"P9", "P11", "P12", "P14", "P18"})
STATIONARITY_TOL = 1e-6
SCA_TOL = 1e-5


# ------------------------------------------------------------------ numerics

def finite_diff_grad(fun, point, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a real function.

    For complex ``point`` the result is ``dRe + 1j * dIm``, the two parts
    differentiated independently.
    """
    x = np.array(point, dtype=complex if np.iscomplexobj(point) else float)
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    dirs = (1.0, 1j) if np.iscomplexobj(x) else (1.0,)
    for i in range(flat.size):
        for d in dirs:
            old = flat[i]
            flat[i] = old + h * d
            fp = fun(x)
            flat[i] = old - h * d
            fm = fun(x)
            flat[i] = old
            grad[i] += d * (fp - fm) / (2.0 * h)
    return grad.reshape(x.shape)


@dataclass
class ProxResult:
    point: np.ndarray
    certified: bool
    iterations: int
    pg_norm: float


def numeric_prox(fun, project, start, grad=None, tol: float = 1e-8, max_iter: int = 10_000) -> ProxResult:
    """Projected gradient descent with Armijo backtracking.

    ``project`` maps a point onto the feasible set; ``grad`` defaults to
    :func:`finite_diff_grad`. The result is certified when the projected
    gradient step ``||x - project(x - g)||`` falls to ``tol (1 + ||x||)``.
    """
    grad = grad or (lambda z: finite_diff_grad(fun, z))
    x = project(np.array(start))
    step = 1.0
    pg = np.inf
    for it in range(1, max_iter + 1):
        g = grad(x)
        pg = float(np.linalg.norm(x - project(x - g)))
        if pg <= tol * (1.0 + np.linalg.norm(x)):
            return ProxResult(x, True, it, pg)
        fx = fun(x)
        step = min(step * 2.0, 1e6)
        while True:
            cand = project(x - step * g)
            if fun(cand) <= fx - 0.5 / step * np.linalg.norm(cand - x) ** 2 or step < 1e-14:
                break
            step *= 0.5
        x = cand
    return ProxResult(x, False, max_iter, pg)


# ----------------------------------------------------------------- instances

@dataclass
class Instance:
    """Random data for one tiny verification case (U = K)."""

    seed: int
    N: int
    K: int
    M: int
    data: dict = field(repr=False)

    @property
    def U(self) -> int:
        return self.K


def _cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_instance(seed: int, N: int | None = None, K: int | None = None, M: int | None = None) -> Instance:
    """Channels, prox centres, SCA references and positive multipliers."""
    rng = np.random.default_rng(seed)
    N = N or int(rng.integers(1, 5))
    K = K or int(rng.integers(1, 3))
    M = M or int(rng.integers(1, 3))
    U = K
    mult = lambda *s: rng.exponential(1.0, s)  # noqa: E731
    d = dict(
        rho=float(rng.uniform(0.2, 3.0)),
        P=float(rng.uniform(0.5, 2.0)),
        Rb1=float(rng.uniform(0.05, 1.0)),
        Rb2=float(rng.uniform(0.05, 1.0)),
        Rb3=float(rng.uniform(0.05, 1.0)),
        R2=float(rng.uniform(0.05, 1.0)),
        hn=_cplx(rng, K, N),
        gn=_cplx(rng, K, M, N),
        a=_cplx(rng, U, K, N, M) / np.sqrt(N * M * K),
        eta0=rng.standard_normal(U),
        V0=_cplx(rng, K, U, N, M), V_ref=_cplx(rng, K, U, N, M),
        x0=rng.standard_normal((K, U, N, M)), x_ref=rng.uniform(0, 1, (K, U, N, M)),
        G0=_cplx(rng, N, N, K + 1),
        T0=_cplx(rng, K, N, N, M), T_ref=_cplx(rng, K, N, N, M),
        phi0=rng.standard_normal((K, N, N, M)), phi_ref=rng.uniform(0, 1, (K, N, N, M)),
        Psi0=_cplx(rng, K, N, K + 1), Psi_ref=_cplx(rng, K, N, K + 1),
        D0=_cplx(rng, K, M, N, M), D_ref=_cplx(rng, K, M, N, M),
        y0=rng.standard_normal((K, M, N, M)), y_ref=rng.uniform(0, 1, (K, M, N, M)),
        f0=rng.standard_normal((K, M, N, M)), f_ref=rng.uniform(0, 1, (K, M, N, M)),
        r0=rng.standard_normal((K, N, M)), q_ref=rng.uniform(0, 1, (K, N, M)),
        q0=rng.standard_normal((K, N, M)), r_ref=rng.uniform(0, 1, (K, N, M)),
        Rc=rng.uniform(0.0, 1.0, K),
        lam=mult(U), theta=mult(N), iota=mult(K, N), delta=mult(K, N),
        mu=mult(K), pi=mult(K), tau=mult(K, M), o=mult(K, M), sigma=mult(K, M),
        omega=mult(K, M, N), varpi=mult(K, M, N), chi=mult(K), nu=mult(K),
        zeta=mult(K, N, M), Omega=mult(K, N, M),
    )
    cons = ConsensusState(
        eta=rng.standard_normal(U), Psi=_cplx(rng, K, N, K + 1), Gam=_cplx(rng, N, N, K + 1),
        T=_cplx(rng, K, N, N, M), D=_cplx(rng, K, M, N, M), V=_cplx(rng, K, U, N, M),
        q=rng.uniform(-0.5, 1.5, (K, N, M)), y=rng.uniform(-0.5, 1.5, (K, M, N, M)),
        phi=rng.uniform(-0.5, 1.5, (K, N, N, M)), x=rng.uniform(-0.5, 1.5, (K, U, N, M)),
        r=rng.standard_normal((K, N, M)), f=rng.standard_normal((K, M, N, M)),
    )
    errs = DualState.zeros_like(cons)
    for name, err in ERROR_OF.items():
        src = getattr(cons, name)
        noise = rng.standard_normal(src.shape) * 0.3
        if np.iscomplexobj(src):
            noise = noise + 1j * rng.standard_normal(src.shape) * 0.3
        setattr(errs, err, noise)
    d["cons"], d["errs"] = cons, errs
    return Instance(seed, N, K, M, d)


# ------------------------------------------------------------- Lagrangians
# Every block minimizes ||x - x0||^2 + sum(multiplier * constraint); the
# functions below spell that out with loops over the copy indices.

def _sq(x) -> float:
    return float(np.sum(np.abs(x) ** 2))


def _lag_gamma(g, d):
    cons, errs, rho = d["cons"], d["errs"], d["rho"]
    g = float(np.real(np.ravel(g)[0]))
    return -(g - rho / 2.0 * sum((cons.eta[u] - g + errs.xi[u]) ** 2 for u in range(len(cons.eta))))


def _lag_W(W, d):
    c, e = d["cons"], d["errs"]
    return sum(_sq(c.Psi[k] + e.Lam[k] - W) for k in range(c.Psi.shape[0])) + sum(
        _sq(c.Gam[n] + e.Xi[n] - W) for n in range(c.Gam.shape[0]))


def _lag_F(F, d):
    c, e = d["cons"], d["errs"]
    K, N, M, U = F.shape[0], F.shape[1], c.D.shape[1], c.V.shape[1]
    total = 0.0
    for k in range(K):
        total += sum(_sq(c.T[k, n] + e.O[k, n] - F[k]) for n in range(N))
        total += sum(_sq(c.D[k, m] + e.B[k, m] - F[k]) for m in range(M))
        total += sum(_sq(c.V[k, u] + e.E[k, u] - F[k]) for u in range(U))
    return total


def _lag_c(cc, d):
    c, e = d["cons"], d["errs"]
    total = 0.0
    for k in range(cc.shape[0]):
        total += _sq(c.r[k] + e.m[k] - cc[k])
        total += sum(_sq(c.f[k, m] + e.n[k, m] - cc[k]) for m in range(c.f.shape[1]))
    return total


def _lag_p_blocks(beta, d):
    """p objective as a function of its block values beta (K, M)."""
    c, e = d["cons"], d["errs"]
    N = c.q.shape[1]
    p = np.repeat(np.real(beta)[:, None, :], N, axis=1)
    total = 0.0
    for k in range(p.shape[0]):
        total += _sq(c.q[k] + e.l[k] - p[k])
        total += sum(_sq(c.y[k, m] + e.u[k, m] - p[k]) for m in range(c.y.shape[1]))
        total += sum(_sq(c.phi[k, n] + e.Pi[k, n] - p[k]) for n in range(N))
        total += sum(_sq(c.x[k, u] + e.Delta[k, u] - p[k]) for u in range(c.x.shape[1]))
    return total


def _sense_sum(a, V, x, u):
    """sum_k sum_n sum_m a[u,k,n,m] V[k,u,n,m] x[k,u,n,m]."""
    K, _, N, M = V.shape
    return sum(a[u, k, n, m] * V[k, u, n, m] * x[k, u, n, m]
               for k in range(K) for n in range(N) for m in range(M))


def _lag_sensing(eta, V, x, d):
    a, Vr, xr = d["a"], d["V_ref"], d["x_ref"]
    total = _sq(eta - d["eta0"]) + _sq(V - d["V0"]) + _sq(x - d["x0"])
    for u in range(len(eta)):
        s_ref = _sense_sum(a, Vr, xr, u)
        delta = _sense_sum(a, V, xr, u) + _sense_sum(a, Vr, x, u) - 2.0 * s_ref
        model = abs(s_ref) ** 2 + 2.0 * np.real(np.conj(s_ref) * delta)
        total += d["lam"][u] * (np.real(eta[u]) - model)
    return float(np.real(total))


def _lag_Gamma(G, d):
    total = 0.0
    for n in range(G.shape[0]):
        total += _sq(G[n] - d["G0"][n]) + d["theta"][n] * (_sq(G[n][n, :]) - d["P"])
    return total


def _lag_T(T, d):
    total = 0.0
    K, N = T.shape[:2]
    for k in range(K):
        for n in range(N):
            row = np.sum(np.abs(T[k, n][n, :]) ** 2 * d["phi_ref"][k, n][n, :] ** 2)
            total += _sq(T[k, n] - d["T0"][k, n]) + d["iota"][k, n] * (row - d["P"])
    return total


def _lag_phi(phi, d):
    phi = np.real(phi)
    total = 0.0
    K, N = phi.shape[:2]
    for k in range(K):
        for n in range(N):
            row = np.sum(np.abs(d["T_ref"][k, n][n, :]) ** 2 * phi[k, n][n, :] ** 2)
            total += _sq(phi[k, n] - d["phi0"][k, n]) + d["delta"][k, n] * (row - d["P"])
    return total


def _lag_Psi(Psi, d):
    hn, ref = d["hn"], d["Psi_ref"]
    K = hn.shape[0]
    total = 0.0
    for k in range(K):
        h = hn[k]
        amp = [np.vdot(h, Psi[k][:, i]) for i in range(K + 1)]
        amp_r = [np.vdot(h, ref[k][:, i]) for i in range(K + 1)]
        lb_own = 2.0 * np.real(np.conj(amp_r[k + 1]) * amp[k + 1]) - abs(amp_r[k + 1]) ** 2
        lb_com = 2.0 * np.real(np.conj(amp_r[0]) * amp[0]) - abs(amp_r[0]) ** 2
        priv = sum(abs(amp[i]) ** 2 for i in range(1, K + 1) if i != k + 1)
        allp = sum(abs(amp[i]) ** 2 for i in range(1, K + 1))
        total += _sq(Psi[k] - d["Psi0"][k])
        total += d["mu"][k] * (d["Rb1"] * (priv + 1.0) - lb_own)
        total += d["pi"][k] * (d["Rb3"] * (allp + 1.0) - lb_com)
    return total


def _due_amp(gn, D_list, y_list, m, j):
    """sum_k g_{k,m}^H (D_k[:, j] o y_k[:, j]) over the supplied per-CUE copies."""
    return sum(np.vdot(gn[k, m], D_list[k][:, j] * y_list[k][:, j]) for k in range(len(D_list)))


def _lag_D(D, d):
    gn, Dr, yr = d["gn"], d["D_ref"], d["y_ref"]
    K, M = D.shape[:2]
    total = 0.0
    for k in range(K):
        for m in range(M):
            Ds = [D[k, m] if kk == k else Dr[kk, m] for kk in range(K)]
            ys = [yr[kk, m] for kk in range(K)]
            amps = [_due_amp(gn, Ds, ys, m, j) for j in range(M)]
            a_ref = _due_amp(gn, [Dr[kk, m] for kk in range(K)], ys, m, m)
            interf = sum(abs(amps[j]) ** 2 for j in range(M) if j != m)
            lin = 2.0 * np.real(np.conj(a_ref) * amps[m]) - abs(a_ref) ** 2
            total += _sq(D[k, m] - d["D0"][k, m])
            total += d["tau"][k, m] * (d["Rb2"] * (interf + 1.0) - lin)
            total += np.sum(d["omega"][k, m] * np.abs((1.0 - yr[k, m][:, m]) * D[k, m][:, m]) ** 2)
    return float(total)


def _lag_y(y, d):
    y = np.real(y)
    gn, Dr, yr, fr = d["gn"], d["D_ref"], d["y_ref"], d["f_ref"]
    K, M = y.shape[:2]
    total = 0.0
    for k in range(K):
        for m in range(M):
            Ds = [Dr[kk, m] for kk in range(K)]
            ys = [y[k, m] if kk == k else yr[kk, m] for kk in range(K)]
            amps = [_due_amp(gn, Ds, ys, m, j) for j in range(M)]
            a_ref = _due_amp(gn, Ds, [yr[kk, m] for kk in range(K)], m, m)
            interf = sum(abs(amps[j]) ** 2 for j in range(M) if j != m)
            lin = 2.0 * np.real(np.conj(a_ref) * amps[m]) - abs(a_ref) ** 2
            share = sum(ys[kk][0, m] * fr[kk, m][0, m] for kk in range(K))
            total += _sq(y[k, m] - d["y0"][k, m])
            total += d["o"][k, m] * (d["Rb2"] * (interf + 1.0) - lin)
            total += np.sum(d["varpi"][k, m] * np.abs((1.0 - y[k, m][:, m]) * Dr[k, m][:, m]) ** 2)
            total += d["sigma"][k, m] * (d["R2"] - share)
    return float(total)


def _lag_f(f, d):
    f = np.real(f)
    yr = d["y_ref"]
    K, M = f.shape[:2]
    total = 0.0
    for k in range(K):
        for m in range(M):
            share = sum(yr[kk, m][0, m] * (f[k, m][0, m] if kk == k else d["f_ref"][kk, m][0, m])
                        for kk in range(K))
            total += _sq(f[k, m] - d["f0"][k, m]) + d["sigma"][k, m] * (d["R2"] - share)
    return total


def _lag_r(r, d):
    r = np.real(r)
    total = 0.0
    for k in range(r.shape[0]):
        split = sum(d["q_ref"][k][0, m] * r[k][0, m] for m in range(r.shape[2]))
        total += _sq(r[k] - d["r0"][k]) + d["chi"][k] * (split - d["Rc"][k])
    return total


def _lag_q(q, d):
    q = np.real(q)
    total = 0.0
    for k in range(q.shape[0]):
        split = sum(d["r_ref"][k][0, m] * q[k][0, m] for m in range(q.shape[2]))
        total += _sq(q[k] - d["q0"][k]) + d["nu"][k] * (split - d["Rc"][k])
        total += np.sum(d["zeta"][k] * (-q[k])) + np.sum(d["Omega"][k] * (q[k] - 1.0))
    return total


# ------------------------------------------------------------ closed forms

def _sensing_point(d, printed):
    return up.sensing_closed(d["eta0"], d["V0"], d["x0"], d["V_ref"], d["x_ref"], d["a"], d["lam"], printed)


def closed_form(update_id: str, inst: Instance, printed: bool = False) -> np.ndarray:
    """The library's closed-form point for ``update_id`` on this instance."""
    d = inst.data
    if update_id in ("P2", "P3", "P4", "P5", "P6"):
        g, W, F, c, p = up.masters_closed(d["cons"], d["errs"], d["rho"])
        return {"P2": np.array([g]), "P3": W, "P4": F, "P5": c, "P6": p}[update_id]
    if update_id in ("P7", "P17", "P18"):
        eta, V, x = _sensing_point(d, printed)
        return {"P7": eta, "P17": x, "P18": V}[update_id]
    if update_id == "P8":
        return up.gam_closed(d["G0"], d["theta"])
    if update_id == "P9":
        return up.t_closed(d["T0"], d["phi_ref"], d["iota"], printed)
    if update_id == "P16":
        return up.phi_closed(d["phi0"], d["T_ref"], d["delta"])
    if update_id == "P10":
        return up.psi_closed(d["Psi0"], d["hn"], d["Psi_ref"], d["mu"], d["pi"], d["Rb1"], d["Rb3"])
    if update_id == "P11":
        return up.d_closed(d["D0"], d["gn"], d["D_ref"], d["y_ref"], d["tau"], d["omega"], d["Rb2"], printed)
    if update_id == "P12":
        return up.y_closed(d["y0"], d["gn"], d["D_ref"], d["y_ref"], d["f_ref"], d["o"], d["varpi"],
                           d["sigma"], d["Rb2"], printed)
    if update_id == "P13":
        return up.r_closed(d["r0"], d["q_ref"], d["chi"])
    if update_id == "P14":
        return up.f_closed(d["f0"], d["y_ref"], d["sigma"], printed)
    if update_id == "P15":
        return up.q_closed(d["q0"], d["r_ref"], d["nu"], d["zeta"], d["Omega"])
    raise KeyError(f"unknown update id {update_id!r}")


def lagrangian(update_id: str, inst: Instance, printed: bool = False):
    """The block Lagrangian as a function of the block variable alone."""
    d = inst.data
    if update_id in ("P7", "P17", "P18"):
        eta, V, x = _sensing_point(d, printed)
        return {
            "P7": lambda z: _lag_sensing(np.real(z), V, x, d),
            "P17": lambda z: _lag_sensing(eta, V, np.real(z), d),
            "P18": lambda z: _lag_sensing(eta, z, x, d),
        }[update_id]
    table = {
        "P2": _lag_gamma, "P3": _lag_W, "P4": _lag_F, "P5": _lag_c, "P8": _lag_Gamma,
        "P9": _lag_T, "P10": _lag_Psi, "P11": _lag_D, "P12": _lag_y, "P13": _lag_r,
        "P14": _lag_f, "P15": _lag_q, "P16": _lag_phi,
    }
    if update_id == "P6":
        return lambda beta: _lag_p_blocks(beta, d)
    return lambda z: table[update_id](z, d)


# ------------------------------------------------------------ stationarity

@dataclass
class CheckResult:
    case: str
    update_id: str
    passed: bool
    grad_norm: float
    notes: str = ""


def stationarity_check(update_id: str, inst: Instance, *, printed: bool = False,
                       perturb: float = 0.0, h: float = 1e-5) -> CheckResult:
    """Finite-difference gradient norm of the block Lagrangian at the closed form.

    Passes iff the norm is at most ``tol (1 + ||point||)`` with ``tol`` 1e-6
    (1e-5 for SCA-bearing blocks). ``c`` and ``p`` live on a box, so their
    measure is the projected-gradient step instead. ``perturb`` shifts one
    entry of the point before checking (negative control).
    """
    point = np.array(closed_form(update_id, inst, printed))
    if perturb:
        point.reshape(-1)[0] += perturb
    fun = lagrangian(update_id, inst, printed)
    tol = SCA_TOL if update_id in SCA_BEARING else STATIONARITY_TOL
    if update_id == "P5":
        g = finite_diff_grad(fun, point, h)
        norm = float(np.linalg.norm(point - np.maximum(point - g, 0.0)))
    elif update_id == "P6":
        blocks = point.mean(axis=1)
        spread = float(np.max(np.abs(point - blocks[:, None, :]))) if point.size else 0.0
        g = finite_diff_grad(fun, blocks, h)
        norm = float(np.linalg.norm(blocks - np.clip(blocks - g, 0.0, 1.0))) + spread
    else:
        norm = float(np.linalg.norm(finite_diff_grad(fun, point, h)))
    scale = 1.0 + float(np.linalg.norm(point))
    notes = []
    if update_id in SCA_BEARING:
        notes.append("sca")
    if printed:
        notes.append("printed form")
    if perturb:
        notes.append(f"perturbed by {perturb:g}")
    case = f"{update_id}/seed{inst.seed}/N{inst.N}K{inst.K}M{inst.M}"
    return CheckResult(case, update_id, norm <= tol * scale, norm, ", ".join(notes))


def run_suite(cases: int = 5, seed: int = 0, printed: bool = True) -> list:
    """Every update on ``cases`` random tiny instances, plus printed variants."""
    out = []
    for uid in UPDATE_IDS:
        for i in range(cases):
            inst = random_instance(seed + 1000 * i + int(uid[1:]))
            out.append(stationarity_check(uid, inst))
            if printed and uid in PRINTED:
                out.append(stationarity_check(uid, inst, printed=True))
    return out


def report_json(results) -> str:
    return json.dumps([{"case": r.case, "update_id": r.update_id, "pass": r.passed,
                        "grad_norm": r.grad_norm, "notes": r.notes} for r in results], indent=1)


def summary(results) -> str:
    lines = []
    for uid in UPDATE_IDS:
        own = [r for r in results if r.update_id == uid and "printed" not in r.notes]
        pr = [r for r in results if r.update_id == uid and "printed" in r.notes]
        line = f"{uid:>4} {UPDATE_NAMES[uid]:<6} {sum(r.passed for r in own)}/{len(own)} pass"
        if own:
            line += f"  max grad {max(r.grad_norm for r in own):.1e}"
        if pr:
            line += f"  printed form fails {sum(not r.passed for r in pr)}/{len(pr)}"
        lines.append(line)
    return "\n".join(lines)


def suite_passed(results) -> bool:
    return all(r.passed for r in results if "printed" not in r.notes)


# ---------------------------------------------------------------- SCA bound

def sca_lower_bound(h, psi, psi_ref) -> float:
    """Tangent minorant of |h^H psi|^2 at ``psi_ref``."""
    s, s_ref = np.vdot(h, psi), np.vdot(h, psi_ref)
    return float(abs(s_ref) ** 2 + 2.0 * np.real(np.conj(s_ref) * (s - s_ref)))


def sca_printed_bound(h, psi, psi_ref) -> complex:
    """The bound with the printed linear term ((H^T o A) vec(psi_ref^*))^T (psi - psi_ref)."""
    H = np.outer(h, np.conj(h))
    lin = (H.T @ np.conj(psi_ref)) @ (psi - psi_ref)
    return complex(abs(np.vdot(h, psi_ref)) ** 2 + lin)


def sca_dominance(seed: int, points: int = 1000, N: int = 4) -> dict:
    """Worst violation of bound <= |h^H psi|^2 over random points and the gap at the anchor."""
    rng = np.random.default_rng(seed)
    h, ref = _cplx(rng, N), _cplx(rng, N)
    worst = -np.inf
    for _ in range(points):
        psi = _cplx(rng, N) * rng.uniform(0.01, 3.0)
        worst = max(worst, sca_lower_bound(h, psi, ref) - abs(np.vdot(h, psi)) ** 2)
    anchor = abs(sca_lower_bound(h, ref, ref) - abs(np.vdot(h, ref)) ** 2)
    return {"max_violation": float(worst), "anchor_gap": float(anchor)}


# ------------------------------------------------------- metric reference

def metric_reference(channels: ChannelSet, state: PrimalState) -> dict:
    """Every rate, power and share recomputed from plain column slices."""
    K, M, N = channels.K, channels.M, channels.N
    W, F, c, p = state.W, state.F, state.c, state.p
    out = {"common": [], "private": [], "C": [], "share": [], "Rd": [], "rmi": [],
           "bs_row": [], "cue_row": np.zeros((K, N))}
    for k in range(K):
        h = channels.h[k]
        t = [abs(np.vdot(h, W[:, i])) ** 2 for i in range(K + 1)]
        allp = sum(t[1:])
        out["common"].append(np.log2(1.0 + t[0] / (allp + channels.noise_cue)))
        out["private"].append(np.log2(1.0 + t[k + 1] / (allp - t[k + 1] + channels.noise_cue)))
    for m in range(M):
        amps = [sum(np.vdot(channels.g[k, m], F[k][:, j] * p[k][:, j]) for k in range(K)) for j in range(M)]
        pw = [abs(a) ** 2 for a in amps]
        C = np.log2(1.0 + pw[m] / (sum(pw) - pw[m] + channels.noise_due))
        share = sum(p[k][0, m] * c[k][0, m] for k in range(K))
        out["C"].append(C)
        out["share"].append(share)
        out["Rd"].append(min(C, share))
    for u in range(K):
        amp = sum(np.vdot(channels.z[k, m, u], F[k][:, m] * p[k][:, m]) for k in range(K) for m in range(M))
        out["rmi"].append(np.log2(1.0 + abs(amp) ** 2 / channels.noise_sense))
    for n in range(N):
        out["bs_row"].append(sum(abs(W[n, i]) ** 2 for i in range(K + 1)))
        for k in range(K):
            out["cue_row"][k, n] = sum(abs(F[k][n, m] * p[k][n, m]) ** 2 for m in range(M))
    out = {k: np.array(v, dtype=float) for k, v in out.items()}
    out["objective"] = float(out["rmi"].min())
    out["sum_rate"] = float(out["private"].sum() + out["Rd"].sum())
    return out


def main(argv=None) -> int:
    import argparse

    ap = argparse.ArgumentParser(description="Run the closed-form stationarity suite.")
    ap.add_argument("--cases", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", default=None, help="write the JSON report here")
    args = ap.parse_args(argv)
    res = run_suite(args.cases, args.seed)
    print(summary(res))
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report_json(res))
    return 0 if suite_passed(res) else 1


if __name__ == "__main__":
    raise SystemExit(main())

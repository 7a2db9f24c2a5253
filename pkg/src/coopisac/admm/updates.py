"""Closed-form block updates of the consensus-ADMM iteration.

Every copy update is split in two parts: a closed form that takes its
multipliers as arguments (this is what the oracle certifies for arbitrary
multipliers), and a multiplier routine that either solves complementary
slackness of the block exactly or performs one projected dual-ascent step.

Each block minimizes ``||x - x0||^2 + sum_j mult_j g_j(x)`` over its copy,
where ``x0`` is the master minus the error term and ``g_j <= 0`` are the
block's (linearized) constraints; the penalty factor is absorbed into the
multipliers. All channels here are the noise-normalized ones held by
:class:`~coopisac.admm.state.Problem`. Copy layouts follow
:class:`~coopisac.admm.state.ConsensusState`.
"""
from __future__ import annotations

import numpy as np

from ..kernels import box_halfspace_multipliers, power_multipliers

_BISECT_ITERS = 60
_GROW_LIMIT = 60


def ascend(old: np.ndarray, g: np.ndarray, step: float, printed: bool = False) -> np.ndarray:
    """Projected dual ascent on a ``g <= 0`` constraint.

    The printed rules subtract the step; ``printed=True`` reproduces them.
    """
    return np.maximum(old - step * g if printed else old + step * g, 0.0)


def smallest_root(fun, size: int, tol: float = 1e-12) -> np.ndarray:
    """Per component, the smallest t >= 0 with ``fun(t) <= 0``.

    ``fun`` maps a (size,) array of nonnegative multipliers to the
    constraint values; it must eventually turn nonpositive as t grows. A
    component that never does is returned at the growth limit.
    """
    lo = np.zeros(size)
    active = fun(lo) > 0
    if not active.any():
        return lo
    hi = np.where(active, 1.0, 0.0)
    for _ in range(_GROW_LIMIT):
        grow = active & (fun(hi) > 0)
        if not grow.any():
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, 2.0 * hi, hi)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        pos = fun(mid) > 0
        lo = np.where(active & pos, mid, lo)
        hi = np.where(active & ~pos, mid, hi)
        if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
            break
    return np.where(active, hi, 0.0)


# ----------------------------------------------------------------- masters

def update_gamma(eta: np.ndarray, xi: np.ndarray, rho: float) -> float:
    """Maximizer of gamma - rho/2 sum_u (eta_u - gamma + xi_u)^2 (U = K)."""
    return float((1.0 + rho * np.sum(eta + xi)) / (len(eta) * rho))


def average(*families: np.ndarray) -> np.ndarray:
    """Mean of stacked (copy + error) families; each has the copy index first."""
    total = sum(f.sum(axis=0) for f in families)
    return total / sum(f.shape[0] for f in families)


def block_mean(p: np.ndarray) -> np.ndarray:
    """Replace every length-N block (column) of p by its mean."""
    return np.broadcast_to(p.mean(axis=-2, keepdims=True), p.shape).copy()


def masters_closed(cons, errs, rho: float):
    """(gamma, W, F, c, p) from the copies and their error terms.

    ``cons`` is a ConsensusState and ``errs`` anything carrying the error
    terms by name (a DualState). Every master is the mean of the copies it
    is tied to; c is clipped at zero, p is made block-constant and clipped
    to [0, 1].
    """
    c, d = cons, errs
    N, M, U = c.T.shape[1], c.D.shape[1], c.V.shape[1]
    gamma = update_gamma(c.eta, d.xi, rho)
    W = average(c.Psi + d.Lam, c.Gam + d.Xi)
    F = ((c.T + d.O).sum(1) + (c.D + d.B).sum(1) + (c.V + d.E).sum(1)) / (N + M + U)
    share = np.maximum(((c.r + d.m) + (c.f + d.n).sum(1)) / (1 + M), 0.0)
    p = ((c.q + d.l) + (c.y + d.u).sum(1) + (c.phi + d.Pi).sum(1) + (c.x + d.Delta).sum(1)) / (1 + M + N + U)
    return gamma, W, F, share, np.clip(block_mean(p), 0.0, 1.0)


# ------------------------------------------------------------ sensing block

def sensing_closed(eta0, V0, x0, V_ref, x_ref, a, lam, printed: bool = False):
    """Joint update of (eta_u, V_uk, x_uk) for every sensing receiver u.

    Minimizes (eta - eta0)^2 + sum_k ||V - V0||^2 + ||x - x0||^2
    + lam (eta - lin_u(V, x)), where ``lin_u`` is the first-order model of
    is_u = |sum_k <a_uk, V o x>|^2 around (V_ref, x_ref). ``a`` has layout
    (U, K, N, M); V and x have layout (K, U, N, M).
    """
    aK = np.transpose(a, (1, 0, 2, 3))
    L = np.einsum("kunm,kunm,kunm->u", aK, V_ref, x_ref)
    lam_b = lam[None, :, None, None]
    eta = eta0 - lam / 2.0
    if printed:
        own = np.einsum("kunm,kunm,kunm->ku", aK, V_ref, x_ref)
        back = np.einsum("kunm,kunm,kunm->ku", np.conj(aK), x_ref, V_ref)
        V = V0 + lam_b * aK * x_ref * (L[None] - own + back)[:, :, None, None]
    else:
        V = V0 + lam_b * L[None, :, None, None] * np.conj(aK) * x_ref
    x = x0 + lam_b * np.real(np.conj(L)[None, :, None, None] * aK * V_ref)
    return eta, V, x


def sensing_model(V, x, V_ref, x_ref, a):
    """First-order model of is_u at (V, x) around the reference point."""
    aK = np.transpose(a, (1, 0, 2, 3))
    L = np.einsum("kunm,kunm,kunm->u", aK, V_ref, x_ref)
    dL = np.einsum("kunm,kunm,kunm->u", aK, V - V_ref, x_ref) + np.einsum(
        "kunm,kunm,kunm->u", aK, V_ref, x - x_ref
    )
    return np.abs(L) ** 2 + 2.0 * np.real(np.conj(L) * dL)


def sensing_power(V, x, a):
    """is_u evaluated on the sensing copies."""
    aK = np.transpose(a, (1, 0, 2, 3))
    return np.abs(np.einsum("kunm,kunm,kunm->u", aK, V, x)) ** 2


def sensing_multiplier(eta0, V0, x0, V_ref, x_ref, a):
    """Multiplier placing the block exactly on (or inside) the linearized constraint."""
    aK = np.transpose(a, (1, 0, 2, 3))
    L = np.einsum("kunm,kunm,kunm->u", aK, V_ref, x_ref)
    m0 = sensing_model(V0, x0, V_ref, x_ref, a)
    gv = np.sum(np.abs(aK * x_ref) ** 2, axis=(0, 2, 3))
    gx = np.sum(np.real(np.conj(L)[None, :, None, None] * aK * V_ref) ** 2, axis=(0, 2, 3))
    den = 0.5 + 2.0 * np.abs(L) ** 2 * gv + 2.0 * gx
    return np.maximum(0.0, (eta0 - m0) / den)


# ------------------------------------------------------------ power blocks

def gam_closed(v0: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Gamma_n: row n of the n-th copy divided by (1 + theta_n)."""
    out = v0.copy()
    n = np.arange(v0.shape[0])
    out[n, n, :] = v0[n, n, :] / (1.0 + theta[:, None])
    return out


def gam_rows(G: np.ndarray) -> np.ndarray:
    n = np.arange(G.shape[0])
    return G[n, n, :]


def gam_multipliers(v0: np.ndarray, P: float) -> np.ndarray:
    rows = gam_rows(v0)
    return power_multipliers(np.ones(rows.shape), np.abs(rows) ** 2, P)


def _diag_rows(X: np.ndarray) -> np.ndarray:
    """Row n of copy (k, n) for arrays laid out (K, N, N, M) -> (K, N, M)."""
    n = np.arange(X.shape[1])
    return X[:, n, n, :]


def t_closed(v0, phi_ref, iota, printed: bool = False):
    """T_nk: row n scaled by 1 / (1 + iota phi^2) (printed variant: phi)."""
    w = _diag_rows(phi_ref)
    w = w if printed else w**2
    out = v0.copy()
    n = np.arange(v0.shape[1])
    out[:, n, n, :] = _diag_rows(v0) / (1.0 + iota[:, :, None] * w)
    return out


def t_multipliers(v0, phi_ref, P: float):
    K, N = v0.shape[:2]
    w = (_diag_rows(phi_ref) ** 2).reshape(K * N, -1)
    s = (np.abs(_diag_rows(v0)) ** 2).reshape(K * N, -1)
    return power_multipliers(w, s, P).reshape(K, N)


def phi_closed(v0, T_ref, delta):
    """phi_nk: row n scaled by 1 / (1 + delta |T|^2)."""
    out = v0.copy()
    n = np.arange(v0.shape[1])
    out[:, n, n, :] = _diag_rows(v0) / (1.0 + delta[:, :, None] * np.abs(_diag_rows(T_ref)) ** 2)
    return out


def phi_multipliers(v0, T_ref, P: float):
    K, N = v0.shape[:2]
    w = (np.abs(_diag_rows(T_ref)) ** 2).reshape(K * N, -1)
    s = (_diag_rows(v0) ** 2).reshape(K * N, -1)
    return power_multipliers(w, s, P).reshape(K, N)


def row_power_excess(X_rows: np.ndarray, P: float) -> np.ndarray:
    return np.sum(np.abs(X_rows) ** 2, axis=-1) - P


# ------------------------------------------------------------- rate block

def _psi_weights(K: int, mu, pi, Rb1: float, Rb3: float):
    """c_i and d_i of the per-column systems (I + c_i hh^H) psi_i = v_i + d_i hh^H psi_ref_i."""
    cols = np.arange(K + 1)[None, :]
    ks = np.arange(K)[:, None]
    private_interf = (cols != 0) & (cols != ks + 1)
    c = mu[:, None] * Rb1 * private_interf + pi[:, None] * Rb3 * (cols != 0)
    d = mu[:, None] * (cols == ks + 1) + pi[:, None] * (cols == 0)
    return c, d


def psi_closed(v0, hn, psi_ref, mu, pi, Rb1: float, Rb3: float):
    """Psi_k with both rate constraints replaced by their SCA bounds."""
    K = hn.shape[0]
    c, d = _psi_weights(K, mu, pi, Rb1, Rb3)
    hr = np.einsum("kn,kni->ki", np.conj(hn), psi_ref)
    v = v0 + d[:, None, :] * hn[:, :, None] * hr[:, None, :]
    s = np.sum(np.abs(hn) ** 2, axis=1)
    hv = np.einsum("kn,kni->ki", np.conj(hn), v)
    return v - (c * hv / (1.0 + c * s[:, None]))[:, None, :] * hn[:, :, None]


def psi_constraints(amp, amp_ref, Rb1: float, Rb3: float):
    """(private, common) SCA constraint values; ``amp[k, i] = h_k^H psi_i``."""
    K = amp.shape[0]
    p2 = np.abs(amp) ** 2
    ks = np.arange(K)
    own = amp[ks, ks + 1]
    own_r = amp_ref[ks, ks + 1]
    lb_k = 2.0 * np.real(np.conj(own_r) * own) - np.abs(own_r) ** 2
    lb_c = 2.0 * np.real(np.conj(amp_ref[:, 0]) * amp[:, 0]) - np.abs(amp_ref[:, 0]) ** 2
    interf_all = p2[:, 1:].sum(axis=1)
    g1 = Rb1 * (interf_all - p2[ks, ks + 1] + 1.0) - lb_k
    g2 = Rb3 * (interf_all + 1.0) - lb_c
    return g1, g2


def psi_amplitudes(Psi, hn):
    return np.einsum("kn,kni->ki", np.conj(hn), Psi)


def psi_multipliers(v0, hn, psi_ref, Rb1: float, Rb3: float, sweeps: int = 40):
    """Exact (mu, pi) by alternating one-dimensional root finding.

    Only the scalars h^H psi_i enter the constraints, so each evaluation is
    O(K^2) after one projection of the prox centre.
    """
    K = hn.shape[0]
    s = np.sum(np.abs(hn) ** 2, axis=1)[:, None]
    beta = psi_amplitudes(v0, hn)
    hr = psi_amplitudes(psi_ref, hn)

    def amp(mu, pi):
        c, d = _psi_weights(K, mu, pi, Rb1, Rb3)
        return (beta + d * s * hr) / (1.0 + c * s)

    mu = np.zeros(K)
    pi = np.zeros(K)
    for _ in range(sweeps):
        mu_new = smallest_root(lambda t: psi_constraints(amp(t, pi), hr, Rb1, Rb3)[0], K)
        pi_new = smallest_root(lambda t: psi_constraints(amp(mu_new, t), hr, Rb1, Rb3)[1], K)
        done = np.allclose(mu_new, mu, rtol=1e-10, atol=1e-14) and np.allclose(pi_new, pi, rtol=1e-10, atol=1e-14)
        mu, pi = mu_new, pi_new
        if done:
            break
    return mu, pi


def common_rates(Psi, hn) -> np.ndarray:
    """R~_{c,k} in bits evaluated on the Psi copies."""
    p2 = np.abs(psi_amplitudes(Psi, hn)) ** 2
    return np.log2(1.0 + p2[:, 0] / (p2[:, 1:].sum(axis=1) + 1.0))


# ------------------------------------------------------------- DUE block

def due_amplitudes(gn, D, y):
    """own[k, m, j] = g_{k,m}^H (D_mk[:, j] o y_mk[:, j]) and A[m, j] = sum_k own."""
    own = np.einsum("kmn,kmnj,kmnj->kmj", np.conj(gn), D, y)
    return own, own.sum(axis=0)


def _diag_mask(M: int) -> np.ndarray:
    return np.eye(M, dtype=bool)[None, :, None, :]  # (1, m, 1, j)


def d_closed(v0, gn, D_ref, y_ref, tau, omega, Rb2: float, printed: bool = False):
    """D_mk with the DUE-m SINR constraint (interference exact, desired
    power linearized) and the squared link-nulling penalty on column m."""
    K, M, N, _ = v0.shape
    own, A = due_amplitudes(gn, D_ref, y_ref)
    J = A[None] - own  # (K, M, j)
    beta = gn[:, :, :, None] * y_ref  # g o y per column
    a = (tau * Rb2)[:, :, None, None]
    Jb = J[:, :, None, :]
    diag = _diag_mask(M)
    if printed:
        x = v0 - a * Jb * np.conj(beta)
    else:
        x = v0 - a * beta * Jb
    bx = np.sum(np.conj(beta) * x, axis=2, keepdims=True)
    bb = np.sum(np.abs(beta) ** 2, axis=2, keepdims=True)
    off = x - a * beta * bx / (1.0 + a * bb)
    ms = np.arange(M)
    Am = A[ms, ms]
    beta_m = beta[:, ms, :, ms].transpose(1, 0, 2)  # (K, M, N)
    y_m = y_ref[:, ms, :, ms].transpose(1, 0, 2)
    v0_m = v0[:, ms, :, ms].transpose(1, 0, 2)
    t = tau[:, :, None]
    if printed:
        own_m = own[:, ms, ms]
        col = v0_m + t * (J[:, ms, ms][:, :, None] * np.conj(beta_m) + beta_m * own_m[:, :, None]) + omega * (y_m - 1.0)
    else:
        col = (v0_m + t * Am[None, :, None] * beta_m) / (1.0 + omega * (1.0 - y_m) ** 2)
    out = np.where(diag, 0.0, off)
    out[:, ms, :, ms] = col.transpose(1, 0, 2)
    return out


def _woodbury2(v, br, bi, a):
    """(I + a (br br^T + bi bi^T))^{-1} v along the N axis of (K, M, N, M) arrays."""
    U = np.stack([br, bi], axis=-1)  # (K, M, N, j, 2)
    G = np.einsum("kmnjs,kmnjt->kmjst", U, U)
    G = np.eye(2) + a[..., None, None] * G
    rhs = np.einsum("kmnjs,kmnj->kmjs", U, v)
    sol = np.linalg.solve(G, rhs[..., None])[..., 0]
    return v - a[:, :, None, :] * np.einsum("kmnjs,kmjs->kmnj", U, sol)


def y_closed(v0, gn, D_ref, y_ref, f_ref, o, varpi, sigma, Rb2: float, printed: bool = False):
    """y_mk: SINR constraint in y, squared link-nulling penalty and the
    common-share constraint through its first entry of block m."""
    K, M, N, _ = v0.shape
    own, A = due_amplitudes(gn, D_ref, y_ref)
    J = A[None] - own
    beta = np.conj(gn)[:, :, :, None] * D_ref  # so that g^H (D o y) = beta^T y
    a = np.broadcast_to((o * Rb2)[:, :, None], (K, M, M))
    rhs = v0 - a[:, :, None, :] * np.real(beta * np.conj(J)[:, :, None, :])
    off = _woodbury2(rhs, beta.real, beta.imag, a)
    ms = np.arange(M)
    beta_m = beta[:, ms, :, ms].transpose(1, 0, 2)
    D2 = np.abs(D_ref[:, ms, :, ms].transpose(1, 0, 2)) ** 2
    v0_m = v0[:, ms, :, ms].transpose(1, 0, 2)
    Am = A[ms, ms]
    share = np.zeros((K, M, N))
    share[:, :, 0] = 0.5 * sigma * f_ref[:, ms, 0, ms]
    if printed:
        share = -share
    col = (v0_m + o[:, :, None] * np.real(np.conj(Am)[None, :, None] * beta_m) + varpi * D2 + share) / (1.0 + varpi * D2)
    out = off.copy()
    out[:, ms, :, ms] = col.transpose(1, 0, 2)
    return out


def due_sinr_constraint(gn, D, y, Rb2: float):
    """R2 (interference + 1) - desired power for every DUE (<= 0 is feasible)."""
    _, A = due_amplitudes(gn, D, y)
    p2 = np.abs(A) ** 2
    ms = np.arange(A.shape[0])
    desired = p2[ms, ms]
    return Rb2 * (p2.sum(axis=1) - desired + 1.0) - desired


def link_violation(D, y):
    """((1 - y) o D)^2 on column m of copy (m, k), laid out (K, M, N)."""
    ms = np.arange(D.shape[1])
    Dm = D[:, ms, :, ms].transpose(1, 0, 2)
    ym = y[:, ms, :, ms].transpose(1, 0, 2)
    return np.abs((1.0 - ym) * Dm) ** 2


def dy_multipliers(v0D, v0y, gn, D_ref, y_ref, f_ref, f0, omega, varpi, Rb2: float, R2: float):
    """tau_m = o_m from the SINR constraint on the jointly updated (D, y),
    then sigma_m from the linearized common-share constraint."""
    K, M = v0D.shape[:2]

    def sinr(t):
        T = np.broadcast_to(t[None, :], (K, M))
        z = np.zeros((K, M))
        D = d_closed(v0D, gn, D_ref, y_ref, T, omega, Rb2)
        y = y_closed(v0y, gn, D_ref, y_ref, f_ref, T, varpi, z, Rb2)
        return due_sinr_constraint(gn, D, y, Rb2)

    tau = smallest_root(sinr, M, tol=1e-9)
    T = np.broadcast_to(tau[None, :], (K, M)).copy()
    y0 = y_closed(v0y, gn, D_ref, y_ref, f_ref, T, varpi, np.zeros((K, M)), Rb2)
    ms = np.arange(M)
    yr = y_ref[:, ms, 0, ms]
    fr = f_ref[:, ms, 0, ms]
    D2 = np.abs(D_ref[:, ms, 0, ms]) ** 2
    h0 = np.sum(yr * f0[:, ms, 0, ms] + fr * y0[:, ms, 0, ms] - yr * fr, axis=0)
    den = 0.5 * np.sum(yr**2 + fr**2 / (1.0 + varpi[:, :, 0] * D2), axis=0)
    sig = np.where(den > 0, np.maximum(0.0, (R2 - h0) / np.where(den > 0, den, 1.0)), 0.0)
    return T, T.copy(), np.broadcast_to(sig[None, :], (K, M)).copy()


# ---------------------------------------------------------- share blocks

def r_closed(v0, q_ref, chi):
    """r_kk = v0 - chi/2 (q o d_1): only the first row of each block moves."""
    out = v0.copy()
    out[:, 0, :] -= 0.5 * chi[:, None] * q_ref[:, 0, :]
    return out


def r_multipliers(v0, q_ref, Rc):
    w = q_ref[:, 0, :]
    ww = np.sum(w**2, axis=1)
    excess = np.sum(w * v0[:, 0, :], axis=1) - Rc
    return np.where(ww > 0, np.maximum(0.0, 2.0 * excess / np.where(ww > 0, ww, 1.0)), 0.0)


def split_constraint(q, r, Rc):
    """(q o d_1)^T r - R_c,k (<= 0 is feasible)."""
    return np.sum(q[:, 0, :] * r[:, 0, :], axis=1) - Rc


def f_closed(v0, y_ref, sigma, printed: bool = False):
    """f_mk = v0 + sigma/2 (y o e_m) (printed variant: minus)."""
    out = v0.copy()
    ms = np.arange(v0.shape[1])
    s = -0.5 * sigma if printed else 0.5 * sigma
    out[:, ms, 0, ms] += s * y_ref[:, ms, 0, ms]
    return out


def share_constraint(y, f, R2: float):
    """R2 - sum_k (y_mk o e_m)^T f_mk for every DUE (<= 0 is feasible)."""
    ms = np.arange(y.shape[1])
    return R2 - np.sum(y[:, ms, 0, ms] * f[:, ms, 0, ms], axis=0)


def q_closed(v0, r_ref, nu, zeta, Omega):
    """q_kk = v0 - (nu (r o d_1) - zeta + Omega) / 2."""
    out = v0 + 0.5 * (zeta - Omega)
    out[:, 0, :] -= 0.5 * nu[:, None] * r_ref[:, 0, :]
    return out


def q_multipliers(v0, r_ref, Rc):
    """nu from the box-constrained half-space projection; zeta, Omega from the clip."""
    K = v0.shape[0]
    w = np.zeros_like(v0)
    w[:, 0, :] = r_ref[:, 0, :]
    flat_v, flat_w = v0.reshape(K, -1), w.reshape(K, -1)
    nu = box_halfspace_multipliers(flat_v, flat_w, Rc)
    z = v0 - nu[:, None, None] * w
    return 2.0 * nu, 2.0 * np.maximum(0.0, -z), 2.0 * np.maximum(0.0, z - 1.0)

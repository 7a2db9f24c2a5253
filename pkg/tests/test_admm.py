import numpy as np
import pytest
from dataclasses import replace

from coopisac.admm import ConsensusState, DualState, Solver, SolverConfig, initial_state, residuals, solve
from coopisac.admm import updates as up
from coopisac.metrics import RateThresholds, check_feasibility, objective

ERRORS = ("xi", "Lam", "Xi", "O", "B", "E", "l", "u", "Pi", "Delta", "m", "n")


def test_ascend_sign_convention():
    lam = np.array([1.0, 1.0])
    g = np.array([0.5, -2.0])  # violated, slack
    assert up.ascend(lam, g, 0.1).tolist() == pytest.approx([1.05, 0.8])
    assert up.ascend(lam, g, 1.0).tolist() == pytest.approx([1.5, 0.0])
    assert up.ascend(lam, g, 0.1, printed=True).tolist() == pytest.approx([0.95, 1.2])


def test_update_gamma_maximizer():
    eta, xi, rho = np.array([0.3, 0.7]), np.array([0.1, -0.2]), 2.0
    g = up.update_gamma(eta, xi, rho)
    grid = np.linspace(-5, 5, 200001)
    vals = grid - rho / 2 * ((eta[:, None] - grid + xi[:, None]) ** 2).sum(axis=0)
    assert g == pytest.approx(grid[np.argmax(vals)], abs=1e-4)


def test_block_mean_and_average():
    p = np.arange(12, dtype=float).reshape(2, 3, 2)
    bm = up.block_mean(p)
    assert np.allclose(bm[:, 0], p.mean(axis=1)) and np.all(bm[:, 0] == bm[:, 2])
    a, b = np.ones((2, 3)), 3 * np.ones((1, 3))
    assert np.allclose(up.average(a, b), 5 / 3)


def test_smallest_root():
    r = up.smallest_root(lambda t: 1.0 / (1.0 + t) - np.array([0.5, 0.25, 2.0]), 3)
    assert r == pytest.approx([1.0, 3.0, 0.0], abs=1e-9)


def test_config_validation():
    for kw in ({"rho": 0}, {"multiplier_rule": "x"}, {"sensing_scale": 0}, {"sca_reference": "x"},
               {"init": "x"}, {"relaxation": 2.0}):
        with pytest.raises(ValueError, match="solver."):
            SolverConfig(**kw)
    cfg = SolverConfig(step0=0.2, steps={"mu": 1.0})
    assert cfg.step("mu", 1) == pytest.approx(0.5)
    assert cfg.step("tau", 0) == pytest.approx(0.2)


@pytest.mark.parametrize("beams", ["sensing", "link"])
def test_initial_state_feasible_powers(default_channels, beams):
    st = initial_state(default_channels, RateThresholds(), beams)
    rep = check_feasibility(default_channels, st, RateThresholds(0, 0, 0, 1.0))
    assert rep.min_slack("bs_power") >= -1e-9 and rep.min_slack("cue_power") >= -1e-9
    assert np.all(st.p == 1.0)


def test_sensing_init_beats_link_init(default_channels):
    th = RateThresholds()
    s = objective(default_channels, initial_state(default_channels, th, "sensing"))
    l = objective(default_channels, initial_state(default_channels, th, "link"))
    assert s > l


def test_consensus_state_from_masters_has_zero_residual(default_channels):
    st = initial_state(default_channels, RateThresholds())
    cons = ConsensusState.from_masters(st, np.ones(3), 3)
    res = residuals(st, cons)
    assert max(v for k, v in res.items() if k != "eta") == 0.0
    d = DualState.zeros_like(cons)
    assert all(np.all(getattr(d, e) == 0) for e in ERRORS)


def test_masters_are_copy_means(tiny_channels):
    s = Solver(tiny_channels, RateThresholds(), SolverConfig())
    s.step()
    c, d = s.cons, s.duals
    gamma, W, F, share, p = up.masters_closed(c, d, 1.0)
    N, M, U = c.T.shape[1], c.D.shape[1], c.V.shape[1]
    F_ref = sum((c.T + d.O)[:, n] for n in range(N)) + sum((c.D + d.B)[:, m] for m in range(M))
    F_ref = (F_ref + sum((c.V + d.E)[:, u] for u in range(U))) / (N + M + U)
    assert np.allclose(F, F_ref)
    assert np.all(share >= 0) and np.all((p >= 0) & (p <= 1))
    assert np.allclose(p, p[:, :1])


def test_errors_accumulate_residuals(tiny_channels):
    s = Solver(tiny_channels, RateThresholds(), SolverConfig())
    s.update_masters()
    s.update_copies()
    s._blend = s.relaxed()
    before = s.duals.O.copy()
    s.update_errors()
    assert np.allclose(s.duals.O - before, s.cons.T - s.master.F[:, None])


def test_relaxation_blend(tiny_channels):
    s = Solver(tiny_channels, RateThresholds(), SolverConfig(relaxation=1.5))
    s.update_masters()
    s.update_copies()
    b = s.relaxed()
    assert np.allclose(b.T, 1.5 * s.cons.T - 0.5 * s.master.F[:, None])


def test_frozen_consensus_closes_gap(default_channels):
    s = Solver(default_channels, RateThresholds(0, 0, 0, 1.0), SolverConfig(freeze_multipliers=True))
    rng = np.random.default_rng(0)
    for e in ERRORS:
        v = getattr(s.duals, e)
        shift = 0.1 * rng.standard_normal(np.shape(v))
        setattr(s.duals, e, v + (shift + 0.1j * shift if np.iscomplexobj(v) else shift))
    worst = [max(s.step().values()) for _ in range(5)]
    assert worst[0] > 1e-3 and worst[-1] < 1e-6


def test_solve_tiny(tiny_channels):
    th = RateThresholds()
    state, trace = solve(tiny_channels, th, SolverConfig(max_iter=30))
    assert trace.rows[0]["iteration"] == 0
    assert len(trace.wall_ms) == len(trace.rows)
    assert check_feasibility(tiny_channels, state, th).satisfied
    assert set(np.unique(state.p)) <= {0.0, 1.0}


def test_not_converged_status(tiny_channels):
    _, trace = solve(tiny_channels, RateThresholds(), SolverConfig(max_iter=1, min_iter=3))
    assert trace.status == "not_converged" and not trace.converged and len(trace.rows) == 2


@pytest.mark.parametrize("kw", [{"multiplier_rule": "ascent"}, {"sca_reference": "copy"},
                                {"init": "link"}, {"relaxation": 1.3}, {"printed_forms": True}])
def test_solver_variants_run(tiny_channels, kw):
    _, trace = solve(tiny_channels, RateThresholds(), SolverConfig(max_iter=5, **kw))
    assert np.all(np.isfinite(trace.objective))


def test_trace_csvs(tmp_path, tiny_channels):
    _, trace = solve(tiny_channels, RateThresholds(), SolverConfig(max_iter=3))
    trace.to_csv(tmp_path / "t.csv")
    trace.to_timing_csv(tmp_path / "w.csv")
    head = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert head[:3] == ["iteration", "objective_bits", "max_residual"] and head[-1] == "min_rate_slack"
    assert (tmp_path / "w.csv").read_text().startswith("iteration,wall_time_ms\n")


def test_solve_is_deterministic(tiny_channels):
    cfg = SolverConfig(max_iter=8)
    a, ta = solve(tiny_channels, RateThresholds(), cfg)
    b, tb = solve(tiny_channels, RateThresholds(), replace(cfg))
    assert ta.rows == tb.rows and np.array_equal(a.F, b.F)

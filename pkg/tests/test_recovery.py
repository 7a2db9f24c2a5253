import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopisac.metrics import RateThresholds, check_feasibility, cue_rates
from coopisac.recovery import consistency_pass, finalize, recover, repair_shares

from .conftest import random_state


def test_recover_small_case():
    p = np.zeros((1, 2, 3))
    p[0, :, 0] = [0.5, 0.5]
    p[0, :, 1] = [0.9, 0.0]
    p[0, :, 2] = [0.3, 0.3]
    out, sched = recover(p, 0.5)
    assert sched.rho.tolist() == [[1.0, 0.0, 0.0]]
    assert out[0, :, 0].tolist() == [1.0, 1.0] and np.all(out[0, :, 1:] == 0)
    assert sched.links == 1


def test_recover_flat_layout_matches():
    rng = np.random.default_rng(0)
    p = rng.uniform(0, 1, (2, 4, 3))
    out3, s3 = recover(p, 0.4)
    flat = np.stack([p[k].reshape(-1, order="F") for k in range(2)])
    outf, sf = recover(flat, 0.4, N=4)
    assert np.array_equal(s3.rho, sf.rho)
    assert np.array_equal(outf, np.stack([out3[k].reshape(-1, order="F") for k in range(2)]))


def test_recover_validation():
    with pytest.raises(ValueError):
        recover(np.zeros((1, 2, 2)), 1.0)
    with pytest.raises(ValueError):
        recover(np.zeros((1, 4)), 0.5)


@given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
@settings(max_examples=100, deadline=None)
def test_recover_idempotent_and_monotone(seed, t1, t2):
    p = np.random.default_rng(seed).uniform(0, 1, (3, 4, 5))
    out, sched = recover(p, t1)
    again, sched2 = recover(out, t1)
    assert np.array_equal(out, again) and np.array_equal(sched.rho, sched2.rho)
    lo, hi = sorted((t1, t2))
    assert np.all(recover(p, hi)[1].rho <= recover(p, lo)[1].rho)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_consistency_pass_nulls_dropped_links(seed):
    rng = np.random.default_rng(seed)
    stt = random_state(rng, 4, 3, 5)
    p_bin, sched = recover(stt.p, 0.5)
    stt.p = p_bin
    out = consistency_pass(stt, sched)
    assert np.all(((1.0 - out.p) * out.F) == 0)


def test_repair_shares_feasible():
    rng = np.random.default_rng(5)
    rho = np.array([[1, 0, 1], [1, 1, 0]], float)
    C = rng.uniform(0, 0.01, (2, 3))
    common = np.array([2.0, 2.0])
    out = repair_shares(C, rho, common, 0.3)
    assert np.all((rho * out).sum(axis=0) >= 0.3 - 1e-12)
    assert np.all((rho * out).sum(axis=1) <= common + 1e-12)
    assert np.all(out[rho == 0] == 0)


def test_finalize_consistent(default_channels):
    rng = np.random.default_rng(11)
    stt = random_state(rng, 16, 3, 5)
    out, sched = finalize(default_channels, stt, RateThresholds(0, 0.05, 0, 1.0))
    rep = check_feasibility(default_channels, out, RateThresholds(0, 0, 0, 1.0))
    assert rep.min_slack("link_null") == 0.0
    assert rep.min_slack("bs_power") >= -1e-12 and rep.min_slack("cue_power") >= -1e-12
    assert set(np.unique(out.p)) <= {0.0, 1.0}
    common = [cue_rates(default_channels, out, k)[0] for k in range(3)]
    assert np.all((out.p[:, 0, :] * out.c[:, 0, :]).sum(axis=1) <= np.array(common) + 1e-9)


def test_schedule_outputs(tmp_path):
    _, sched = recover(np.ones((2, 2, 2)) * 0.7, 0.5)
    assert '"rho": [[1, 1], [1, 1]]' in sched.to_json()
    sched.write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "k,m,established" and len(lines) == 5

import math

import numpy as np
import pytest

from sigaccess.designer import InfeasibleDesignError
from sigaccess.simulator import MessageBoundViolation, ScenarioConfig, run, run_lte_sim, run_signature_sim
from sigaccess.simulator.lte_sim import POST_ACCESS_MESSAGES
from sigaccess.simulator.sweep import estimate, replication_seed, sweep


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(protocol="nbiot")
    with pytest.raises(ValueError):
        ScenarioConfig(p_d=0.5, p_f=0.6)
    with pytest.raises(ValueError):
        ScenarioConfig(R=0)
    with pytest.raises(ValueError):
        ScenarioConfig(T=10, lam=11)
    with pytest.raises(ValueError):
        ScenarioConfig(L=3)
    with pytest.raises(ValueError):
        ScenarioConfig(confirm=0)


def test_defaults():
    c = ScenarioConfig()
    assert (c.t_s, c.M, c.p_d, c.p_f, c.W, c.delta_RAR, c.delta_CR, c.R) == (1.0, 54, 0.99, 1e-3, 20, 10, 40, 10)
    assert c.frame_length() == 13
    assert ScenarioConfig(L=20).frame_length() == 20


def test_peel_confirm_rule():
    assert ScenarioConfig().peel_confirm() == 3
    assert ScenarioConfig(p_d=1.0, p_f=0.0).peel_confirm() == 1
    assert ScenarioConfig(K=1).peel_confirm() == 1
    assert ScenarioConfig(confirm=2).peel_confirm() == 2


def test_infeasible_design_propagates():
    with pytest.raises(InfeasibleDesignError):
        run_signature_sim(ScenarioConfig(T=10, lam=10))


def test_signature_zero_arrivals():
    m, traces = run_signature_sim(ScenarioConfig(lam=1e-12, n_frames=20, L=4))
    assert m.arrivals == 0 and m.goodput == 1.0 and m.reliability == 1.0
    assert m.mean_messages == 0.0 and traces == []


def test_signature_reference_run_short():
    m, _ = run_signature_sim(ScenarioConfig(lam=1.0, n_frames=100, seed=3))
    assert m.L == 13
    assert m.goodput > 0.95
    assert m.reliability > 0.9
    assert m.max_messages <= 6
    assert m.arrivals == m.successes + m.failures + m.in_progress
    assert m.auth_failures == 0


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_signature_message_bound_noisy(lam):
    m, _ = run_signature_sim(ScenarioConfig(lam=lam, n_frames=40, p_d=0.9, p_f=0.01, seed=5))
    assert 0 < m.max_messages <= 6


def test_message_bound_is_enforced(monkeypatch):
    import sigaccess.simulator.signature_sim as sim

    monkeypatch.setattr(sim, "POST_DECODE_MESSAGES", 10)
    with pytest.raises(MessageBoundViolation):
        sim.run_signature_sim(ScenarioConfig(lam=1.0, n_frames=5))


def test_signature_latency_bounds_noiseless():
    c = ScenarioConfig(lam=1.0, p_d=1.0, p_f=0.0, n_frames=200, seed=9)
    m, _ = run_signature_sim(c)
    L = m.L
    assert L / 2 - 1 <= m.mean_latency <= 1.5 * L + 1
    assert m.failures <= m.collision_count  # only identical signatures can fail noiselessly


def test_signature_single_device_noiseless():
    c = ScenarioConfig(T=1, lam=0.01, p_d=1.0, p_f=0.0, n_frames=400, L=8, seed=2)
    m, traces = run_signature_sim(c, keep_traces=True)
    assert m.arrivals > 0 and m.reliability == 1.0 and m.goodput == 1.0
    # alone, the device is peeled at its first slot
    assert m.mean_messages == 3.0
    assert len(traces) == m.goodput_frames


def test_signature_traces_label_false_positives():
    c = ScenarioConfig(lam=1.0, n_frames=30, p_f=0.05, seed=4, L=13)
    m, traces = run_signature_sim(c, keep_traces=True)
    assert sum(len(t.false_positives) for t in traces) == m.false_positive_count


def test_lte_single_contender_message_counts():
    for proto, total in (("lte_full", 11), ("lte_mtc", 6)):
        c = ScenarioConfig(protocol=proto, T=1, lam=0.005, p_d=1.0, p_f=0.0, n_frames=5000, seed=1)
        m = run_lte_sim(c)
        assert m.arrivals > 0 and m.reliability == 1.0
        assert m.mean_messages == total == 4 + POST_ACCESS_MESSAGES[proto]
        assert m.collision_count == 0
        # arrival within the RAO period, then contention resolution 8 sub-frames after the RAO
        assert 8.0 <= m.mean_latency <= 9.0


def test_lte_forced_collision():
    c = ScenarioConfig(protocol="lte_mtc", T=2, lam=2.0, M=1, p_d=1.0, p_f=0.0, n_frames=1, seed=3)
    m = run_lte_sim(c)
    assert m.arrivals == 2
    assert m.collision_count >= 1
    # each device spent at least one collided attempt before succeeding
    assert m.mean_messages >= 3 + 6
    assert m.arrivals == m.successes + m.failures + m.in_progress


def test_lte_retry_cap():
    # a single preamble that always collides: both devices exhaust R attempts
    c = ScenarioConfig(protocol="lte_full", T=2, lam=2.0, M=1, W=1, p_d=1.0, p_f=0.0, n_frames=1, R=4)
    m = run_lte_sim(c)
    assert m.failures == 2 and m.reliability == 0.0
    assert m.mean_messages == 4 * 3
    assert m.collision_count == 4


def test_lte_missed_detection_costs_one_message():
    c = ScenarioConfig(protocol="lte_mtc", T=1, lam=1.0, p_d=1e-9, p_f=0.0, n_frames=1, R=3)
    m = run_lte_sim(c)
    assert m.failures == 1 and m.mean_messages == 3


def test_lte_high_load_collapse():
    # with T=5000 the backlog caps the offered load; a larger population collapses
    m = run_lte_sim(ScenarioConfig(protocol="lte_full", T=20000, lam=100.0, n_frames=2000))
    assert m.reliability < 0.5
    # close to R collided attempts of 3 messages each
    assert m.mean_messages > 0.8 * 3 * 10


def test_lte_saturates_with_small_population():
    m = run_lte_sim(ScenarioConfig(protocol="lte_full", lam=200.0, n_frames=2000))
    assert 0.5 < m.reliability < 0.95


def test_lte_conservation_and_goodput_range():
    for proto in ("lte_full", "lte_mtc"):
        m = run_lte_sim(ScenarioConfig(protocol=proto, lam=5.0, n_frames=1000, seed=8))
        assert m.arrivals == m.successes + m.failures + m.in_progress
        assert 0 <= m.goodput <= 1 and 0 <= m.reliability <= 1


def test_runs_are_deterministic():
    for proto in ("signature", "lte_full"):
        c = ScenarioConfig(protocol=proto, lam=1.0, n_frames=50, seed=77)
        assert run(c) == run(c)
        assert run(c) != run(c.with_(seed=78))


def test_replication_seeds():
    seeds = [replication_seed(1, r) for r in range(5)]
    assert len(set(seeds)) == 5
    assert seeds == [replication_seed(1, r) for r in range(5)]


def test_estimate():
    e = estimate([1.0, 2.0, 3.0])
    assert e.mean == 2.0 and e.n == 3
    # t_{0.975,2} = 4.302653
    assert e.ci95 == pytest.approx(4.302653 / math.sqrt(3), rel=1e-6)
    one = estimate([0.5])
    assert one.degenerate and math.isnan(one.ci95)


def test_sweep_order_and_determinism():
    cfgs = [ScenarioConfig(protocol=p, lam=lam, n_frames=20) for p in ("signature", "lte_mtc") for lam in (0.5, 1.0)]
    a = sweep(cfgs, replications=2)
    b = sweep(cfgs, replications=2, workers=2)
    assert [r.config for r in a] == cfgs
    assert [r.runs for r in a] == [r.runs for r in b]
    assert a[0].L == 4 and a[2].L is None


def test_sweep_rejects_zero_replications():
    with pytest.raises(ValueError):
        sweep([ScenarioConfig()], replications=0)


def test_signature_beats_lte_goodput_across_loads():
    sig, lte = [], []
    for lam in (0.5, 1.0, 2.0):
        sig.append(run(ScenarioConfig(lam=lam, n_frames=60)).goodput)
        lte.append(run(ScenarioConfig(protocol="lte_full", lam=lam, n_frames=3000)).goodput)
    assert all(s > l for s, l in zip(sig, lte))
    assert all(abs(s - 0.99) < 0.03 for s in sig)

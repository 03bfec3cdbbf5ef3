"""Traffic-junction Monte Carlo tests.

The service law and controller map are pinned with hand-computed values; the
step function is fuzzed for vehicle conservation; the closed-loop fixed
point is matched against plain iteration of the controller map.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tanglesim.junction import (
    ControllerParams,
    JunctionConfig,
    JunctionState,
    controller_step,
    run,
    run_ensemble,
    second_half_slope,
    service_capacity,
    step,
)
from tanglesim.seeding import seed_stream


# -- service law -------------------------------------------------------------------

def test_service_capacity_hand_table():
    cfg = JunctionConfig()  # service_rate 3, cross_time 1, slowdown 1
    # floor(3 * 1 / (1 + v)): 3, 1, 1, 0, ...
    assert service_capacity(cfg, 0) == 3
    assert service_capacity(cfg, 1) == 1
    assert service_capacity(cfg, 2) == 1
    assert service_capacity(cfg, 3) == 0
    assert service_capacity(cfg, 100) == 0


def test_service_capacity_scales_with_slowdown():
    gentle = JunctionConfig(slowdown=0.25)
    assert service_capacity(gentle, 1) == 2  # 3 / 1.25
    assert service_capacity(gentle, 4) == 1  # 3 / 2


def test_config_validation():
    with pytest.raises(ValueError):
        JunctionConfig(switch_period=0)
    with pytest.raises(ValueError):
        JunctionConfig(cross_time=0.0)
    with pytest.raises(ValueError):
        JunctionConfig(service_rate=0)


# -- controller map ----------------------------------------------------------------

def test_controller_step_by_hand():
    p = ControllerParams(slope=0.6, memory=1.0, gain=0.1, target=0.95)
    c1, q1 = controller_step(0.0, 0.0, p)
    assert c1 == pytest.approx(0.095)
    assert q1 == pytest.approx(0.057)
    c2, q2 = controller_step(c1, q1, p)
    assert c2 == pytest.approx(0.095 + 0.1 * (0.95 - 0.057))
    assert q2 == pytest.approx(0.6 * c2)


def test_controller_fixed_point_matches_map_iteration():
    p = ControllerParams()
    c, q = 0.0, 0.0
    for _ in range(600):
        c, q = controller_step(c, q, p)
    # at the fixed point q = target, c = target / slope
    assert abs(q - 0.95) < 1e-9
    assert abs(c - 0.95 / 0.6) < 1e-9


def test_controller_respects_clamps():
    p = ControllerParams(slope=5.0, memory=1.0, gain=1.0, target=1.0)
    c, q = controller_step(0.0, 0.0, p)
    assert q == 1.0  # slope * cost clamps at 1
    p2 = ControllerParams(slope=0.5, memory=0.0, gain=1.0, target=0.0)
    c, q = controller_step(0.2, 0.9, p2)
    assert c == 0.0  # cost clamps at 0
    assert q == 0.0


def test_controller_validation():
    with pytest.raises(ValueError):
        ControllerParams(slope=0.0)
    with pytest.raises(ValueError):
        ControllerParams(target=1.5)


# -- single-unit dynamics -------------------------------------------------------------

def test_full_compliance_never_violates():
    cfg = JunctionConfig()
    state = JunctionState(queues=np.zeros(3, dtype=np.int64), Q=1.0)
    rng = seed_stream(50, 0)
    assert sum(step(state, cfg, rng).violations for _ in range(500)) == 0


def test_zero_compliance_violates_whenever_a_red_queue_is_loaded():
    cfg = JunctionConfig(arrival_rate=30.0)  # keep every queue nonempty
    state = JunctionState(queues=np.full(3, 100, dtype=np.int64), Q=0.0)
    rng = seed_stream(51, 0)
    rec = step(state, cfg, rng)
    assert rec.violations == 2  # both red queues incur


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1),
       st.floats(min_value=0.0, max_value=1.0))
def test_vehicle_conservation_fuzz(seed, q):
    cfg = JunctionConfig()
    state = JunctionState(queues=np.zeros(3, dtype=np.int64), Q=q)
    rng = np.random.default_rng(seed)
    for _ in range(40):
        before = int(state.queues.sum())
        rec = step(state, cfg, rng)
        after = int(state.queues.sum())
        assert after - before == rec.arrivals - rec.served
        assert np.all(state.queues >= 0)


def test_phase_switches_and_violation_reset():
    cfg = JunctionConfig(switch_period=10, arrival_rate=0.0)
    state = JunctionState(queues=np.full(3, 50, dtype=np.int64), Q=0.0)
    rng = seed_stream(52, 0)
    for k in range(1, 10):
        step(state, cfg, rng)
        assert state.phase == 0
        assert state.phase_violations == 2 * k  # two red queues, always loaded
    step(state, cfg, rng)
    assert state.phase == 1
    assert state.phase_violations == 0


def test_throttling_blocks_service_under_heavy_incursion():
    # with both red queues loaded and Q=0, capacity is 1 after the first
    # unit's two violations and 0 from the third unit on
    cfg = JunctionConfig(arrival_rate=0.0)
    state = JunctionState(queues=np.full(3, 50, dtype=np.int64), Q=0.0)
    rng = seed_stream(53, 0)
    served = [step(state, cfg, rng).served for _ in range(9)]
    assert served[0] == 1  # floor(3 / (1 + 2))
    assert all(s == 0 for s in served[2:])


# -- runs and ensembles ----------------------------------------------------------------

def test_run_requires_exactly_one_mode():
    cfg = JunctionConfig()
    rng = seed_stream(54, 0)
    with pytest.raises(ValueError):
        run(cfg, 10, rng)
    with pytest.raises(ValueError):
        run(cfg, 10, rng, fixed_Q=0.9, controller=ControllerParams())
    with pytest.raises(ValueError):
        run(cfg, 10, rng, fixed_Q=1.5)


def test_fixed_mode_records_constant_q():
    r = run(JunctionConfig(), 50, seed_stream(55, 0), fixed_Q=0.8,
            record_queues=True)
    assert np.all(r.Q == 0.8)
    assert np.all(r.C == 0.0)
    assert r.queues is not None and r.queues.shape == (51, 3)
    assert np.allclose(r.vbar, r.queues.sum(axis=1) / 3.0)


def test_closed_loop_q_tracks_the_deterministic_map():
    p = ControllerParams()
    r = run(JunctionConfig(), 200, seed_stream(56, 0), controller=p)
    c, q = 0.0, 0.0
    for k in range(1, 201):
        c, q = controller_step(c, q, p)
    assert abs(r.Q[-1] - q) < 1e-12
    assert abs(r.C[-1] - c) < 1e-12


def test_ensemble_statistics_and_determinism():
    cfg = JunctionConfig()
    a = run_ensemble(cfg, runs=20, horizon=100, master_seed=57, fixed_Q=0.9)
    b = run_ensemble(cfg, runs=20, horizon=100, master_seed=57, fixed_Q=0.9)
    assert np.array_equal(a.vbar_mean, b.vbar_mean)
    assert np.array_equal(a.vbar_std, b.vbar_std)
    assert a.runs == 20
    c = run_ensemble(cfg, runs=20, horizon=100, master_seed=58, fixed_Q=0.9)
    assert not np.array_equal(a.vbar_mean, c.vbar_mean)


def test_low_compliance_grows_queues_faster():
    cfg = JunctionConfig()
    hi = run_ensemble(cfg, runs=30, horizon=400, master_seed=59, fixed_Q=1.0)
    lo = run_ensemble(cfg, runs=30, horizon=400, master_seed=59, fixed_Q=0.7)
    assert lo.vbar_mean[-1] > 5 * hi.vbar_mean[-1]
    assert second_half_slope(lo.times, lo.vbar_mean) > 0.05


def test_second_half_slope_on_synthetic_line():
    t = np.arange(100.0)
    assert second_half_slope(t, 3.0 * t + 2.0) == pytest.approx(3.0)
    assert abs(second_half_slope(t, np.full(100, 7.0))) < 1e-12

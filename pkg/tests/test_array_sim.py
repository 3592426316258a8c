import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memaco.array_sim import (ArrayState, CalibrationError, ConfigurationError, InitParams,
                              PulseParams, ReadParams, ResetParams, apply_pulse, branch_voltages,
                              calibrate, init_array, plan_phases, readout, reset_array,
                              run_traversal, simulate)
from memaco.device import ThresholdParams, resistance
from memaco.imaging import compute_heuristics, nested_scene, synth_shapes
from oracles import three_branch_kcl

DEV = ThresholdParams()


def state_at(r_values, r_ds=1e3):
    x = np.array([[DEV.x_for_resistance(r) for r in r_values]])
    return ArrayState(x, DEV, r_ds)


# ---------------------------------------------------------------- phase plans

def test_plan_width9_l3():
    plan = plan_phases((1, 9), 3)
    groups = [[tuple(c + 1 for c in g) for g in ph.groups] for ph in plan.phases[:3]]
    assert groups[0] == [(1, 2, 3), (4, 5, 6), (7, 8, 9)]
    assert groups[1] == [(2, 3, 4), (5, 6, 7), (8, 9)]
    assert groups[2] == [(3, 4, 5), (6, 7, 8)]


def test_plan_width10_drops_single():
    plan = plan_phases((1, 10), 3)
    assert [len(g) for g in plan.phases[0].groups] == [3, 3, 3]
    assert plan.phases[0].groups[-1] == (6, 7, 8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(2, 5))
def test_plan_invariants(h, w, L):
    plan = plan_phases((h, w), L)
    assert len(plan.phases) == 2 * L
    assert [p.axis for p in plan.phases] == ["h"] * L + ["v"] * L
    for ph in plan.phases:
        members = [i for g in ph.groups for i in g]
        assert len(members) == len(set(members))
        for g in ph.groups:
            assert 2 <= len(g) <= L
            rows = {i // w for i in g}
            cols = {i % w for i in g}
            assert (len(rows) == 1) if ph.axis == "h" else (len(cols) == 1)
    # interior columns are covered once per horizontal phase
    count = np.zeros(h * w, int)
    for ph in plan.phases[:L]:
        for g in ph.groups:
            count[list(g)] += 1
    cols = np.arange(h * w) % w
    interior = (cols >= L - 1) & (cols <= w - L)
    assert np.all(count[interior] == L)


def test_plan_rejects_short_l():
    with pytest.raises(ValueError, match="L"):
        plan_phases((4, 4), 1)
    with pytest.raises(ValueError):
        plan_phases((4, 4), 3, pattern="full")


# ---------------------------------------------------------------- initialization

def test_init_band_endpoints():
    eta = np.zeros((3, 3))
    eta[1, 1] = 1.0
    st_, ledger = init_array(eta)
    r = st_.resistance_map()
    assert np.all(np.abs(r[eta == 0] - 12.5e3) <= 0.01 * 12.5e3)
    assert abs(r[1, 1] - 150e3) <= 0.01 * 150e3
    lo, hi = ledger.extremes("init")
    assert 6e-12 <= lo and hi <= 132e-12
    assert ledger.count("init") == 4 * 9


def test_init_direct_encoding_swaps():
    eta = np.array([[0.0, 1.0]])
    r = init_array(eta, encoding="direct")[0].resistance_map()
    assert r[0, 0] == pytest.approx(150e3, rel=0.01)
    assert r[0, 1] == pytest.approx(12.5e3, rel=0.01)


def test_init_monotone_in_heuristic():
    eta = np.linspace(0, 1, 11)[None, :]
    r = init_array(eta)[0].resistance_map()[0]
    assert np.all(np.diff(r) > 0)


def test_init_clock_is_pulse_budget():
    st_, _ = init_array(np.zeros((2, 2)))
    assert st_.clock == pytest.approx(8e-6, rel=1e-12)


def test_calibration_failure():
    with pytest.raises(CalibrationError):
        calibrate(InitParams(v_dd=0.05))
    with pytest.raises(CalibrationError):
        calibrate(InitParams(band=(100.0, 150e3)))


# ---------------------------------------------------------------- pulses

def test_three_equal_devices_no_switch():
    st_ = state_at([100e3] * 3, r_ds=0.0)
    v = branch_voltages([100e3] * 3, 6e-6, 0.0)
    assert np.allclose(v, 6e-6 * 100e3 / 3)
    new, e = apply_pulse(st_, [(0, 0), (0, 1), (0, 2)], r_ds=0.0)
    assert new.x[0, 0] == new.x[0, 1] == new.x[0, 2]
    assert e > 0


def test_symmetric_kcl_matches_hand_solution():
    r = [100e3, 40e3, 150e3]
    v_node, want = three_branch_kcl(6e-6, r, [1e3] * 3)
    got = branch_voltages(r, 6e-6, 1e3)
    assert np.allclose(got, want, rtol=1e-12)
    currents = [v_node / (ri + 1e3) for ri in r]
    assert sum(currents) == pytest.approx(6e-6, rel=1e-12)


def test_chained_topology_mismatch():
    r = [100e3] * 3
    _, want = three_branch_kcl(6e-6, r, [1e3, 0.0, 1e3])
    got = branch_voltages(r, 6e-6, 1e3, topology="chained")
    assert np.allclose(got, want, rtol=1e-12)
    assert got[1] > got[0] == pytest.approx(got[2])
    sym = branch_voltages(r, 6e-6, 1e3)
    assert sym[0] == sym[1] == sym[2]


def test_group_energy_in_range():
    for r in ([12.5e3] * 3, [40e3, 60e3, 80e3], [150e3] * 3):
        _, e = apply_pulse(state_at(r), [(0, 0), (0, 1), (0, 2)])
        assert 9e-12 <= e <= 15e-12


def test_low_resistance_group_below_threshold():
    st_ = state_at([12.5e3] * 3)
    new, _ = apply_pulse(st_, [(0, 0), (0, 1), (0, 2)])
    assert np.array_equal(new.x, st_.x)


def test_pulse_lowers_high_resistance_group():
    st_ = state_at([150e3] * 3)
    new, _ = apply_pulse(st_, [(0, 0), (0, 1), (0, 2)])
    assert np.all(new.resistance_map() < 150e3)


def test_apply_pulse_errors():
    st_ = ArrayState(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        apply_pulse(st_, [])
    with pytest.raises(ValueError):
        apply_pulse(st_, [(0, 0), (1, 1)])


# ---------------------------------------------------------------- traversal

def _small():
    img, mask = synth_shapes(16, 16, nested_scene(16))
    return compute_heuristics(img), mask


def test_traversal_timing_and_determinism():
    eta, _ = _small()
    st_, _ = init_array(eta)
    plan = plan_phases(eta.shape, 3)
    a = run_traversal(st_, plan, 10, snapshots=[0, 5, 10])
    b = run_traversal(st_, plan, 10, snapshots=[0, 5, 10])
    assert a.elapsed == 60e-6 and a.phases_run == 60
    assert np.array_equal(a.state.x, b.state.x)
    assert sorted(a.snapshots) == [0, 5, 10]
    assert a.state.clock >= st_.clock
    assert np.array_equal(a.snapshots[0], st_.resistance_map())


def test_zero_iterations_is_identity():
    eta, _ = _small()
    st_, _ = init_array(eta)
    res = run_traversal(st_, plan_phases(eta.shape, 3), 0)
    assert np.array_equal(res.state.x, st_.x)
    assert res.ledger.total() == 0.0 and res.elapsed == 0.0


def test_traversal_energy_counts():
    eta, _ = _small()
    st_, _ = init_array(eta)
    plan = plan_phases(eta.shape, 3)
    res = run_traversal(st_, plan, 2)
    groups = sum(len(ph.groups) for ph in plan.phases)
    assert res.ledger.count("traversal") == 2 * groups
    lo, hi = res.ledger.extremes("traversal")
    assert 9e-12 <= lo and hi <= 15e-12


def test_saturated_devices_stay_put():
    st_ = ArrayState(np.ones((1, 3)), DEV, 1e3)
    new, _ = apply_pulse(st_, [(0, 0), (0, 1), (0, 2)], pulse=PulseParams(i_update=1e-3))
    assert np.all(new.x == 1.0)


# ---------------------------------------------------------------- readout and reset

def test_readout_non_destructive_and_energy():
    eta, _ = _small()
    st_, _ = init_array(eta)
    before = st_.x.copy()
    r, ledger = readout(st_)
    assert np.array_equal(st_.x, before)
    assert np.all((r >= DEV.r_on) & (r <= DEV.r_off))
    lo, hi = ledger.extremes("read")
    assert 4.5e-15 <= lo and hi <= 75e-15


def test_readout_rejects_switching_voltage():
    st_ = ArrayState(np.zeros((2, 2)))
    with pytest.raises(ConfigurationError):
        readout(st_, ReadParams(v_dev=0.09))
    with pytest.raises(ConfigurationError):
        readout(st_, ReadParams(v_dev=-0.04))


def test_reset_reaches_off_state():
    eta, _ = _small()
    st_, _ = init_array(eta)
    new, ledger = reset_array(st_)
    assert np.all(new.x == 0) and np.all(new.resistance_map() == DEV.r_off)
    lo, hi = ledger.extremes("reset")
    assert 205e-12 <= lo and hi <= 400e-12
    again, _ = reset_array(new)
    assert np.array_equal(again.x, new.x)


def test_reset_from_full_on():
    new, _ = reset_array(ArrayState(np.ones((2, 2))))
    assert np.all(new.x == 0)


def test_reset_too_short():
    with pytest.raises(ConfigurationError):
        reset_array(ArrayState(np.zeros((2, 2))), ResetParams(duration=10e-6))
    with pytest.raises(ConfigurationError):
        reset_array(ArrayState(np.zeros((2, 2))), ResetParams(voltage=-0.01))


def test_resistance_consistent():
    st_ = state_at([12.5e3, 150e3])
    assert np.allclose(st_.resistance_map(), resistance(st_.x, DEV))


def test_separability_interquartile():
    img, mask = synth_shapes(32, 32, nested_scene(32))
    res = simulate(compute_heuristics(img))
    r = res.resistance
    q_edge = np.percentile(r[mask], [25, 75])
    q_flat = np.percentile(r[~mask], [25, 75])
    assert q_edge[0] > q_flat[1] or q_flat[0] > q_edge[1]

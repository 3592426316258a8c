import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memaco.dynamics import (AcoFluidConfig, ConvergenceError, MemristiveFluidConfig, Trajectory,
                             aco_fluid, compare_winner, current_divider, illustration_preset,
                             memristive_fluid, two_path_from_example)


def test_divider():
    assert current_divider(1.0, 1.0, 2.0) == (1.0, 1.0)
    i1, i2 = current_divider(2.0, 1.0, 3e-6)
    assert i1 == pytest.approx(2e-6) and i1 + i2 == 3e-6
    assert current_divider(1.0, 0.0, 5.0) == (5.0, 0.0)
    with pytest.raises(ValueError):
        current_divider(0.0, 0.0, 1.0)


@settings(max_examples=200)
@given(st.floats(0, 1e3), st.floats(1e-9, 1e3), st.floats(-1e3, 1e3))
def test_divider_conserves(g1, g2, i0):
    i1, i2 = current_divider(g1, g2, i0)
    assert i1 + i2 == i0


def test_example_configuration():
    aco, mem = two_path_from_example()
    assert aco.le == (1.3, 2.266)
    assert aco.tau0 == (0.01 ** 4, 0.01 ** 4)
    assert mem.g_off[0] == pytest.approx(0.769, abs=1e-3)
    assert mem.g_off[1] == pytest.approx(0.4413, abs=1e-4)


def test_equal_paths_stay_equal():
    a = aco_fluid(AcoFluidConfig(le=(2.0, 2.0)), 1.0, 1e-3)
    assert np.array_equal(a.states[:, 0], a.states[:, 1])
    m = memristive_fluid(MemristiveFluidConfig(g_off=(0.5, 0.5), g_on=(500, 500)), 1.0, 1e-3)
    assert np.array_equal(m.states[:, 0], m.states[:, 1])


def test_illustration_aco_steady_state():
    aco, _ = illustration_preset()
    tr = aco_fluid(aco, 2.0, 1e-3)
    assert tr.final[0] == pytest.approx(1 / 1.3, rel=1e-6)
    assert tr.final[1] < 1e-9
    assert np.abs(aco.rhs(tr.final)).max() < 1e-6


def test_illustration_memristive():
    _, mem = illustration_preset()
    tr = memristive_fluid(mem, 1.0, 1e-4)
    assert tr.final[0] > tr.final[1]
    assert abs(tr.final[1] - 1) <= 0.1
    assert np.all(tr.states >= 1.0) and np.all(tr.states <= mem.gn_max)


def test_large_drift_grows_winner():
    _, mem = illustration_preset(k=1.0)
    tr = memristive_fluid(mem, 1.0, 1e-4)
    assert tr.final[0] > 10 and tr.final[0] > 5 * tr.final[1]


def test_reciprocal_variant_same_winner():
    aco, mem = illustration_preset(reciprocal=True)
    assert mem.g_off == pytest.approx((1 / 1.3, 1 / 2.266))
    rep = compare_winner(aco_fluid(aco, 2.0, 1e-3), memristive_fluid(mem, 2.0, 1e-3))
    assert rep.winners == (0, 0)


def test_no_drift_relaxes_to_one():
    cfg = MemristiveFluidConfig(g_off=(1.0, 2.0), g_on=(100.0, 200.0), k=0.0, xi=5.0, gn0=(3.0, 2.0))
    tr = memristive_fluid(cfg, 1.0, 1e-4)
    assert tr.states[:, 0] == pytest.approx(1 + 2 * np.exp(-5 * tr.t), rel=1e-3)


def test_relabeling_swaps_trajectories():
    aco, mem = illustration_preset()
    a, b = aco_fluid(aco, 0.5, 1e-3), aco_fluid(aco.swapped(), 0.5, 1e-3)
    assert np.array_equal(a.states, b.states[:, ::-1])
    a, b = memristive_fluid(mem, 0.5, 1e-3), memristive_fluid(mem.swapped(), 0.5, 1e-3)
    assert np.array_equal(a.states, b.states[:, ::-1])


def test_dt_refinement_first_order():
    aco, _ = illustration_preset()
    ref = aco_fluid(aco, 0.2, 1e-6).final
    e1 = np.abs(aco_fluid(aco, 0.2, 2e-4).final - ref).max()
    e2 = np.abs(aco_fluid(aco, 0.2, 1e-4).final - ref).max()
    assert e2 < e1 and e2 / e1 == pytest.approx(0.5, abs=0.1)


def test_compare_winner_tie_and_order():
    tie = compare_winner(aco_fluid(AcoFluidConfig(le=(2.0, 2.0)), 2.0, 1e-3),
                         memristive_fluid(MemristiveFluidConfig(g_off=(0.5, 0.5), g_on=(500, 500)),
                                          2.0, 1e-3))
    assert tie.winners == (None, None) and tie.agree
    le = (3.0, 1.5)
    a = aco_fluid(AcoFluidConfig(le=le), 2.0, 1e-3)
    m = memristive_fluid(MemristiveFluidConfig(g_off=(1 / 3.0, 1 / 1.5), g_on=(1000 / 3.0, 1000 / 1.5)),
                         2.0, 1e-3)
    rep = compare_winner(a, m)
    assert rep.winners == (1, 1) and rep.agree


def test_compare_winner_rejects_unsettled():
    aco, mem = illustration_preset()
    short = aco_fluid(aco, 0.05, 1e-3)
    with pytest.raises(ConvergenceError, match="first"):
        compare_winner(short, memristive_fluid(mem, 1.0, 1e-3))


def test_trajectory_validation_and_csv():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), np.array([[0.0, np.inf], [1.0, 1.0]]))
    tr = aco_fluid(illustration_preset()[0], 0.01, 1e-3)
    buf = io.StringIO()
    tr.to_csv(buf)
    assert buf.getvalue().splitlines()[0] == "t,state1,state2"


def test_config_validation():
    with pytest.raises(ValueError):
        AcoFluidConfig(le=(0.0, 1.0))
    with pytest.raises(ValueError):
        MemristiveFluidConfig(g_off=(1.0, 1.0), g_on=(0.5, 2.0))
    with pytest.raises(ValueError):
        MemristiveFluidConfig(g_off=(1.0, 1.0), g_on=(2.0, 2.0), gn0=(0.5, 1.0))
    with pytest.raises(ValueError):
        aco_fluid(AcoFluidConfig(le=(1.0, 2.0)), 1e-4, 1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(1, 4), st.floats(1.2, 3))
def test_argmax_agreement_property(le1, ratio):
    le2 = le1 * ratio
    for le in ((le1, le2), (le2, le1)):
        a = aco_fluid(AcoFluidConfig(le=le), 2.0, 1e-3)
        m = memristive_fluid(MemristiveFluidConfig(g_off=(1 / le[0], 1 / le[1]),
                                                   g_on=(1000 / le[0], 1000 / le[1])), 2.0, 1e-3)
        rep = compare_winner(a, m)
        assert rep.agree and rep.winners[0] == int(np.argmin(le))

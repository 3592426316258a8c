import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memaco.energy import EnergyLedger, energy_report, ledger_band


def test_single_event_report():
    led = EnergyLedger()
    led.record("read", 10e-12)
    rep = energy_report(led, 1)
    assert rep.per_pixel == 10e-12


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1e-9), max_size=40), st.lists(st.floats(0, 1e-9), max_size=40))
def test_totals_equal_recorded_sum(a, b):
    led = EnergyLedger()
    led.record("init", a)
    led.record("reset", b)
    assert led.total("init") == math.fsum(a)
    assert led.total() == math.fsum([math.fsum(a), math.fsum(b)])
    assert led.count("init") == len(a)


def test_merge_is_order_free():
    x, y = EnergyLedger(), EnergyLedger()
    x.record("traversal", [1e-12, 2e-12])
    y.record("traversal", [3e-12])
    y.note("d", 1.0)
    assert x.merge(y).total() == y.merge(x).total()
    assert x.merge(y).diagnostics == {"d": 1.0}


def test_rejects_bad_events():
    led = EnergyLedger()
    with pytest.raises(ValueError):
        led.record("init", -1.0)
    with pytest.raises(KeyError):
        led.record("compute", 1.0)


def test_default_band():
    lo, hi = ledger_band()
    assert lo == pytest.approx(0.7690045e-9, rel=1e-9)
    assert hi == pytest.approx(1.828075e-9, rel=1e-9)
    assert lo <= 0.819e-9 <= hi


def test_report_outputs():
    led = EnergyLedger()
    led.record("init", np.full(4, 50e-12))
    rep = energy_report(led, 2, iterations=0)
    assert "per pixel" in rep.to_text()
    buf = io.StringIO()
    rep.to_csv(buf)
    assert buf.getvalue().splitlines()[0] == "stage,pulses,joules"
    with pytest.raises(ValueError):
        energy_report(led, 0)

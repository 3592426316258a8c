"""Memristor models and explicit-Euler state stepping.

Three models share the internal state ``x`` in [0, 1]:

* linear drift, ``dx/dt = K I`` with conductance ``G_on x + G_off (1 - x)``;
* drift plus relaxation, ``dx/dt = K I - xi x``;
* a voltage-threshold model with resistance ``R_off (1 - x) + R_on x`` whose
  state only moves when the device voltage leaves the (V_tn, V_tp) window.

All stepping functions accept floats or numpy arrays and clamp to [0, 1].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class DeviceState:
    x: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"state x={self.x} outside [0, 1]")


@dataclass(frozen=True)
class LinearParams:
    g_on: float
    g_off: float
    k: float

    def __post_init__(self):
        if not self.g_on > self.g_off > 0:
            raise ValueError("need g_on > g_off > 0")


@dataclass(frozen=True)
class DriftRelaxParams:
    k: float
    xi: float = 0.0

    def __post_init__(self):
        if self.xi < 0:
            raise ValueError("relaxation rate must be non-negative")


@dataclass(frozen=True)
class ThresholdParams:
    """Threshold device; defaults are the fitted silver atomic-switch values.

    ``literal_negative_sign`` reproduces the printed negative branch
    ``-beta_n (V - V_tn)``, under which negative pulses also raise ``x``.
    The default applies the branch with the sign that lowers ``x``.
    """

    r_off: float = 1e6
    r_on: float = 400.0
    v_tp: float = 80e-3
    v_tn: float = -35e-3
    beta_p: float = 19.6e3
    beta_n: float = 17.5e3
    literal_negative_sign: bool = False

    def __post_init__(self):
        if not self.r_off > self.r_on > 0:
            raise ValueError("need r_off > r_on > 0")
        if not self.v_tn < 0 < self.v_tp:
            raise ValueError("need v_tn < 0 < v_tp")
        if not (self.beta_p > 0 and self.beta_n > 0):
            raise ValueError("drift slopes must be positive")

    def x_for_resistance(self, r: float) -> float:
        """Inverse of :func:`resistance`."""
        return (self.r_off - r) / (self.r_off - self.r_on)


def _clamp(x):
    return np.clip(x, 0.0, 1.0) if isinstance(x, np.ndarray) else min(1.0, max(0.0, x))


def _advance(state, dx):
    # DeviceState in, DeviceState out; plain floats and arrays pass through
    if isinstance(state, DeviceState):
        return DeviceState(_clamp(state.x + float(dx)))
    return _clamp(state + dx)


def conductance(x, params: LinearParams):
    return params.g_on * x + params.g_off * (1.0 - x)


def resistance(x, params: ThresholdParams):
    return params.r_off * (1.0 - x) + params.r_on * x


def threshold_rate(v_m, params: ThresholdParams):
    """dx/dt of the threshold model for device voltage ``v_m``."""
    v = np.asarray(v_m, dtype=float)
    neg_gain = -params.beta_n if params.literal_negative_sign else params.beta_n
    rate = np.where(v > params.v_tp, params.beta_p * (v - params.v_tp),
                    np.where(v < params.v_tn, neg_gain * (v - params.v_tn), 0.0))
    return rate if rate.ndim else float(rate)


def step_threshold(state, v_m, dt: float, params: ThresholdParams):
    """One Euler step of the threshold model.

    ``state`` may be a :class:`DeviceState`, a float or an array of states
    (with ``v_m`` broadcastable against it).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    return _advance(state, threshold_rate(v_m, params) * dt)


def step_drift_relax(state, current, dt: float, params: DriftRelaxParams):
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = state.x if isinstance(state, DeviceState) else state
    return _advance(state, (params.k * current - params.xi * x) * dt)


def step_linear(state, current, dt: float, params: LinearParams):
    if not dt > 0:
        raise ValueError("dt must be positive")
    return _advance(state, params.k * current * dt)


# ---------------------------------------------------------------- I-V sweeps

@dataclass
class IVTrace:
    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    x: np.ndarray

    def rows(self):
        return zip(self.t.tolist(), self.v.tolist(), self.i.tolist(), self.x.tolist())

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "V", "I", "x"])
        for row in self.rows():
            w.writerow([repr(v) for v in row])


def triangular_waveform(amplitude: float = 0.2, rate: float = 1e3,
                        points_per_segment: int = 200) -> list[tuple[float, float]]:
    """0 -> +A -> -A -> 0 at a constant slew ``rate`` (V/s)."""
    if amplitude < 0 or rate <= 0 or points_per_segment < 1:
        raise ValueError("need amplitude >= 0, rate > 0, points_per_segment >= 1")
    if amplitude == 0:
        return [(0.0, 0.0), (1e-3, 0.0)]
    quarter = amplitude / rate
    corners = [(0.0, 0.0), (quarter, amplitude), (3 * quarter, -amplitude), (4 * quarter, 0.0)]
    out = [corners[0]]
    for (t0, v0), (t1, v1) in zip(corners, corners[1:]):
        n = points_per_segment if abs(v1 - v0) <= amplitude else 2 * points_per_segment
        for k in range(1, n + 1):
            f = k / n
            out.append((t0 + f * (t1 - t0), v0 + f * (v1 - v0)))
    return out


def iv_sweep(params: ThresholdParams, waveform: Sequence[tuple[float, float]],
             x0: float = 0.0, dt_max: float = 10e-9) -> IVTrace:
    """Drive a threshold device with a piecewise-linear voltage waveform.

    Between consecutive samples the voltage is interpolated linearly and the
    state is advanced with explicit Euler steps no longer than ``dt_max``.
    The trace is reported at the waveform samples with ``I = V / R(x)``.
    """
    if len(waveform) < 1:
        raise ValueError("empty waveform")
    ts = np.array([p[0] for p in waveform], dtype=float)
    vs = np.array([p[1] for p in waveform], dtype=float)
    if np.any(np.diff(ts) <= 0):
        raise ValueError("waveform times must be strictly increasing")
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [0, 1]")
    xs = np.empty_like(ts)
    x = float(x0)
    xs[0] = x
    for k in range(1, len(ts)):
        span = ts[k] - ts[k - 1]
        n = max(1, math.ceil(span / dt_max - 1e-9))
        h = span / n
        v0, dv = vs[k - 1], (vs[k] - vs[k - 1]) / n
        if max(v0, vs[k]) <= params.v_tp and min(v0, vs[k]) >= params.v_tn:
            xs[k] = x
            continue
        v_sub = v0 + dv * np.arange(n)
        rates = threshold_rate(v_sub, params)
        for r in rates:
            if r:
                x = min(1.0, max(0.0, x + r * h))
        xs[k] = x
    current = vs / resistance(xs, params)
    return IVTrace(ts, vs, current, xs)

"""Behavioral simulator of the memristive pixel array.

Each pixel holds one threshold memristor behind switches of on-resistance
``r_ds``. A run goes through four stages:

1. initialization: every device is programmed from the off state for a time
   that encodes its contrast heuristic;
2. traversal: in each phase, disjoint groups of ``L`` row (or column)
   neighbours share one update current source for one pulse;
3. readout at a voltage inside the device dead zone;
4. reset with a reverse-polarity pulse.

All stages record their energy in an :class:`~memaco.energy.EnergyLedger`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .device import ThresholdParams, resistance, threshold_rate
from .energy import EnergyLedger


class CalibrationError(RuntimeError):
    """The initialization band cannot be reached with the given drive."""


class ConfigurationError(ValueError):
    """A read or reset setting would violate its contract."""


def _elapsed(n: int, dt: float) -> float:
    # n * dt rounded through decimal so 60 pulses of 1 us print as 6e-05
    return float(Decimal(repr(dt)) * n)


# ---------------------------------------------------------------- parameters

@dataclass(frozen=True)
class PulseParams:
    i_update: float = 6e-6
    t_pulse: float = 1e-6
    dt_max: float = 10e-9
    v_dd: float = 1.05       # supply rail; also the source compliance
    mirror_ratio: float = 1.0  # reference-branch current per unit output current

    def __post_init__(self):
        if min(self.i_update, self.t_pulse, self.dt_max, self.v_dd) <= 0:
            raise ValueError("pulse parameters must be positive")
        if self.mirror_ratio < 0:
            raise ValueError("mirror ratio must be non-negative")


@dataclass(frozen=True)
class InitParams:
    v_dd: float = 1.05
    pulse: float = 2e-6
    pulses_per_direction: int = 2
    band: tuple[float, float] = (12.5e3, 150e3)
    r_ds: float = 1e3
    dt_max: float = 10e-9

    def __post_init__(self):
        if self.pulse <= 0 or self.pulses_per_direction < 1 or self.dt_max <= 0:
            raise ValueError("pulse duration, count and dt_max must be positive")
        if self.r_ds < 0:
            raise ValueError("r_ds must be non-negative")
        if not self.band[0] < self.band[1]:
            raise ValueError("band must be (low, high) with low < high")

    @property
    def n_pulses(self) -> int:
        return 2 * self.pulses_per_direction

    @property
    def budget(self) -> float:
        return self.n_pulses * self.pulse


@dataclass(frozen=True)
class ReadParams:
    """Bit-line precharge to ``v_bl`` with the device biased at ``v_dev``."""

    v_bl: float = 0.5
    v_dev: float = 0.05
    duration: float = 5e-9
    c_bl: float = 20e-15


@dataclass(frozen=True)
class ResetParams:
    voltage: float = -1.05
    duration: float = 132e-6
    r_ds: float = 1e3
    dt_max: float = 10e-9


# ---------------------------------------------------------------- state

@dataclass
class ArrayState:
    """Device states of a ``height x width`` array and the simulated clock."""

    x: np.ndarray
    device: ThresholdParams = field(default_factory=ThresholdParams)
    r_ds: float = 1e3
    clock: float = 0.0

    @property
    def height(self) -> int:
        return self.x.shape[0]

    @property
    def width(self) -> int:
        return self.x.shape[1]

    def resistance_map(self) -> np.ndarray:
        return resistance(self.x, self.device)

    def copy(self) -> "ArrayState":
        return replace(self, x=self.x.copy())


# ---------------------------------------------------------------- initialization

@dataclass(frozen=True)
class Calibration:
    """Programming times that land a fresh device on the band edges.

    ``t_low_r`` reaches the low-resistance end, ``t_high_r`` the high end.
    Device time is mapped onto the wall-clock pulse budget by ``time_scale``.
    """

    t_low_r: float
    t_high_r: float
    time_scale: float


def _drive_rates(x, v_dd: float, r_ds: float, dev: ThresholdParams):
    r = resistance(x, dev)
    v_m = v_dd * r / (r + r_ds)
    return threshold_rate(v_m, dev), v_dd * v_dd / (r + r_ds)


def _time_to_reach(r_target: float, p: InitParams, dev: ThresholdParams,
                   t_limit: float = 1e-2) -> float:
    """Programming time from x = 0 until ``R = r_target`` under the init drive.

    Steps of ``dt_max`` are taken until the next step would pass the target;
    the final partial step is solved exactly, so replaying the same stepping
    for the returned time reproduces ``r_target`` to rounding.
    """
    x_target = dev.x_for_resistance(r_target)
    x, t, h = 0.0, 0.0, p.dt_max
    while t < t_limit:
        rate, _ = _drive_rates(x, p.v_dd, p.r_ds, dev)
        if rate <= 0:
            break
        if x + rate * h >= x_target:
            return t + (x_target - x) / rate
        x += rate * h
        t += h
    raise CalibrationError(
        f"resistance {r_target:g} ohm unreachable with V_dd={p.v_dd} V through R_ds={p.r_ds} ohm")


@lru_cache(maxsize=32)
def calibrate(params: InitParams, device: ThresholdParams = ThresholdParams()) -> Calibration:
    lo, hi = params.band
    if not device.r_on < lo < hi < device.r_off:
        raise CalibrationError(f"band {params.band} not inside (R_on, R_off)")
    t_low_r = _time_to_reach(lo, params, device)
    t_high_r = _time_to_reach(hi, params, device)
    return Calibration(t_low_r, t_high_r, t_low_r / params.budget)


def programming_times(eta: np.ndarray, cal: Calibration, encoding: str = "inverse") -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0) or np.any(eta > 1):
        raise ValueError("heuristic values must lie in [0, 1]")
    span = cal.t_low_r - cal.t_high_r
    if encoding == "inverse":
        return cal.t_high_r + span * (1.0 - eta)
    if encoding == "direct":
        return cal.t_high_r + span * eta
    raise ValueError(f"unknown encoding {encoding!r}")


def _program(t_on: np.ndarray, p: InitParams, dev: ThresholdParams):
    """Drive fresh devices for per-pixel times; returns final x and supply energy."""
    t_on = np.asarray(t_on, dtype=float).ravel()
    x = np.zeros_like(t_on)
    energy = np.zeros_like(t_on)
    h = p.dt_max
    n_full = np.floor(t_on / h).astype(np.int64)
    # a cell whose remaining time is within rounding of h takes a full step
    rem = t_on - n_full * h
    for k in range(int(n_full.max(initial=0))):
        act = n_full > k
        if not act.any():
            break
        rate, power = _drive_rates(x[act], p.v_dd, p.r_ds, dev)
        energy[act] += power * h
        x[act] = np.clip(x[act] + rate * h, 0.0, 1.0)
    part = rem > 0
    if part.any():
        rate, power = _drive_rates(x[part], p.v_dd, p.r_ds, dev)
        energy[part] += power * rem[part]
        x[part] = np.clip(x[part] + rate * rem[part], 0.0, 1.0)
    return x, energy


def init_array(eta: np.ndarray, params: InitParams = InitParams(), encoding: str = "inverse",
               device: ThresholdParams = ThresholdParams()) -> tuple[ArrayState, EnergyLedger]:
    """Program a reset array from a heuristic map.

    Under the ``inverse`` encoding a flat pixel (eta = 0) ends at the low end
    of the resistance band and a maximal-contrast pixel at the high end.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.ndim != 2:
        raise ValueError("heuristic map must be 2-D")
    cal = calibrate(params, device)
    t_on = programming_times(eta, cal, encoding)
    x, energy = _program(t_on, params, device)
    ledger = EnergyLedger()
    # energy is split evenly across the programming pulses of each pixel
    ledger.record("init", np.repeat(energy / params.n_pulses, params.n_pulses))
    state = ArrayState(x.reshape(eta.shape), device, params.r_ds, _elapsed(params.n_pulses, params.pulse))
    return state, ledger


# ---------------------------------------------------------------- phases

@dataclass(frozen=True)
class Phase:
    axis: str                        # "h" or "v"
    groups: tuple[tuple[int, ...], ...]  # flat pixel indices, ordered along the line

    def __post_init__(self):
        members = [i for g in self.groups for i in g]
        object.__setattr__(self, "members", np.array(members, dtype=np.int64))
        object.__setattr__(self, "gid", np.repeat(np.arange(len(self.groups)),
                                                  [len(g) for g in self.groups]))
        object.__setattr__(self, "pos", np.concatenate(
            [np.arange(len(g)) for g in self.groups]) if self.groups else np.zeros(0, np.int64))
        object.__setattr__(self, "sizes", np.array([len(g) for g in self.groups], dtype=np.int64))


@dataclass(frozen=True)
class PhasePlan:
    dims: tuple[int, int]
    L: int
    phases: tuple[Phase, ...]


def _line_groups(n: int, L: int, p: int) -> list[range]:
    out = []
    for s in range(p, n, L):
        g = range(s, min(s + L, n))
        if len(g) >= 2:
            out.append(g)
    return out


def plan_phases(dims: tuple[int, int], L: int, pattern: str = "hv_only") -> PhasePlan:
    """L horizontal phases followed by L vertical ones.

    Phase ``p`` groups start at columns (rows) congruent to ``p`` mod ``L``.
    A group cut by the far border keeps its remaining pixels if there are at
    least two of them and is dropped otherwise.
    """
    if pattern not in ("hv_only", "hv-only"):
        raise ValueError(f"the array realizes straight traversals only, not {pattern!r}")
    if not isinstance(L, (int, np.integer)) or L < 2:
        raise ValueError(f"L must be an integer >= 2, got {L!r}")
    h, w = dims
    phases = []
    for p in range(L):
        groups = tuple(tuple(r * w + c for c in g) for r in range(h) for g in _line_groups(w, L, p))
        phases.append(Phase("h", groups))
    for p in range(L):
        groups = tuple(tuple(r * w + c for r in g) for c in range(w) for g in _line_groups(h, L, p))
        phases.append(Phase("v", groups))
    return PhasePlan((h, w), L, tuple(phases))


# ---------------------------------------------------------------- update pulses

def branch_switch_resistance(pos: np.ndarray, sizes: np.ndarray, r_ds: float,
                             topology: str) -> np.ndarray:
    """Series switch resistance of each branch.

    ``symmetric`` gives every branch its own switch. ``chained`` models a
    line of shared switches fed at the group centre: a branch ``k`` places
    from the centre sits behind ``k`` switches.
    """
    if topology == "symmetric":
        return np.full(pos.shape, float(r_ds))
    if topology == "chained":
        centre = (sizes - 1) // 2
        return np.abs(pos - centre) * float(r_ds)
    raise ValueError(f"unknown topology {topology!r}")


def _pulse_arrays(x: np.ndarray, members, gid, r_sw, n_groups: int, pulse: PulseParams,
                  dev: ThresholdParams, ledger: Optional[EnergyLedger]):
    """One update pulse on every group at once; x is modified in place."""
    n = max(1, math.ceil(pulse.t_pulse / pulse.dt_max - 1e-9))
    h = pulse.t_pulse / n
    delivered = np.zeros(n_groups)
    drawn = np.zeros(n_groups)
    for _ in range(n):
        xs = x[members]
        r = resistance(xs, dev)
        g_b = 1.0 / (r + r_sw)
        g_tot = np.bincount(gid, weights=g_b, minlength=n_groups)
        v_node = np.minimum(pulse.i_update / g_tot, pulse.v_dd)
        i_out = v_node * g_tot
        v_m = v_node[gid] * r * g_b
        x[members] = np.clip(xs + threshold_rate(v_m, dev) * h, 0.0, 1.0)
        delivered += v_node * i_out * h
        drawn += pulse.v_dd * (1.0 + pulse.mirror_ratio) * i_out * h
    if ledger is not None:
        ledger.record("traversal", drawn)
        ledger.note("traversal_delivered", math.fsum(delivered.tolist()))
    return drawn, delivered


def apply_pulse(state: ArrayState, group: Sequence, pulse: PulseParams = PulseParams(),
                r_ds: Optional[float] = None, topology: str = "symmetric"
                ) -> tuple[ArrayState, float]:
    """Apply one update pulse to a single group of pixels.

    ``group`` lists (row, col) pairs along one row or column. Returns the new
    state and the supply energy of the pulse; the clock is not advanced.
    """
    group = [tuple(p) for p in group]
    if not group:
        raise ValueError("empty group")
    rows = {p[0] for p in group}
    cols = {p[1] for p in group}
    if len(rows) != 1 and len(cols) != 1:
        raise ValueError("group pixels must share a row or a column")
    r_ds = state.r_ds if r_ds is None else r_ds
    new = state.copy()
    flat = new.x.reshape(-1)
    members = np.array([r * state.width + c for r, c in group], dtype=np.int64)
    pos = np.arange(len(group))
    r_sw = branch_switch_resistance(pos, np.array([len(group)]), r_ds, topology)
    drawn, _ = _pulse_arrays(flat, members, np.zeros(len(group), np.int64), r_sw, 1,
                             pulse, state.device, None)
    return new, float(drawn[0])


def branch_voltages(resistances: Sequence[float], i_update: float, r_ds: float,
                    topology: str = "symmetric", v_dd: float = math.inf) -> np.ndarray:
    """Memristor voltages of one group for the given device resistances."""
    r = np.asarray(resistances, dtype=float)
    pos = np.arange(r.size)
    r_sw = branch_switch_resistance(pos, np.array([r.size]), r_ds, topology)
    g_b = 1.0 / (r + r_sw)
    v_node = min(i_update / g_b.sum(), v_dd)
    return v_node * r * g_b


@dataclass
class TraversalResult:
    state: ArrayState
    snapshots: dict        # iteration index -> resistance map
    ledger: EnergyLedger
    phases_run: int
    elapsed: float


def run_traversal(state: ArrayState, plan: PhasePlan, iterations: int,
                  pulse: PulseParams = PulseParams(), topology: str = "symmetric",
                  snapshots: Sequence[int] = ()) -> TraversalResult:
    """Run ``iterations`` sweeps of all ``2L`` phases.

    ``snapshots`` lists iteration counts after which the resistance map is
    captured; 0 captures the map before the first phase.
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    if (state.height, state.width) != plan.dims:
        raise ValueError("plan dimensions do not match the array")
    want = set(int(s) for s in snapshots)
    if any(s < 0 or s > iterations for s in want):
        raise ValueError(f"snapshot indices must lie in [0, {iterations}]")
    new = state.copy()
    flat = new.x.reshape(-1)
    ledger = EnergyLedger()
    prepared = [(ph.members, ph.gid,
                 branch_switch_resistance(ph.pos, ph.sizes[ph.gid], new.r_ds, topology),
                 len(ph.groups)) for ph in plan.phases]
    shots = {}
    if 0 in want:
        shots[0] = new.resistance_map()
    for it in range(1, iterations + 1):
        for members, gid, r_sw, ng in prepared:
            if ng:
                _pulse_arrays(flat, members, gid, r_sw, ng, pulse, new.device, ledger)
        if it in want:
            shots[it] = new.resistance_map()
    n_phases = iterations * len(plan.phases)
    elapsed = _elapsed(n_phases, pulse.t_pulse)
    new.clock = state.clock + elapsed
    return TraversalResult(new, shots, ledger, n_phases, elapsed)


# ---------------------------------------------------------------- readout and reset

def readout(state: ArrayState, params: ReadParams = ReadParams()) -> tuple[np.ndarray, EnergyLedger]:
    """Non-destructive resistance read.

    Per-pixel energy is the bit-line precharge ``C V_bl^2`` plus the supply
    energy of the read current ``V_bl * V_dev / R`` over the read window.
    """
    dev = state.device
    if not dev.v_tn < params.v_dev < dev.v_tp:
        raise ConfigurationError(
            f"read device voltage {params.v_dev} V leaves the dead zone ({dev.v_tn}, {dev.v_tp}) V")
    if params.duration <= 0:
        raise ConfigurationError("read duration must be positive")
    r = state.resistance_map()
    energy = params.c_bl * params.v_bl ** 2 + params.v_bl * abs(params.v_dev) / r * params.duration
    ledger = EnergyLedger()
    ledger.record("read", energy)
    ledger.note("read_device", math.fsum((params.v_dev ** 2 / r * params.duration).ravel().tolist()))
    state.clock += params.duration
    return r, ledger


def reset_array(state: ArrayState, params: ResetParams = ResetParams()
                ) -> tuple[ArrayState, EnergyLedger]:
    """Drive every cell back to x = 0 with a reverse-polarity pulse."""
    dev = state.device
    if params.voltage >= dev.v_tn:
        raise ConfigurationError(f"reset voltage {params.voltage} V is not below V_tn={dev.v_tn} V")
    if dev.beta_n * abs(params.voltage - dev.v_tn) * params.duration < 1.0:
        raise ConfigurationError("reset pulse too short to guarantee x = 0 from x = 1")
    if dev.literal_negative_sign:
        raise ConfigurationError("reset needs the state-lowering negative branch")
    new = state.copy()
    x = new.x.reshape(-1)
    energy = np.zeros(x.size)
    n = max(1, math.ceil(params.duration / params.dt_max - 1e-9))
    h = params.duration / n
    v2 = params.voltage ** 2
    k = 0
    while k < n and np.any(x > 0):
        r = resistance(x, dev)
        energy += v2 / (r + params.r_ds) * h
        v_m = params.voltage * r / (r + params.r_ds)
        x[:] = np.clip(x + threshold_rate(v_m, dev) * h, 0.0, 1.0)
        k += 1
    if k < n:
        # every cell sits at x = 0 for the rest of the pulse
        energy += v2 / (dev.r_off + params.r_ds) * (n - k) * h
    if np.any(x > 0):
        raise ConfigurationError("reset pulse left cells above x = 0")
    ledger = EnergyLedger()
    ledger.record("reset", energy)
    new.clock = state.clock + params.duration
    return new, ledger


# ---------------------------------------------------------------- full pipeline

@dataclass(frozen=True)
class HwConfig:
    L: int = 3
    iterations: int = 10
    encoding: str = "inverse"
    topology: str = "symmetric"
    init: InitParams = InitParams()
    pulse: PulseParams = PulseParams()
    read: ReadParams = ReadParams()
    reset: ResetParams = ResetParams()
    device: ThresholdParams = ThresholdParams()
    snapshots: tuple = ()


@dataclass
class HwResult:
    resistance: np.ndarray
    snapshots: dict
    ledger: EnergyLedger
    traversal_time: float
    calibration: Calibration
    final_state: ArrayState


def simulate(eta: np.ndarray, config: HwConfig = HwConfig()) -> HwResult:
    """Initialize, traverse, read and reset an array for a heuristic map."""
    state, ledger = init_array(eta, config.init, config.encoding, config.device)
    plan = plan_phases(eta.shape, config.L)
    tr = run_traversal(state, plan, config.iterations, config.pulse, config.topology,
                       config.snapshots)
    r_map, read_ledger = readout(tr.state, config.read)
    final, reset_ledger = reset_array(tr.state, config.reset)
    total = ledger.merge(tr.ledger).merge(read_ledger).merge(reset_ledger)
    return HwResult(r_map, tr.snapshots, total, tr.elapsed,
                    calibrate(config.init, config.device), final)

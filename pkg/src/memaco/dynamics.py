"""Two-path fluid dynamics: ant-colony pheromones against memristive conductances.

Ants arrive at a constant rate and pick one of two paths; in the fluid limit
the pheromone on path ``i`` obeys

    dtau_i/dt = -gamma rho tau_i + p_i gamma nu Q / Le_i

with ``p_i`` proportional to ``tau_i**alpha * Le_i**-beta``. Two memristors
sharing a current source behave the same way once their conductance is
normalized by the off conductance:

    dGn_i/dt = -xi (Gn_i - 1) + K I0 (G_on_i/G_off_i - 1) G_i / (G_1 + G_2)

where ``G_i = Gn_i G_off_i``. The off conductance plays the heuristic and the
normalized conductance plays the pheromone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

TAU_FLOOR = 1e-12


class ConvergenceError(RuntimeError):
    """A trajectory has not settled enough to name a winner."""


@dataclass(frozen=True)
class AcoFluidConfig:
    le: tuple[float, float]
    gamma: float = 20.0
    rho: float = 1.0
    nu: float = 1.0
    q: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    tau0: tuple[float, float] = (0.01, 0.01)

    def __post_init__(self):
        if min(self.le) <= 0:
            raise ValueError("path lengths must be positive")
        if self.gamma <= 0:
            raise ValueError("arrival rate gamma must be positive")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if min(self.tau0) <= 0:
            raise ValueError("initial pheromones must be positive")

    def swapped(self) -> "AcoFluidConfig":
        return replace(self, le=self.le[::-1], tau0=self.tau0[::-1])

    def rhs(self, tau: np.ndarray) -> np.ndarray:
        le = np.asarray(self.le, dtype=float)
        tau = np.maximum(np.asarray(tau, dtype=float), TAU_FLOOR)
        logw = self.alpha * np.log(tau) - self.beta * np.log(le)
        w = np.exp(logw - logw.max())
        p = w / w.sum()
        return -self.gamma * self.rho * tau + p * self.gamma * self.nu * self.q / le


@dataclass(frozen=True)
class MemristiveFluidConfig:
    g_off: tuple[float, float]
    g_on: tuple[float, float]
    i0: float = 1.0
    k: float = 0.01
    xi: float = 50.0
    gn0: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        for on, off in zip(self.g_on, self.g_off):
            if not on > off > 0:
                raise ValueError("need g_on > g_off > 0 on both branches")
        if min(self.gn0) < 1:
            raise ValueError("normalized conductance starts at or above 1")
        if self.xi < 0:
            raise ValueError("relaxation rate must be non-negative")

    @property
    def gn_max(self) -> np.ndarray:
        return np.asarray(self.g_on, dtype=float) / np.asarray(self.g_off, dtype=float)

    def swapped(self) -> "MemristiveFluidConfig":
        return replace(self, g_off=self.g_off[::-1], g_on=self.g_on[::-1], gn0=self.gn0[::-1])

    def rhs(self, gn: np.ndarray) -> np.ndarray:
        g = gn * np.asarray(self.g_off, dtype=float)
        # symmetric split keeps relabeling exact; current_divider favours exact conservation
        share = self.i0 * (g / (g[0] + g[1]))
        drive = self.k * (self.gn_max - 1.0) * share
        return -self.xi * (gn - 1.0) + drive


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # shape (n, 2)
    label: str = ""

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory time must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite values")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def settling(self, window: float = 0.1) -> float:
        """Largest spread over the trailing ``window`` of time, relative to the final scale."""
        t_cut = self.t[-1] - window * (self.t[-1] - self.t[0])
        tail = self.states[self.t >= t_cut]
        scale = float(np.max(np.abs(self.final)))
        if scale == 0:
            return 0.0
        return float(np.max(tail.max(axis=0) - tail.min(axis=0)) / scale)

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "state1", "state2"])
        for t, (a, b) in zip(self.t.tolist(), self.states.tolist()):
            w.writerow([repr(t), repr(a), repr(b)])


def current_divider(g1: float, g2: float, i0: float) -> tuple[float, float]:
    """Split ``i0`` between two parallel conductances; the two parts sum to ``i0``."""
    if g1 < 0 or g2 < 0:
        raise ValueError("conductances must be non-negative")
    total = g1 + g2
    if total <= 0:
        raise ValueError("at least one branch must conduct")
    # the larger share is computed directly; the smaller one by subtraction is
    # then exact (the operands are within a factor of two), so i1 + i2 == i0
    if g1 >= g2:
        i1 = i0 * (g1 / total)
        return i1, i0 - i1
    i2 = i0 * (g2 / total)
    return i0 - i2, i2


def _integrate(rhs, y0, T: float, dt: float, lo, hi, label: str) -> Trajectory:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if T < dt:
        raise ValueError("T must be at least one step")
    n = int(math.ceil(T / dt - 1e-9))
    h = T / n
    out = np.empty((n + 1, 2))
    y = np.asarray(y0, dtype=float).copy()
    out[0] = y
    for k in range(1, n + 1):
        y = np.clip(y + h * rhs(y), lo, hi)
        out[k] = y
    return Trajectory(np.arange(n + 1) * h, out, label)


def aco_fluid(config: AcoFluidConfig, T: float, dt: float) -> Trajectory:
    return _integrate(config.rhs, config.tau0, T, dt, TAU_FLOOR, np.inf, "pheromone")


def memristive_fluid(config: MemristiveFluidConfig, T: float, dt: float) -> Trajectory:
    return _integrate(config.rhs, config.gn0, T, dt, 1.0, config.gn_max, "conductance")


# ---------------------------------------------------------------- presets

EXAMPLE_LE = {"up": 4.0, "left": 4.0, "right": 1.3, "down": 2.266}


def two_path_from_example(tau0: float = 0.01, on_off_ratio: float = 1000.0,
                          k: float = 0.01, xi: float = 50.0
                          ) -> tuple[AcoFluidConfig, MemristiveFluidConfig]:
    """Right and down rays of the two-path example scene.

    Each retained path starts with pheromone ``tau0**4`` (product over its
    four nodes). Off conductances are reciprocal path lengths and the on
    conductance is ``on_off_ratio`` times the off conductance.
    """
    le = (EXAMPLE_LE["right"], EXAMPLE_LE["down"])
    aco = AcoFluidConfig(le=le, tau0=(tau0 ** 4, tau0 ** 4))
    g_off = (1.0 / le[0], 1.0 / le[1])
    mem = MemristiveFluidConfig(g_off=g_off, g_on=(on_off_ratio * g_off[0], on_off_ratio * g_off[1]),
                                k=k, xi=xi)
    return aco, mem


def illustration_preset(k: float = 0.01, reciprocal: bool = False
                ) -> tuple[AcoFluidConfig, MemristiveFluidConfig]:
    """Illustration parameters for the side-by-side pheromone/conductance plot.

    The illustration conductances come without a drift constant ``k``; with the
    default the losing branch relaxes close to 1 while the winner settles
    above it. ``reciprocal=True`` swaps in off conductances that are exact
    reciprocals of the path lengths, keeping the same on/off ratios.
    """
    aco = AcoFluidConfig(le=(1.3, 2.266), gamma=20.0, rho=1.0, tau0=(0.01, 0.01))
    g_off, g_on = (2.266, 1.3), (2200.0, 1300.0)
    if reciprocal:
        ratios = (g_on[0] / g_off[0], g_on[1] / g_off[1])
        g_off = (1 / 1.3, 1 / 2.266)
        g_on = (ratios[0] * g_off[0], ratios[1] * g_off[1])
    mem = MemristiveFluidConfig(g_off=g_off, g_on=g_on, i0=1.0, k=k, xi=50.0, gn0=(1.0, 1.0))
    return aco, mem


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class WinnerReport:
    winners: tuple[Optional[int], Optional[int]]
    agree: bool
    final_ratios: tuple[float, float]


def _winner(traj: Trajectory, rtol: float) -> Optional[int]:
    a, b = traj.final
    if math.isclose(a, b, rel_tol=rtol, abs_tol=0.0):
        return None
    return 0 if a > b else 1


def _ratio(traj: Trajectory) -> float:
    a, b = traj.final
    lo, hi = min(a, b), max(a, b)
    return math.inf if lo == 0 else hi / lo


def compare_winner(a: Trajectory, b: Trajectory, tol: float = 1e-4,
                   tie_rtol: float = 1e-9) -> WinnerReport:
    """Winner index (0 or 1, None for a tie) of each system and whether they agree."""
    for name, traj in (("first", a), ("second", b)):
        s = traj.settling()
        if s >= tol:
            raise ConvergenceError(
                f"{name} trajectory ({traj.label or 'unnamed'}) has not converged: "
                f"relative change {s:.3g} over the last 10% of T")
    wa, wb = _winner(a, tie_rtol), _winner(b, tie_rtol)
    return WinnerReport((wa, wb), wa == wb, (_ratio(a), _ratio(b)))

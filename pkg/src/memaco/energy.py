"""Per-stage energy bookkeeping for the pixel-array simulator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

STAGES = ("init", "traversal", "read", "reset")

# per-event ranges used for the analytic band, joules
INIT_PULSE_RANGE = (6e-12, 132e-12)
UPDATE_PULSE_RANGE = (9e-12, 15e-12)
READ_RANGE = (4.5e-15, 75e-15)
RESET_RANGE = (205e-12, 400e-12)
PIXEL_AREA_UM2 = 37.22


@dataclass
class EnergyLedger:
    """Recorded energy events by stage.

    Events are kept so that stage totals are the exact (compensated) sum of
    what was recorded. ``diagnostics`` holds quantities that are reported
    but not counted in the totals.
    """

    events: dict = field(default_factory=lambda: {s: [] for s in STAGES})
    diagnostics: dict = field(default_factory=dict)

    def record(self, stage: str, energies) -> None:
        if stage not in self.events:
            raise KeyError(f"unknown stage {stage!r}")
        arr = np.atleast_1d(np.asarray(energies, dtype=float)).ravel()
        if arr.size == 0:
            return
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("energy events must be finite and non-negative")
        self.events[stage].append(arr)

    def note(self, key: str, joules: float) -> None:
        self.diagnostics[key] = self.diagnostics.get(key, 0.0) + float(joules)

    def merge(self, other: "EnergyLedger") -> "EnergyLedger":
        out = EnergyLedger()
        for s in STAGES:
            out.events[s] = self.events[s] + other.events[s]
        for d in (self.diagnostics, other.diagnostics):
            for k, v in d.items():
                out.note(k, v)
        return out

    def _all(self, stage: str) -> np.ndarray:
        ev = self.events[stage]
        return np.concatenate(ev) if ev else np.zeros(0)

    def count(self, stage: str) -> int:
        return sum(a.size for a in self.events[stage])

    def total(self, stage: str | None = None) -> float:
        if stage is None:
            return math.fsum(self.total(s) for s in STAGES)
        return math.fsum(self._all(stage).tolist())

    def extremes(self, stage: str) -> tuple[float, float] | None:
        a = self._all(stage)
        return (float(a.min()), float(a.max())) if a.size else None


@dataclass(frozen=True)
class EnergyReport:
    pixels: int
    stage_totals: dict
    stage_counts: dict
    stage_extremes: dict
    per_pixel: float
    band: tuple[float, float]
    diagnostics: dict

    @property
    def in_band(self) -> bool:
        return self.band[0] <= self.per_pixel <= self.band[1]

    def to_text(self) -> str:
        lines = [f"pixels: {self.pixels}"]
        for s in STAGES:
            ext = self.stage_extremes[s]
            ext_txt = "-" if ext is None else f"{ext[0]!r} .. {ext[1]!r} J"
            lines.append(f"{s}: {self.stage_totals[s]!r} J over {self.stage_counts[s]} events"
                         f" (per event {ext_txt})")
        lines.append(f"per pixel: {self.per_pixel!r} J")
        lines.append(f"ledger band per pixel: {self.band[0]!r} .. {self.band[1]!r} J")
        lines.append(f"inside band: {self.in_band}")
        for k, v in sorted(self.diagnostics.items()):
            lines.append(f"diagnostic {k}: {v!r}")
        lines.append(f"pixel area (reference): {PIXEL_AREA_UM2} um^2")
        return "\n".join(lines) + "\n"

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "pulses", "joules"])
        for s in STAGES:
            w.writerow([s, self.stage_counts[s], repr(self.stage_totals[s])])
        w.writerow(["per_pixel", "", repr(self.per_pixel)])


def ledger_band(init_pulses: int = 4, iterations: int = 10, L: int = 3,
                reads: int = 1, resets: int = 1) -> tuple[float, float]:
    """Per-pixel energy interval from the per-event ranges.

    Every pixel takes part in one group per phase, so traversal contributes
    ``iterations * 2L`` update pulses per pixel.
    """
    parts = [(init_pulses, INIT_PULSE_RANGE), (iterations * 2 * L, UPDATE_PULSE_RANGE),
             (reads, READ_RANGE), (resets, RESET_RANGE)]
    lo = math.fsum(n * r[0] for n, r in parts)
    hi = math.fsum(n * r[1] for n, r in parts)
    return lo, hi


def energy_report(ledger: EnergyLedger, pixels: int, init_pulses: int = 4,
                  iterations: int = 10, L: int = 3, reads: int = 1,
                  resets: int = 1) -> EnergyReport:
    if pixels <= 0:
        raise ValueError("pixel count must be positive")
    totals = {s: ledger.total(s) for s in STAGES}
    return EnergyReport(
        pixels=pixels,
        stage_totals=totals,
        stage_counts={s: ledger.count(s) for s in STAGES},
        stage_extremes={s: ledger.extremes(s) for s in STAGES},
        per_pixel=math.fsum(totals.values()) / pixels,
        band=ledger_band(init_pulses, iterations, L, reads, resets),
        diagnostics=dict(ledger.diagnostics),
    )

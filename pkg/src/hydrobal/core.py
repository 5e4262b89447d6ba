"""Domain types for a combined wind-hydro portfolio.

Covers the serial hydro cascade (reservoirs, plants, piecewise-linear
efficiency segments), deterministic time series, load commitments and
schedule containers, plus the discharge/power conversions everything else
is built on.

Unit conventions:
    power        MW
    energy       MWh
    discharge    m3/s
    volume       m3
    price        EUR/MWh
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum

import numpy as np

from .errors import ValidationError

#: Sink marker for the last plant's tailwater.
SEA = "SEA"

#: Seconds per hour, used to convert discharge (m3/s) to volume per step.
SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class TimeGrid:
    """Settlement grid: `steps` periods of (default) one hour each."""

    start: datetime
    steps: int
    step_length: timedelta = timedelta(hours=1)

    @property
    def step_hours(self) -> float:
        return self.step_length.total_seconds() / SECONDS_PER_HOUR

    @property
    def step_seconds(self) -> float:
        return self.step_length.total_seconds()


@dataclass(frozen=True)
class EfficiencySegment:
    """One linear piece of the PQ-curve.

    `width` is the discharge capacity of the piece (m3/s); `slope` is the
    incremental conversion, MW gained per m3/s routed through this piece.
    """

    width: float
    slope: float


@dataclass(frozen=True)
class HydroPlant:
    """A plant drawing from `upstream_reservoir`, discharging downstream.

    Segments are ordered; with strictly decreasing slopes the PQ-curve is
    concave and marginal cost increases with output.
    """

    id: str
    p_min: float
    p_max: float
    segments: tuple[EfficiencySegment, ...]
    upstream_reservoir: str
    downstream_reservoir: str = SEA

    def __init__(self, id, p_min, p_max, segments, upstream_reservoir,
                 downstream_reservoir=SEA):
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "p_min", float(p_min))
        object.__setattr__(self, "p_max", float(p_max))
        object.__setattr__(self, "segments", tuple(segments))
        object.__setattr__(self, "upstream_reservoir", upstream_reservoir)
        object.__setattr__(self, "downstream_reservoir", downstream_reservoir)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def widths(self) -> np.ndarray:
        return np.array([s.width for s in self.segments])

    @property
    def slopes(self) -> np.ndarray:
        return np.array([s.slope for s in self.segments])

    @property
    def max_discharge(self) -> float:
        return float(self.widths.sum())

    @property
    def max_power(self) -> float:
        """Power at full discharge (may exceed p_max; p_max then caps it)."""
        return float((self.widths * self.slopes).sum())


@dataclass(frozen=True)
class Reservoir:
    """Storage node. `water_value` prices stored energy; `reference_slope`
    (MW per m3/s) converts end-of-horizon volume to an energy equivalent."""

    id: str
    r_min: float
    r_max: float
    r_init: float
    water_value: float
    reference_slope: float

    def energy_equivalent(self, volume_m3: float) -> float:
        """MWh obtainable from `volume_m3` at the reference conversion."""
        return volume_m3 * self.reference_slope / SECONDS_PER_HOUR


@dataclass(frozen=True)
class CascadeSystem:
    """Serial cascade: plant i draws from reservoir i and discharges into
    reservoir i+1; the last plant discharges to the sea."""

    reservoirs: tuple[Reservoir, ...]
    plants: tuple[HydroPlant, ...]

    def __init__(self, reservoirs, plants):
        object.__setattr__(self, "reservoirs", tuple(reservoirs))
        object.__setattr__(self, "plants", tuple(plants))

    @property
    def n_plants(self) -> int:
        return len(self.plants)

    def plant_index(self, plant_id: str) -> int:
        for i, p in enumerate(self.plants):
            if p.id == plant_id:
                return i
        raise KeyError(plant_id)


class SeriesRole(Enum):
    FORECAST = "forecast"
    ACTUAL = "actual"


@dataclass(frozen=True)
class WindSeries:
    """Per-step wind power (MW), tagged as forecast or actual."""

    values: np.ndarray
    role: SeriesRole

    def __init__(self, values, role=SeriesRole.FORECAST):
        object.__setattr__(self, "values", np.asarray(values, dtype=float))
        object.__setattr__(self, "role", role)


@dataclass(frozen=True)
class InflowSeries:
    """Per-reservoir, per-step natural inflow (m3/s)."""

    by_reservoir: dict

    def __init__(self, by_reservoir):
        frozen = {rid: np.asarray(v, dtype=float) for rid, v in by_reservoir.items()}
        object.__setattr__(self, "by_reservoir", frozen)

    def for_reservoir(self, reservoir_id: str) -> np.ndarray:
        return self.by_reservoir[reservoir_id]


class CommitmentMode(Enum):
    PLANT = "plant"
    PORTFOLIO = "portfolio"


@dataclass(frozen=True)
class LoadCommitment:
    """Committed delivery per step.

    PLANT mode holds one series per hydro plant plus the wind plant.
    PORTFOLIO mode holds a single series; build it with `to_portfolio` so
    the sum identity holds by construction.
    """

    mode: CommitmentMode
    plant_loads: dict | None = None
    wind_load: np.ndarray | None = None
    total_load: np.ndarray | None = None

    def __init__(self, mode, plant_loads=None, wind_load=None, total_load=None):
        object.__setattr__(self, "mode", mode)
        if plant_loads is not None:
            plant_loads = {k: np.asarray(v, dtype=float) for k, v in plant_loads.items()}
        object.__setattr__(self, "plant_loads", plant_loads)
        if wind_load is not None:
            wind_load = np.asarray(wind_load, dtype=float)
        object.__setattr__(self, "wind_load", wind_load)
        if total_load is not None:
            total_load = np.asarray(total_load, dtype=float)
        object.__setattr__(self, "total_load", total_load)

    @staticmethod
    def for_plants(plant_loads: dict, wind_load) -> "LoadCommitment":
        return LoadCommitment(CommitmentMode.PLANT, plant_loads=plant_loads,
                              wind_load=wind_load)

    def to_portfolio(self) -> "LoadCommitment":
        """Collapse a PLANT commitment into the common portfolio series."""
        if self.mode is CommitmentMode.PORTFOLIO:
            return self
        total = np.asarray(self.wind_load, dtype=float).copy()
        for series in self.plant_loads.values():
            total = total + series
        return LoadCommitment(CommitmentMode.PORTFOLIO, plant_loads=self.plant_loads,
                              wind_load=self.wind_load, total_load=total)

    def hydro_total(self) -> np.ndarray:
        return np.sum([v for v in self.plant_loads.values()], axis=0)


@dataclass
class ScheduleSolution:
    """Solver output: per-plant generation, segment usage, reservoir
    trajectories, spill, intraday trades and the objective value.

    `segment_discharge[i]` and `segment_active[i]` have shape
    (n_segments_i, steps). `buy_tier_fills` / `sell_tier_fills` record the
    per-tier trade volumes (MWh) actually used so a quote book can be
    decremented after the solve.
    """

    generation: np.ndarray                # (plants, steps) MW
    segment_discharge: list               # per plant (segments, steps) m3/s
    segment_active: list                  # per plant (segments, steps) 0/1
    reservoir_volume: np.ndarray          # (reservoirs, steps) m3 at end of step
    spill: np.ndarray                     # (reservoirs, steps) m3/s
    buys: np.ndarray                      # (plants, steps) MW
    sells: np.ndarray                     # (plants, steps) MW
    objective: float
    buy_tier_fills: list = field(default_factory=list)   # per step [(tier, MWh)]
    sell_tier_fills: list = field(default_factory=list)  # per step [(tier, MWh)]

    @property
    def total_discharge(self) -> np.ndarray:
        """Per-plant total turbine discharge (plants, steps), m3/s."""
        return np.array([q.sum(axis=0) for q in self.segment_discharge])


# ---------------------------------------------------------------------------
# PQ-curve conversions


def discharge_to_power(plant: HydroPlant, q: float) -> float:
    """Piecewise-linear PQ-curve: fill segments in order.

    Raises ValueError when `q` lies outside [0, total segment width].
    """
    if q < 0 or q > plant.max_discharge + 1e-12:
        raise ValueError(
            f"discharge {q} outside [0, {plant.max_discharge}] for plant {plant.id}")
    remaining = q
    power = 0.0
    for seg in plant.segments:
        used = min(remaining, seg.width)
        power += used * seg.slope
        remaining -= used
        if remaining <= 0:
            break
    return power


def power_to_discharge(plant: HydroPlant, p: float) -> float:
    """Exact inverse of `discharge_to_power` on [0, max_power]."""
    if p < 0 or p > plant.max_power + 1e-9:
        raise ValueError(
            f"power {p} outside [0, {plant.max_power}] for plant {plant.id}")
    remaining = p
    q = 0.0
    for seg in plant.segments:
        seg_power = seg.width * seg.slope
        if remaining >= seg_power:
            q += seg.width
            remaining -= seg_power
        else:
            q += remaining / seg.slope
            remaining = 0.0
            break
    return q


# ---------------------------------------------------------------------------
# Validation


def _check_series(name, values, steps, violations, nonnegative=True):
    values = np.asarray(values)
    if len(values) != steps:
        violations.append(f"{name}: length {len(values)} != grid steps {steps}")
    if nonnegative and np.any(values < 0):
        violations.append(f"{name}: negative values")


def validate_system(system: CascadeSystem, inflow: InflowSeries | None = None,
                    grid: TimeGrid | None = None) -> list[str]:
    """Check every structural invariant; returns violations (empty = valid).

    Violations are data, not exceptions: callers that need a hard gate wrap
    the result in `require_valid`.
    """
    v: list[str] = []

    if grid is not None:
        if grid.steps < 1:
            v.append(f"grid: steps {grid.steps} < 1")
        if grid.step_length.total_seconds() <= 0:
            v.append("grid: non-positive step length")

    ids = [r.id for r in system.reservoirs] + [p.id for p in system.plants]
    if len(set(ids)) != len(ids):
        v.append("system: duplicate ids")
    if len(system.plants) != len(system.reservoirs):
        v.append(
            f"system: {len(system.plants)} plants vs {len(system.reservoirs)} "
            "reservoirs (serial cascade needs one reservoir per plant)")

    for i, p in enumerate(system.plants):
        if p.p_min > p.p_max:
            v.append(f"plant {p.id}: p_min {p.p_min} > p_max {p.p_max}")
        if p.p_min < 0:
            v.append(f"plant {p.id}: negative p_min")
        if not p.segments:
            v.append(f"plant {p.id}: no efficiency segments")
            continue
        widths = p.widths
        slopes = p.slopes
        if np.any(widths <= 0):
            v.append(f"plant {p.id}: non-positive segment width")
        if np.any(slopes <= 0):
            v.append(f"plant {p.id}: non-positive segment slope")
        if np.any(np.diff(slopes) >= 0):
            v.append(f"plant {p.id}: non-convex efficiency "
                     "(segment slopes must be strictly decreasing)")
        if p.max_power < p.p_max - 1e-9:
            v.append(f"plant {p.id}: PQ-curve tops out at {p.max_power:.6g} MW "
                     f"below p_max {p.p_max:.6g} MW")
        # topology: plant i sits below reservoir i, above reservoir i+1
        if i < len(system.reservoirs) and p.upstream_reservoir != system.reservoirs[i].id:
            v.append(f"plant {p.id}: upstream reservoir {p.upstream_reservoir} "
                     f"does not match cascade position ({system.reservoirs[i].id})")
        expected_down = (system.reservoirs[i + 1].id
                         if i + 1 < len(system.reservoirs) else SEA)
        if p.downstream_reservoir != expected_down:
            v.append(f"plant {p.id}: downstream reservoir "
                     f"{p.downstream_reservoir} should be {expected_down}")

    for r in system.reservoirs:
        if not (r.r_min <= r.r_init <= r.r_max):
            v.append(f"reservoir {r.id}: r_init {r.r_init} outside "
                     f"[{r.r_min}, {r.r_max}]")
        if r.water_value < 0:
            v.append(f"reservoir {r.id}: negative water value")
        if r.reference_slope <= 0:
            v.append(f"reservoir {r.id}: non-positive reference_slope")

    if inflow is not None and grid is not None:
        for r in system.reservoirs:
            if r.id not in inflow.by_reservoir:
                v.append(f"inflow: missing series for reservoir {r.id}")
            else:
                _check_series(f"inflow {r.id}", inflow.for_reservoir(r.id),
                              grid.steps, v)
    return v


def require_valid(system: CascadeSystem, inflow: InflowSeries | None = None,
                  grid: TimeGrid | None = None) -> None:
    violations = validate_system(system, inflow, grid)
    if violations:
        raise ValidationError(violations)

"""Desk-scale safety-message trace generator with attack injection.

A straight four-lane segment (two lanes each way) stands in for a road
network.  Vehicles arrive as a Poisson process per lane, accelerate at a
constant rate to a per-vehicle cruise speed at or below the limit, and
broadcast on the 0.1 s grid.  Injectors rewrite a baseline trace into one of
three attacks and label every record.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .bsm import TICKS_PER_SECOND, BsmRecord, FeatureSeries, to_tick

M_PER_DEG_LAT = 111_320.0
LANE_WIDTH_M = 3.5


@dataclass(frozen=True)
class SimConfig:
    duration: float = 200.0
    base_rate: float = 10.0
    lanes: int = 4
    arrival_rate: float = 200.0  # vehicles / hour / lane
    speed_limit: float = 15.6  # m/s, about 35 mph
    origin: tuple[float, float] = (34.68, -82.85)
    seed: int = 0
    # vehicles on the road for the whole run, ids 1..initial_vehicles
    initial_vehicles: int = 6
    segment_length: float = 4000.0
    accel: float = 1.5

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.base_rate > 0:
            raise ValueError("base_rate must be positive")
        step = TICKS_PER_SECOND / self.base_rate
        if abs(step - round(step)) > 1e-9:
            raise ValueError("base_rate must divide 10 Hz (broadcasts sit on the 0.1 s grid)")
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be >= 0")
        if self.lanes < 1:
            raise ValueError("lanes must be >= 1")

    @property
    def broadcast_step(self) -> int:
        return int(round(TICKS_PER_SECOND / self.base_rate))


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    attacker_id: int
    start: float
    end: float
    dos_rate: float = 1000.0
    impersonated_id: int | None = None
    # (lat_min, lat_max, lon_min, lon_max)
    geofence: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.upper())
        if self.kind not in ("DOS", "IMP", "FAL"):
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.start > self.end:
            raise ValueError("start must not exceed end")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "AttackSpec":
        d = dict(d)
        if d.get("geofence") is not None:
            d["geofence"] = tuple(d["geofence"])
        return cls(**d)


# Default geofence spans the coordinates of the published false-information
# example rows.
DEFAULT_GEOFENCE = (34.16, 34.68, -82.85, -82.04)


def default_spec(kind: str, config: SimConfig) -> AttackSpec:
    """Attack running from a quarter of the way in to the end of the run."""
    kind = kind.upper()
    start, end = config.duration / 4.0, config.duration
    if kind == "DOS":
        return AttackSpec("DOS", attacker_id=6, start=start, end=end)
    if kind == "IMP":
        return AttackSpec("IMP", attacker_id=3, start=start, end=end, impersonated_id=2)
    if kind == "FAL":
        return AttackSpec("FAL", attacker_id=3, start=start, end=end, geofence=DEFAULT_GEOFENCE)
    raise ValueError(f"unknown attack kind {kind!r}")


@dataclass
class LabeledTrace:
    records: list[BsmRecord]
    labels: list[bool]  # True = attack
    spec: AttackSpec | None = None

    def __post_init__(self):
        if len(self.labels) != len(self.records):
            raise ValueError("one label per record required")


# --------------------------------------------------------------------------
# RNG streams


def _streams(seed: int):
    # independent child generators so injectors never perturb baseline draws
    baseline, dos, imp, fal = np.random.SeedSequence(seed).spawn(4)
    return {
        "baseline": np.random.default_rng(baseline),
        "DOS": np.random.default_rng(dos),
        "IMP": np.random.default_rng(imp),
        "FAL": np.random.default_rng(fal),
    }


# --------------------------------------------------------------------------
# Baseline


@dataclass
class _Vehicle:
    vid: int
    lane: int
    t0: int  # first tick
    s0: float
    v0: float
    cruise: float


def _arrivals(cfg: SimConfig, rng) -> list[tuple[int, int]]:
    """(first tick, lane) of every Poisson arrival after t=0."""
    lam = cfg.arrival_rate / 3600.0
    out = []
    if lam <= 0:
        return out
    for lane in range(cfg.lanes):
        t = 0.0
        while True:
            t += rng.exponential(1.0 / lam)
            # vehicles join the broadcast schedule at whole seconds
            t_join = math.ceil(t)
            if t_join >= cfg.duration:
                break
            out.append((t_join * TICKS_PER_SECOND, lane))
    out.sort()
    return out


def _along(cfg: SimConfig, veh: _Vehicle, tick: int) -> tuple[float, float]:
    """Distance travelled and speed at ``tick``."""
    tau = (tick - veh.t0) / TICKS_PER_SECOND
    t_acc = max(0.0, (veh.cruise - veh.v0) / cfg.accel)
    if tau <= t_acc:
        return veh.s0 + veh.v0 * tau + 0.5 * cfg.accel * tau * tau, veh.v0 + cfg.accel * tau
    s_acc = veh.s0 + veh.v0 * t_acc + 0.5 * cfg.accel * t_acc * t_acc
    return s_acc + veh.cruise * (tau - t_acc), veh.cruise


def _latlon(cfg: SimConfig, lane: int, s: float) -> tuple[float, float]:
    lat0, lon0 = cfg.origin
    half = max(1, cfg.lanes // 2)
    eastbound = lane < half
    lateral = (lane % half + 0.5) * LANE_WIDTH_M * (1 if eastbound else -1)
    along = s if eastbound else cfg.segment_length - s
    return lat0 + lateral / M_PER_DEG_LAT, lon0 + along / (M_PER_DEG_LAT * math.cos(math.radians(lat0)))


def generate_baseline(config: SimConfig) -> list[BsmRecord]:
    """Attack-free trace, sorted by (timestamp, vehicle id)."""
    rng = _streams(config.seed)["baseline"]
    n_ticks = to_tick(config.duration)
    vehicles: list[_Vehicle] = []
    for i in range(config.initial_vehicles):
        lane = i % config.lanes
        vehicles.append(
            _Vehicle(
                vid=i + 1,
                lane=lane,
                t0=0,
                s0=float(rng.uniform(0.0, 500.0)),
                v0=float(rng.uniform(0.0, 0.7 * config.speed_limit)),
                cruise=float(config.speed_limit * rng.uniform(0.85, 1.0)),
            )
        )
    if config.arrival_rate > 0:
        for t0, lane in _arrivals(config, rng):
            vehicles.append(
                _Vehicle(
                    vid=len(vehicles) + 1,
                    lane=lane,
                    t0=t0,
                    s0=0.0,
                    v0=float(rng.uniform(0.3, 0.7) * config.speed_limit),
                    cruise=float(config.speed_limit * rng.uniform(0.85, 1.0)),
                )
            )

    step = config.broadcast_step
    rows = []
    for veh in vehicles:
        for tick in range(veh.t0, n_ticks, step):
            dist, v = _along(config, veh, tick)
            if dist > config.segment_length:
                break
            lat, lon = _latlon(config, veh.lane, dist)
            rows.append((tick, veh.vid, round(lat, 7), round(lon, 7), round(v, 2)))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [BsmRecord(t / TICKS_PER_SECOND, vid, lat, lon, v) for t, vid, lat, lon, v in rows]


# --------------------------------------------------------------------------
# Injectors


def _window_ticks(spec: AttackSpec) -> tuple[int, int]:
    return to_tick(spec.start), to_tick(spec.end)


def _require(records: Sequence[BsmRecord], vid: int, what: str) -> None:
    if not any(r.vehicle_id == vid for r in records):
        raise ValueError(f"{what} {vid} not present in trace")


def _sorted_labeled(rows: list[tuple[BsmRecord, bool]], spec: AttackSpec) -> LabeledTrace:
    # stable: records sharing (tick, id) keep their relative order
    rows.sort(key=lambda rl: (rl[0].tick, rl[0].vehicle_id))
    return LabeledTrace([r for r, _ in rows], [l for _, l in rows], spec)


def inject_dos(trace: Sequence[BsmRecord], spec: AttackSpec, base_rate: float = 10.0) -> LabeledTrace:
    """Flood from ``spec.attacker_id`` at ``spec.dos_rate`` inside the window.

    In each 0.1 s slot of the window the attacker's own record is kept and
    extra copies are added up to ``dos_rate / 10`` records per slot, all at
    the slot timestamp.  Copies carry the attacker's position at flood onset
    and zero speed.  Every attacker record inside the window is labelled
    attack.
    """
    _require(trace, spec.attacker_id, "attacker")
    if spec.dos_rate < base_rate:
        raise ValueError("dos_rate must be at least the base rate")
    t0, t1 = _window_ticks(spec)
    per_slot = int(round(spec.dos_rate / TICKS_PER_SECOND))
    own = [r for r in trace if r.vehicle_id == spec.attacker_id]
    before = [r for r in own if r.tick < t0]
    anchor = before[-1] if before else own[0]
    own_ticks: dict[int, int] = {}
    for r in own:
        own_ticks[r.tick] = own_ticks.get(r.tick, 0) + 1

    rows = []
    for r in trace:
        hit = r.vehicle_id == spec.attacker_id and t0 <= r.tick < t1
        rows.append((r, hit))
    last_tick = max(r.tick for r in trace) if trace else t0
    for tick in range(t0, min(t1, last_tick + 1)):
        extra = per_slot - own_ticks.get(tick, 0)
        for _ in range(max(0, extra)):
            rows.append((BsmRecord(tick / TICKS_PER_SECOND, spec.attacker_id, anchor.latitude, anchor.longitude, 0.0), True))
    return _sorted_labeled(rows, spec)


def inject_impersonation(trace: Sequence[BsmRecord], spec: AttackSpec) -> LabeledTrace:
    """Rewrite the attacker's id to ``spec.impersonated_id`` inside the window."""
    if spec.impersonated_id is None:
        raise ValueError("impersonation needs impersonated_id")
    _require(trace, spec.attacker_id, "attacker")
    _require(trace, spec.impersonated_id, "impersonated vehicle")
    t0, t1 = _window_ticks(spec)
    rows = []
    for r in trace:
        if r.vehicle_id == spec.attacker_id and t0 <= r.tick < t1:
            rows.append((BsmRecord(r.timestamp, spec.impersonated_id, r.latitude, r.longitude, r.speed), True))
        else:
            rows.append((r, False))
    return _sorted_labeled(rows, spec)


def inject_false_info(trace: Sequence[BsmRecord], spec: AttackSpec, seed: int = 0) -> LabeledTrace:
    """Replace the attacker's position inside the window by uniform draws in
    the geofence; timing and speed are untouched."""
    _require(trace, spec.attacker_id, "attacker")
    box = spec.geofence or DEFAULT_GEOFENCE
    lat_lo, lat_hi, lon_lo, lon_hi = box
    if lat_lo > lat_hi or lon_lo > lon_hi:
        raise ValueError(f"empty geofence {box}")
    rng = _streams(seed)["FAL"]
    t0, t1 = _window_ticks(spec)
    rows = []
    for r in trace:
        if r.vehicle_id == spec.attacker_id and t0 <= r.tick < t1:
            lat = round(float(rng.uniform(lat_lo, lat_hi)), 7)
            lon = round(float(rng.uniform(lon_lo, lon_hi)), 7)
            rows.append((BsmRecord(r.timestamp, r.vehicle_id, lat, lon, r.speed), True))
        else:
            rows.append((r, False))
    return LabeledTrace([r for r, _ in rows], [l for _, l in rows], spec)


def inject(trace: Sequence[BsmRecord], spec: AttackSpec, config: SimConfig | None = None) -> LabeledTrace:
    config = config or SimConfig()
    if spec.kind == "DOS":
        return inject_dos(trace, spec, config.base_rate)
    if spec.kind == "IMP":
        return inject_impersonation(trace, spec)
    return inject_false_info(trace, spec, config.seed)


def simulate(kind: str, config: SimConfig | None = None, spec: AttackSpec | None = None) -> LabeledTrace:
    config = config or SimConfig()
    spec = spec or default_spec(kind, config)
    return inject(generate_baseline(config), spec, config)


# --------------------------------------------------------------------------
# Labels


def _contributors(records: Sequence[BsmRecord], series: FeatureSeries):
    """Record indices feeding each sample of ``series``, recomputed from the
    records with the same grouping the extractor uses."""
    kind = series.kind
    if kind == "DIST":
        last: dict[int, int] = {}
        groups = []
        for i, r in enumerate(records):
            prev = last.get(r.vehicle_id)
            groups.append(((r.tick, r.vehicle_id), [i] if prev is None else [prev, i]))
            last[r.vehicle_id] = i
        return groups
    width = to_tick(series.interval)
    bins: dict[tuple[int, int], list[int]] = {}
    for i, r in enumerate(records):
        bins.setdefault((r.tick // width, r.vehicle_id), []).append(i)
    return [((b * width, vid), idx) for (b, vid), idx in sorted(bins.items())]


def label_features(labeled: LabeledTrace, series: FeatureSeries) -> list[bool]:
    """A sample is attack iff any record contributing to it is attack."""
    groups = _contributors(labeled.records, series)
    if len(groups) != len(series):
        raise ValueError(f"series has {len(series)} samples but trace yields {len(groups)}")
    out = []
    for s, ((tick, vid), idx) in zip(series, groups):
        if vid != s.vehicle_id or to_tick(s.timestamp) != tick:
            raise ValueError(f"series/trace mismatch at sample {s.index}")
        out.append(any(labeled.labels[i] for i in idx))
    return out


def write_labels(path, labels: Sequence[bool]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_index", "label"])
        for i, l in enumerate(labels):
            w.writerow([i, "attack" if l else "normal"])


def read_labels(path) -> list[bool]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = [False] * len(rows)
    for row in rows:
        i = int(row["record_index"])
        if row["label"] not in ("attack", "normal"):
            raise ValueError(f"bad label {row['label']!r}")
        out[i] = row["label"] == "attack"
    return out

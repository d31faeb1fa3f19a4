"""Basic safety message traces and the feature series derived from them.

A trace is a CSV of broadcast records (timestamp, vehicle id, position,
speed).  Detectors never see records directly; they consume one of three
deduced series:

``MVS``
    messages per vehicle per second (flooding indicator)
``MVT``
    messages per vehicle per 0.1 s interval (duplicate identity indicator)
``DIST``
    displacement between a vehicle's consecutive reports (false position
    indicator)
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

TRACE_HEADER = ("timestamp", "vehicle_id", "latitude", "longitude", "speed")
FEATURE_HEADER = ("index", "timestamp", "vehicle_id", "kind", "value")
FEATURE_KINDS = ("MVS", "MVT", "DIST")

# Diameter constant of the haversine position formula.  1242 reproduces the
# magnitudes of the published detection tables; 12742 (km) is Earth's mean
# diameter.
DEFAULT_DIAMETER = 1242.0
EARTH_DIAMETER_KM = 12742.0

TICKS_PER_SECOND = 10


class TraceParseError(ValueError):
    """Raised for a malformed trace row; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class BsmRecord:
    timestamp: float
    vehicle_id: int
    latitude: float
    longitude: float
    speed: float

    def __post_init__(self):
        if not (self.timestamp >= 0):
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")
        if not (self.speed >= 0):
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if not (-90.0 <= self.latitude <= 90.0):
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not (-180.0 <= self.longitude <= 180.0):
            raise ValueError(f"longitude out of range: {self.longitude}")
        if self.vehicle_id < 0:
            raise ValueError(f"vehicle_id must be >= 0, got {self.vehicle_id}")

    @property
    def tick(self) -> int:
        """Timestamp on the 0.1 s grid."""
        return to_tick(self.timestamp)


@dataclass(frozen=True)
class FeatureSample:
    index: int
    timestamp: float
    vehicle_id: int
    value: float
    kind: str


@dataclass
class FeatureSeries:
    kind: str
    interval: float
    samples: list[FeatureSample] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if not self.interval > 0:
            raise ValueError("interval must be positive")

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def values(self) -> list[float]:
        return [s.value for s in self.samples]

    def by_vehicle(self) -> dict[int, list[FeatureSample]]:
        out: dict[int, list[FeatureSample]] = defaultdict(list)
        for s in self.samples:
            out[s.vehicle_id].append(s)
        return dict(out)


def to_tick(t: float) -> int:
    return int(round(t * TICKS_PER_SECOND))


# --------------------------------------------------------------------------
# Trace I/O


def _format_record(r: BsmRecord) -> list[str]:
    return [
        f"{r.timestamp:.1f}",
        str(r.vehicle_id),
        repr(float(r.latitude)),
        repr(float(r.longitude)),
        repr(float(r.speed)),
    ]


def serialize_trace(records: Iterable[BsmRecord], out: IO[str] | None = None) -> str:
    """Write records in the canonical trace format.

    Returns the text when ``out`` is None.  Coordinates and speed are written
    with ``repr`` so that parsing the output gives back identical floats.
    """
    buf = out if out is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for r in records:
        writer.writerow(_format_record(r))
    if out is None:
        return buf.getvalue()
    return ""


def _parse_row(fields: Sequence[str], line: int) -> BsmRecord:
    if len(fields) != 5:
        raise TraceParseError(line, f"expected 5 columns, got {len(fields)}")
    try:
        t = float(fields[0])
        vid = int(fields[1])
        lat = float(fields[2])
        lon = float(fields[3])
        spd = float(fields[4])
    except ValueError as exc:
        raise TraceParseError(line, str(exc)) from None
    for name, v in (("timestamp", t), ("latitude", lat), ("longitude", lon), ("speed", spd)):
        if not math.isfinite(v):
            raise TraceParseError(line, f"non-finite {name}")
    try:
        return BsmRecord(t, vid, lat, lon, spd)
    except ValueError as exc:
        raise TraceParseError(line, str(exc)) from None


def parse_trace(source) -> list[BsmRecord]:
    """Parse a trace from a path, a text/byte stream, or a string of CSV text.

    The header line is optional.  Blank lines are skipped.
    """
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, str) and (not source or "\n" in source or "," in source):
        text = source
    elif hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()

    records = []
    for line, fields in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if line == 1 and fields[0].strip() == TRACE_HEADER[0]:
            continue
        records.append(_parse_row([f.strip() for f in fields], line))
    return records


def write_trace(path, records: Iterable[BsmRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        serialize_trace(records, fh)


# --------------------------------------------------------------------------
# Geodesy


def geodesic_distance(lat1, lon1, lat2, lon2, diameter: float = DEFAULT_DIAMETER) -> float:
    """Haversine distance between two points, scaled by ``diameter``.

    ``diameter * asin(sqrt(a))`` with the usual haversine ``a``.  Pass
    ``EARTH_DIAMETER_KM * 1000`` for metres on a spherical Earth.
    """
    p = math.pi / 180.0
    # sin^2 form; the 1 - cos form cancels badly at 0.1 s step lengths
    s_lat = math.sin((lat2 - lat1) * p / 2.0)
    s_lon = math.sin((lon2 - lon1) * p / 2.0)
    a = s_lat * s_lat + math.cos(lat1 * p) * math.cos(lat2 * p) * s_lon * s_lon
    a = min(a, 1.0)
    return diameter * math.asin(math.sqrt(a))


# --------------------------------------------------------------------------
# Feature extraction


def _check_sorted(records: Sequence[BsmRecord]) -> None:
    prev = None
    for i, r in enumerate(records):
        t = r.tick
        if prev is not None and t < prev:
            raise ValueError(f"records not time-sorted at position {i}")
        prev = t


def _count_per_bin(records: Sequence[BsmRecord], ticks_per_bin: int, kind: str, interval: float, scale: float):
    _check_sorted(records)
    counts: dict[tuple[int, int], int] = defaultdict(int)
    for r in records:
        counts[(r.tick // ticks_per_bin, r.vehicle_id)] += 1
    samples = [
        FeatureSample(
            index=i,
            timestamp=b * ticks_per_bin / TICKS_PER_SECOND,
            vehicle_id=vid,
            value=n * scale,
            kind=kind,
        )
        for i, ((b, vid), n) in enumerate(sorted(counts.items()))
    ]
    return FeatureSeries(kind=kind, interval=interval, samples=samples)


def _ticks(window: float) -> int:
    n = to_tick(window)
    if n < 1 or abs(n / TICKS_PER_SECOND - window) > 1e-9:
        raise ValueError(f"window must be a positive multiple of 0.1 s, got {window}")
    return n


def extract_mvs(records: Sequence[BsmRecord], window: float = 1.0) -> FeatureSeries:
    """Message rate (messages per second) per vehicle per window."""
    return _count_per_bin(records, _ticks(window), "MVS", window, 1.0 / window)


def extract_mvt(records: Sequence[BsmRecord], interval: float = 0.1) -> FeatureSeries:
    """Message count per vehicle per interval."""
    return _count_per_bin(records, _ticks(interval), "MVT", interval, 1.0)


def extract_displacement(records: Sequence[BsmRecord], diameter: float = DEFAULT_DIAMETER) -> FeatureSeries:
    """Distance from each record to the same vehicle's previous record.

    One sample per record, in record order; a vehicle's first record gives 0.
    """
    _check_sorted(records)
    last: dict[int, BsmRecord] = {}
    samples = []
    for i, r in enumerate(records):
        prev = last.get(r.vehicle_id)
        d = 0.0 if prev is None else geodesic_distance(
            prev.latitude, prev.longitude, r.latitude, r.longitude, diameter
        )
        samples.append(FeatureSample(i, r.timestamp, r.vehicle_id, d, "DIST"))
        last[r.vehicle_id] = r
    return FeatureSeries(kind="DIST", interval=1.0 / TICKS_PER_SECOND, samples=samples)


EXTRACTORS = {"MVS": extract_mvs, "MVT": extract_mvt, "DIST": extract_displacement}


def extract(records: Sequence[BsmRecord], kind: str, **kw) -> FeatureSeries:
    return EXTRACTORS[kind.upper()](records, **kw)


# --------------------------------------------------------------------------
# Feature series I/O


def write_features(path, series: FeatureSeries) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_HEADER)
        for s in series:
            w.writerow([s.index, f"{s.timestamp:.1f}", s.vehicle_id, s.kind, repr(s.value)])


def read_features(path, interval: float | None = None) -> FeatureSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    kind = rows[0]["kind"]
    samples = [
        FeatureSample(int(r["index"]), float(r["timestamp"]), int(r["vehicle_id"]), float(r["value"]), r["kind"])
        for r in rows
    ]
    if any(s.kind != kind for s in samples):
        raise ValueError(f"{path}: mixed feature kinds")
    default = {"MVS": 1.0, "MVT": 0.1, "DIST": 0.1}[kind]
    return FeatureSeries(kind, interval or default, samples)

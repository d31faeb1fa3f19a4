"""Evaluation harness: confusion counts, metrics, the detection pipeline,
Monte-Carlo run lengths and timing benchmarks."""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import bsm
from .attack_sim import LabeledTrace, SimConfig, label_features, simulate
from .detectors import default_params, make_detector
from .detectors.base import SIDES, DetectionEvent
from .detectors.params import ATTACKS, DETECTORS, EmConfig

EVENT_HEADER = ("index", "timestamp", "vehicle_id", "detector", "score", "c_plus", "c_minus", "alarm")
ROUTINGS = ("pooled", "vehicle")
ATTACK_FEATURE = {"DOS": "MVS", "IMP": "MVT", "FAL": "DIST"}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float | None
    precision: float | None
    sensitivity: float | None


@dataclass
class RunReport:
    detector: str
    attack: str | None
    feature: str
    confusion: ConfusionMatrix | None
    accuracy: float | None
    precision: float | None
    sensitivity: float | None
    wall_time: float | None
    samples: int

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.confusion is None:
            d["confusion"] = None
        return d

    def to_json(self) -> str:
        # undefined ratios serialise as null
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class ArlEstimate:
    in_control_arl: float
    out_of_control_arl: float
    trials: int
    censored_in_control: int = 0
    censored_out_of_control: int = 0


def _alarm_flags(events) -> list[bool]:
    return [bool(e.alarm) if hasattr(e, "alarm") else bool(e) for e in events]


def evaluate(events, labels: Sequence[bool]) -> ConfusionMatrix:
    """Count each (verdict, truth) pair into one cell."""
    alarms = _alarm_flags(events)
    if len(alarms) != len(labels):
        raise ValueError(f"{len(alarms)} events vs {len(labels)} labels")
    tp = tn = fp = fn = 0
    for a, y in zip(alarms, labels):
        if a and y:
            tp += 1
        elif a:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, tn, fp, fn)


def _ratio(num, den):
    return num / den if den else None


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, precision, sensitivity; ``None`` where the denominator is 0."""
    return Metrics(
        _ratio(cm.tp + cm.tn, cm.total),
        _ratio(cm.tp, cm.tp + cm.fp),
        _ratio(cm.tp, cm.tp + cm.fn),
    )


# --------------------------------------------------------------------------
# Pipeline


def _events_from_run(kind: str, det, samples, values, out) -> list[DetectionEvent]:
    if kind == "EM":
        alarms = det.alarms(out)
        return [
            DetectionEvent(s.index, bool(a), float(sc), "EM", "none", timestamp=s.timestamp, vehicle_id=s.vehicle_id)
            for s, sc, a in zip(samples, out, alarms)
        ]
    score = out.score
    return [
        DetectionEvent(s.index, bool(a), float(sc), kind, SIDES[int(sd)], float(cp), float(cm), s.timestamp, s.vehicle_id)
        for s, sc, a, sd, cp, cm in zip(samples, score, out.alarm, out.side, out.c_plus, out.c_minus)
    ]


def detect_series(series: bsm.FeatureSeries, detector: str, config, routing: str = "vehicle"):
    """Stream ``series`` through fresh detector instances.

    ``pooled`` runs one instance over the whole series in sample order;
    ``vehicle`` runs one instance per vehicle id.  Returns events in sample
    order and the wall time of the detector loops alone.
    """
    kind = detector.upper()
    if routing not in ROUTINGS:
        raise ValueError(f"routing must be one of {ROUTINGS}")
    samples = series.samples
    if routing == "pooled":
        streams = [samples]
    else:
        streams = list(series.by_vehicle().values())
    events: list[DetectionEvent] = []
    elapsed = 0.0
    for group in streams:
        values = np.fromiter((s.value for s in group), dtype=float, count=len(group))
        det = make_detector(kind, config)
        t0 = time.perf_counter()
        out = det.run(values)
        elapsed += time.perf_counter() - t0
        events.extend(_events_from_run(kind, det, group, values, out))
    if routing != "pooled":
        events.sort(key=lambda e: e.index)
    return events, elapsed


def run_detection(
    trace,
    feature: str,
    detector: str,
    config,
    labels: Sequence[bool] | None = None,
    routing: str = "vehicle",
    repeats: int = 5,
    attack: str | None = None,
    diameter: float = bsm.DEFAULT_DIAMETER,
):
    """Parse, extract, detect and (given record labels) evaluate.

    ``trace`` is a path, text, a record list, or a LabeledTrace (whose labels
    are then used).  Wall time is the median detector-loop time over
    ``repeats`` runs.
    """
    if isinstance(trace, LabeledTrace):
        labeled = trace
    else:
        records = trace if isinstance(trace, list) else bsm.parse_trace(trace)
        labeled = LabeledTrace(records, list(labels) if labels is not None else [False] * len(records))
    if labels is None and not isinstance(trace, LabeledTrace):
        have_labels = False
    else:
        have_labels = True
    if isinstance(trace, LabeledTrace) and attack is None and trace.spec is not None:
        attack = trace.spec.kind

    kw = {"diameter": diameter} if feature.upper() == "DIST" else {}
    series = bsm.extract(labeled.records, feature, **kw)
    times = []
    events: list[DetectionEvent] = []
    for _ in range(max(1, repeats)):
        events, dt = detect_series(series, detector, config, routing)
        times.append(dt)
    wall = statistics.median(times)

    cm = None
    acc = prec = sens = None
    if have_labels:
        truth = label_features(labeled, series)
        cm = evaluate(events, truth)
        m = metrics(cm)
        acc, prec, sens = m.accuracy, m.precision, m.sensitivity
    report = RunReport(detector.upper(), attack, series.kind, cm, acc, prec, sens, wall, len(series))
    return events, report


def _matrix_job(job):
    attack, detector, feature, sim_config, routing = job
    labeled = simulate(attack, sim_config)
    config = default_params(attack, detector)
    _, report = run_detection(labeled, feature, detector, config, routing=routing, repeats=1)
    return (attack, detector), report


def run_matrix(
    attacks=ATTACKS,
    detectors=DETECTORS,
    sim_config: SimConfig | None = None,
    routing: str = "vehicle",
    workers: int | None = None,
) -> dict[tuple[str, str], RunReport]:
    """Simulate each attack and score every detector on it with the
    catalogue parameters.  Pairs run in a process pool; the result is keyed
    and ordered by (attack, detector)."""
    sim_config = sim_config or SimConfig()
    jobs = [(a, d, ATTACK_FEATURE[a], sim_config, routing) for a in attacks for d in detectors]
    if workers == 1:
        results = map(_matrix_job, jobs)
        return dict(sorted(results))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return dict(sorted(pool.map(_matrix_job, jobs)))


def write_events(path, events: Sequence[DetectionEvent]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for e in events:
            w.writerow([
                e.index, "NA" if math.isnan(e.timestamp) else f"{e.timestamp:.1f}", e.vehicle_id, e.detector,
                repr(e.score), "NA" if math.isnan(e.c_plus) else repr(e.c_plus),
                "NA" if math.isnan(e.c_minus) else repr(e.c_minus), int(e.alarm),
            ])


def read_events(path) -> list[DetectionEvent]:
    def num(v):
        return math.nan if v == "NA" else float(v)

    with open(path, encoding="utf-8", newline="") as fh:
        return [
            DetectionEvent(
                int(r["index"]), r["alarm"] == "1", float(r["score"]), r["detector"], "none",
                num(r["c_plus"]), num(r["c_minus"]), num(r["timestamp"]), int(r["vehicle_id"]),
            )
            for r in csv.DictReader(fh)
        ]


# --------------------------------------------------------------------------
# Average run length


def null_law(config) -> tuple[float, float]:
    if isinstance(config, EmConfig):
        return config.theta1.mu, config.theta1.sigma
    return config.mu1, config.sigma


def first_alarm(detector: str, config, draw, max_len: int, chunk: int = 1024) -> int | None:
    """1-based index of the first alarm on a stream from ``draw(n)``, or None
    when ``max_len`` samples pass without one."""
    det = make_detector(detector, config)
    seen = 0
    while seen < max_len:
        n = min(chunk, max_len - seen)
        out = det.run(draw(n))
        flags = det.alarms(out) if detector.upper() == "EM" else out.alarm
        hit = np.flatnonzero(flags)
        if hit.size:
            return seen + int(hit[0]) + 1
        seen += n
    return None


def estimate_arl(
    detector: str,
    config,
    null: tuple[float, float] | None = None,
    shift: tuple[float, float] | None = None,
    trials: int = 1000,
    max_len: int = 100_000,
    seed: int = 0,
) -> ArlEstimate:
    """Monte-Carlo mean first-alarm index under the in-control law ``null``
    and the out-of-control law ``shift`` (both ``(mean, sd)``).

    Censored runs count as ``max_len`` and are reported separately.  The
    default shift is one sigma above the null mean.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    null = null or null_law(config)
    shift = shift or (null[0] + null[1], null[1])
    rng = np.random.default_rng(seed)

    def arl(law):
        mu, sd = law
        lengths, censored = [], 0
        for _ in range(trials):
            rl = first_alarm(detector, config, lambda n: rng.normal(mu, sd, n), max_len)
            if rl is None:
                censored += 1
                rl = max_len
            lengths.append(rl)
        return float(np.mean(lengths)), censored

    arl0, c0 = arl(null)
    arl1, c1 = arl(shift)
    return ArlEstimate(arl0, arl1, trials, c0, c1)


# --------------------------------------------------------------------------
# Benchmark


def synth_stream(config, n: int, seed: int = 0, attack_fraction: float = 0.03) -> np.ndarray:
    """In-control draws whose final ``attack_fraction`` (at least one sample)
    is shifted up by 10 sigma, roughly the attack share of a DOS trace."""
    mu, sd = null_law(config)
    rng = np.random.default_rng(seed)
    x = rng.normal(mu, sd, n)
    if n:
        x[n - max(1, round(attack_fraction * n)):] += 10.0 * sd
    return x


def time_detector(detector: str, config, values, repeats: int = 5) -> float:
    times = []
    for _ in range(repeats):
        det = make_detector(detector, config)
        t0 = time.perf_counter()
        det.run(values)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def benchmark(detector: str, config, sizes=(50, 200, 4761), repeats: int = 5, seed: int = 0) -> list[dict]:
    """Median detector-loop seconds per stream size."""
    return [
        {"detector": detector.upper(), "n": n, "seconds": time_detector(detector, config, synth_stream(config, n, seed), repeats)}
        for n in sizes
    ]


def write_bench_csv(path, rows: list[dict], sizes) -> None:
    """One line per (attack, detector) with a column per size."""
    by_key: dict[tuple, dict] = {}
    for r in rows:
        by_key.setdefault((r.get("attack", ""), r["detector"]), {})[r["n"]] = r["seconds"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["attack", "detector", *[f"n={n}" for n in sizes]])
        for (attack, det), cols in sorted(by_key.items()):
            w.writerow([attack, det, *[f"{cols.get(n, math.nan):.6f}" for n in sizes]])

"""Command-line entry point: ``v2icpd {simulate,detect,evaluate,arl,bench}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace

from . import attack_sim, bsm, harness
from .detectors import BACKEND, default_params, load_params
from .detectors.params import ATTACKS, DETECTORS

FEATURE_ATTACK = {v: k for k, v in harness.ATTACK_FEATURE.items()}


class InputError(Exception):
    """Bad user input; reported on stderr with exit status 2."""


def _upper(choices):
    def conv(s):
        v = s.upper()
        if v not in choices:
            raise argparse.ArgumentTypeError(f"choose from {', '.join(c.lower() for c in choices)}")
        return v

    return conv


def _sizes(s):
    try:
        out = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {s!r}")
    if not out or min(out) < 0:
        raise argparse.ArgumentTypeError("sizes must be non-negative integers")
    return out


def _config(algo: str, attack: str, params_path: str | None):
    if params_path:
        return load_params(params_path, algo, attack)
    return default_params(attack, algo)


def cmd_simulate(args) -> int:
    cfg = attack_sim.SimConfig(duration=args.duration, seed=args.seed, arrival_rate=args.arrival_rate)
    spec = attack_sim.default_spec(args.attack, cfg)
    if args.start is not None or args.end is not None:
        spec = replace(spec, start=spec.start if args.start is None else args.start,
                       end=spec.end if args.end is None else args.end)
    labeled = attack_sim.simulate(args.attack, cfg, spec)
    bsm.write_trace(args.out, labeled.records)
    if args.labels:
        attack_sim.write_labels(args.labels, labeled.labels)
    if args.spec:
        with open(args.spec, "w", encoding="utf-8") as fh:
            fh.write(spec.to_json())
    n_att = sum(labeled.labels)
    print(f"{len(labeled.records)} records ({n_att} attack) -> {args.out}")
    return 0


def cmd_detect(args) -> int:
    attack = args.attack or FEATURE_ATTACK[args.feature]
    config = _config(args.algo, attack, args.params)
    records = bsm.parse_trace(args.trace)
    labels = attack_sim.read_labels(args.labels) if args.labels else None
    events, report = harness.run_detection(
        records, args.feature, args.algo, config, labels=labels, routing=args.routing,
        repeats=args.repeats, attack=attack, diameter=args.earth_diameter_km,
    )
    harness.write_events(args.out, events)
    if args.features_out:
        kw = {"diameter": args.earth_diameter_km} if args.feature == "DIST" else {}
        bsm.write_features(args.features_out, bsm.extract(records, args.feature, **kw))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    alarms = sum(e.alarm for e in events)
    print(f"{len(events)} samples, {alarms} alarms, {report.wall_time:.4f} s [{BACKEND}] -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    events = harness.read_events(args.events)
    labels = attack_sim.read_labels(args.labels)
    feature = args.feature or ""
    if len(labels) != len(events):
        # record-level labels: lift them onto the feature samples
        if not (args.trace and args.feature):
            raise InputError(
                f"{len(labels)} labels for {len(events)} events; pass --trace and --feature for record labels"
            )
        records = bsm.parse_trace(args.trace)
        kw = {"diameter": args.earth_diameter_km} if feature == "DIST" else {}
        series = bsm.extract(records, feature, **kw)
        labels = attack_sim.label_features(attack_sim.LabeledTrace(records, labels), series)
    cm = harness.evaluate(events, labels)
    m = harness.metrics(cm)
    detector = events[0].detector if events else ""
    report = harness.RunReport(detector, args.attack, feature, cm, m.accuracy, m.precision, m.sensitivity,
                               None, len(events))
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text)
    return 0


def cmd_arl(args) -> int:
    config = _config(args.algo, args.attack, args.params)
    mu, sd = harness.null_law(config)
    est = harness.estimate_arl(
        args.algo, config, null=(mu, sd), shift=(mu + args.shift * sd, sd),
        trials=args.trials, max_len=args.max_len, seed=args.seed,
    )
    text = json.dumps(asdict(est), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text)
    return 0


def cmd_bench(args) -> int:
    rows = []
    for attack in args.attack or ATTACKS:
        for algo in args.algo or DETECTORS:
            for r in harness.benchmark(algo, default_params(attack, algo), args.sizes, args.repeats):
                r["attack"] = attack
                rows.append(r)
                print(f"{attack:4s} {algo:7s} n={r['n']:<6d} {r['seconds']:.6f} s")
    if args.out:
        harness.write_bench_csv(args.out, rows, args.sizes)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="v2icpd", description="Change-point detection of attacks on V2I safety-message streams.")
    sub = p.add_subparsers(dest="command", required=True)
    attack = _upper(ATTACKS)
    algo = _upper(DETECTORS)

    s = sub.add_parser("simulate", help="generate a labelled attack trace")
    s.add_argument("--attack", type=attack, required=True)
    s.add_argument("--duration", type=float, default=200.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--arrival-rate", type=float, default=200.0, help="vehicles/hour/lane")
    s.add_argument("--start", type=float, help="attack start (s)")
    s.add_argument("--end", type=float, help="attack end (s)")
    s.add_argument("--out", required=True)
    s.add_argument("--labels")
    s.add_argument("--spec")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("detect", help="stream a trace feature through one detector")
    d.add_argument("--algo", type=algo, required=True)
    d.add_argument("--feature", type=_upper(bsm.FEATURE_KINDS), required=True)
    d.add_argument("--params", help="JSON config; missing keys come from the catalogue")
    d.add_argument("--attack", type=attack, help="catalogue row (default: implied by the feature)")
    d.add_argument("--trace", required=True)
    d.add_argument("--labels", help="record labels, to embed metrics in --report")
    d.add_argument("--out", required=True)
    d.add_argument("--report")
    d.add_argument("--features-out")
    d.add_argument("--routing", choices=harness.ROUTINGS, default="vehicle")
    d.add_argument("--repeats", type=int, default=5)
    d.add_argument("--earth-diameter-km", type=float, default=bsm.DEFAULT_DIAMETER,
                   help=f"haversine diameter (default {bsm.DEFAULT_DIAMETER:g}; physical value {bsm.EARTH_DIAMETER_KM:g})")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("evaluate", help="score events against labels")
    e.add_argument("--events", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--trace", help="needed when labels are per record")
    e.add_argument("--feature", type=_upper(bsm.FEATURE_KINDS))
    e.add_argument("--attack", type=attack)
    e.add_argument("--earth-diameter-km", type=float, default=bsm.DEFAULT_DIAMETER)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("arl", help="Monte-Carlo average run lengths")
    a.add_argument("--algo", type=algo, required=True)
    a.add_argument("--attack", type=attack, default="DOS")
    a.add_argument("--params")
    a.add_argument("--trials", type=int, default=1000)
    a.add_argument("--max-len", type=int, default=100_000)
    a.add_argument("--shift", type=float, default=1.0, help="out-of-control mean shift in sigmas")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_arl)

    b = sub.add_parser("bench", help="detector wall time per stream size")
    b.add_argument("--sizes", type=_sizes, default=[50, 200, 4761])
    b.add_argument("--algo", type=algo, action="append")
    b.add_argument("--attack", type=attack, action="append")
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"v2icpd {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

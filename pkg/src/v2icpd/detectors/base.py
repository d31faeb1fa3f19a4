from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DetectionEvent:
    """Verdict for one feature sample.

    ``score`` is the attack-state responsibility for EM and max(C+, C-) for
    the CUSUM variants; ``side`` is "upper", "lower" or "none".
    """

    index: int
    alarm: bool
    score: float
    detector: str
    side: str = "none"
    c_plus: float = math.nan
    c_minus: float = math.nan
    timestamp: float = math.nan
    vehicle_id: int = -1


SIDES = {1: "upper", -1: "lower", 0: "none"}


def check_finite(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite observation: {x!r}")
    return x


def sample_fields(sample, index):
    """Split a FeatureSample or bare number into (value, index, timestamp, vehicle)."""
    if hasattr(sample, "value"):
        return sample.value, sample.index, sample.timestamp, sample.vehicle_id
    return sample, index, math.nan, -1

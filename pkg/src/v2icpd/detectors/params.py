"""Detector configurations and the default parameter catalogue.

The catalogue holds the published per-attack settings.  Gaussian parameters
are ``(mean, standard deviation)`` pairs.  Seed distributions for the EM
window are ``(mean, variance)`` pairs, as they are written in the source
table (``N(15, 10^2)``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

SIGMA_FLOOR = 1e-6

ATTACKS = ("DOS", "IMP", "FAL")
DETECTORS = ("EM", "CUSUM", "ACUSUM")


@dataclass(frozen=True)
class GaussParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma >= SIGMA_FLOOR):
            raise ValueError(f"sigma must be >= {SIGMA_FLOOR}, got {self.sigma}")


@dataclass(frozen=True)
class EmConfig:
    theta1: GaussParams
    theta2: GaussParams
    pi: float
    N: int = 10
    iterations: int = 10
    seed_split: tuple[int, int] = (7, 3)
    seed_normal: tuple[float, float] = (0.0, 1.0)
    seed_abnormal: tuple[float, float] = (0.0, 1.0)
    alarm_threshold: float = 0.001
    sigma_floor: float = SIGMA_FLOOR
    # keep pi off the absorbing endpoints 0 and 1
    pi_floor: float = 1e-6
    # hold each component's sd at or above its configured initial sd
    anchor_sigma: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.pi <= 1.0:
            raise ValueError("pi must lie in [0, 1]")
        if not 0.0 < self.alarm_threshold <= 1.0:
            raise ValueError("alarm_threshold must lie in (0, 1]")
        if not 0.0 <= self.pi_floor < 0.5:
            raise ValueError("pi_floor must lie in [0, 0.5)")
        if sum(self.seed_split) != self.N or min(self.seed_split) < 0:
            raise ValueError("seed_split must be two non-negative counts summing to N")


@dataclass(frozen=True)
class CusumConfig:
    mu1: float
    sigma: float
    delta: float = 1.0
    H_mult: float = 5.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not (self.K > 0 and self.H > 0):
            raise ValueError("K and H must be positive")

    @property
    def K(self) -> float:
        return self.delta * self.sigma / 2.0

    @property
    def H(self) -> float:
        return self.H_mult * self.sigma


@dataclass(frozen=True)
class AcusumConfig:
    mu1: float
    sigma: float
    alpha: float = 0.025
    delta: float = 1.0
    H_mult: float = 5.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def K(self) -> float:
        return self.delta * self.sigma / 2.0

    @property
    def H(self) -> float:
        return self.H_mult * self.sigma


def em_floors(cfg: EmConfig) -> tuple[float, float]:
    """Per-component sd floors used in the M-step."""
    if cfg.anchor_sigma:
        return max(cfg.sigma_floor, cfg.theta1.sigma), max(cfg.sigma_floor, cfg.theta2.sigma)
    return cfg.sigma_floor, cfg.sigma_floor


def sigma_separated(cfg: EmConfig, k: float = 6.0) -> EmConfig:
    """Same ``theta1`` and ``pi`` with the attack component pushed at least
    ``k`` of its own sds above ``theta1.mu``; seed slots drawn from the two
    components."""
    m1, s1 = cfg.theta1.mu, cfg.theta1.sigma
    s2 = cfg.theta2.sigma
    m2 = m1 + max(cfg.theta2.mu - m1, k * s2)
    return replace(
        cfg, theta2=GaussParams(m2, s2), seed_normal=(m1, s1 * s1), seed_abnormal=(m2, s2 * s2)
    )


def acusum_sigma(mu1: float) -> float:
    return math.sqrt(5e-3 * mu1)


_EM_TABLE = {
    "DOS": dict(theta1=(10.0, 1e-4), theta2=(15.0, 5.0), pi=0.75, seed_normal=(10.0, 1e-6), seed_abnormal=(15.0, 100.0)),
    "IMP": dict(theta1=(1.0, 1e-3), theta2=(2.0, 0.5), pi=0.99, seed_normal=(0.05, 1e-2), seed_abnormal=(15.0, 100.0)),
    "FAL": dict(theta1=(0.05, 1e-2), theta2=(50.0, 5.0), pi=0.99, seed_normal=(1.0, 1e-6), seed_abnormal=(2.0, 0.25)),
}
_CUSUM_TABLE = {"DOS": (10.0, 0.001), "IMP": (1.0, 0.01), "FAL": (0.05, 0.1)}
_ACUSUM_MU1 = {"DOS": 10.0, "IMP": 1.0, "FAL": 1.0}


def default_params(attack: str, detector: str):
    """Published settings for one (attack, detector) pair."""
    attack, detector = attack.upper(), detector.upper()
    if attack not in ATTACKS or detector not in DETECTORS:
        raise ValueError(f"unknown pair ({attack}, {detector})")
    if detector == "EM":
        row = _EM_TABLE[attack]
        return EmConfig(
            theta1=GaussParams(*row["theta1"]),
            theta2=GaussParams(*row["theta2"]),
            pi=row["pi"],
            seed_normal=row["seed_normal"],
            seed_abnormal=row["seed_abnormal"],
        )
    if detector == "CUSUM":
        mu1, sigma = _CUSUM_TABLE[attack]
        return CusumConfig(mu1=mu1, sigma=sigma)
    mu1 = _ACUSUM_MU1[attack]
    return AcusumConfig(mu1=mu1, sigma=acusum_sigma(mu1))


# --------------------------------------------------------------------------
# JSON


def config_to_dict(cfg) -> dict:
    d = asdict(cfg)
    if isinstance(cfg, EmConfig):
        d["theta1"] = [cfg.theta1.mu, cfg.theta1.sigma]
        d["theta2"] = [cfg.theta2.mu, cfg.theta2.sigma]
        d["seed_split"] = list(cfg.seed_split)
        d["seed_normal"] = list(cfg.seed_normal)
        d["seed_abnormal"] = list(cfg.seed_abnormal)
    return d


def config_from_dict(detector: str, d: dict):
    detector = detector.upper()
    d = dict(d)
    if detector == "EM":
        for key in ("theta1", "theta2"):
            v = d[key]
            d[key] = GaussParams(**v) if isinstance(v, dict) else GaussParams(*v)
        for key in ("seed_split", "seed_normal", "seed_abnormal"):
            if key in d:
                d[key] = tuple(d[key])
        return EmConfig(**d)
    if detector == "CUSUM":
        return CusumConfig(**d)
    if detector == "ACUSUM":
        if "sigma" not in d and "mu1" in d:
            d["sigma"] = acusum_sigma(d["mu1"])
        return AcusumConfig(**d)
    raise ValueError(f"unknown detector {detector!r}")


def load_params(path, detector: str, attack: str | None = None):
    """Load a config from JSON; keys absent from the file fall back to the
    catalogue entry for ``attack`` when one is given."""
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if attack is not None:
        base = config_to_dict(default_params(attack, detector))
        base.update(d)
        d = base
    return config_from_dict(detector, d)


def dump_params(cfg, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)

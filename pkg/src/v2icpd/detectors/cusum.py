"""Tabular CUSUM detectors.

Typical form::

    C+_t = max(0,  C+_{t-1} + x_t - mu - K)
    C-_t = max(0, -C-_{t-1} - x_t + mu - K)

with an alarm when either sum exceeds H.  The negated previous lower sum is
intentional; it makes the lower side behave almost one-sided.  After an
alarm the target mean ``mu`` is re-estimated from the alarming sum and both
sums restart at zero.

Adaptive form: an EWMA ``mu_bar`` tracks the stream and the sums accumulate
the mean-adjusted observation ``x_t - mu_bar_{t-1}`` weighted by
``alpha * D_t / sigma^2`` where ``D_t = mu_bar_t - mu1``.  No mean surgery;
the sums are zeroed after an alarm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._backend import kernels
from .base import SIDES, DetectionEvent, check_finite, sample_fields
from .params import AcusumConfig, CusumConfig


@dataclass(frozen=True)
class CusumState:
    c_plus: float = 0.0
    c_minus: float = 0.0
    n_plus: int = 0
    n_minus: int = 0
    # target mean minus mu1; kept as an offset so a constant shift of the
    # stream and of mu1 leaves every intermediate value unchanged
    mu_offset: float = 0.0

    def mu_current(self, config: CusumConfig) -> float:
        return config.mu1 + self.mu_offset


def cusum_step(state: CusumState, config: CusumConfig, x: float, index: int = 0):
    """One recursion step.  Does not reset or re-estimate on alarm."""
    x = check_finite(x)
    k = config.K
    dev = (x - config.mu1) - state.mu_offset
    cp = max(0.0, state.c_plus + dev - k)
    cm = max(0.0, -state.c_minus - dev - k)
    new = CusumState(
        cp,
        cm,
        state.n_plus + 1 if cp > 0.0 else 0,
        state.n_minus + 1 if cm > 0.0 else 0,
        state.mu_offset,
    )
    h = config.H
    side = 0
    if cp > h or cm > h:
        side = 1 if cp >= cm else -1
    return new, DetectionEvent(index, side != 0, max(cp, cm), "CUSUM", SIDES[side], cp, cm)


def cusum_post_alarm_update(state: CusumState, config: CusumConfig) -> CusumState:
    """Re-estimate the target mean from the alarming sum and zero the sums."""
    h, k = config.H, config.K
    if state.c_plus > h and state.c_plus >= state.c_minus:
        offset = k + state.c_plus / state.n_plus
    elif state.c_minus > h:
        offset = -k - state.c_minus / state.n_minus
    else:
        raise ValueError("no pending alarm to update from")
    return CusumState(0.0, 0.0, 0, 0, offset)


@dataclass(frozen=True)
class AcusumState:
    mu1: float
    sigma: float
    alpha: float
    mu_bar: float
    c_plus: float = 0.0
    c_minus: float = 0.0

    @classmethod
    def initial(cls, config: AcusumConfig) -> "AcusumState":
        return cls(config.mu1, config.sigma, config.alpha, config.mu1)


def acusum_step(state: AcusumState, x: float, h: float | None = None, index: int = 0):
    """One adaptive step; sums are zeroed in the returned state on alarm."""
    x = check_finite(x)
    if h is None:
        h = 5.0 * state.sigma
    a = state.alpha
    xt = x - state.mu_bar
    mu_bar = a * state.mu_bar + (1.0 - a) * x
    d = mu_bar - state.mu1
    w = a * d / (state.sigma * state.sigma)
    cp = max(0.0, state.c_plus + w * (xt - d - a * d / 2.0))
    cm = max(0.0, state.c_minus - w * (xt + d + a * d / 2.0))
    side = 0
    if cp > h or cm > h:
        side = 1 if cp >= cm else -1
    event = DetectionEvent(index, side != 0, max(cp, cm), "ACUSUM", SIDES[side], cp, cm)
    if side:
        cp = cm = 0.0
    return replace(state, mu_bar=mu_bar, c_plus=cp, c_minus=cm), event


@dataclass
class RunResult:
    """Per-sample arrays from a batch run; sums are pre-reset values."""

    c_plus: np.ndarray
    c_minus: np.ndarray
    alarm: np.ndarray
    side: np.ndarray

    @property
    def score(self) -> np.ndarray:
        return np.maximum(self.c_plus, self.c_minus)


def _buffers(n):
    return np.empty(n), np.empty(n), np.empty(n, dtype=np.int8), np.empty(n, dtype=np.int8)


def _as_stream(values) -> np.ndarray:
    v = np.ascontiguousarray(values, dtype=float)
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError("non-finite observation in stream")
    return v


class CusumDetector:
    name = "CUSUM"

    def __init__(self, config: CusumConfig):
        self.config = config
        self.state = CusumState()
        self._count = 0

    def step(self, sample) -> DetectionEvent:
        x, index, ts, vid = sample_fields(sample, self._count)
        self.state, ev = cusum_step(self.state, self.config, x, index)
        if ev.alarm:
            self.state = cusum_post_alarm_update(self.state, self.config)
        self._count += 1
        return replace(ev, timestamp=ts, vehicle_id=vid)

    def run(self, values) -> RunResult:
        v = _as_stream(values)
        cp, cm, al, sd = _buffers(v.size)
        s = self.state
        out = kernels.cusum_run(
            v, self.config.mu1, self.config.K, self.config.H,
            s.c_plus, s.c_minus, s.n_plus, s.n_minus, s.mu_offset, cp, cm, al, sd,
        )
        self.state = CusumState(out[0], out[1], int(out[2]), int(out[3]), out[4])
        self._count += v.size
        return RunResult(cp, cm, al.astype(bool), sd)


class AcusumDetector:
    name = "ACUSUM"

    def __init__(self, config: AcusumConfig):
        self.config = config
        self.state = AcusumState.initial(config)
        self._count = 0

    def step(self, sample) -> DetectionEvent:
        x, index, ts, vid = sample_fields(sample, self._count)
        self.state, ev = acusum_step(self.state, x, self.config.H, index)
        self._count += 1
        return replace(ev, timestamp=ts, vehicle_id=vid)

    def run(self, values) -> RunResult:
        v = _as_stream(values)
        cp, cm, al, sd = _buffers(v.size)
        s = self.state
        out = kernels.acusum_run(
            v, s.mu1, s.sigma, s.alpha, self.config.H, s.c_plus, s.c_minus, s.mu_bar, cp, cm, al, sd
        )
        self.state = replace(s, c_plus=out[0], c_minus=out[1], mu_bar=out[2])
        self._count += v.size
        return RunResult(cp, cm, al.astype(bool), sd)

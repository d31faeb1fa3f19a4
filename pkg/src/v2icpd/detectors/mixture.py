"""Two-component Gaussian mixture fitted by EM over a sliding window.

Each new observation enters a ring of the last ``N`` values, the mixture is
refitted for a fixed number of E/M rounds starting from the previous fit,
and the observation's posterior probability of belonging to the attack
component is the detection score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .base import DetectionEvent, check_finite, sample_fields
from .params import SIGMA_FLOOR, EmConfig, GaussParams, em_floors


@dataclass(frozen=True)
class MixtureState:
    theta1: GaussParams
    theta2: GaussParams
    pi: float
    window: tuple = ()
    loglik: float = math.nan
    loglik_trace: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not 0.0 <= self.pi <= 1.0:
            raise ValueError(f"pi must lie in [0, 1], got {self.pi}")

    @property
    def flat(self):
        return (self.theta1.mu, self.theta1.sigma, self.theta2.mu, self.theta2.sigma, self.pi)


def normal_pdf(y, p: GaussParams) -> float:
    return math.exp(kernels.log_normal_pdf(y, p.mu, p.sigma))


def mixture_density(y: float, state: MixtureState) -> float:
    """(1 - pi) * phi1(y) + pi * phi2(y)."""
    return math.exp(kernels.log_mixture_density(y, *state.flat))


def responsibility(y: float, state: MixtureState) -> float:
    """Posterior probability that ``y`` came from the attack component."""
    return kernels.responsibility(y, *state.flat)


def log_likelihood(window, state: MixtureState) -> float:
    return kernels.log_likelihood(np.asarray(window, dtype=float), *state.flat)


def em_fit_window(
    window,
    init: MixtureState,
    iterations: int,
    sigma_floor: float = SIGMA_FLOOR,
    floor2: float | None = None,
    pi_floor: float = 0.0,
) -> MixtureState:
    """Refit ``init`` to ``window`` with ``iterations`` E/M rounds.

    The returned state's ``loglik_trace`` has ``iterations + 1`` entries: the
    log-likelihood of ``init`` and after each round.  ``floor2`` defaults to
    ``sigma_floor``.
    """
    w = np.asarray(window, dtype=float)
    if w.size == 0:
        raise ValueError("empty window")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    m1, s1, m2, s2, pi, lls = kernels.em_fit(
        w, *init.flat, iterations, sigma_floor, sigma_floor if floor2 is None else floor2, pi_floor
    )
    return MixtureState(
        GaussParams(m1, s1), GaussParams(m2, s2), pi, tuple(w.tolist()), lls[-1], tuple(lls)
    )


def seed_window(config: EmConfig) -> np.ndarray:
    """Initial window contents: draws from the normal then abnormal seed laws."""
    rng = np.random.default_rng(config.seed)
    n_norm, n_abn = config.seed_split
    mu_n, var_n = config.seed_normal
    mu_a, var_a = config.seed_abnormal
    return np.concatenate(
        [rng.normal(mu_n, math.sqrt(var_n), n_norm), rng.normal(mu_a, math.sqrt(var_a), n_abn)]
    )


class EmDetector:
    name = "EM"

    def __init__(self, config: EmConfig):
        self.config = config
        self._window = seed_window(config)
        # slot holding the oldest value, overwritten next
        self._head = 0
        self._params = (config.theta1.mu, config.theta1.sigma, config.theta2.mu, config.theta2.sigma, config.pi)
        self._loglik = math.nan
        self._count = 0
        self._limits = (*em_floors(config), config.pi_floor)

    @property
    def state(self) -> MixtureState:
        m1, s1, m2, s2, pi = self._params
        n = len(self._window)
        chrono = tuple(self._window[(self._head + i) % n] for i in range(n))
        return MixtureState(GaussParams(m1, s1), GaussParams(m2, s2), pi, chrono, self._loglik)

    def step(self, sample) -> DetectionEvent:
        x, index, ts, vid = sample_fields(sample, self._count)
        x = check_finite(x)
        self._window[self._head] = x
        self._head = (self._head + 1) % len(self._window)
        m1, s1, m2, s2, pi, lls = kernels.em_fit(
            self._window, *self._params, self.config.iterations, *self._limits
        )
        self._params = (m1, s1, m2, s2, pi)
        self._loglik = lls[-1]
        self._count += 1
        score = kernels.responsibility(x, *self._params)
        return DetectionEvent(index, score > self.config.alarm_threshold, score, self.name, "none",
                              timestamp=ts, vehicle_id=vid)

    def run(self, values) -> np.ndarray:
        """Batch form of :meth:`step`; returns the score array."""
        v = np.ascontiguousarray(values, dtype=float)
        if v.size and not np.all(np.isfinite(v)):
            raise ValueError("non-finite observation in stream")
        scores = np.empty(v.size)
        head, m1, s1, m2, s2, pi, ll = kernels.em_run(
            v, self._window, self._head, *self._params, self.config.iterations, *self._limits, scores
        )
        self._head = int(head)
        self._params = (m1, s1, m2, s2, pi)
        if v.size:
            self._loglik = ll
        self._count += v.size
        return scores

    def alarms(self, scores) -> np.ndarray:
        return np.asarray(scores) > self.config.alarm_threshold

"""Online change-point detectors: EM mixture, typical CUSUM, adaptive CUSUM."""

from ._backend import BACKEND
from .base import DetectionEvent
from .cusum import (
    AcusumDetector,
    AcusumState,
    CusumDetector,
    CusumState,
    RunResult,
    acusum_step,
    cusum_post_alarm_update,
    cusum_step,
)
from .mixture import (
    EmDetector,
    MixtureState,
    em_fit_window,
    log_likelihood,
    mixture_density,
    responsibility,
)
from .params import (
    AcusumConfig,
    CusumConfig,
    EmConfig,
    GaussParams,
    default_params,
    load_params,
)

_CLASSES = {"EM": EmDetector, "CUSUM": CusumDetector, "ACUSUM": AcusumDetector}


def make_detector(kind: str, config):
    return _CLASSES[kind.upper()](config)


__all__ = [
    "BACKEND", "DetectionEvent", "AcusumDetector", "AcusumState", "CusumDetector", "CusumState",
    "RunResult", "acusum_step", "cusum_post_alarm_update", "cusum_step", "EmDetector", "MixtureState",
    "em_fit_window", "log_likelihood", "mixture_density", "responsibility", "AcusumConfig",
    "CusumConfig", "EmConfig", "GaussParams", "default_params", "load_params", "make_detector",
]

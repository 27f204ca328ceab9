"""Low-level interval distributions and yes/no speech-variability gates.

Every pause, smile, gaze hold and response timeout is drawn from a normal
distribution instead of being a fixed constant; the gates decide one-off
flourishes like addressing the user by name or clarifying a joke.

Note: the ``variance`` fields are variances, not standard deviations
(sigma = sqrt(variance)). Both readings of the configured numbers are
plausible; this package picks variance, so configure accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .prob import RngStream

INTERVAL_KINDS = ("smile", "gaze_hold", "pause_new", "pause_react", "response_timeout")
GATE_KINDS = ("address_by_name", "joke_clarify")

# Redraw-then-clamp guard for the unbounded-below normal.
MAX_REDRAWS = 16


class TimingError(ValueError):
    pass


@dataclass(frozen=True)
class NormalSpec:
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if self.mean <= 0:
            raise TimingError(f"mean must be positive, got {self.mean}")
        if self.variance < 0:
            raise TimingError(f"variance must be nonnegative, got {self.variance}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class TimingParams:
    smile: NormalSpec = NormalSpec(12.0, 3.0)
    gaze_hold: NormalSpec = NormalSpec(7.0, 1.2)
    pause_new: NormalSpec = NormalSpec(3.7, 0.25)
    pause_react: NormalSpec = NormalSpec(5.5, 0.5)
    response_timeout: NormalSpec = NormalSpec(20.0, 9.0)
    floor: float = 0.1
    # Gaze returns to the user a fixed time after each gaze-away; when it
    # should return is not modeled, only that it does.
    gaze_return_after: float = 2.0

    def __post_init__(self) -> None:
        if self.floor <= 0:
            raise TimingError(f"floor must be positive, got {self.floor}")
        if self.pause_react.mean <= self.pause_new.mean:
            raise TimingError(
                "reaction pauses must be longer on average than new-interaction pauses "
                f"({self.pause_react.mean} <= {self.pause_new.mean})"
            )


@dataclass(frozen=True)
class GateParams:
    address_by_name_p: float = 0.25
    joke_clarify_p: float = 0.5

    def __post_init__(self) -> None:
        for name in ("address_by_name_p", "joke_clarify_p"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise TimingError(f"{name} out of [0, 1]: {p}")


def sample_interval(kind: str, params: TimingParams, rng: RngStream) -> float:
    """Draw a positive interval in seconds for the given kind.

    Redraws up to MAX_REDRAWS times while below the floor, then clamps.
    """
    if kind not in INTERVAL_KINDS:
        raise TimingError(f"unknown interval kind {kind!r}")
    spec: NormalSpec = getattr(params, kind)
    for _ in range(MAX_REDRAWS):
        value = rng.gauss(spec.mean, spec.sigma)
        if value >= params.floor:
            return value
    return params.floor


def gate(kind: str, params: GateParams, rng: RngStream) -> bool:
    """Coin flip deciding whether the optional phrase/name slot is rendered."""
    if kind == "address_by_name":
        p = params.address_by_name_p
    elif kind == "joke_clarify":
        p = params.joke_clarify_p
    else:
        raise TimingError(f"unknown gate kind {kind!r}")
    return rng.random() < p

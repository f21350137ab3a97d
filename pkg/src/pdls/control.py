"""Steering law and guidance schedules.

The steering controller is the closed-form minimizer of a quadratic
control-effort + terminal-deviation objective along dZ_t = c dt:

    c(x, t) = (target - x) / (1 - t)

i.e. the velocity of the straight line reaching the target at t=1. One
Euler step with this control contracts the distance to a fixed target by
exactly (1 - dt/(1-t)). Its strength is modulated by a cosine decay
schedule eta(t) = eta_max/2 * (1 + cos(pi t)), strongest at t=0 and zero
at t=1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flowfield import EPS_T, TerminalTimeError

SCHEDULE_KINDS = ("cosine", "constant")


@dataclass(frozen=True)
class SteeringSchedule:
    """Guidance strength profile: cosine decay or constant."""

    eta_max: float
    kind: str = "cosine"

    def __post_init__(self):
        if not 0.0 <= self.eta_max <= 1.0:
            raise ValueError("eta_max must lie in [0, 1]")
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")


@dataclass(frozen=True)
class ControlParams:
    """Inversion strength gamma plus the reverse-process schedule.

    lambda_terminal is the terminal-cost weight of the derivation; the
    closed-form control is its exact-terminal limit, so the value is kept
    for documentation only and never used numerically.
    """

    gamma: float
    schedule: SteeringSchedule
    lambda_terminal: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


def eta(schedule: SteeringSchedule, t: float) -> float:
    """Guidance strength at time t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("time out of range")
    if schedule.kind == "constant":
        return schedule.eta_max
    return 0.5 * schedule.eta_max * (1.0 + np.cos(np.pi * t))


def lqr_control(x, target, t):
    """Optimal steering control (target - x) / (1 - t)."""
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    if x.shape != target.shape:
        raise ValueError("target dimension mismatch")
    if 1.0 - t < EPS_T - 1e-12:
        raise TerminalTimeError("terminal-time singularity")
    return (target - x) / (1.0 - t)


def blend_drift(base, guided, weight):
    """base + weight * (guided - base), weight in [0, 1]."""
    base = np.asarray(base, dtype=float)
    guided = np.asarray(guided, dtype=float)
    if base.shape != guided.shape:
        raise ValueError("drift dimension mismatch")
    if not 0.0 <= weight <= 1.0:
        raise ValueError("blend weight must lie in [0, 1]")
    return base + weight * (guided - base)

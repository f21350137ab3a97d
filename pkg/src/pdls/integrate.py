"""Uniform time grids and explicit Euler integration in either direction.

The step is signed: x_{k+1} = x_k + dt * drift(state_k, k) with
dt = (t_end - t_start) / n_steps, so one code path covers forward
generation (t ascending) and inversion (t descending). The drift callback
receives the step index, letting schedules and stored-path lookups hit
grid nodes exactly instead of interpolating in time.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .flowfield import EPS_T, LatentState


class DriftDivergedError(RuntimeError):
    """Raised when the drift callback returns a non-finite vector."""


@dataclass(frozen=True)
class TimeGrid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        steps = np.diff(nodes)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("grid nodes must be strictly monotone")
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_steps(self) -> int:
        return self.nodes.size - 1

    @property
    def t_start(self) -> float:
        return float(self.nodes[0])

    @property
    def t_end(self) -> float:
        return float(self.nodes[-1])

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps


def make_grid(n_steps: int, t_start: float, t_end: float, clamp: bool = True) -> TimeGrid:
    """Uniform grid of n_steps+1 nodes from t_start to t_end.

    With clamp=True the start node is clamped into [EPS_T, 1-EPS_T] before
    the uniform spacing is laid out, then every node is clamped into the
    same band (so only the final node can move). The pipeline builds its
    own unclamped grids (fields clamp time internally) so that target-end
    arrival is exact.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    for t in (t_start, t_end):
        if not 0.0 <= t <= 1.0:
            raise ValueError("time out of range")
    if clamp:
        t_start = min(max(t_start, EPS_T), 1.0 - EPS_T)
    if t_start == t_end:
        raise ValueError("zero-length time interval")
    nodes = np.linspace(t_start, t_end, n_steps + 1)
    if clamp:
        nodes = np.clip(nodes, EPS_T, 1.0 - EPS_T)
    return TimeGrid(nodes)


@dataclass(frozen=True)
class Trajectory:
    """A time grid plus the latent state at each node."""

    grid: TimeGrid
    states: np.ndarray  # (n_steps + 1, d)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.shape[0] != self.grid.nodes.size:
            raise ValueError("one state per grid node required")
        if not np.all(np.isfinite(states)):
            raise ValueError("trajectory states must be finite")
        object.__setattr__(self, "states", states)

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def integrate(x0, grid: TimeGrid, drift: Callable[[LatentState, int], np.ndarray]) -> Trajectory:
    """Explicit Euler along the grid; drift(state, k) is the forward-time velocity."""
    x = np.asarray(x0, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")
    states = np.empty((grid.n_steps + 1, x.size))
    states[0] = x
    nodes = grid.nodes
    for k in range(grid.n_steps):
        dt = nodes[k + 1] - nodes[k]
        v = np.asarray(drift(LatentState(x, float(nodes[k])), k), dtype=float)
        if v.shape != x.shape or not np.all(np.isfinite(v)):
            raise DriftDivergedError(f"drift diverged at step {k}")
        x = x + dt * v
        states[k + 1] = x
    return Trajectory(grid, states)


def trajectory_to_csv(traj: Trajectory) -> str:
    """One row per node: t, x_0, ..., x_{d-1}."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["t"] + [f"x_{i}" for i in range(traj.dim)])
    for t, row in zip(traj.grid.nodes, traj.states):
        writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    return buf.getvalue()


def trajectory_from_csv(text: str) -> Trajectory:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if not header or header[0] != "t":
        raise ValueError("malformed trajectory CSV header")
    rows = [list(map(float, r)) for r in reader if r]
    arr = np.asarray(rows)
    return Trajectory(TimeGrid(arr[:, 0]), arr[:, 1:])

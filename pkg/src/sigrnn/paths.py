"""Piecewise-linear paths on [0,1] built from discrete samples.

Sequences x_1..x_T are read as samples of a continuous path at times j/T,
with an implicit basepoint 0 at t=0.  Paths support total variation,
normalization into the admissible set (start at 0, total variation at most
the budget L), time augmentation with a scaled clock channel, and stopping.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PathConfig:
    """Total-variation budget L, strictly inside (0, 1)."""

    tv_budget: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.tv_budget < 1.0:
            raise ValueError(f"tv_budget must be in (0,1), got {self.tv_budget}")


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Linear interpolant through (times[i], values[i]) with times[0]=0, times[-1]=1."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.shape[0] != times.shape[0]:
            values = values.T
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("need at least 2 breakpoints")
        if not (np.all(np.diff(times) > 0) and times[0] == 0.0 and times[-1] == 1.0):
            raise ValueError("times must be strictly increasing from 0 to 1")
        if values.shape[0] != len(times):
            raise ValueError("one value per breakpoint required")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def evaluate(self, t) -> np.ndarray:
        """Linear interpolation at scalar t or array of t in [0,1]."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim,))
        for i in range(self.dim):
            out[..., i] = np.interp(t, self.times, self.values[:, i])
        return out


def from_samples(samples) -> PiecewiseLinearPath:
    """Path through 0 at t=0 and x_j at j/T for samples x_1..x_T.

    A 1-D input is read as T scalar samples.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample")
    if samples.ndim == 1:
        samples = samples[:, None]
    T, d = samples.shape
    times = np.linspace(0.0, 1.0, T + 1)
    values = np.vstack([np.zeros((1, d)), samples])
    return PiecewiseLinearPath(times, values)


def total_variation(path: PiecewiseLinearPath, s: float = 0.0, t: float = 1.0) -> float:
    """Sum of segment lengths restricted to [s,t]; 0 when s == t."""
    if not 0.0 <= s <= t <= 1.0:
        raise ValueError(f"interval [{s},{t}] out of [0,1]")
    if s == t:
        return 0.0
    inner = path.times[(path.times > s) & (path.times < t)]
    knots = np.concatenate([[s], inner, [t]])
    pts = path.evaluate(knots)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def normalization_scale(path: PiecewiseLinearPath, config: PathConfig) -> float:
    """Value-scaling factor min(1, L/TV); 1 for a constant path."""
    tv = total_variation(path)
    if tv == 0.0:
        return 1.0
    return min(1.0, config.tv_budget / tv)


def normalize(path: PiecewiseLinearPath, config: PathConfig) -> PiecewiseLinearPath:
    """Translate to start at 0 and scale values so the TV budget holds."""
    scale = normalization_scale(path, config)
    values = (path.values - path.values[0]) * scale
    return PiecewiseLinearPath(path.times, values)


def time_augment(path: PiecewiseLinearPath, config: PathConfig) -> PiecewiseLinearPath:
    """Append the clock channel ((1-L)/2) * t as coordinate d+1."""
    slope = (1.0 - config.tv_budget) / 2.0
    clock = slope * path.times
    values = np.hstack([path.values, clock[:, None]])
    return PiecewiseLinearPath(path.times, values)


def stop_at(path: PiecewiseLinearPath, j: int, T: int) -> PiecewiseLinearPath:
    """Equal to path on [0, j/T], constant at path(j/T) afterwards."""
    if not 1 <= j <= T:
        raise ValueError(f"stop index j={j} out of 1..{T}")
    if j == T:
        return path
    t_stop = j / T
    head = path.times[path.times < t_stop]
    times = np.concatenate([head, [t_stop, 1.0]])
    values = np.vstack([path.values[: len(head)], path.evaluate(t_stop)[None, :],
                        path.evaluate(t_stop)[None, :]])
    return PiecewiseLinearPath(times, values)


def resample(path: PiecewiseLinearPath, T: int) -> np.ndarray:
    """Samples path(j/T) for j = 1..T, shape (T, dim)."""
    return path.evaluate(np.arange(1, T + 1) / T)


def read_samples_csv(source) -> np.ndarray:
    """Read one sequence from CSV: one row per time step, d columns.

    The header row is optional and detected by a failed float parse.
    Accepts a file path or an open text stream.
    """
    if isinstance(source, (str, bytes, os.PathLike)):
        with open(source, newline="") as fh:
            return read_samples_csv(fh)
    rows = [row for row in csv.reader(source) if row]
    if not rows:
        raise ValueError("empty sample")
    try:
        [float(x) for x in rows[0]]
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise ValueError("empty sample")
    return np.array([[float(x) for x in row] for row in rows])


def write_samples_csv(target, samples, header: bool = True) -> None:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if isinstance(target, (str, bytes, os.PathLike)):
        with open(target, "w", newline="") as fh:
            write_samples_csv(fh, samples, header)
            return
    writer = csv.writer(target)
    if header:
        writer.writerow([f"x{i+1}" for i in range(samples.shape[1])])
    writer.writerows(samples.tolist())

"""Brute-force references for small instances (used by the tests, never by the algorithms)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import InvalidParameter, check_distribution

MAX_ORACLE_ARMS = 5


@dataclass(frozen=True)
class GridSpec:
    """Simplex grid for :func:`grid_minimize`.

    ``resolution`` is the finest coarse step tried; the step is coarsened
    until the grid fits in ``budget`` points. Each refinement pass searches
    a box of half-width one current step around the incumbent with
    ``2 * points + 1`` points per free coordinate, shrinking the step by
    ``shrink``.
    """

    n_arms: int
    resolution: float = 1e-3
    shrink: float = 0.1
    passes: int = 2
    budget: int = 400_000
    points: int = 10

    def __post_init__(self):
        if not 1 <= self.n_arms <= MAX_ORACLE_ARMS:
            raise InvalidParameter(f"grid oracle supports 1..{MAX_ORACLE_ARMS} arms, got {self.n_arms}")
        if not 0.0 < self.resolution <= 1.0 or not 0.0 < self.shrink < 1.0 or self.passes < 0:
            raise InvalidParameter("invalid grid specification")

    def divisions(self) -> int:
        """Number of steps per unit for the coarse grid."""
        n = max(1, int(round(1.0 / self.resolution)))
        while n > 1 and math.comb(n + self.n_arms - 1, self.n_arms - 1) > self.budget:
            n = int(n * 0.9)
        return n


def simplex_grid(n_arms: int, divisions: int) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of ``1/divisions``."""
    if n_arms == 1:
        return np.ones((1, 1))
    counts = _compositions(divisions, n_arms)
    return counts / float(divisions)


def _compositions(total: int, parts: int) -> np.ndarray:
    """Nonnegative integer vectors of length ``parts`` summing to ``total``."""
    rows = np.zeros((1, 0), dtype=np.int64)
    rem = np.array([total], dtype=np.int64)
    for _ in range(parts - 1):
        reps = rem + 1
        parent = np.repeat(np.arange(len(rows)), reps)
        starts = np.repeat(np.cumsum(reps) - reps, reps)
        first = np.arange(parent.size) - starts
        rows = np.column_stack([rows[parent], first])
        rem = rem[parent] - first
    return np.column_stack([rows, rem])


def _complete(free: np.ndarray) -> np.ndarray:
    """Append the last coordinate so every row sums to one."""
    last = 1.0 - free.sum(axis=1)
    return np.column_stack([free, last])


def grid_minimize(objective: Callable[[np.ndarray], np.ndarray], spec: GridSpec):
    """Minimize ``objective`` over the simplex by exhaustive search plus local refinement.

    ``objective`` maps an ``(N, K)`` array of points to ``N`` values.
    Returns ``(point, value)``.
    """
    k = spec.n_arms
    n = spec.divisions()
    pts = simplex_grid(k, n)
    vals = np.asarray(objective(pts), dtype=float)
    i = int(np.nanargmin(vals))
    best, best_val = pts[i].copy(), float(vals[i])
    if k == 1:
        return best, best_val
    step = 1.0 / n
    offsets = np.linspace(-1.0, 1.0, 2 * spec.points + 1)
    mesh = np.stack(np.meshgrid(*([offsets] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1)
    for _ in range(spec.passes):
        free = best[: k - 1] + step * mesh
        cand = _complete(free)
        cand = cand[np.all(cand >= 0.0, axis=1)]
        if len(cand):
            vals = np.asarray(objective(cand), dtype=float)
            j = int(np.nanargmin(vals))
            if vals[j] < best_val:
                best, best_val = cand[j].copy(), float(vals[j])
        step *= spec.shrink
    return best, best_val


def exhaustive_expectation(dist, value: Callable[[int], object]):
    """``sum_i dist[i] * value(i)`` over outcomes with positive probability.

    ``value`` may return a scalar or an array; zero-probability outcomes are
    never evaluated.
    """
    p = check_distribution(np.asarray(dist, dtype=float))
    total = None
    for i in np.flatnonzero(p > 0.0):
        term = p[i] * np.asarray(value(int(i)), dtype=float)
        total = term if total is None else total + term
    if total is None:
        return 0.0
    return float(total) if np.ndim(total) == 0 else total

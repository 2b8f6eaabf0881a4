"""Metric-entropy and sample-path diagnostics under the canonical pseudo-metric."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .gaussian import SampleBatch
from .geometry import Ball
from .kernels import DEFAULT_QUADRATURE, QuadratureConfig, kernel_matrix

__all__ = [
    "ball_grid",
    "pseudo_metric_table",
    "farthest_point_radii",
    "covering_numbers",
    "covering_number",
    "entropy_integral",
    "entropy_refinement",
    "geometric_schedule",
    "EntropyReport",
    "path_modulus",
    "PathModulusReport",
]


def ball_grid(lower, upper, points_per_axis: int, radii: Sequence[float]) -> list:
    """Centers on a regular grid (endpoints included) times a radius list."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(lower, upper)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    return [Ball(tuple(c), float(r)) for c in mesh for r in radii]


def pseudo_metric_table(spec, grid: Sequence[Ball], q: QuadratureConfig = DEFAULT_QUADRATURE,
                        threads: int = 1) -> np.ndarray:
    """Pairwise canonical pseudo-distances from one kernel matrix."""
    k = kernel_matrix(spec, grid, q, threads).entries
    diag = np.diag(k)
    sq = diag[:, None] + diag[None, :] - 2.0 * k
    return np.sqrt(np.maximum(sq, 0.0))


def farthest_point_radii(dist: np.ndarray, start: int = 0):
    """Greedy farthest-point traversal from ``start``.

    Returns ``(order, radii)`` where ``radii[k]`` is the covering radius of
    the first ``k + 1`` selected centers (nonincreasing; last entry 0).
    Ties go to the lowest index, so the result is deterministic.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if n == 0:
        raise DomainError("empty grid")
    order = [start]
    mind = dist[start].copy()
    radii = [float(mind.max())]
    for _ in range(1, n):
        nxt = int(np.argmax(mind))
        if mind[nxt] <= 0.0:
            break
        order.append(nxt)
        np.minimum(mind, dist[nxt], out=mind)
        radii.append(float(mind.max()))
    return np.array(order), np.array(radii)


def covering_numbers(radii: np.ndarray, eps) -> np.ndarray:
    """Greedy cover sizes N(eps) = min{k : radii[k-1] <= eps}."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    # radii is nonincreasing; count entries strictly above eps
    above = np.searchsorted(-radii, -eps, side="left")
    return above + 1


def covering_number(spec, grid: Sequence[Ball], eps: float, q: QuadratureConfig = DEFAULT_QUADRATURE,
                    dist: Optional[np.ndarray] = None) -> int:
    """Size of the greedy farthest-point eps-cover of the grid.

    This is an upper bound on the minimal cover N(eps) of the grid and at
    most the eps/2-packing number, so N(eps) <= greedy(eps) <= N(eps/2).
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if dist is None:
        dist = pseudo_metric_table(spec, grid, q)
    _, radii = farthest_point_radii(dist)
    return int(covering_numbers(radii, eps)[0])


def geometric_schedule(diameter: float, levels: int = 40, ratio: float = 0.5) -> np.ndarray:
    return diameter * ratio ** np.arange(levels)


@dataclass
class EntropyReport:
    region: dict
    grid_size: int
    resolution: Optional[float]
    schedule: list
    covering: list
    diameter: float
    lower_limit: float
    J: float
    J_trapezoid: float
    monotone: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _step_integral(radii, lo, hi):
    """Exact integral of sqrt(log N(eps)) over [lo, hi] for the greedy step function."""
    upper_edges = np.concatenate([[math.inf], radii[:-1]])
    total = 0.0
    for k in range(2, len(radii) + 1):
        a, b = max(radii[k - 1], lo), min(upper_edges[k - 1], hi)
        if b > a:
            total += math.sqrt(math.log(k)) * (b - a)
    return total


def entropy_integral(spec, grid: Sequence[Ball], schedule=None, q: QuadratureConfig = DEFAULT_QUADRATURE,
                     dist: Optional[np.ndarray] = None, region: Optional[dict] = None,
                     resolution: Optional[float] = None) -> EntropyReport:
    """Dudley entropy integral of the grid, truncated at the smallest scale.

    ``J`` integrates the greedy covering step function exactly between the
    smallest schedule point and the diameter; ``J_trapezoid`` is the
    trapezoid rule on the schedule points themselves.
    """
    if dist is None:
        dist = pseudo_metric_table(spec, grid, q)
    diameter = float(dist.max())
    if schedule is None:
        schedule = geometric_schedule(diameter if diameter > 0 else 1.0)
    schedule = np.asarray(schedule, dtype=float)
    if np.any(schedule <= 0) or np.any(np.diff(schedule) >= 0):
        raise DomainError("schedule must be positive and strictly decreasing")
    _, radii = farthest_point_radii(dist)
    counts = covering_numbers(radii, schedule)
    lo = float(schedule[-1])
    if diameter <= lo:
        j_exact, j_trap = 0.0, 0.0
    else:
        j_exact = _step_integral(radii, lo, diameter)
        pts = np.concatenate([[diameter], schedule[schedule < diameter]])
        vals = np.sqrt(np.log(covering_numbers(radii, pts)))
        j_trap = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * (pts[:-1] - pts[1:])))
    return EntropyReport(
        region=region or {}, grid_size=len(grid), resolution=resolution,
        schedule=schedule.tolist(), covering=counts.tolist(), diameter=diameter,
        lower_limit=lo, J=j_exact, J_trapezoid=j_trap,
        monotone=bool(np.all(np.diff(counts) >= 0)),
        notes=[f"integral truncated below eps = {lo:.6g}"],
    )


def entropy_refinement(spec, grids: Sequence[Sequence[Ball]], lower_fraction: float,
                       q: QuadratureConfig = DEFAULT_QUADRATURE):
    """J over successively refined grids of one compact set.

    The lower limit is ``lower_fraction`` times the diameter of the finest
    grid and is shared by all levels. Returns (J values, relative increments).
    """
    tables = [pseudo_metric_table(spec, g, q) for g in grids]
    lo = lower_fraction * float(tables[-1].max())
    values = []
    for g, dist in zip(grids, tables):
        diam = float(dist.max())
        sched = np.array([diam, lo]) if diam > lo else np.array([lo])
        values.append(entropy_integral(spec, g, sched, q, dist=dist).J)
    values = np.array(values)
    rel = np.diff(values) / values[:-1]
    return values, rel


@dataclass
class PathModulusReport:
    pairs_used: int
    pairs_excluded: int
    threshold_factor: float
    max_ratio: list
    flagged_fraction: float
    increment_variance_z: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def path_modulus(batch: SampleBatch, dist: np.ndarray, pair_budget: int = 1000,
                 k: float = 3.0) -> PathModulusReport:
    """Increment-to-distance ratios over the nearest pairs of a grid batch.

    A sample is flagged when some increment exceeds
    k * d(b, b') * sqrt(2 log(pairs)). Pairs at pseudo-distance 0 are excluded.
    """
    n = len(batch.balls)
    if dist.shape != (n, n):
        raise DomainError("distance table does not match batch")
    iu, ju = np.triu_indices(n, 1)
    dd = dist[iu, ju]
    zero = dd <= 0.0
    excluded = int(zero.sum())
    iu, ju, dd = iu[~zero], ju[~zero], dd[~zero]
    order = np.argsort(dd, kind="stable")[:pair_budget]
    iu, ju, dd = iu[order], ju[order], dd[order]
    inc = batch.values[:, iu] - batch.values[:, ju]
    ratio = np.abs(inc) / dd
    npairs = len(dd)
    scale = k * math.sqrt(2.0 * math.log(max(npairs, 2)))
    flagged = np.any(ratio > scale, axis=1)
    # E inc^2 = d^2 and Var(inc^2) = 2 d^4 for Gaussian increments
    emp = np.mean(inc**2, axis=0)
    z = np.abs(emp - dd**2) / (math.sqrt(2.0) * dd**2 / math.sqrt(batch.n_samples))
    return PathModulusReport(
        pairs_used=npairs, pairs_excluded=excluded, threshold_factor=scale,
        max_ratio=ratio.max(axis=1).tolist() if npairs else [],
        flagged_fraction=float(flagged.mean()) if npairs else 0.0,
        increment_variance_z=float(z.max()) if npairs else 0.0,
    )

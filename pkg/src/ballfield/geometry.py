"""Balls in R^d, their volumes and overlaps, Euclidean motions and regions.

A ball is the pair (center, radius); coordinate 0 of the center is the
"time" coordinate that the reflection :data:`theta` negates.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import betainc, gammaln
from scipy.stats import special_ortho_group

from .errors import DomainError, UnsupportedError

__all__ = [
    "Ball",
    "EuclideanMotion",
    "HalfSpace",
    "Box",
    "OpenBall",
    "Everything",
    "TimeZeroSlab",
    "ball_volume",
    "intersection_volume",
    "lens_volume",
    "apply_motion",
    "theta",
    "region_contains_ball",
    "region_contains_center",
    "region_subset",
    "transform_region",
    "random_balls",
    "read_balls_csv",
    "write_balls_csv",
    "centers_and_radii",
]


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        radius = float(self.radius)
        if len(center) < 1:
            raise DomainError("ball center must have at least one coordinate")
        if not all(math.isfinite(c) for c in center):
            raise DomainError(f"non-finite ball center {center}")
        if not (radius > 0 and math.isfinite(radius)):
            raise DomainError(f"ball radius must be positive and finite, got {radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def t(self) -> float:
        return self.center[0]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


def centers_and_radii(balls: Sequence[Ball]) -> tuple[np.ndarray, np.ndarray]:
    """Stack a ball list into an ``(n, d)`` center array and ``(n,)`` radii."""
    if len(balls) == 0:
        raise DomainError("empty ball list")
    d = balls[0].dim
    if any(b.dim != d for b in balls):
        raise DomainError("balls of mixed dimension")
    centers = np.array([b.center for b in balls], dtype=float).reshape(len(balls), d)
    radii = np.array([b.radius for b in balls], dtype=float)
    return centers, radii


def _check_dim(d):
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d}")
    return int(d)


def _unit_ball_volume(d: int) -> float:
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def ball_volume(d: int, r) -> float:
    """Volume pi^(d/2) r^d / Gamma(d/2 + 1) of a d-dimensional ball."""
    d = _check_dim(d)
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise DomainError(f"radius must be positive, got {r}")
    out = _unit_ball_volume(d) * r_arr**d
    return float(out) if out.ndim == 0 else out


def _cap_volume(d, radius, offset):
    """Volume of the part of a ball beyond a hyperplane at signed ``offset``
    from the center (offset in [-radius, radius]); arrays broadcast."""
    vol = _unit_ball_volume(d) * radius**d
    a = np.abs(offset)
    x = np.clip((radius - a) * (radius + a) / (radius * radius), 0.0, 1.0)
    small = 0.5 * vol * betainc(0.5 * (d + 1), 0.5, x)
    return np.where(offset >= 0, small, vol - small)


def lens_volume(d: int, r, s, dist):
    """Vectorized volume of b(x, r) cap b(y, s) given |x - y| = dist."""
    d = _check_dim(d)
    r, s, dist = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, s, dist)))
    # symmetric in (r, s) bit for bit
    r, s = np.minimum(r, s), np.maximum(r, s)
    out = np.zeros(r.shape)
    inner = dist <= np.abs(r - s)
    out[inner] = _unit_ball_volume(d) * np.minimum(r[inner], s[inner]) ** d
    mid = (~inner) & (dist < r + s)
    if np.any(mid):
        rm, sm, dm = r[mid], s[mid], dist[mid]
        c1 = (dm * dm + rm * rm - sm * sm) / (2.0 * dm)
        c2 = dm - c1
        out[mid] = _cap_volume(d, rm, c1) + _cap_volume(d, sm, c2)
    np.maximum(out, 0.0, out=out)
    return float(out) if out.ndim == 0 else out


def intersection_volume(b1: Ball, b2: Ball) -> float:
    if b1.dim != b2.dim:
        raise DomainError(f"dimension mismatch: {b1.dim} vs {b2.dim}")
    dist = math.dist(b1.center, b2.center)
    return float(lens_volume(b1.dim, b1.radius, b2.radius, dist))


class EuclideanMotion:
    """Rigid motion x -> rotation @ x + translation of R^d.

    ``rotation`` may be any orthogonal matrix (reflections included, so that
    the time reflection is a motion).
    """

    def __init__(self, rotation, translation=None):
        rot = np.array(rotation, dtype=float, ndmin=2)
        d = rot.shape[0]
        if rot.shape != (d, d):
            raise DomainError(f"rotation must be square, got shape {rot.shape}")
        if not np.allclose(rot.T @ rot, np.eye(d), rtol=0, atol=1e-12):
            raise DomainError("rotation matrix is not orthogonal to 1e-12")
        tr = np.zeros(d) if translation is None else np.array(translation, dtype=float).reshape(-1)
        if tr.shape != (d,):
            raise DomainError(f"translation must have length {d}")
        self.rotation = rot
        self.translation = tr
        self.rotation.setflags(write=False)
        self.translation.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))

    @classmethod
    def shift(cls, vector):
        v = np.asarray(vector, dtype=float)
        return cls(np.eye(v.size), v)

    @classmethod
    def planar_rotation(cls, angle, d=2, axes=(0, 1)):
        rot = np.eye(d)
        i, j = axes
        c, s = math.cos(angle), math.sin(angle)
        rot[i, i], rot[i, j], rot[j, i], rot[j, j] = c, -s, s, c
        return cls(rot)

    @classmethod
    def time_reflection(cls, d):
        rot = np.eye(d)
        rot[0, 0] = -1.0
        return cls(rot)

    @classmethod
    def random(cls, d, rng, scale=1.0):
        """Random proper rotation (Haar) followed by a Gaussian translation."""
        rng = np.random.default_rng(rng)
        rot = np.eye(1) if d == 1 else special_ortho_group.rvs(d, random_state=rng)
        return cls(np.atleast_2d(rot), scale * rng.standard_normal(d))

    def apply_point(self, x):
        return self.rotation @ np.asarray(x, dtype=float) + self.translation

    def compose(self, other: "EuclideanMotion") -> "EuclideanMotion":
        """``self`` after ``other``."""
        if other.dim != self.dim:
            raise DomainError("dimension mismatch in motion composition")
        return EuclideanMotion(self.rotation @ other.rotation,
                               self.rotation @ other.translation + self.translation)

    def inverse(self) -> "EuclideanMotion":
        rt = self.rotation.T
        return EuclideanMotion(rt, -rt @ self.translation)

    def __repr__(self):
        return f"EuclideanMotion(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def apply_motion(g: EuclideanMotion, b: Ball) -> Ball:
    if g.dim != b.dim:
        raise DomainError(f"motion of dimension {g.dim} applied to ball of dimension {b.dim}")
    return Ball(tuple(g.apply_point(b.center)), b.radius)


def theta(b: Ball) -> Ball:
    """Time reflection (t, x) -> (-t, x); exact, no matrix arithmetic."""
    return Ball((-b.center[0],) + b.center[1:], b.radius)


# --- regions ---------------------------------------------------------------

@dataclass(frozen=True)
class HalfSpace:
    """Open half-space {x : normal . x > offset} with a unit ``normal``."""
    normal: tuple
    offset: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise DomainError("half-space normal must be nonzero")
        if abs(norm - 1.0) > 1e-12:
            n = n / norm
            object.__setattr__(self, "offset", float(self.offset) / norm)
        object.__setattr__(self, "normal", tuple(float(v) for v in n))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def future(cls, d, c=0.0):
        """{t > c}."""
        n = [0.0] * d
        n[0] = 1.0
        return cls(tuple(n), c)

    @classmethod
    def past(cls, d, c=0.0):
        """{t < c}."""
        n = [0.0] * d
        n[0] = -1.0
        return cls(tuple(n), -c)

    @property
    def dim(self):
        return len(self.normal)


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box prod (lower_i, upper_i)."""
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise DomainError("box needs lower < upper coordinatewise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower)


@dataclass(frozen=True)
class OpenBall:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0:
            raise DomainError("region ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class Everything:
    dim: int


@dataclass(frozen=True)
class TimeZeroSlab:
    """Open box inside the hyperplane {t = 0}: spatial coordinates in
    prod (lower_i, upper_i). Used for center-membership queries only."""
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise DomainError("slab needs lower < upper coordinatewise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower) + 1


def _check_region_dim(region, b):
    if region.dim != b.dim:
        raise DomainError(f"region of dimension {region.dim} vs ball of dimension {b.dim}")


def region_contains_ball(region, b: Ball) -> bool:
    """Whether the open ball b lies inside the open region (membership in B_d(V)).

    Closed margins are allowed: b(x, r) lies in {t > 0} exactly when t >= r.
    """
    _check_region_dim(region, b)
    x, r = b.center, b.radius
    if isinstance(region, Everything):
        return True
    if isinstance(region, HalfSpace):
        return sum(n * c for n, c in zip(region.normal, x)) - r >= region.offset
    if isinstance(region, Box):
        return all(c - r >= lo and c + r <= hi for c, lo, hi in zip(x, region.lower, region.upper))
    if isinstance(region, OpenBall):
        return math.dist(x, region.center) + r <= region.radius
    if isinstance(region, TimeZeroSlab):
        return False
    raise DomainError(f"unknown region type {type(region).__name__}")


def region_contains_center(region, b: Ball) -> bool:
    """Membership of the center only (the B^0_d(V) index set)."""
    _check_region_dim(region, b)
    x = b.center
    if isinstance(region, TimeZeroSlab):
        return x[0] == 0.0 and all(lo < c < hi for c, lo, hi in zip(x[1:], region.lower, region.upper))
    if isinstance(region, Everything):
        return True
    if isinstance(region, HalfSpace):
        return sum(n * c for n, c in zip(region.normal, x)) > region.offset
    if isinstance(region, Box):
        return all(lo < c < hi for c, lo, hi in zip(x, region.lower, region.upper))
    if isinstance(region, OpenBall):
        return math.dist(x, region.center) < region.radius
    raise DomainError(f"unknown region type {type(region).__name__}")


def _box_corners(box):
    return np.array(np.meshgrid(*zip(box.lower, box.upper), indexing="ij")).reshape(box.dim, -1).T


def region_subset(v1, v2) -> bool:
    """Decide v1 <= v2 for the supported region pairs.

    Raises UnsupportedError when the pair is outside the decidable cases.
    """
    if v1.dim != v2.dim:
        raise DomainError("regions of different dimension")
    if isinstance(v2, Everything):
        return True
    if isinstance(v1, Everything):
        return False
    if isinstance(v1, TimeZeroSlab) or isinstance(v2, TimeZeroSlab):
        if isinstance(v1, TimeZeroSlab) and isinstance(v2, TimeZeroSlab):
            return all(a2 <= a1 and b1 <= b2 for a1, b1, a2, b2 in
                       zip(v1.lower, v1.upper, v2.lower, v2.upper))
        raise UnsupportedError("slab nesting only against other slabs")
    if isinstance(v2, HalfSpace):
        n = np.asarray(v2.normal)
        if isinstance(v1, HalfSpace):
            return bool(np.allclose(v1.normal, v2.normal, rtol=0, atol=1e-14) and v1.offset >= v2.offset)
        if isinstance(v1, Box):
            return bool(np.all(_box_corners(v1) @ n >= v2.offset))
        if isinstance(v1, OpenBall):
            return float(np.dot(n, v1.center)) - v1.radius >= v2.offset
    if isinstance(v2, Box):
        lo, hi = np.asarray(v2.lower), np.asarray(v2.upper)
        if isinstance(v1, Box):
            return bool(np.all(np.asarray(v1.lower) >= lo) and np.all(np.asarray(v1.upper) <= hi))
        if isinstance(v1, OpenBall):
            c = np.asarray(v1.center)
            return bool(np.all(c - v1.radius >= lo) and np.all(c + v1.radius <= hi))
        if isinstance(v1, HalfSpace):
            return False
    if isinstance(v2, OpenBall):
        c = np.asarray(v2.center)
        if isinstance(v1, OpenBall):
            return math.dist(v1.center, v2.center) + v1.radius <= v2.radius
        if isinstance(v1, Box):
            return bool(np.all(np.linalg.norm(_box_corners(v1) - c, axis=1) <= v2.radius))
        if isinstance(v1, HalfSpace):
            return False
    raise UnsupportedError(f"cannot decide {type(v1).__name__} <= {type(v2).__name__}")


def _is_signed_permutation(rot):
    return bool(np.all(np.isin(rot, (-1.0, 0.0, 1.0))) and np.all(np.abs(rot).sum(axis=0) == 1))


def transform_region(g: EuclideanMotion, region):
    """Image g(V) of a region; boxes only under signed-permutation rotations."""
    if g.dim != region.dim:
        raise DomainError("dimension mismatch between motion and region")
    if isinstance(region, Everything):
        return region
    if isinstance(region, HalfSpace):
        n = g.rotation @ np.asarray(region.normal)
        return HalfSpace(tuple(n), region.offset + float(n @ g.translation))
    if isinstance(region, OpenBall):
        return OpenBall(tuple(g.apply_point(region.center)), region.radius)
    if isinstance(region, Box):
        if not _is_signed_permutation(g.rotation):
            raise UnsupportedError("box image under a non-axis-aligned rotation is not a box")
        a = g.apply_point(region.lower)
        b = g.apply_point(region.upper)
        return Box(tuple(np.minimum(a, b)), tuple(np.maximum(a, b)))
    if isinstance(region, TimeZeroSlab):
        if not (np.array_equal(g.rotation, np.eye(g.dim)) and g.translation[0] == 0.0):
            raise UnsupportedError("slabs move only under spatial translations")
        tr = g.translation[1:]
        return TimeZeroSlab(tuple(np.asarray(region.lower) + tr), tuple(np.asarray(region.upper) + tr))
    raise DomainError(f"unknown region type {type(region).__name__}")


# --- configurations and CSV ------------------------------------------------

def random_balls(n, d, rng, box=(0.0, 1.0), radius_range=(0.1, 0.5), positive_time=False):
    """Uniform random centers in ``box`` (a scalar interval or a per-axis
    list of intervals) and uniform radii.

    With ``positive_time`` the time coordinate is shifted to ``t >= r`` by
    adding the radius, so every ball lies in {t > 0}.
    """
    rng = np.random.default_rng(rng)
    box = np.asarray(box, dtype=float)
    if box.ndim == 1:
        box = np.tile(box, (d, 1))
    centers = rng.uniform(box[:, 0], box[:, 1], size=(n, d))
    radii = rng.uniform(radius_range[0], radius_range[1], size=n)
    if positive_time:
        centers[:, 0] = np.abs(centers[:, 0]) + radii
    return [Ball(tuple(c), r) for c, r in zip(centers, radii)]


def _header(d):
    return ["dim", "t"] + [f"x{i}" for i in range(1, d)] + ["radius"]


def write_balls_csv(path, balls: Iterable[Ball]):
    balls = list(balls)
    _, _ = centers_and_radii(balls)
    d = balls[0].dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_header(d))
        for b in balls:
            w.writerow([d] + [repr(c) for c in b.center] + [repr(b.radius)])


def read_balls_csv(path) -> list[Ball]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise DomainError(f"{path}: empty ball file")
    header, body = rows[0], rows[1:]
    if header[0] != "dim" or header[-1] != "radius":
        raise DomainError(f"{path}: bad header {header}")
    d = len(header) - 2
    if header != _header(d):
        raise DomainError(f"{path}: header {header} does not match dimension {d}")
    balls = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != d + 2 or int(row[0]) != d:
            raise DomainError(f"{path}:{lineno}: expected {d + 2} fields with dim={d}")
        balls.append(Ball(tuple(float(v) for v in row[1:-1]), float(row[-1])))
    return balls

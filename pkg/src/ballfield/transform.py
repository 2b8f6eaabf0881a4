"""Pointwise nonlinear transformations of sampled fields.

A transformed field is X^phi_b = phi(X_b) for a continuous phi: R -> R;
at the level of finite marginals this is just elementwise application of
phi to a sample batch.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .axioms import Functional, weight_matrix
from .errors import DomainError, PreconditionError
from .gaussian import SampleBatch, sample
from .kernels import DEFAULT_QUADRATURE, QuadratureConfig
from .stats import bootstrap_means

__all__ = [
    "Transform",
    "apply_transform",
    "sample_transformed",
    "empirical_char_functional",
    "read_knots_csv",
]

_KINDS = ("identity", "tanh", "power", "clip", "table")


@dataclass(frozen=True)
class Transform:
    kind: str = "identity"
    power: int = 1
    bound: float = 1.0
    knots_x: Optional[tuple] = None
    knots_y: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown transform {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "power" and (int(self.power) != self.power or self.power < 1 or self.power % 2 == 0):
            raise DomainError(f"power transform needs an odd positive integer, got {self.power}")
        if self.kind == "clip" and not self.bound >= 0:
            raise DomainError("clip bound must be nonnegative")
        if self.kind == "table":
            if self.knots_x is None or self.knots_y is None:
                raise DomainError("table transform needs knots")
            x = np.asarray(self.knots_x, dtype=float)
            y = np.asarray(self.knots_y, dtype=float)
            if x.shape != y.shape or x.size < 2:
                raise DomainError("table needs at least two (x, y) knots of equal count")
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise DomainError("table knots must be finite")
            if np.any(np.diff(x) <= 0):
                raise DomainError("table knots must be strictly increasing")
            object.__setattr__(self, "knots_x", tuple(x.tolist()))
            object.__setattr__(self, "knots_y", tuple(y.tolist()))

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def tanh(cls):
        return cls("tanh")

    @classmethod
    def cube(cls):
        return cls("power", power=3)

    @classmethod
    def clip(cls, bound):
        return cls("clip", bound=float(bound))

    @classmethod
    def table(cls, xs, ys):
        return cls("table", knots_x=tuple(xs), knots_y=tuple(ys))

    @classmethod
    def from_dict(cls, cfg):
        if isinstance(cfg, str):
            cfg = {"name": cfg}
        name = cfg.get("name", "identity")
        if name in ("cube", "x3"):
            return cls.cube()
        if name == "table" and "knots_csv" in cfg:
            xs, ys = read_knots_csv(cfg["knots_csv"])
            return cls.table(xs, ys)
        return cls(name, power=int(cfg.get("power", 1)), bound=float(cfg.get("bound", 1.0)),
                   knots_x=cfg.get("knots_x"), knots_y=cfg.get("knots_y"))

    def to_dict(self):
        out = {"name": self.kind}
        if self.kind == "power":
            out["power"] = self.power
        elif self.kind == "clip":
            out["bound"] = self.bound
        elif self.kind == "table":
            out["knots_x"] = list(self.knots_x)
            out["knots_y"] = list(self.knots_y)
        return out

    def evaluate(self, values):
        """Return (phi(values), whether any table value was extrapolated)."""
        v = np.asarray(values, dtype=float)
        if self.kind == "identity":
            return v.copy(), False
        if self.kind == "tanh":
            return np.tanh(v), False
        if self.kind == "power":
            return v**self.power, False
        if self.kind == "clip":
            return np.clip(v, -self.bound, self.bound), False
        x = np.asarray(self.knots_x)
        y = np.asarray(self.knots_y)
        out = np.interp(v, x, y)
        lo, hi = v < x[0], v > x[-1]
        if np.any(lo):
            out[lo] = y[0] + (v[lo] - x[0]) * (y[1] - y[0]) / (x[1] - x[0])
        if np.any(hi):
            out[hi] = y[-1] + (v[hi] - x[-1]) * (y[-1] - y[-2]) / (x[-1] - x[-2])
        return out, bool(np.any(lo) or np.any(hi))

    def __call__(self, values):
        return self.evaluate(values)[0]


def read_knots_csv(path):
    """Knot list with header ``x,y``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["x", "y"]:
        raise DomainError(f"{path}: expected header 'x,y'")
    xs = [float(r[0]) for r in rows[1:]]
    ys = [float(r[1]) for r in rows[1:]]
    return xs, ys


def apply_transform(phi: Transform, batch: SampleBatch) -> SampleBatch:
    values, extrapolated = phi.evaluate(batch.values)
    flags = list(batch.flags)
    if extrapolated:
        flags.append(f"extrapolated:{len(batch.transforms)}")
    return replace(batch, values=values, transforms=batch.transforms + [phi.to_dict()], flags=flags)


def sample_transformed(spec, phi: Transform, balls, n_samples: int, seed: int,
                       q: QuadratureConfig = DEFAULT_QUADRATURE, threads: int = 1) -> SampleBatch:
    return apply_transform(phi, sample(spec, balls, n_samples, seed, q, threads))


def empirical_char_functional(batch: SampleBatch, functionals: Sequence[Functional],
                              n_boot: int = 1000, seed: int = 0):
    """Sample means of exp(i F) with bootstrap standard errors.

    Returns ``(values, stderr)``; the standard error is the root mean square
    distance of the complex bootstrap replicates from the estimate.
    """
    if batch.n_samples < 1000:
        raise PreconditionError(f"need >= 1000 samples, got {batch.n_samples}")
    lam = weight_matrix(functionals, len(batch.balls))
    phases = np.exp(1j * (batch.values @ lam.T))
    est = phases.mean(axis=0)
    # a functional with all-zero weights is exactly 1
    est[np.all(lam == 0, axis=1)] = 1.0
    reps = bootstrap_means(phases, n_boot, seed)
    se = np.sqrt(np.mean(np.abs(reps - est) ** 2, axis=0))
    return est, se

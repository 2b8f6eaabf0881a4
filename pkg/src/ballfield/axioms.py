"""Finite-dimensional checks of the Euclidean field axioms.

Reflection positivity is tested at three levels: the reflected kernel matrix
K(b_i, theta b_j), the closed-form Gaussian matrix of characteristic
functions S_ij = E exp(i F_i - i theta F_j), and a Monte Carlo estimate of
S_ij for arbitrary (possibly transformed) sample batches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, PreconditionError
from .gaussian import SampleBatch
from .geometry import (Ball, EuclideanMotion, HalfSpace, apply_motion, region_contains_ball,
                       region_contains_center, region_subset, theta, transform_region)
from .kernels import (DEFAULT_QUADRATURE, FreeField, QuadratureConfig, Spectral, W, White,
                      cross_kernel, kernel_matrix)
from .stats import bootstrap_counts

__all__ = [
    "RPReport",
    "Functional",
    "reflected_configuration",
    "check_positive_time",
    "rp_kernel_check",
    "rp_gaussian_check",
    "rp_monte_carlo_check",
    "invariance_check",
    "index_monotonicity_check",
    "theta_fixed_check",
    "MonotonicityReport",
]


@dataclass
class RPReport:
    kind: str
    n: int
    min_eigenvalue: float
    tolerance: float
    passed: bool
    witness: Optional[list] = None
    stderr: Optional[float] = None
    seed: Optional[int] = None
    matrix: Optional[np.ndarray] = field(default=None, repr=False)
    entry_stderr: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self):
        out = {"kind": self.kind, "n": self.n, "min_eigenvalue": self.min_eigenvalue,
               "tolerance": self.tolerance, "pass": self.passed}
        if self.stderr is not None:
            out["stderr"] = self.stderr
        if self.seed is not None:
            out["seed"] = self.seed
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class Functional:
    """F = sum_k w_k X_{b_k}, stored as ((ball index, weight), ...)."""
    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients",
                           tuple((int(i), float(w)) for i, w in self.coefficients))

    @classmethod
    def single(cls, index, weight=1.0):
        return cls(((index, weight),))

    def indices(self):
        return [i for i, _ in self.coefficients]

    def weights(self, n) -> np.ndarray:
        out = np.zeros(n)
        for i, w in self.coefficients:
            if not 0 <= i < n:
                raise DomainError(f"functional references ball {i} outside configuration of {n}")
            out[i] += w
        return out


def weight_matrix(functionals: Sequence[Functional], n: int) -> np.ndarray:
    return np.array([f.weights(n) for f in functionals]).reshape(len(functionals), n)


def check_positive_time(balls: Sequence[Ball], which=None):
    """Raise PreconditionError naming the first ball outside B_d(t > 0)."""
    idx = range(len(balls)) if which is None else which
    for i in idx:
        b = balls[i]
        if not region_contains_ball(HalfSpace.future(b.dim), b):
            raise PreconditionError(
                f"ball {i} (t={b.t}, r={b.radius}) is not contained in the half-space t > 0", index=i)


def reflected_configuration(balls: Sequence[Ball]) -> list:
    """``balls`` followed by their time reflections."""
    return list(balls) + [theta(b) for b in balls]


def _psd_report(kind, mat, tol, **extra):
    mat = 0.5 * (mat + mat.conj().T)
    w, v = np.linalg.eigh(mat)
    lam = float(w[0])
    passed = bool(lam >= -tol)
    witness = None
    if not passed:
        vec = v[:, 0]
        witness = vec.real.tolist() if not np.iscomplexobj(vec) else [[z.real, z.imag] for z in vec]
    return RPReport(kind=kind, n=mat.shape[0], min_eigenvalue=lam, tolerance=float(tol),
                    passed=passed, witness=witness, matrix=mat, **extra)


def _is_fourier(spec):
    inner = getattr(spec, "spec", spec)
    return isinstance(inner, (FreeField, Spectral))


def rp_kernel_check(spec, balls: Sequence[Ball], q: QuadratureConfig = DEFAULT_QUADRATURE,
                    rel_tol: float = 1e-8, abs_tol: float = 1e-10) -> RPReport:
    """Minimum eigenvalue of A_ij = K(b_i, theta b_j) for balls in t > 0.

    Fourier kernels pass at ``rel_tol * trace/n`` (never below n times the
    largest quadrature error estimate); exact-geometry kernels at ``abs_tol``.
    """
    balls = list(balls)
    check_positive_time(balls)
    mat, err = cross_kernel(spec, balls, [theta(b) for b in balls], q)
    n = len(balls)
    if _is_fourier(spec):
        tol = max(rel_tol * abs(np.trace(mat)) / n, n * err)
    else:
        tol = abs_tol
    return _psd_report("kernel_theta", mat, tol)


def rp_gaussian_check(spec, functionals: Sequence[Functional], balls: Sequence[Ball],
                      q: QuadratureConfig = DEFAULT_QUADRATURE, rel_tol: float = 1e-8) -> RPReport:
    """Closed-form S_ij = exp(-Var(F_i - theta F_j) / 2) for the Gaussian field."""
    balls = list(balls)
    used = sorted({i for f in functionals for i in f.indices()})
    check_positive_time(balls, used)
    n = len(balls)
    cov = kernel_matrix(spec, reflected_configuration(balls), q).entries
    lam = weight_matrix(functionals, n)
    c_pp, c_mm, c_pm = cov[:n, :n], cov[n:, n:], cov[:n, n:]
    var_p = np.einsum("ki,ij,kj->k", lam, c_pp, lam)
    var_m = np.einsum("ki,ij,kj->k", lam, c_mm, lam)
    cross = lam @ c_pm @ lam.T
    var = var_p[:, None] + var_m[None, :] - 2.0 * cross
    s = np.exp(-0.5 * var)
    tol = rel_tol * abs(np.trace(s)) / len(functionals)
    return _psd_report("gaussian_closed_form", s, tol)


def _reflection_index(balls):
    lookup = {b: i for i, b in enumerate(balls)}
    return lookup


def rp_monte_carlo_check(batch: SampleBatch, functionals: Sequence[Functional], n_boot: int = 1000,
                         seed: int = 0, n_sigma: float = 3.0, floor: float = 1e-12) -> RPReport:
    """Monte Carlo estimate of S_ij = E exp(i F_i - i theta F_j).

    Functionals index ``batch.balls``; each referenced ball's reflection must
    also be a column of the batch. The estimate is symmetrized to be exactly
    Hermitian, and passes when its minimum eigenvalue is at least
    ``-n_sigma`` bootstrap standard errors (plus a rounding ``floor``).
    """
    if batch.n_samples < 1000:
        raise PreconditionError(f"rp_monte_carlo_check needs >= 1000 samples, got {batch.n_samples}")
    balls = batch.balls
    n = len(balls)
    used = sorted({i for f in functionals for i in f.indices()})
    check_positive_time(balls, used)
    lookup = _reflection_index(balls)
    perm = np.arange(n)
    for i in used:
        j = lookup.get(theta(balls[i]))
        if j is None:
            raise PreconditionError(f"reflection of ball {i} is missing from the batch", index=i)
        perm[i] = j
    lam = weight_matrix(functionals, n)
    lam_theta = np.zeros_like(lam)
    lam_theta[:, perm[used]] = lam[:, used]
    u = np.exp(1j * (batch.values @ lam.T))
    w = np.exp(1j * (batch.values @ lam_theta.T))
    k = len(functionals)
    # per-sample Hermitian matrices (u_i conj(w_j) + w_i conj(u_j)) / 2
    per = 0.5 * (u[:, :, None] * w.conj()[:, None, :] + w[:, :, None] * u.conj()[:, None, :])
    flat = per.reshape(batch.n_samples, k * k)
    s = flat.mean(axis=0).reshape(k, k)
    second = (np.abs(flat) ** 2).mean(axis=0) - np.abs(flat.mean(axis=0)) ** 2
    entry_se = np.sqrt(np.maximum(second, 0.0) / batch.n_samples).reshape(k, k)

    re_part = np.ascontiguousarray(flat.real)
    im_part = np.ascontiguousarray(flat.imag)
    mins = []
    for counts in bootstrap_counts(batch.n_samples, n_boot, seed):
        sb = (counts @ re_part + 1j * (counts @ im_part)) / batch.n_samples
        for row in sb:
            m = row.reshape(k, k)
            mins.append(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    se = float(np.std(mins, ddof=1)) if len(mins) > 1 else 0.0
    tol = n_sigma * se + floor * k
    return _psd_report("monte_carlo", s, tol, stderr=se, seed=int(seed), entry_stderr=entry_se)


def invariance_check(spec, motions: Sequence[EuclideanMotion], balls: Sequence[Ball],
                     q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """max over motions g and pairs of |K(g b_i, g b_j) - K(b_i, b_j)|."""
    base = kernel_matrix(spec, balls, q).entries
    worst = 0.0
    for g in motions:
        moved = kernel_matrix(spec, [apply_motion(g, b) for b in balls], q).entries
        worst = max(worst, float(np.abs(moved - base).max()))
    return worst


def theta_fixed_check(spec, balls: Sequence[Ball], q: QuadratureConfig = DEFAULT_QUADRATURE) -> bool:
    """Balls centered on {t = 0} are fixed by theta, so the reflected kernel
    matrix must equal the plain one exactly."""
    for i, b in enumerate(balls):
        if b.t != 0.0:
            raise PreconditionError(f"ball {i} is not centered on t = 0", index=i)
    refl, _ = cross_kernel(spec, balls, [theta(b) for b in balls], q)
    plain, _ = cross_kernel(spec, balls, balls, q)
    return bool(np.array_equal(refl, plain))


@dataclass
class MonotonicityReport:
    inner_count: int
    outer_count: int
    included: bool
    strict: bool
    equivariance_mismatches: int
    motions_checked: int
    passed: bool


def index_monotonicity_check(v1, v2, pool: Sequence[Ball],
                             motions: Sequence[EuclideanMotion] = ()) -> MonotonicityReport:
    """B_d(V1) <= B_d(V2) over a ball pool, plus g.B_d(V) = B_d(gV).

    For time-zero slabs the center-membership sets B^0_d are compared instead.
    """
    if not region_subset(v1, v2):
        raise PreconditionError("first region is not contained in the second")
    from .geometry import TimeZeroSlab
    member = region_contains_center if isinstance(v1, TimeZeroSlab) else region_contains_ball
    inner = {i for i, b in enumerate(pool) if member(v1, b)}
    outer = {i for i, b in enumerate(pool) if member(v2, b)}
    mismatches = 0
    for g in motions:
        for region in (v1, v2):
            moved = transform_region(g, region)
            for b in pool:
                if member(region, b) != member(moved, apply_motion(g, b)):
                    mismatches += 1
    included = inner <= outer
    return MonotonicityReport(inner_count=len(inner), outer_count=len(outer), included=included,
                              strict=included and len(outer) > len(inner),
                              equivariance_mismatches=mismatches, motions_checked=len(motions),
                              passed=included and mismatches == 0)

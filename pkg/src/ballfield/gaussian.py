"""Finite-dimensional marginals of the centered Gaussian field with a given kernel."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lapack

from .covariance import CovarianceMatrix
from .errors import DomainError, NumericalError
from .geometry import Ball
from .kernels import DEFAULT_QUADRATURE, QuadratureConfig, kernel_matrix

__all__ = [
    "CovarianceMatrix",
    "SampleBatch",
    "factorize",
    "standard_normals",
    "sample",
    "sample_covariance",
    "empirical_covariance",
    "marginal_consistency",
    "characteristic_check",
    "clt_bound",
    "ConsistencyReport",
    "RNG_ALGORITHM",
]

BLOCK = 8192
RNG_ALGORITHM = f"philox4x64/jumped-per-block/{BLOCK}"
DEFAULT_JITTER = 1e-12


@dataclass
class SampleBatch:
    """Draws of field values, one row per sample and one column per ball."""
    balls: list
    values: np.ndarray
    seed: int
    rng_algorithm: str = RNG_ALGORITHM
    kernel: dict = field(default_factory=dict)
    jitter: float = 0.0
    transforms: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.balls):
            raise DomainError(f"values shape {self.values.shape} does not match {len(self.balls)} balls")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.balls[0].dim

    def columns(self, idx) -> "SampleBatch":
        idx = list(idx)
        return replace(self, balls=[self.balls[i] for i in idx], values=self.values[:, idx])


def _cholesky(a):
    """Lower factor and LAPACK-style info; pivots at rounding level count as
    failures so that exactly singular inputs are not silently accepted."""
    c, info = lapack.dpotrf(a, lower=1, clean=1)
    info = int(info)
    if info == 0:
        floor = a.shape[0] * np.finfo(float).eps * float(np.max(np.diag(a)))
        weak = np.flatnonzero(np.diag(c) ** 2 <= floor)
        if weak.size:
            info = int(weak[0]) + 1
    return np.tril(c), info


def factorize(cov: CovarianceMatrix, jitter: str = "relative", eps: float = DEFAULT_JITTER) -> CovarianceMatrix:
    """Lower Cholesky factor of ``cov.entries + jitter * I``.

    The unperturbed matrix is tried first. Under the ``"relative"`` policy the
    jitter then escalates through eps * (trace/n) * 10**k, k = 0..6.
    """
    if jitter not in ("none", "relative"):
        raise DomainError(f"unknown jitter policy {jitter!r}")
    a = cov.entries
    if not np.array_equal(a, a.T):
        raise DomainError("covariance matrix is not exactly symmetric")
    n = cov.order
    factor, info = _cholesky(a)
    used = 0.0
    if info != 0 and jitter == "relative":
        base = eps * max(cov.scale, np.finfo(float).tiny)
        for k in range(7):
            used = base * 10.0**k
            factor, info = _cholesky(a + used * np.eye(n))
            if info == 0:
                break
    if info != 0:
        raise NumericalError(
            f"Cholesky factorization failed: leading minor of order {info} is not positive definite "
            f"(jitter {used:.3e})", estimate=info)
    return replace(cov, factor=factor, jitter_applied=used)


def standard_normals(seed: int, n_samples: int, n: int, threads: int = 1) -> np.ndarray:
    """``(n_samples, n)`` i.i.d. N(0, 1) draws from block-keyed Philox streams.

    Block ``c`` (rows c*BLOCK ...) comes from Philox(key=seed) jumped c times,
    so a row depends only on (seed, row index, n) and any prefix of a longer
    batch reproduces the shorter one.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    seed = int(seed) % 2**64
    nblocks = -(-n_samples // BLOCK)

    def block(c):
        rows = min(BLOCK, n_samples - c * BLOCK)
        gen = np.random.Generator(np.random.Philox(key=seed).jumped(c))
        return gen.standard_normal((rows, n))

    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, range(nblocks)))
    else:
        parts = [block(c) for c in range(nblocks)]
    return np.concatenate(parts, axis=0)


def sample_covariance(cov: CovarianceMatrix, balls, n_samples: int, seed: int, threads: int = 1,
                      jitter: str = "relative", eps: float = DEFAULT_JITTER) -> SampleBatch:
    """Draw ``factor @ z`` for a covariance matrix (factorizing if needed)."""
    if cov.factor is None:
        cov = factorize(cov, jitter, eps)
    z = standard_normals(seed, n_samples, cov.order, threads)
    # einsum without BLAS: row results do not depend on thread count
    values = np.einsum("si,ji->sj", z, cov.factor, optimize=False)
    return SampleBatch(balls=list(balls), values=values, seed=int(seed),
                       kernel={"name": cov.kernel, "params": cov.params},
                       jitter=cov.jitter_applied)


def sample(spec, balls: Sequence[Ball], n_samples: int, seed: int,
           q: QuadratureConfig = DEFAULT_QUADRATURE, threads: int = 1,
           jitter: str = "relative", eps: float = DEFAULT_JITTER) -> SampleBatch:
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    cov = kernel_matrix(spec, balls, q, threads)
    return sample_covariance(cov, balls, n_samples, seed, threads, jitter, eps)


def empirical_covariance(batch: SampleBatch) -> CovarianceMatrix:
    """(1/N) sum v v^T without mean subtraction (the field is centered)."""
    if batch.n_samples < 2:
        raise DomainError("empirical covariance needs at least 2 samples")
    v = batch.values
    ent = np.einsum("si,sj->ij", v, v, optimize=False) / batch.n_samples
    ent = 0.5 * (ent + ent.T)
    return CovarianceMatrix(entries=ent, dim=batch.dim, kernel="empirical",
                            params={"n_samples": batch.n_samples})


def clt_bound(cov: np.ndarray, n_samples: int, k: float = 5.0) -> np.ndarray:
    """k standard errors of the second-moment estimator of each entry."""
    diag = np.diag(cov)
    return k * np.sqrt((np.outer(diag, diag) + cov**2) / n_samples)


@dataclass
class ConsistencyReport:
    subset: list
    exact_equal: bool
    max_abs_entry_diff: float
    max_zscore: float
    passed: bool


def marginal_consistency(spec, balls: Sequence[Ball], subset, n_samples: int, seed: int,
                         q: QuadratureConfig = DEFAULT_QUADRATURE, threads: int = 1) -> ConsistencyReport:
    """Kolmogorov consistency of the finite marginals on a sub-configuration.

    The subset kernel matrix must equal the corresponding block of the full one
    exactly; empirical covariances from sampling the subset directly and from
    projecting a full batch must agree within 5 combined standard errors.
    """
    subset = [int(i) for i in subset]
    if not subset:
        raise DomainError("subset must be nonempty")
    full = kernel_matrix(spec, balls, q, threads)
    sub = kernel_matrix(spec, [balls[i] for i in subset], q, threads)
    block = full.entries[np.ix_(subset, subset)]
    exact = bool(np.array_equal(sub.entries, block))
    full_batch = sample_covariance(full, balls, n_samples, seed, threads)
    sub_batch = sample_covariance(sub, [balls[i] for i in subset], n_samples, seed, threads)
    e_full = empirical_covariance(full_batch.columns(subset)).entries
    e_sub = empirical_covariance(sub_batch).entries
    se = clt_bound(block, n_samples, k=1.0) * math.sqrt(2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, np.abs(e_full - e_sub) / se, 0.0)
    zmax = float(z.max())
    return ConsistencyReport(subset=subset, exact_equal=exact,
                             max_abs_entry_diff=float(np.abs(sub.entries - block).max()),
                             max_zscore=zmax, passed=exact and zmax <= 5.0)


def characteristic_check(batch: SampleBatch, cov: np.ndarray, coefficients) -> tuple[np.ndarray, float]:
    """Deviation |mean exp(i l.X) - exp(-l^T C l / 2)| for each coefficient
    row, and the 5/sqrt(N) acceptance bound."""
    lam = np.atleast_2d(np.asarray(coefficients, dtype=float))
    phase = batch.values @ lam.T
    emp = np.exp(1j * phase).mean(axis=0)
    exact = np.exp(-0.5 * np.einsum("ki,ij,kj->k", lam, cov, lam))
    return np.abs(emp - exact), 5.0 / math.sqrt(batch.n_samples)

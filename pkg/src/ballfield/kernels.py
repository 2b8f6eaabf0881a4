"""Covariance kernels of ball-indexed fields.

For a bounded positive operator A with radial Fourier multiplier m(|k|) the
kernel between balls b(x, r) and b(y, s) is

    K = <v_r 1_b(x,r), A v_s 1_b(y,s)>
      = (2 pi)^-d |S^(d-1)| int_0^inf m(p) L_{d/2}(r p) L_{d/2}(s p) L_{d/2-1}(|x-y| p) p^(d-1) dp

where v_r is the reciprocal ball volume and L_nu(z) = Gamma(nu+1) (2/z)^nu J_nu(z)
is the Bessel function normalized to L_nu(0) = 1. The white-noise and
Brownian-sheet kernels are evaluated from exact intersection volumes instead.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import gammaln, jv, kv, spherical_jn

from . import _quadrature
from .covariance import CovarianceMatrix
from .errors import DomainError, NumericalError
from .geometry import Ball, ball_volume, centers_and_radii, lens_volume

__all__ = [
    "W",
    "White",
    "FreeField",
    "Spectral",
    "QuadratureConfig",
    "KernelView",
    "eval_kernel",
    "kernel_entries",
    "pseudo_metric",
    "kernel_matrix",
    "pushforward_kernel",
    "normalized_bessel",
    "pair_distances",
    "kernel_from_dict",
    "yukawa_green_3d",
    "free_green",
    "cross_kernel",
    "shifted_free_field",
    "DEFAULT_QUADRATURE",
    "KernelSpec",
]


# --- kernel specifications -------------------------------------------------

@dataclass(frozen=True)
class W:
    """Brownian sheet indexed by balls: K = vol(b1 cap b2)."""
    name = "W"

    def params(self):
        return {}


@dataclass(frozen=True)
class White:
    """Mollified white noise, A = I: K = v_r v_s vol(b1 cap b2)."""
    name = "white"

    def params(self):
        return {}


@dataclass(frozen=True)
class FreeField:
    """Mollified free field, A = (-Laplacian + mass^2)^-1."""
    mass: float = 1.0
    name = "free"

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError(f"free-field mass must be positive, got {self.mass}")

    def params(self):
        return {"mass": self.mass}

    def multiplier(self, rho):
        return 1.0 / (rho * rho + self.mass * self.mass)

    @property
    def tail_value(self):
        return 0.0

    @property
    def decay(self):
        # 1/(p^2 + m^2) <= p^-2 everywhere
        return 1.0, 2.0, 0.0


@dataclass(frozen=True)
class Spectral:
    """General radial multiplier m(p) with lower <= m <= upper.

    The constant ``tail_value`` = lim m(p) is handled exactly through the
    white-noise kernel; the remainder must satisfy
    |m(p) - tail_value| <= M p^-power for p >= start, where
    ``decay = (M, power, start)``. Fourier integrals converge slowly when
    ``power`` is 0, so a decaying remainder is strongly preferred.
    """
    multiplier_fn: Callable[[np.ndarray], np.ndarray]
    lower: float
    upper: float
    tail_value: float = 0.0
    decay: Optional[tuple] = None
    label: str = "spectral"
    name = "spectral"

    def __post_init__(self):
        if not (0 < self.lower <= self.upper < math.inf):
            raise DomainError("spectral multiplier needs 0 < lower <= upper < inf")
        if not (self.lower <= self.tail_value <= self.upper or self.tail_value == 0.0):
            raise DomainError("tail_value must lie in [lower, upper] (or be 0)")
        if self.decay is None:
            bound = max(abs(self.upper - self.tail_value), abs(self.lower - self.tail_value))
            object.__setattr__(self, "decay", (bound, 0.0, 0.0))

    def params(self):
        return {"label": self.label, "lower": self.lower, "upper": self.upper,
                "tail_value": self.tail_value, "decay": list(self.decay)}

    def multiplier(self, rho):
        return self.multiplier_fn(rho)


KernelSpec = Union[W, White, FreeField, Spectral]


def shifted_free_field(mass: float = 1.0, floor: float = 0.5) -> Spectral:
    """Multiplier floor + 1/(p^2 + mass^2): the free field plus a white-noise
    component, so the operator is bounded below by ``floor``."""
    if not (mass > 0 and floor > 0):
        raise DomainError("shifted free field needs mass > 0 and floor > 0")
    m2 = mass * mass
    return Spectral(lambda rho: floor + 1.0 / (rho * rho + m2), floor, floor + 1.0 / m2,
                    tail_value=floor, decay=(1.0, 2.0, 0.0), label=f"shifted_free(m={mass},floor={floor})")


def kernel_from_dict(cfg: dict) -> KernelSpec:
    """Build a catalogue kernel from ``{"name": ..., "mass": ...}``."""
    name = str(cfg.get("name", "white")).lower()
    if name == "w":
        return W()
    if name == "white":
        return White()
    if name in ("free", "freefield", "free_field"):
        return FreeField(float(cfg.get("mass", 1.0)))
    if name == "shifted_free":
        return shifted_free_field(float(cfg.get("mass", 1.0)), float(cfg.get("floor", 0.5)))
    raise DomainError(f"unknown kernel {name!r}; expected one of W, white, free, shifted_free")


@dataclass(frozen=True)
class QuadratureConfig:
    rtol: float = 1e-8
    atol: float = 1e-12
    max_panels: int = 20000
    # share of atol given to the truncated tail
    tail_fraction: float = 0.5

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_panels < 1:
            raise DomainError("max_panels must be >= 1")
        if not 0 < self.tail_fraction < 1:
            raise DomainError("tail_fraction must be in (0, 1)")

    def as_dict(self):
        return {"rtol": self.rtol, "atol": self.atol, "max_panels": self.max_panels,
                "tail_fraction": self.tail_fraction}


DEFAULT_QUADRATURE = QuadratureConfig()


# --- Bessel helpers --------------------------------------------------------

def _double_factorial_odd(n):
    return math.prod(range(1, 2 * n + 2, 2))


def normalized_bessel(nu: float, x) -> np.ndarray:
    """Gamma(nu+1) (2/x)^nu J_nu(x), equal to 1 at x = 0 (nu >= -1/2)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    small = x < 2.0
    if np.any(small):
        xs = x[small]
        q = -0.25 * xs * xs
        term = np.ones(xs.shape)
        acc = np.ones(xs.shape)
        for k in range(1, 21):
            term = term * q / (k * (nu + k))
            acc = acc + term
        out[small] = acc
    big = ~small
    if np.any(big):
        xb = x[big]
        if nu == -0.5:
            out[big] = np.cos(xb)
        elif nu > 0 and float(nu - 0.5).is_integer():
            n = int(nu - 0.5)
            out[big] = _double_factorial_odd(n) * spherical_jn(n, xb) / xb**n
        else:
            out[big] = np.exp(gammaln(nu + 1.0) + nu * np.log(2.0 / xb)) * jv(nu, xb)
    return out


_KAPPA = math.sqrt(2.0 / math.pi) * (4.0 / 3.0) ** 0.25


def _bessel_envelope(nu):
    """(C, x0) with |L_nu(x)| <= C x^-(nu+1/2) for x >= x0."""
    if nu <= 0.5:
        return math.exp(gammaln(nu + 1.0)) * 2.0**nu * math.sqrt(2.0 / math.pi), 0.0
    # |J_nu(x)|^2 <= 2 / (pi sqrt(x^2 - nu^2)); x >= 2 nu gives the 4/3 factor
    return math.exp(gammaln(nu + 1.0)) * 2.0**nu * _KAPPA, 2.0 * nu


def pair_distances(centers_a, centers_b=None):
    """Euclidean distances, summed coordinate by coordinate so that every
    entry is an elementwise function of its two centers."""
    a = np.asarray(centers_a, dtype=float)
    b = a if centers_b is None else np.asarray(centers_b, dtype=float)
    acc = np.zeros((a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        diff = a[:, k][:, None] - b[:, k][None, :]
        acc += diff * diff
    return np.sqrt(acc)


# --- Fourier evaluation ----------------------------------------------------

def _truncation(d, r, s, u, decay, budget):
    """Truncation radius and rigorous tail bound for one integrand."""
    amp, power, start = decay
    a, b = 0.5 * d, 0.5 * d - 1.0
    ca, xa = _bessel_envelope(a)
    c_d = math.exp(-d * math.log(2 * math.pi) + math.log(2.0) + 0.5 * d * math.log(math.pi)
                   - gammaln(0.5 * d))
    coef = 2.0 * c_d * amp * ca * r ** (-a - 0.5) * ca * s ** (-a - 0.5)
    q = power + 2.0
    lo = max(start, xa / r, xa / s, 1e-300)
    if u > 0:
        cb, xb = _bessel_envelope(b)
        coef *= cb * u ** (-b - 0.5)
        q += 0.5 * (d - 1)
        lo = max(lo, xb / u)
    if amp == 0:
        return lo, 0.0
    upper = max(lo, (coef / ((q - 1.0) * budget)) ** (1.0 / (q - 1.0)))
    tail = coef * upper ** (1.0 - q) / (q - 1.0)
    return upper, tail


def _fourier_integrals(d, multiplier, decay, r, s, u, q: QuadratureConfig, upper=None):
    """Radial Fourier integrals for arrays of (r, s, u) triples.

    Returns (values, error estimates, tail bounds). ``upper`` overrides the
    truncation radius (used only for oracle cross-checks).
    """
    r, s, u = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (r, s, u))
    keys, inverse = np.unique(np.stack([r, s, u], axis=1), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    if len(keys) < r.size:
        vals, errs, tails = _fourier_integrals(d, multiplier, decay, keys[:, 0], keys[:, 1], keys[:, 2],
                                               q, upper)
        return vals[inverse], errs[inverse], tails[inverse]
    m = r.size
    a, b = 0.5 * d, 0.5 * d - 1.0
    c_d = math.exp(-d * math.log(2 * math.pi) + math.log(2.0) + 0.5 * d * math.log(math.pi)
                   - gammaln(0.5 * d))
    budget = q.tail_fraction * q.atol
    edges, tails = [], np.zeros(m)
    for i in range(m):
        if upper is None:
            top, tails[i] = _truncation(d, r[i], s[i], u[i], decay, budget)
        else:
            top = float(upper)
        scale = 1.0 / max(r[i], s[i], u[i])
        edges.append(_quadrature.initial_edges(top, scale))

    def integrand(x, idx):
        val = multiplier(x) * normalized_bessel(a, r[idx] * x) * normalized_bessel(a, s[idx] * x)
        ui = u[idx]
        off = ui > 0
        if np.any(off):
            val[off] = val[off] * normalized_bessel(b, ui[off] * x[off])
        return c_d * val * x ** (d - 1)

    epsabs = (1.0 - q.tail_fraction) * q.atol
    values, errors, _, ok = _quadrature.integrate_batch(integrand, edges, epsabs, q.rtol, q.max_panels)
    if not np.all(ok):
        i = int(np.flatnonzero(~ok)[0])
        raise NumericalError(
            f"quadrature did not converge within {q.max_panels} panels "
            f"(r={r[i]}, s={s[i]}, |x-y|={u[i]}); error estimate {errors[i]:.3e}",
            estimate=float(errors[i]))
    return values, errors, tails


def _white_values(d, r, s, u):
    inter = lens_volume(d, r, s, u)
    return np.atleast_1d(inter / ball_volume(d, r) / ball_volume(d, s))


def kernel_entries(spec: KernelSpec, d: int, r, s, u, q: QuadratureConfig = DEFAULT_QUADRATURE):
    """Kernel values for arrays of radii ``r, s`` and center distances ``u``.

    Returns (values, error estimates, tail bounds). Each value depends only
    on its own (r, s, u) triple.
    """
    r, s, u = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in (r, s, u)))
    # canonical order makes K(b1, b2) and K(b2, b1) bitwise equal
    r, s = np.minimum(r, s), np.maximum(r, s)
    zeros = np.zeros(r.shape)
    if isinstance(spec, W):
        return np.atleast_1d(lens_volume(d, r, s, u)), zeros, zeros
    if isinstance(spec, White):
        return _white_values(d, r, s, u), zeros, zeros
    if isinstance(spec, FreeField):
        return _fourier_integrals(d, spec.multiplier, spec.decay, r, s, u, q)
    if isinstance(spec, Spectral):
        tv = spec.tail_value

        def residual(rho):
            return spec.multiplier(rho) - tv
        vals, errs, tails = _fourier_integrals(d, residual, spec.decay, r, s, u, q)
        if tv != 0.0:
            vals = vals + tv * _white_values(d, r, s, u)
        return vals, errs, tails
    raise DomainError(f"unknown kernel spec {spec!r}")


# --- public operations ----------------------------------------------------

class KernelView:
    """A kernel pulled back along a ball map psi: K'(b1, b2) = K(psi b1, psi b2)."""

    def __init__(self, spec, psi: Callable[[Ball], Ball]):
        self.spec = spec
        self.psi = psi

    @property
    def name(self):
        return f"pushforward({self.spec.name})"

    def params(self):
        return dict(self.spec.params())


def pushforward_kernel(spec, psi: Callable[[Ball], Ball]) -> KernelView:
    return KernelView(spec, psi)


def _check_pair(b1, b2):
    if b1.dim != b2.dim:
        raise DomainError(f"dimension mismatch: {b1.dim} vs {b2.dim}")


def eval_kernel(spec, b1: Ball, b2: Ball, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    if isinstance(spec, KernelView):
        return eval_kernel(spec.spec, spec.psi(b1), spec.psi(b2), q)
    _check_pair(b1, b2)
    u = pair_distances([b1.center], [b2.center])[0, 0]
    vals, _, _ = kernel_entries(spec, b1.dim, b1.radius, b2.radius, u, q)
    return float(vals[0])


def pseudo_metric(spec, b1: Ball, b2: Ball, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Canonical pseudo-metric sqrt(K11 + K22 - 2 K12), clamped at zero."""
    k11 = eval_kernel(spec, b1, b1, q)
    k22 = eval_kernel(spec, b2, b2, q)
    k12 = eval_kernel(spec, b1, b2, q)
    return math.sqrt(max(0.0, k11 + k22 - 2.0 * k12))


def _unique_triples(radii, dist):
    n = len(radii)
    iu, ju = np.triu_indices(n)
    ri, rj = radii[iu], radii[ju]
    lo, hi = np.minimum(ri, rj), np.maximum(ri, rj)
    keys = np.stack([lo, hi, dist[iu, ju]], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    return iu, ju, uniq, inverse.reshape(-1)


def kernel_matrix(spec, balls: Sequence[Ball], q: QuadratureConfig = DEFAULT_QUADRATURE,
                  threads: int = 1) -> CovarianceMatrix:
    """Assemble K(b_i, b_j) over the configuration, mirroring i <= j.

    Identical (r, s, |x-y|) triples are evaluated once. With ``threads > 1``
    the distinct triples are split across workers; each value is computed
    independently, so the result does not depend on the thread count.
    """
    if isinstance(spec, KernelView):
        mat = kernel_matrix(spec.spec, [spec.psi(b) for b in balls], q, threads)
        mat.kernel = spec.name
        return mat
    balls = list(balls)
    if not balls:
        raise DomainError("kernel_matrix needs at least one ball")
    centers, radii = centers_and_radii(balls)
    d = centers.shape[1]
    dist = pair_distances(centers)
    iu, ju, uniq, inverse = _unique_triples(radii, dist)

    if threads > 1 and len(uniq) > 1:
        chunks = np.array_split(np.arange(len(uniq)), min(threads, len(uniq)))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda idx: kernel_entries(spec, d, uniq[idx, 0], uniq[idx, 1], uniq[idx, 2], q), chunks))
        vals = np.concatenate([p[0] for p in parts])
        errs = np.concatenate([p[1] for p in parts])
        tails = np.concatenate([p[2] for p in parts])
    else:
        vals, errs, tails = kernel_entries(spec, d, uniq[:, 0], uniq[:, 1], uniq[:, 2], q)

    entries = np.zeros((len(balls), len(balls)))
    entries[iu, ju] = vals[inverse]
    entries[ju, iu] = vals[inverse]
    fourier = isinstance(spec, (FreeField, Spectral))
    return CovarianceMatrix(
        entries=entries, dim=d, kernel=spec.name, params=spec.params(),
        max_error_estimate=float(errs.max()) if errs.size else 0.0,
        tail_bound=float(tails.max()) if tails.size else 0.0,
        quadrature=q.as_dict() if fourier else {},
    )


def cross_kernel(spec, balls_a: Sequence[Ball], balls_b: Sequence[Ball],
                 q: QuadratureConfig = DEFAULT_QUADRATURE) -> tuple[np.ndarray, float]:
    """Rectangular matrix K(a_i, b_j) and its largest quadrature error estimate."""
    if isinstance(spec, KernelView):
        return cross_kernel(spec.spec, [spec.psi(b) for b in balls_a], [spec.psi(b) for b in balls_b], q)
    ca, ra = centers_and_radii(list(balls_a))
    cb, rb = centers_and_radii(list(balls_b))
    if ca.shape[1] != cb.shape[1]:
        raise DomainError("dimension mismatch between configurations")
    dist = pair_distances(ca, cb)
    r = np.broadcast_to(ra[:, None], dist.shape).ravel()
    s = np.broadcast_to(rb[None, :], dist.shape).ravel()
    vals, errs, _ = kernel_entries(spec, ca.shape[1], r, s, dist.ravel(), q)
    return vals.reshape(dist.shape), float(errs.max()) if errs.size else 0.0


def yukawa_green_3d(dist, mass=1.0):
    """Position-space kernel of (-Laplacian + m^2)^-1 in three dimensions."""
    dist = np.asarray(dist, dtype=float)
    return np.exp(-mass * dist) / (4.0 * math.pi * dist)


def free_green(d: int, dist, mass=1.0):
    """Position-space kernel of (-Laplacian + m^2)^-1 in R^d, dist > 0:
    (2 pi)^(-d/2) (m/u)^(d/2 - 1) K_{d/2-1}(m u)."""
    u = np.asarray(dist, dtype=float)
    nu = 0.5 * d - 1.0
    return (2.0 * math.pi) ** (-0.5 * d) * (mass / u) ** nu * kv(nu, mass * u)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jv

from ballfield import kernels as k
from ballfield.errors import DomainError, NumericalError
from ballfield.geometry import Ball, EuclideanMotion, apply_motion, ball_volume, random_balls
from oracles import free_disjoint, free_overlap_3d

FREE = k.FreeField()

# FreeField m = 1, d = 3: (r, s, |x-y|) -> value from the position-space oracle
FROZEN_3D = {
    (0.5, 0.5, 0.0): 0.12844775714577833,
    (0.3, 0.7, 0.2): 0.09917669501996576,
    (0.5, 0.4, 0.6): 0.07206129242765774,
    (1.0, 0.2, 0.0): 0.06237931762312293,
    (0.3, 0.5, 1.0): 0.030284343465158778,
    (0.2, 0.1, 3.0): 0.0013272595359947348,
}


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.5])
def test_normalized_bessel(nu):
    x = np.concatenate([[0.0], np.geomspace(1e-6, 200, 400)])
    got = k.normalized_bessel(nu, x)
    assert got[0] == 1.0
    xs = x[1:]
    ref = math.gamma(nu + 1) * (2 / xs) ** nu * jv(nu, xs)
    np.testing.assert_allclose(got[1:], ref, rtol=1e-11, atol=1e-14)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5, 2.0, 2.5])
def test_bessel_envelope_holds(nu):
    c, x0 = k._bessel_envelope(nu)
    x = np.linspace(max(x0, 1e-3), 400, 200_001)
    bound = c * x ** (-(nu + 0.5))
    assert np.all(np.abs(k.normalized_bessel(nu, x)) <= bound * (1 + 1e-12))


@pytest.mark.parametrize("r, s, u", list(FROZEN_3D))
def test_free_field_3d_frozen(r, s, u):
    val = k.kernel_entries(FREE, 3, r, s, u)[0][0]
    assert val == pytest.approx(FROZEN_3D[(r, s, u)], rel=1e-12)


@pytest.mark.parametrize("r, s, u", [(0.5, 0.5, 0.0), (0.3, 0.7, 0.2), (0.5, 0.4, 0.6), (1.0, 0.2, 0.0)])
def test_free_field_3d_position_space_oracle(r, s, u):
    val = k.kernel_entries(FREE, 3, r, s, u)[0][0]
    assert val == pytest.approx(free_overlap_3d(r, s, u), rel=2e-9)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("r, s, u, m", [(0.3, 0.5, 1.0, 1.0), (0.1, 0.1, 0.5, 2.0), (0.4, 0.2, 2.5, 0.5)])
def test_free_field_disjoint_closed_form(d, r, s, u, m):
    val = k.kernel_entries(k.FreeField(m), d, r, s, u)[0][0]
    assert val == pytest.approx(free_disjoint(d, r, s, u, m), rel=1e-8)


def test_small_radius_limit_is_green_function():
    val = k.eval_kernel(FREE, Ball((0, 0, 0), 2**-6), Ball((1, 0, 0), 2**-6))
    green = math.exp(-1) / (4 * math.pi)
    assert abs(val - green) <= 0.02 * green
    assert k.free_green(3, 1.0) == pytest.approx(green, rel=1e-14)


def test_white_and_w():
    b1, b2 = Ball((0, 0), 0.5), Ball((0.4, 0.1), 0.3)
    w = k.eval_kernel(k.W(), b1, b2)
    assert k.eval_kernel(k.White(), b1, b2) == pytest.approx(
        w / ball_volume(2, 0.5) / ball_volume(2, 0.3), rel=1e-14)
    # disjoint supports give exactly zero
    assert k.eval_kernel(k.White(), Ball((0, 0), 0.4), Ball((1, 0), 0.4)) == 0.0


def test_spectral_constant_multiplier_is_white():
    spec = k.Spectral(lambda rho: np.full_like(rho, 2.0), 2.0, 2.0, tail_value=2.0, decay=(0.0, 2.0, 0.0))
    b1, b2 = Ball((0, 0, 0), 0.5), Ball((0.3, 0, 0), 0.4)
    assert k.eval_kernel(spec, b1, b2) == 2.0 * k.eval_kernel(k.White(), b1, b2)


def test_spectral_free_matches_free_field():
    spec = k.Spectral(FREE.multiplier, 1e-9, 1.0, decay=(1.0, 2.0, 0.0))
    b1, b2 = Ball((0, 0, 0), 0.5), Ball((0.3, 0.1, 0), 0.4)
    assert k.eval_kernel(spec, b1, b2) == pytest.approx(k.eval_kernel(FREE, b1, b2), rel=1e-12)


def test_kernel_matrix_matches_eval_kernel_bitwise():
    rng = np.random.default_rng(0)
    balls = random_balls(6, 2, rng)
    for spec in (k.White(), FREE):
        mat = k.kernel_matrix(spec, balls).entries
        for i in range(6):
            for j in range(6):
                assert mat[i, j] == k.eval_kernel(spec, balls[i], balls[j])


def test_kernel_matrix_threads_bitwise():
    rng = np.random.default_rng(3)
    balls = random_balls(12, 3, rng, box=(0, 2))
    one = k.kernel_matrix(FREE, balls, threads=1).entries
    four = k.kernel_matrix(FREE, balls, threads=4).entries
    assert np.array_equal(one, four)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 3]))
def test_symmetry(seed, d):
    rng = np.random.default_rng(seed)
    b1, b2 = random_balls(2, d, rng)
    for spec in (k.White(), FREE):
        assert k.eval_kernel(spec, b1, b2) == k.eval_kernel(spec, b2, b1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_free_field_invariance(seed):
    rng = np.random.default_rng(seed)
    b1, b2 = random_balls(2, 3, rng, box=(0, 2))
    g = EuclideanMotion.random(3, rng, scale=2.0)
    base = k.eval_kernel(FREE, b1, b2)
    moved = k.eval_kernel(FREE, apply_motion(g, b1), apply_motion(g, b2))
    assert abs(moved - base) <= 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_pseudo_metric_triangle(seed):
    rng = np.random.default_rng(seed)
    b = random_balls(3, 2, rng)
    for spec in (k.White(), FREE):
        d01 = k.pseudo_metric(spec, b[0], b[1])
        d12 = k.pseudo_metric(spec, b[1], b[2])
        d02 = k.pseudo_metric(spec, b[0], b[2])
        assert d02 <= d01 + d12 + 1e-7


def test_spectral_sandwich():
    lower, upper = 0.5, 1.5
    spec = k.shifted_free_field(1.0, lower)
    rng = np.random.default_rng(11)
    for d in (2, 3):
        balls = random_balls(12, d, rng, box=(0, 1.5), radius_range=(0.1, 0.6))
        kmat = k.kernel_matrix(spec, balls).entries
        wmat = k.kernel_matrix(k.White(), balls).entries
        assert np.linalg.eigvalsh(kmat - lower * wmat)[0] >= -1e-8
        assert np.linalg.eigvalsh(upper * wmat - kmat)[0] >= -1e-8


def test_pushforward_equals_direct():
    rng = np.random.default_rng(2)
    balls = random_balls(8, 2, rng)
    g = EuclideanMotion.random(2, rng)

    def psi(b):
        return Ball(apply_motion(g, b).center, 1.5 * b.radius)

    for spec in (k.White(), FREE):
        view = k.pushforward_kernel(spec, psi)
        assert np.array_equal(k.kernel_matrix(view, balls).entries,
                              k.kernel_matrix(spec, [psi(b) for b in balls]).entries)


def test_cross_kernel_block():
    rng = np.random.default_rng(6)
    balls = random_balls(5, 2, rng)
    full = k.kernel_matrix(FREE, balls).entries
    block, err = k.cross_kernel(FREE, balls[:2], balls[2:])
    assert np.array_equal(block, full[:2, 2:])
    assert err >= 0


def test_tail_bound_respects_budget():
    rng = np.random.default_rng(9)
    q = k.QuadratureConfig(atol=1e-10)
    cov = k.kernel_matrix(FREE, random_balls(6, 2, rng), q)
    assert cov.tail_bound <= q.tail_fraction * q.atol * (1 + 1e-12)


def test_nonconvergence_raises():
    q = k.QuadratureConfig(rtol=1e-15, atol=1e-300, max_panels=2)
    with pytest.raises(NumericalError) as exc:
        k.eval_kernel(FREE, Ball((0, 0), 0.3), Ball((1, 0), 0.2), q)
    assert exc.value.estimate > 0


def test_errors():
    with pytest.raises(DomainError):
        k.FreeField(0.0)
    with pytest.raises(DomainError):
        k.QuadratureConfig(rtol=0)
    with pytest.raises(DomainError):
        k.kernel_matrix(k.White(), [])
    with pytest.raises(DomainError):
        k.eval_kernel(k.White(), Ball((0, 0), 1), Ball((0, 0, 0), 1))
    with pytest.raises(DomainError):
        k.kernel_from_dict({"name": "nope"})


def test_kernel_from_dict():
    assert k.kernel_from_dict({"name": "free", "mass": 2.0}) == k.FreeField(2.0)
    assert isinstance(k.kernel_from_dict({"name": "W"}), k.W)
    assert k.kernel_from_dict({"name": "shifted_free"}).lower == 0.5

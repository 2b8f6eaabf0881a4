import numpy as np
import pytest

from ballfield import axioms as ax
from ballfield.errors import PreconditionError
from ballfield.gaussian import sample
from ballfield.geometry import (Ball, Box, EuclideanMotion, HalfSpace, TimeZeroSlab, random_balls,
                                theta)
from ballfield.kernels import W, FreeField, White, cross_kernel
from ballfield.transform import Transform, apply_transform


def _future(n, d, seed):
    return random_balls(n, d, np.random.default_rng(seed), box=(0, 2), radius_range=(0.1, 0.5),
                        positive_time=True)


@pytest.mark.parametrize("spec", [White(), W(), FreeField()])
@pytest.mark.parametrize("d", [2, 3])
def test_kernel_rp_passes(spec, d):
    rep = ax.rp_kernel_check(spec, _future(8, d, d))
    assert rep.passed and rep.kind == "kernel_theta"
    assert rep.witness is None


def test_kernel_rp_precondition_names_ball():
    balls = _future(4, 2, 0) + [Ball((0.05, 0.0), 0.1)]
    with pytest.raises(PreconditionError) as exc:
        ax.rp_kernel_check(White(), balls)
    assert exc.value.index == 4


def test_reflected_matrix_is_symmetric():
    balls = _future(6, 3, 1)
    mat, _ = cross_kernel(FreeField(), balls, [theta(b) for b in balls])
    np.testing.assert_allclose(mat, mat.T, rtol=1e-10, atol=1e-13)


def test_theta_fixed_configuration():
    balls = [Ball((0.0, x), 0.2) for x in (0.0, 0.3, 0.9)]
    assert ax.theta_fixed_check(FreeField(), balls)
    with pytest.raises(PreconditionError):
        ax.theta_fixed_check(White(), [Ball((0.1, 0.0), 0.2)])


def test_failure_reports_witness():
    rep = ax._psd_report("kernel_theta", np.array([[1.0, 2.0], [2.0, 1.0]]), 1e-10)
    assert not rep.passed and rep.min_eigenvalue == pytest.approx(-1.0)
    w = np.array(rep.witness)
    assert abs(abs(w[0]) - abs(w[1])) < 1e-12 and w[0] * w[1] < 0
    assert "witness" in rep.to_dict()


@pytest.mark.parametrize("spec", [White(), FreeField()])
def test_gaussian_closed_form(spec):
    balls = _future(5, 2, 4)
    fs = [ax.Functional.single(i) for i in range(5)] + [ax.Functional(((0, 1.0), (3, -0.5)))]
    rep = ax.rp_gaussian_check(spec, fs, balls)
    assert rep.passed
    assert np.all(np.diag(rep.matrix) <= 1.0 + 1e-12)


def test_monte_carlo_matches_closed_form():
    balls = _future(4, 2, 7)
    fs = [ax.Functional.single(i) for i in range(4)]
    batch = sample(FreeField(), ax.reflected_configuration(balls), 50_000, seed=2)
    mc = ax.rp_monte_carlo_check(batch, fs, n_boot=200, seed=1)
    exact = ax.rp_gaussian_check(FreeField(), fs, balls)
    assert mc.passed
    assert np.all(np.abs(mc.matrix - exact.matrix) <= 5 * mc.entry_stderr)


@pytest.mark.parametrize("phi", [Transform.tanh(), Transform.cube()])
def test_monte_carlo_transformed(phi):
    balls = _future(4, 3, 8)
    fs = [ax.Functional.single(i) for i in range(4)]
    batch = apply_transform(phi, sample(White(), ax.reflected_configuration(balls), 20_000, seed=3))
    assert ax.rp_monte_carlo_check(batch, fs, n_boot=200).passed


def test_monte_carlo_requires_reflections_and_samples():
    balls = _future(3, 2, 9)
    batch = sample(White(), balls, 2000, seed=0)
    with pytest.raises(PreconditionError):
        ax.rp_monte_carlo_check(batch, [ax.Functional.single(0)])
    small = sample(White(), ax.reflected_configuration(balls), 10, seed=0)
    with pytest.raises(PreconditionError):
        ax.rp_monte_carlo_check(small, [ax.Functional.single(0)])


def test_report_dict_keys():
    rep = ax.rp_kernel_check(White(), _future(3, 2, 1))
    assert set(rep.to_dict()) == {"kind", "n", "min_eigenvalue", "tolerance", "pass"}


def test_invariance():
    rng = np.random.default_rng(5)
    balls = random_balls(10, 2, rng)
    motions = [EuclideanMotion.random(2, rng, 2.0) for _ in range(5)]
    assert ax.invariance_check(White(), motions, balls) <= 1e-12
    assert ax.invariance_check(FreeField(), motions, balls) <= 1e-6


def test_index_monotonicity():
    rng = np.random.default_rng(6)
    pool = random_balls(400, 2, rng, box=(-2, 2), radius_range=(0.05, 1.0))
    shifts = [EuclideanMotion.shift(rng.normal(size=2)) for _ in range(3)]
    rep = ax.index_monotonicity_check(HalfSpace.future(2, 0.5), HalfSpace.future(2), pool, shifts)
    assert rep.passed and rep.strict
    rep = ax.index_monotonicity_check(Box((0, 0), (1, 1)), Box((-1, -1), (2, 2)), pool, shifts)
    assert rep.passed
    slab = ax.index_monotonicity_check(TimeZeroSlab((0.0,), (0.5,)), TimeZeroSlab((-1.0,), (1.0,)),
                                       pool + [Ball((0.0, 0.2), 0.5)])
    assert slab.passed and slab.inner_count == 1
    with pytest.raises(PreconditionError):
        ax.index_monotonicity_check(HalfSpace.future(2), HalfSpace.future(2, 1.0), pool)

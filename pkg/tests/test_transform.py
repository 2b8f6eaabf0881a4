import math

import numpy as np
import pytest
from scipy import integrate, stats

from ballfield.axioms import Functional
from ballfield.errors import DomainError, PreconditionError
from ballfield.gaussian import sample
from ballfield.geometry import Ball
from ballfield.kernels import White, kernel_matrix
from ballfield.transform import (Transform, apply_transform, empirical_char_functional, read_knots_csv,
                                 sample_transformed)

BALLS = [Ball((0.0, 0.0), 0.5), Ball((0.3, 0.2), 0.4), Ball((1.0, 0.5), 0.3)]


def _gauss_moment(f, sigma):
    val, _ = integrate.quad(lambda x: f(x) * stats.norm.pdf(x, scale=sigma), -12 * sigma, 12 * sigma,
                            epsabs=1e-13, limit=200)
    return val


def test_identity_is_noop():
    batch = sample(White(), BALLS, 100, seed=1)
    out = apply_transform(Transform.identity(), batch)
    assert np.array_equal(out.values, batch.values)
    assert out.transforms == [{"name": "identity"}]


def test_tanh_second_moment_against_quadrature():
    batch = sample_transformed(White(), Transform.tanh(), BALLS, 100_000, seed=4)
    var = np.diag(kernel_matrix(White(), BALLS).entries)
    for j, v in enumerate(var):
        sigma = math.sqrt(v)
        exact = _gauss_moment(lambda x: math.tanh(x) ** 2, sigma)
        col = batch.values[:, j] ** 2
        assert abs(col.mean() - exact) <= 5 * col.std() / math.sqrt(len(col))


def test_tanh_of_standard_normal():
    # E tanh(Z)^2 for a standard normal, independent of the field
    assert _gauss_moment(lambda x: math.tanh(x) ** 2, 1.0) == pytest.approx(0.3942, abs=1e-4)


def test_cube_second_moment():
    balls = [Ball((0.0, 0.0), 0.6)]
    sigma2 = kernel_matrix(White(), balls).entries[0, 0]
    batch = sample_transformed(White(), Transform.cube(), balls, 200_000, seed=2)
    col = batch.values[:, 0] ** 2
    # E X^6 = 15 sigma^6
    assert abs(col.mean() - 15 * sigma2**3) <= 5 * col.std() / math.sqrt(len(col))


def test_clip_zero_gives_zero_batch():
    batch = sample_transformed(White(), Transform.clip(0.0), BALLS, 50, seed=0)
    assert np.all(batch.values == 0.0)


def test_table_interpolation_and_extrapolation():
    phi = Transform.table([-1.0, 0.0, 2.0], [-2.0, 0.0, 1.0])
    vals, flag = phi.evaluate(np.array([-0.5, 1.0, 2.0]))
    np.testing.assert_allclose(vals, [-1.0, 0.5, 1.0])
    assert not flag
    vals, flag = phi.evaluate(np.array([-2.0, 4.0]))
    np.testing.assert_allclose(vals, [-4.0, 2.0])
    assert flag
    batch = apply_transform(phi, sample(White(), BALLS, 2000, seed=0))
    assert batch.flags == ["extrapolated:0"]


def test_table_validation():
    with pytest.raises(DomainError):
        Transform.table([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        Transform.table([0.0], [1.0])
    with pytest.raises(DomainError):
        Transform("power", power=2)
    with pytest.raises(DomainError):
        Transform("nope")


def test_from_dict_round_trip(tmp_path):
    for phi in (Transform.tanh(), Transform.cube(), Transform.clip(2.0), Transform.table([0, 1], [1, 3])):
        assert Transform.from_dict(phi.to_dict()) == phi
    knots = tmp_path / "k.csv"
    knots.write_text("x,y\n-1,-1\n0,0\n1,3\n")
    assert read_knots_csv(knots) == ([-1.0, 0.0, 1.0], [-1.0, 0.0, 3.0])
    assert Transform.from_dict({"name": "table", "knots_csv": str(knots)}).knots_y == (-1.0, 0.0, 3.0)
    assert Transform.from_dict("x3") == Transform.cube()


def test_char_functional():
    batch = sample(White(), BALLS, 20_000, seed=9)
    cov = kernel_matrix(White(), BALLS).entries
    fs = [Functional(()), Functional.single(0, 0.3), Functional(((1, 0.2), (2, -0.1)))]
    est, se = empirical_char_functional(batch, fs, n_boot=200)
    assert est[0] == 1.0
    lam = np.array([[0, 0, 0], [0.3, 0, 0], [0, 0.2, -0.1]])
    exact = np.exp(-0.5 * np.einsum("ki,ij,kj->k", lam, cov, lam))
    assert np.all(np.abs(est - exact) <= 5 * np.maximum(se, 1e-12))


def test_char_functional_needs_samples():
    with pytest.raises(PreconditionError):
        empirical_char_functional(sample(White(), BALLS, 10, seed=0), [Functional.single(0)])

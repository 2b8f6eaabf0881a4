import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballfield import geometry as g
from ballfield.errors import DomainError, UnsupportedError
from oracles import lens3, mc_intersection


def test_ball_validation():
    with pytest.raises(DomainError):
        g.Ball((0.0,), 0.0)
    with pytest.raises(DomainError):
        g.Ball((0.0, math.nan), 1.0)
    with pytest.raises(DomainError):
        g.Ball((), 1.0)
    b = g.Ball((1, 2), 3)
    assert b.dim == 2 and b.t == 1.0 and isinstance(b.center[0], float)


@pytest.mark.parametrize("d, expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3),
                                         (4, math.pi**2 / 2), (5, 8 * math.pi**2 / 15)])
def test_unit_ball_volume(d, expected):
    assert g.ball_volume(d, 1.0) == pytest.approx(expected, rel=1e-14)


def test_lens_unit_balls_at_unit_distance():
    # two unit 3-balls with centers 1 apart overlap in 5 pi / 12
    v = g.intersection_volume(g.Ball((0, 0, 0), 1), g.Ball((1, 0, 0), 1))
    assert v == pytest.approx(5 * math.pi / 12, rel=1e-13)


def test_disjoint_and_nested():
    assert g.intersection_volume(g.Ball((0, 0), 1), g.Ball((3, 0), 1)) == 0.0
    assert g.intersection_volume(g.Ball((0, 0), 1), g.Ball((2, 0), 1)) == 0.0
    small = g.Ball((0.2, 0.1), 0.3)
    assert g.intersection_volume(g.Ball((0, 0), 1), small) == g.ball_volume(2, 0.3)


def test_one_dimensional_is_interval_overlap():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, b = rng.uniform(-1, 1, 2)
        r, s = rng.uniform(0.1, 1, 2)
        expect = max(0.0, min(a + r, b + s) - max(a - r, b - s))
        assert g.intersection_volume(g.Ball((a,), r), g.Ball((b,), s)) == pytest.approx(expect, abs=1e-14)


def test_lens_closed_form_3d():
    rng = np.random.default_rng(2)
    for _ in range(200):
        r, s = rng.uniform(0.1, 1.0, 2)
        t = rng.uniform(0, r + s + 0.2)
        exact = lens3(r, s, t)
        got = float(g.lens_volume(3, r, s, t))
        assert got == pytest.approx(exact, rel=1e-10, abs=1e-300)


def test_d5_volume_by_monte_carlo():
    rng = np.random.default_rng(0)
    est, se = mc_intersection([0] * 5, 1.0, [0.7, 0, 0, 0, 0], 0.8, 400_000, rng)
    exact = float(g.lens_volume(5, 1.0, 0.8, 0.7))
    assert abs(est - exact) < 4 * se


def test_lens_vectorized_matches_scalar():
    r = np.array([0.3, 0.5, 1.0])
    s = np.array([0.4, 0.5, 0.2])
    u = np.array([0.5, 0.0, 0.9])
    vec = g.lens_volume(2, r, s, u)
    for i in range(3):
        assert vec[i] == g.lens_volume(2, r[i], s[i], u[i])


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 2), st.floats(0.05, 2), st.floats(0, 5), st.integers(1, 6))
def test_lens_symmetric_and_bounded(r, s, u, d):
    v = float(g.lens_volume(d, r, s, u))
    assert v == float(g.lens_volume(d, s, r, u))
    assert 0.0 <= v <= g.ball_volume(d, min(r, s)) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31))
def test_motion_preserves_intersection(d, seed):
    rng = np.random.default_rng(seed)
    b1, b2 = g.random_balls(2, d, rng, box=(-1, 1), radius_range=(0.2, 1.0))
    m = g.EuclideanMotion.random(d, rng, scale=3.0)
    before = g.intersection_volume(b1, b2)
    after = g.intersection_volume(g.apply_motion(m, b1), g.apply_motion(m, b2))
    assert abs(after - before) <= 1e-12 * max(1.0, before)


def test_motion_group_laws():
    rng = np.random.default_rng(8)
    a = g.EuclideanMotion.random(3, rng)
    b = g.EuclideanMotion.random(3, rng)
    x = rng.normal(size=3)
    np.testing.assert_allclose(a.compose(b).apply_point(x), a.apply_point(b.apply_point(x)), atol=1e-13)
    np.testing.assert_allclose(a.inverse().apply_point(a.apply_point(x)), x, atol=1e-13)
    with pytest.raises(DomainError):
        g.EuclideanMotion(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_theta_is_involution_and_negates_time():
    b = g.Ball((0.7, 0.2, -0.1), 0.4)
    tb = g.theta(b)
    assert tb.center == (-0.7, 0.2, -0.1) and tb.radius == 0.4
    assert g.theta(tb) == b
    r = g.EuclideanMotion.time_reflection(3)
    assert g.apply_motion(r, b) == tb


def test_half_space_membership_is_closed_at_boundary():
    fut = g.HalfSpace.future(2)
    assert g.region_contains_ball(fut, g.Ball((0.5, 0.0), 0.5))
    assert not g.region_contains_ball(fut, g.Ball((0.5, 0.0), 0.50001))
    assert not g.region_contains_ball(g.HalfSpace.past(2), g.Ball((0.5, 0.0), 0.1))


def test_region_predicates():
    box = g.Box((0, 0), (2, 2))
    assert g.region_contains_ball(box, g.Ball((1, 1), 1))
    assert not g.region_contains_ball(box, g.Ball((1, 1.5), 0.6))
    ob = g.OpenBall((0, 0), 2)
    assert g.region_contains_ball(ob, g.Ball((1, 0), 1))
    assert not g.region_contains_ball(ob, g.Ball((1, 0), 1.01))
    slab = g.TimeZeroSlab((0.0,), (1.0,))
    assert g.region_contains_center(slab, g.Ball((0.0, 0.5), 3.0))
    assert not g.region_contains_center(slab, g.Ball((0.1, 0.5), 0.1))
    assert g.region_contains_ball(g.Everything(2), g.Ball((9, 9), 9))


def test_region_subset():
    assert g.region_subset(g.Box((0, 0), (1, 1)), g.Box((-1, -1), (2, 2)))
    assert not g.region_subset(g.Box((0, 0), (3, 1)), g.Box((-1, -1), (2, 2)))
    assert g.region_subset(g.HalfSpace.future(2, 1.0), g.HalfSpace.future(2))
    assert g.region_subset(g.Box((0.5, 0), (1, 1)), g.HalfSpace.future(2))
    assert not g.region_subset(g.HalfSpace.future(2), g.Box((0, 0), (1, 1)))
    with pytest.raises(UnsupportedError):
        g.region_subset(g.TimeZeroSlab((0.0,), (1.0,)), g.Box((0, 0), (1, 1)))


def test_transform_region_equivariance():
    rng = np.random.default_rng(1)
    pool = g.random_balls(300, 2, rng, box=(-2, 2), radius_range=(0.05, 1.0))
    h = g.HalfSpace.future(2, 0.3)
    m = g.EuclideanMotion.random(2, rng, scale=1.5)
    moved = g.transform_region(m, h)
    for b in pool:
        assert g.region_contains_ball(h, b) == g.region_contains_ball(moved, g.apply_motion(m, b))
    with pytest.raises(UnsupportedError):
        g.transform_region(g.EuclideanMotion.planar_rotation(0.3), g.Box((0, 0), (1, 1)))


def test_random_balls_positive_time():
    rng = np.random.default_rng(3)
    for b in g.random_balls(200, 3, rng, box=(-1, 1), positive_time=True):
        assert g.region_contains_ball(g.HalfSpace.future(3), b)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    balls = g.random_balls(7, 3, rng)
    path = tmp_path / "balls.csv"
    g.write_balls_csv(path, balls)
    assert path.read_text().splitlines()[0] == "dim,t,x1,x2,radius"
    assert g.read_balls_csv(path) == balls


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(DomainError):
        g.read_balls_csv(path)

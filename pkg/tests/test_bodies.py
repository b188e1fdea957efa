import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cclab.bodies import (Ball, Box, Intersection, Polytope, QuadLin, Scale, Translate,
                          body_from_dict, body_to_dict, contains, dist_to_body, gauge,
                          interior_radius_at, pattern_ascent, sample_uniform, support)
from cclab.codim import counterexample_bodies, hexagon
from cclab.errors import PreconditionError
from cclab.spaces import L1, L2, Linf, make_rng, random_subspace

HEX, HEX_V = hexagon()


def test_contains_examples():
    assert contains(Ball.unit(2), [1.0, 0.0], 0.0)
    assert contains(HEX, [1 / math.sqrt(3), 0.0])
    A, _ = counterexample_bodies(6)
    assert not contains(A, np.eye(6)[0])


def test_gauge_examples():
    assert gauge(Ball.unit(2), [0.5, 0.0]) == pytest.approx(0.5)
    A, _ = counterexample_bodies(6)
    assert gauge(A, np.eye(6)[0]) == pytest.approx(2.0, abs=1e-12)
    assert gauge(Ball.unit(3), np.zeros(3)) == 0.0


def test_gauge_needs_zero_inside():
    body = Ball(np.array([3.0, 0.0]), 1.0)
    with pytest.raises(PreconditionError):
        gauge(body, [1.0, 0.0])


def test_support_examples():
    assert support(Ball.unit(2), [0.0, 2.0]) == pytest.approx(2.0)
    assert support(Box.cube(2), [1.0, -3.0]) == pytest.approx(4.0)
    assert support(HEX, HEX_V[0] / np.linalg.norm(HEX_V[0])) == pytest.approx(1 / math.sqrt(3))


def test_support_matches_vertices_on_hexagon():
    d = make_rng(3).standard_normal((50, 2))
    for v in d:
        assert support(HEX, v) == pytest.approx(np.max(HEX_V @ v), abs=1e-9)


def test_interior_radius_examples():
    assert interior_radius_at(Ball.unit(4), np.zeros(4)) == pytest.approx(1.0)
    assert interior_radius_at(HEX, np.zeros(2)) == pytest.approx(0.5)
    assert interior_radius_at(Box.cube(3), [0.5, 0, 0], Linf) == pytest.approx(0.5)


def test_interior_radius_outside_is_zero():
    assert interior_radius_at(Ball.unit(2), [2.0, 0.0]) == 0.0


def test_dist_examples():
    assert dist_to_body(Ball.unit(2), [2.0, 0.0]) == pytest.approx(1.0)
    A, _ = counterexample_bodies(6)
    assert dist_to_body(A, np.eye(6)[0]) == pytest.approx(0.5, abs=1e-12)


def test_dist_polytope_norms():
    box = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4))
    x = np.array([3.0, 2.0])
    assert dist_to_body(box, x, L2) == pytest.approx(math.sqrt(5))
    assert dist_to_body(box, x, L1) == pytest.approx(3.0)
    assert dist_to_body(box, x, Linf) == pytest.approx(2.0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_ball_projection_is_nearest(a, b, c):
    x = np.array([a, b, c])
    p = Ball.unit(3).project(x)
    assert np.linalg.norm(p) <= 1 + 1e-12
    if np.linalg.norm(x) > 1:
        assert np.allclose(p, x / np.linalg.norm(x))


@given(st.integers(0, 10 ** 6))
def test_gauge_is_homogeneous_and_subadditive(seed):
    g = make_rng(seed)
    body = QuadLin(g.uniform(0.5, 3, 4), g.uniform(-0.3, 0.3, 4), 1.0)
    x, y = g.standard_normal(4), g.standard_normal(4)
    t = float(g.uniform(0.1, 5))
    assert gauge(body, t * x) == pytest.approx(t * gauge(body, x), rel=1e-10)
    assert gauge(body, x + y) <= gauge(body, x) + gauge(body, y) + 1e-10


@given(st.integers(0, 10 ** 6))
def test_gauge_boundary_points(seed):
    g = make_rng(seed)
    X = g.standard_normal((20, 2))
    B = X / gauge(HEX, X)[:, None]
    assert np.allclose(gauge(HEX, B), 1.0)
    assert np.all(HEX.violation(B) <= 1e-12)


def test_offcentre_ball_gauge():
    body = Ball(np.array([0.3, 0.0]), 1.0)
    X = make_rng(1).standard_normal((100, 2))
    Y = X / body.gauge(X)[:, None]
    assert np.allclose(np.linalg.norm(Y - body.center, axis=1), 1.0)


@given(st.integers(0, 10 ** 6))
def test_support_lp_matches_ball_closed_form(seed):
    g = make_rng(seed)
    d = g.standard_normal(3)
    ball = Ball.unit(3, Linf)
    assert support(ball, d) == pytest.approx(np.sum(np.abs(d)))


def test_quadlin_section_radius_matches_sampling():
    g = make_rng(5)
    body = QuadLin(np.array([1.0, 2.0, 3.0, 0.5]), np.array([0.1, 0.0, -0.2, 0.0]), 1.0)
    F = random_subspace(4, 2, 7).basis
    x = np.array([0.05, 0.0, 0.1, 0.0])
    r = body.section_radius(x, F)
    t = np.linspace(0, 2 * np.pi, 20001)
    U = np.column_stack([np.cos(t), np.sin(t)]) @ F.T
    # largest r' with x + r' u inside for all sampled u
    brute = min(_ray(body, x, u) for u in U[::10])
    assert r == pytest.approx(brute, rel=1e-6)


def _ray(body, x, u):
    q, a = body.q, body.a
    A = (q * u * u).sum()
    B = (2 * q * x * u).sum() + a @ u
    C = (q * x * x).sum() + a @ x - body.r
    return (-B + math.sqrt(B * B - 4 * A * C)) / (2 * A)


def test_polytope_rows_normalised():
    P = Polytope(np.array([[2.0, 0.0], [0.0, 4.0], [-1.0, -1.0]]), np.array([2.0, 4.0, 1.0]))
    assert np.allclose(np.linalg.norm(P.A, axis=1), 1.0)
    assert contains(P, [1.0, 1.0]) and not contains(P, [1.1, 0.0])


def test_intersection_and_wrappers():
    body = Intersection((Ball.unit(2), Polytope(np.array([[1.0, 0.0]]), np.array([0.5]))))
    assert contains(body, [0.5, 0.0]) and not contains(body, [0.6, 0.0])
    assert body.interior_radius_at(np.zeros(2)) == pytest.approx(0.5)
    s = Scale(HEX, 2.0)
    assert interior_radius_at(s, np.zeros(2)) == pytest.approx(1.0)
    t = Translate(Ball.unit(2), np.array([1.0, 0.0]))
    assert contains(t, [2.0, 0.0]) and not contains(t, [-0.5, 0.0])
    assert dist_to_body(t, [4.0, 0.0]) == pytest.approx(2.0)


def test_intersection_support_flagged():
    body = Intersection((Ball.unit(2), Polytope(np.array([[1.0, 0.0]]), np.array([0.5]))))
    value, exact = support(body, [1.0, 0.0], return_exact=True)
    assert value == pytest.approx(0.5, abs=1e-6)
    assert exact is False


def test_intersection_projection():
    body = Intersection((Ball.unit(2), Box(np.array([-1.0, -1.0]), np.array([0.5, 1.0]))))
    p = body.project(np.array([2.0, 0.0]))
    assert np.allclose(p, [0.5, 0.0], atol=1e-8)


def test_sampling_inside_bodies():
    bodies = [Ball.unit(3), Box.cube(3), HEX, QuadLin(np.array([1.0, 4.0, 9.0]), np.zeros(3), 1.0),
              Intersection((Ball.unit(3), Polytope(np.array([[1.0, 0, 0]]), np.array([0.2])))),
              Scale(HEX, 0.5), Translate(Box.cube(2), np.array([3.0, 0.0]))]
    for b in bodies:
        X = sample_uniform(b, 500, make_rng(0))
        assert X.shape == (500, b.dim)
        assert np.all(b.violation(X) <= 1e-12)


def test_ellipsoid_sampling_fills_volume():
    body = QuadLin(np.array([4.0, 1.0]), np.zeros(2), 1.0)
    X = sample_uniform(body, 20000, make_rng(1))
    # half the area lies within the scaled copy of radius 1/sqrt(2)
    inner = (X ** 2 @ body.q) <= 0.5
    assert abs(inner.mean() - 0.5) < 0.02


def test_serialisation_roundtrip():
    bodies = [Ball.unit(3), Box.cube(2), HEX, QuadLin(np.array([1.0, 2.0]), np.array([0.1, 0.0]), 1.0),
              Intersection((Ball.unit(2), HEX)), Scale(HEX, 2.0), Translate(HEX, np.array([1.0, 2.0]))]
    for b in bodies:
        c = body_from_dict(body_to_dict(b))
        X = make_rng(2).standard_normal((50, b.dim))
        assert np.allclose(b.violation(X), c.violation(X))


def test_serialisation_rejects_unknown():
    with pytest.raises(PreconditionError):
        body_from_dict({"type": "ball", "dim": 2, "colour": "red"})
    with pytest.raises(PreconditionError):
        body_from_dict({"type": "blob"})


def test_pattern_ascent_finds_maximum():
    f = lambda x: -float(np.sum((x - 0.3) ** 2))
    x, v = pattern_ascent(f, np.zeros(2), 1.0)[:2]
    assert np.allclose(x, 0.3, atol=1e-6)

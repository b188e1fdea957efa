import numpy as np
import pytest
from hypothesis import given, strategies as st

from cclab.bodies import Ball, Box, Polytope, Scale
from cclab.codim import hexagon
from cclab.covers import HilbertCoverSpec, build_hilbert_cover, hilbert_search_space, rk_bound
from cclab.errors import PreconditionError
from cclab.inradius import (InscribedBall, check_rho_rules, ell1_example_check, inscribed_radius_fixed,
                            max_inscribed_ball, positive_simplex, rho_hat, sampled_section_radius,
                            verify_witness)
from cclab.spaces import L1, L2, Linf, Subspace, make_rng, random_subspace

HEX, _ = hexagon()


def box_polytope(N):
    return Polytope(np.vstack([np.eye(N), -np.eye(N)]), np.ones(2 * N))


def test_fixed_radius_examples():
    F = Subspace.coordinates(3, [0, 1])
    assert inscribed_radius_fixed(box_polytope(3), F, np.zeros(3)).radius == pytest.approx(1.0)
    assert inscribed_radius_fixed(HEX, Subspace.full(2), np.zeros(2)).radius == pytest.approx(0.5)
    G = random_subspace(6, 3, 2)
    assert inscribed_radius_fixed(Ball.unit(6), G, np.zeros(6)).radius == pytest.approx(1.0)


def test_fixed_radius_outside():
    r = inscribed_radius_fixed(Ball.unit(2), Subspace.full(2), [3.0, 0.0])
    assert r.radius == 0 and not r.inside


@given(st.integers(0, 10 ** 6))
def test_lp_matches_sampled_bisection(seed):
    g = make_rng(seed)
    P = Polytope(g.standard_normal((12, 4)), g.uniform(0.5, 1.5, 12))
    F = random_subspace(4, 2, g).basis
    x = 0.05 * g.standard_normal(4)
    if not P.contains(x):
        return
    exact = P.section_radius(x, F)
    sampled = sampled_section_radius(P, x, F, rng=seed, n_dirs=20000)
    assert sampled >= exact * (1 - 1e-6)
    assert sampled == pytest.approx(exact, abs=1e-4)


def test_unit_ball_witness():
    ball = max_inscribed_ball(Ball.unit(6), 3, restarts=4, steps=40, rng=0)
    assert ball.radius == pytest.approx(1.0, abs=1e-6)
    assert np.linalg.norm(ball.center) < 1e-6


def test_linf_box_full_dimension():
    ball = max_inscribed_ball(Box.cube(8), 8, restarts=2, steps=20, rng=0, norm=Linf)
    assert ball.radius == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(ball.center, 0, atol=1e-9)


def test_hilbert_piece_below_bound():
    spec = HilbertCoverSpec(1, 12)
    cover = build_hilbert_cover(spec)
    ball = max_inscribed_ball(cover.pieces[0], 2, restarts=4, steps=100, rng=1,
                              search_space=hilbert_search_space(spec, 1))
    assert 0.5 < ball.radius <= rk_bound(1) + 1e-3
    assert verify_witness(cover.pieces[0], ball, 1000, 5, shrink=0.999)


def test_no_interior_gives_zero():
    flat = Box(np.array([-1.0, 0.0]), np.array([1.0, 0.0]))
    ball = max_inscribed_ball(flat, 1, restarts=2, steps=5)
    assert ball.radius == 0 and ball.flag == "no-interior"


def test_dimension_validation():
    with pytest.raises(PreconditionError):
        max_inscribed_ball(Ball.unit(3), 4)


def test_witness_determinism():
    a = max_inscribed_ball(HEX, 1, restarts=3, steps=30, rng=9)
    b = max_inscribed_ball(HEX, 1, restarts=3, steps=30, rng=9)
    assert a.radius == b.radius and np.array_equal(a.center, b.center)


def test_hexagon_longest_chord():
    # the longest centred chord of the hexagon runs vertex to vertex
    ball = max_inscribed_ball(HEX, 1, restarts=8, steps=100, rng=0)
    assert ball.radius == pytest.approx(1 / np.sqrt(3), abs=1e-4)


def test_rho_hat_unit_ball():
    curve = rho_hat(Ball.unit(10), [1, 2, 4, 8], restarts=2, steps=20, rng=0)
    assert np.allclose(curve.radii, 1.0, atol=1e-6)


def test_rho_hat_is_non_increasing(tmp_path):
    curve = rho_hat(positive_simplex(6), [1, 2, 3], restarts=3, steps=40, rng=0, norm=L1)
    r = curve.radii
    assert np.all(np.diff(r) <= 0)
    assert r[2] < r[0]
    path = tmp_path / "rho.csv"
    curve.to_csv(path)
    assert path.read_text().splitlines()[0] == "n,radius,center_norm,seed"


def test_scale_equivariance():
    a = rho_hat(HEX, [1, 2], restarts=3, steps=30, rng=4)
    b = rho_hat(Scale(HEX, 0.5), [1, 2], restarts=3, steps=30, rng=4)
    assert np.allclose(b.radii, 0.5 * a.radii, rtol=0, atol=1e-12)


def test_rho_rules_on_hexagon():
    A = Scale(HEX, 0.9)
    halves = [Polytope(np.vstack([HEX.A, [s, 0.0]]), np.r_[0.9 * HEX.b, 0.0]) for s in (1.0, -1.0)]
    rep = check_rho_rules(A, HEX, halves, n_list=(1,), restarts=2, steps=30, rng=0, n_samples=2000)
    assert rep.contained and rep.covered and rep.monotone and rep.homogeneous


def test_ell1_split():
    rep = ell1_example_check(4, n_list=(1, 2), samples=2000, restarts=2, steps=30)
    assert rep.split_exact and rep.parts_inside


def test_ell1_split_example_point():
    x = np.array([0.5, -0.5])
    a, a2 = np.maximum(x, 0), np.maximum(-x, 0)
    A = positive_simplex(2)
    assert A.contains(a) and A.contains(a2) and np.array_equal(a - a2, x)

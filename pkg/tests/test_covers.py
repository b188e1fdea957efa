import numpy as np
import pytest
from hypothesis import given, strategies as st

from cclab.bodies import Ball, Box, Intersection, Polytope
from cclab.codim import hexagon
from cclab.covers import (Cover, HilbertCoverSpec, build_hilbert_cover, cube_vertices,
                          expansion_delta, filter_interior, find_cube_cylinder, find_diameter,
                          hilbert_certificate, random_cell_cover, rk_bound, verify_cover,
                          verify_cube_cylinder)
from cclab.errors import PreconditionError, SearchExhausted
from cclab.spaces import make_rng


def halfplane(N, axis, sign):
    a = np.zeros(N)
    a[axis] = sign
    return Polytope(a[None, :], [0.0])


def test_hilbert_pieces_k1():
    cover = build_hilbert_cover(HilbertCoverSpec(1, 3))
    assert len(cover) == 2
    x = np.array([1.0, 0.0, 0.0])
    assert cover.pieces[0].contains(x)
    assert not cover.pieces[1].contains(x)


def test_hilbert_spec_validation():
    with pytest.raises(PreconditionError):
        HilbertCoverSpec(0, 5)
    assert not HilbertCoverSpec(3, 5).complete
    assert HilbertCoverSpec(2, 5).complete


def test_residue_classes_partition():
    spec = HilbertCoverSpec(3, 20)
    idx = np.concatenate([spec.residue_class(j) for j in range(1, 7)])
    assert sorted(idx) == list(range(1, 20))


@given(st.integers(1, 4), st.integers(2, 30), st.integers(0, 10 ** 6))
def test_certificate_identity(k, N, seed):
    spec = HilbertCoverSpec(k, N)
    X = make_rng(seed).standard_normal((50, N))
    total, closed = hilbert_certificate(spec, X)
    assert np.allclose(total, closed, atol=1e-9 * k * max(1, np.abs(closed).max()))


def test_hilbert_cover_verifies():
    rep = verify_cover(build_hilbert_cover(HilbertCoverSpec(2, 20)), 100000, 0)
    assert rep.covered and rep.uncovered.shape[0] == 0 and rep.certificate_ok


def test_half_cover_detects_holes():
    B = Ball.unit(2)
    rep = verify_cover(Cover(B, (Intersection((B, halfplane(2, 0, -1))),)), 1000, 0)
    assert rep.uncovered.shape[0] > 0
    assert np.all(rep.uncovered[:, 0] < 0)


def test_trivial_cover():
    rep = verify_cover(Cover(Ball.unit(2), (Ball.unit(2),)), 1000, 0)
    assert rep.covered and rep.max_violation <= 0


def test_verify_cover_independent_of_workers():
    cover = build_hilbert_cover(HilbertCoverSpec(1, 5))
    a = verify_cover(cover, 50000, 3, workers=1, chunk=10000)
    b = verify_cover(cover, 50000, 3, workers=4, chunk=10000)
    assert a.max_violation == b.max_violation and a.min_certificate == b.min_certificate


def test_filter_interior_drops_segment():
    B = Ball.unit(2)
    seg = Box(np.array([-1.0, 0.0]), np.array([1.0, 0.0]))
    red = filter_interior(Cover(B, (B, seg)))
    assert len(red) == 1


def test_filter_interior_keeps_hilbert_pieces():
    cover = build_hilbert_cover(HilbertCoverSpec(1, 5))
    assert len(filter_interior(cover)) == 2


def test_filter_interior_interval():
    amb = Box(np.array([-1.0]), np.array([1.0]))
    c = Cover(amb, (Box(np.array([-1.0]), np.array([0.5])), Box(np.array([0.0]), np.array([1.0]))))
    assert len(filter_interior(c)) == 2


def test_expansion_delta_examples():
    assert expansion_delta(Ball.unit(3), 0.1).delta == pytest.approx(0.1)
    hx, _ = hexagon()
    res = expansion_delta(hx, 0.2)
    assert res.delta == pytest.approx(0.1)
    assert res.validated


def test_expansion_delta_needs_interior():
    with pytest.raises(PreconditionError):
        expansion_delta(Ball(np.array([2.0, 0.0]), 1.0), 0.1)


def test_rk_bound_values():
    assert rk_bound(1) == pytest.approx(np.sqrt(np.sqrt(3) / 2), abs=1e-12)
    assert rk_bound(1) == pytest.approx(0.930605, abs=1e-6)
    assert rk_bound(2) == pytest.approx(0.758745, abs=1e-6)
    assert rk_bound(10) < rk_bound(2)
    assert rk_bound(10 ** 6) < 1e-2
    with pytest.raises(PreconditionError):
        rk_bound(0)


def test_diameter_halfplanes():
    B = Ball.unit(2)
    c = Cover(B, (Intersection((B, halfplane(2, 0, 1))), Intersection((B, halfplane(2, 0, -1)))))
    r = find_diameter(c, 64)
    assert abs(r.x[0]) <= 1e-6 and abs(abs(r.x[1]) - 1) < 1e-9


def test_diameter_single_piece():
    B = Ball.unit(3)
    r = find_diameter(Cover(B, (B,)), 8)
    assert r.piece == 0 and abs(np.linalg.norm(r.x) - 1) < 1e-12


def test_diameter_random_cells():
    for s in range(10):
        cover = random_cell_cover(Ball.unit(3), 3, s)
        r = find_diameter(cover, 128, rng=s)
        p = cover.pieces[r.piece]
        assert p.contains(r.x, 1e-6) and p.contains(-r.x, 1e-6)


def test_diameter_exhaustion():
    # an open-like cover with no antipodal pair: two pieces shrunk off the equator
    B = Ball.unit(2)
    up = Intersection((B, Polytope(np.array([[0.0, -1.0]]), [-0.1])))
    down = Intersection((B, Polytope(np.array([[0.0, 1.0]]), [-0.1])))
    with pytest.raises(SearchExhausted):
        find_diameter(Cover(B, (up, down)), 32)


def test_cube_cylinder_halves():
    amb = Box.cube(2)
    c = Cover(amb, (halfplane(2, 0, 1), halfplane(2, 0, -1)))
    r = find_cube_cylinder(c)
    assert r.prefix == (-1,) and r.piece == 0 and r.verified


def test_cube_cylinder_single_piece():
    r = find_cube_cylinder(Cover(Box.cube(4), (Box.cube(4),)))
    assert r.prefix == () and r.verified


def test_cube_cylinder_random():
    for s in range(10):
        cover = random_cell_cover(Box.cube(10), 3, s)
        r = find_cube_cylinder(cover)
        assert r is not None and verify_cube_cylinder(cover, r.piece, r.prefix)


def test_cube_vertices_order():
    V = cube_vertices(2)
    assert V.tolist() == [[-1, -1], [-1, 1], [1, -1], [1, 1]]


@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_random_cell_cover_covers(seed, k):
    cover = random_cell_cover(Ball.unit(3), k, seed)
    assert verify_cover(cover, 2000, seed).covered


def test_cover_roundtrip():
    cover = build_hilbert_cover(HilbertCoverSpec(1, 4))
    again = Cover.from_dict(cover.to_dict())
    X = make_rng(0).standard_normal((20, 4))
    assert np.allclose(cover.violations(X), again.violations(X))
    assert again.hilbert == cover.hilbert

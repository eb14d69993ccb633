from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose
from scipy.optimize import linprog

from tamecert.convexgeo import (
    affine_dim,
    conic_extremality,
    dedup_points,
    is_extremal_origin,
    min_norm_point,
    supporting_direction,
)


def face_enumeration_distance(P):
    """Exact distance from 0 to conv(P): best affine minimiser over feasible faces."""
    P = np.asarray(P, float)
    d = P.shape[1]
    best = np.inf
    for k in range(1, min(len(P), d + 1) + 1):
        for S in combinations(range(len(P)), k):
            Q = P[list(S)]
            if k == 1:
                lam = np.ones(1)
            else:
                D = (Q[1:] - Q[0]).T
                beta, *_ = np.linalg.lstsq(D, -Q[0], rcond=None)
                lam = np.concatenate([[1 - beta.sum()], beta])
            if lam.min() < -1e-12:
                continue
            best = min(best, float(np.linalg.norm(lam @ Q)))
    return best


def simplex_grid_distance(P, res):
    """Distance over the lattice weights with denominator ``res``."""
    N = len(P)
    best = np.inf
    for bars in combinations(range(res + N - 1), N - 1):
        cuts = (-1,) + bars + (res + N - 1,)
        lam = np.diff(cuts) - 1
        best = min(best, float(np.linalg.norm(lam @ P / res)))
    return best


def test_two_unit_vectors():
    r = min_norm_point([[1.0, 0.0], [0.0, 1.0]])
    assert_allclose(r.point, [0.5, 0.5])
    assert r.distance == pytest.approx(1 / np.sqrt(2))
    assert_allclose(r.weights, [0.5, 0.5])


def test_threesheet_jacobians_average_to_zero():
    # Jacobians of the 3-sheet map at angles 0 and +-2pi/3, at radius 1
    mats = []
    for t in (0.0, 2 * np.pi / 3, -2 * np.pi / 3):
        R = lambda a: np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        mats.append(R(3 * t) @ np.diag([1.0, 3.0]) @ R(-t))
    r = min_norm_point(np.array(mats).reshape(3, 4))
    assert r.distance <= 1e-12
    assert_allclose(r.weights, [1 / 3] * 3, atol=1e-9)


def test_cloud_with_origin():
    r = min_norm_point([[1.0, 2.0], [0.0, 0.0], [-3.0, 1.0]])
    assert r.distance == 0.0


def test_single_point():
    r = min_norm_point([[3.0, 4.0]])
    assert r.distance == 5.0
    assert r.converged


def test_empty_cloud():
    with pytest.raises(ValueError):
        min_norm_point(np.empty((0, 2)))


def test_oracle_agreement_small():
    rng = np.random.default_rng(11)
    for _ in range(300):
        d = rng.integers(1, 4)
        N = rng.integers(1, 8)
        P = rng.standard_normal((N, d)) + rng.standard_normal(d)
        r = min_norm_point(P)
        assert abs(r.distance - face_enumeration_distance(P)) <= 1e-6
        assert (P @ r.point >= r.point @ r.point - 1e-10 * max(1.0, (P * P).sum(1).max())).all()


def test_simplex_grid_bounds_min_norm():
    rng = np.random.default_rng(12)
    for _ in range(40):
        P = rng.standard_normal((4, 2)) + rng.standard_normal(2)
        r = min_norm_point(P)
        g = simplex_grid_distance(P, 40)
        rad = np.linalg.norm(P, axis=1).max()
        assert r.distance <= g + 1e-12
        assert g - r.distance <= 2 * rad * 4 / 40


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 3)),
              elements=st.floats(-100, 100)))
def test_certificate_inequality(P):
    r = min_norm_point(P)
    scale = max(1.0, float((P * P).sum(1).max()))
    assert r.weights.min() >= 0
    assert r.weights.sum() == pytest.approx(1.0)
    assert_allclose(r.weights @ P, r.point, atol=1e-9 * np.sqrt(scale))
    assert (P @ r.point >= r.point @ r.point - 1e-10 * scale).all()


def test_supporting_direction_outside():
    s = supporting_direction([[1.0, 0.0], [0.0, 1.0]])
    assert_allclose(s.direction, [1 / np.sqrt(2), 1 / np.sqrt(2)])
    assert not s.origin_in_hull


def test_supporting_direction_interior():
    s = supporting_direction([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    assert s.direction is None
    assert s.origin_in_hull


def test_supporting_direction_edge_midpoint():
    # 0 is the midpoint of the edge from (1, 0) to (-1, 0), not an interior point
    s = supporting_direction([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    assert_allclose(s.direction, [0.0, 1.0], atol=1e-12)


def test_supporting_direction_segment():
    P = np.array([[1.0, 0.0], [-1.0, 0.0]])
    s = supporting_direction(P)
    assert s.direction is None
    assert_allclose(np.abs(s.weak_normal), [0.0, 1.0], atol=1e-12)
    # oracle: a dense angle grid finds only normals orthogonal to the segment
    t = np.linspace(0, 2 * np.pi, 3600, endpoint=False)
    U = np.stack([np.cos(t), np.sin(t)], axis=1)
    D = P @ U.T
    ok = (D >= -1e-12).all(axis=0)
    assert_allclose(np.abs(U[ok]), [[0.0, 1.0]] * ok.sum(), atol=1e-12)


def test_supporting_direction_relative_boundary():
    s = supporting_direction([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    u = s.direction
    assert u is not None
    P = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert (P @ u >= -1e-12).all() and (P @ u).max() > 0


@pytest.mark.parametrize("C, expected", [
    ([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], True),
    ([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]], False),
    ([[0.0, 0.0]], True),
])
def test_is_extremal_origin(C, expected):
    assert is_extremal_origin(C) is expected


def test_twopiece_images_not_extremal():
    # Jacobians (1 a; b 0), b in {0, 1}, a = 3y^2 in [0, 3]
    a = np.linspace(0, 3, 31)
    mats = [np.array([[1.0, ai], [b, 0.0]]) for ai in a for b in (0.0, 1.0)]
    v = np.array([-1.0, 1.0]) / np.sqrt(2)  # a generic direction, kernel at a = 1
    C = np.array([M @ v for M in mats])
    assert not is_extremal_origin(np.vstack([C, np.zeros(2)]))
    # along v = (0, 1) the images are (a, 0) with a >= 0, so 0 stays a vertex
    C = np.array([M @ [0.0, 1.0] for M in mats])
    assert is_extremal_origin(C)


@pytest.mark.parametrize("C, expected", [
    ([[1.0, 0.0], [0.0, 1.0]], True),
    ([[1.0, 0.0], [-1.0, 0.0]], False),
    ([[2.0, 0.0]], True),
])
def test_conic_extremality(C, expected):
    assert conic_extremality(C) is expected


def test_conic_cubic_oracle():
    # cubic: A v = (3x^2, 0) for v = (1, 0); the cone is a ray
    x = np.linspace(-1, 1, 21)
    C = np.stack([3 * x * x, 0 * x], axis=1)
    assert conic_extremality(C)
    # oracle: no unit u in the cone has -u in the cone
    U = C[np.linalg.norm(C, axis=1) > 0]
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    assert np.min(np.linalg.norm(U[:, None] + U[None], axis=2)) > 1


@pytest.mark.parametrize("P, expected", [
    ([[1.0, 2.0, 3.0]], 0),
    ([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], 1),
    ([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 2),
])
def test_affine_dim(P, expected):
    assert affine_dim(P) == expected


def test_affine_dim_bilipschitz_list():
    s = np.sqrt(2)
    mats = [[[1, 0], [0, 1]], [[0, -2], [2, 4]], [[0, 2], [-2, 4]],
            [[0, -2 * s / 3], [4 * s / 3, 8 / 3]], [[0, 2 * s / 3], [-4 * s / 3, 8 / 3]]]
    assert affine_dim(np.array(mats, float).reshape(5, 4)) == 4


def test_dedup():
    P = dedup_points([[0.0, 0.0], [1e-12, 0.0], [1.0, 0.0]], 1e-9)
    assert len(P) == 2


def _vertex_lp(Q, i):
    """Whether Q[i] is a vertex of conv(Q), by linear programming."""
    N = len(Q)
    others = np.delete(np.arange(N), i)
    if len(others) == 0:
        return True
    A_eq = np.vstack([Q[others].T, np.ones(len(others))])
    b_eq = np.append(Q[i], 1.0)
    res = linprog(np.zeros(len(others)), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * len(others), method="highs")
    return res.status != 0


def test_extremal_image_property():
    rng = np.random.default_rng(13)
    checked = 0
    for _ in range(300):
        d = rng.integers(2, 4)
        C = rng.standard_normal((rng.integers(3, 8), d))
        k = rng.integers(1, d + 1)
        phi = rng.standard_normal((k, d))
        for i in range(len(C)):
            if not _vertex_lp(C, i):
                continue
            # S = {C_i} with S = conv(C) meet phi^-1(phi(S)): phi(C_i) is not in
            # the hull of the other images
            if not _vertex_lp(C @ phi.T, i):
                continue
            img = C @ phi.T - phi @ C[i]
            assert is_extremal_origin(img)
            checked += 1
    assert checked > 100


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 3)),
              elements=st.floats(-10, 10)),
       st.data())
def test_extremality_inherited_by_subclouds(P, data):
    C = np.vstack([np.zeros(P.shape[1]), P])
    keep = data.draw(st.lists(st.booleans(), min_size=len(P), max_size=len(P)))
    sub = np.vstack([np.zeros(P.shape[1]), P[np.array(keep, bool)]])
    eps = 1e-8 * max(np.linalg.norm(C, axis=1).max(), 1e-300)
    if is_extremal_origin(C, eps):
        assert is_extremal_origin(sub, eps)

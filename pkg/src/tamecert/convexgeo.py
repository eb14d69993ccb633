"""Convex and conic geometry over finite point clouds.

Hulls are represented by their generating points only. Everything reduces to
nearest-point queries on ``conv(C)``, solved with Wolfe's active-set method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_QP = 1e-12  # relative to the squared cloud radius
EPS_EXT = 1e-8  # relative to the cloud radius


@dataclass(frozen=True, eq=False)
class MinNormResult:
    point: np.ndarray
    weights: np.ndarray  # simplex weights over the input points
    support: tuple  # indices with positive weight
    residual: float  # ||w||^2 - min_i <w, p_i>, clipped at 0
    converged: bool
    iterations: int

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.point))


def _affine_minimizer(Q: np.ndarray) -> np.ndarray:
    """Barycentric weights of the point of ``aff(Q)`` closest to the origin."""
    if len(Q) == 1:
        return np.ones(1)
    q0 = Q[0]
    D = (Q[1:] - q0).T
    beta, *_ = np.linalg.lstsq(D, -q0, rcond=None)
    return np.concatenate([[1.0 - beta.sum()], beta])


def min_norm_point(points, eps_qp: float = EPS_QP, max_iter: int | None = None) -> MinNormResult:
    """Point of ``conv(points)`` nearest to the origin.

    Wolfe's algorithm: major cycles add the point minimising ``<w, p>`` to the
    corral; minor cycles move to the affine minimiser of the corral, dropping
    points whose weight would turn negative. Stops once
    ``||w||^2 - min <w, p_i> <= eps_qp * radius^2``.
    """
    P = np.atleast_2d(np.asarray(points, float))
    N = len(P)
    if N == 0:
        raise ValueError("empty point cloud")
    sq = np.einsum("ij,ij->i", P, P)
    tol = eps_qp * max(float(sq.max()), 1e-300)
    max_iter = max_iter or 10 * N + 100

    S = [int(np.argmin(sq))]
    lam = np.ones(1)
    x = P[S[0]].copy()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        dots = P @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol:
            converged = True
            break
        if j in S:
            break  # no progress possible in floating point
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimizer(P[S])
            if np.all(alpha > 0):
                lam = alpha
                break
            neg = alpha <= 0
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(neg, lam / (lam - alpha), np.inf)
            theta = float(min(np.min(ratio), 1.0))
            lam = lam + theta * (alpha - lam)
            keep = lam > 0
            keep[np.argmin(np.where(neg, ratio, np.inf))] = False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
            if len(S) == 1:
                lam = np.ones(1)
                break
        x = lam @ P[S]

    weights = np.zeros(N)
    weights[S] = lam
    dots = P @ x
    residual = max(0.0, float(x @ x - dots.min()))
    if not converged:
        converged = residual <= tol
    return MinNormResult(x, weights, tuple(int(s) for s in S), residual, converged, it)


def cloud_radius(points) -> float:
    P = np.atleast_2d(np.asarray(points, float))
    return float(np.sqrt(np.einsum("ij,ij->i", P, P).max())) if len(P) else 0.0


def dedup_points(points, eps: float) -> np.ndarray:
    """Drop points within ``eps`` of an earlier kept point."""
    from scipy.spatial import cKDTree

    P = np.atleast_2d(np.asarray(points, float))
    if len(P) < 2 or eps <= 0:
        return P
    drop = np.zeros(len(P), dtype=bool)
    for i, j in sorted(cKDTree(P).query_pairs(eps)):
        if not drop[i]:
            drop[j] = True
    return P[~drop]


def span_basis(points, eps_rank: float = 1e-9) -> np.ndarray:
    """Orthonormal basis ``(d, k)`` of the linear span of the points."""
    P = np.atleast_2d(np.asarray(points, float))
    if not P.size:
        return np.zeros((P.shape[1], 0))
    _, s, Vt = np.linalg.svd(P, full_matrices=True)
    if not len(s) or s[0] == 0:
        return np.zeros((P.shape[1], 0))
    k = int(np.sum(s > eps_rank * s[0]))
    return Vt[:k].T


def affine_dim(points, eps_rank: float = 1e-9) -> int:
    """Dimension of the affine hull of the cloud."""
    P = np.atleast_2d(np.asarray(points, float))
    if len(P) < 2:
        return 0
    return span_basis(P - P[0], eps_rank).shape[1]


@dataclass(frozen=True, eq=False)
class SupportResult:
    direction: np.ndarray | None  # unit u with <u, p> >= 0 and some > 0
    weak_normal: np.ndarray | None  # unit u orthogonal to the whole cloud
    origin_in_hull: bool
    distance: float


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(u) > 1e-12)
    return -u if nz.size and u[nz[0]] < 0 else u


def supporting_direction(points, eps_qp: float = EPS_QP) -> SupportResult:
    """Supporting hyperplane through the origin for ``conv(points)``.

    If the origin is outside the hull the normalised min-norm point is
    returned. Otherwise the search runs inside the affine hull: a direction is
    found exactly when the origin sits on the relative boundary. Any unit
    vector orthogonal to a lower-dimensional hull is reported as a weak
    normal.
    """
    from scipy.optimize import linprog

    P = np.atleast_2d(np.asarray(points, float))
    d = P.shape[1]
    r = min_norm_point(P, eps_qp)
    rad = cloud_radius(P)
    zero_tol = 1e-9 * max(rad, 1e-300)
    if r.distance > zero_tol:
        return SupportResult(r.point / r.distance, None, False, r.distance)

    B = span_basis(P)
    k = B.shape[1]
    weak = None
    if k < d:
        _, _, Vt = np.linalg.svd(np.vstack([P, np.zeros((1, d))]), full_matrices=True)
        weak = _canonical_sign(Vt[-1])
    if k == 0:
        return SupportResult(None, weak, True, r.distance)
    C = P @ B
    N = len(C)
    # max t subject to lambda_i >= t, sum lambda = 1, sum lambda_i c_i = 0
    cost = np.zeros(N + 1)
    cost[-1] = -1.0
    A_eq = np.zeros((k + 1, N + 1))
    A_eq[:k, :N] = C.T
    A_eq[k, :N] = 1.0
    b_eq = np.zeros(k + 1)
    b_eq[k] = 1.0
    A_ub = np.hstack([-np.eye(N), np.ones((N, 1))])
    res = linprog(cost, A_ub=A_ub, b_ub=np.zeros(N), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * N + [(None, 1.0)], method="highs")
    if res.status == 0 and -res.fun > 1e-9:
        return SupportResult(None, weak, True, r.distance)
    # origin on the relative boundary: find u in span with C u >= 0, sum C u = 1
    res = linprog(np.zeros(k), A_ub=-C, b_ub=np.zeros(N),
                  A_eq=C.sum(axis=0, keepdims=True), b_eq=[1.0],
                  bounds=[(None, None)] * k, method="highs")
    if res.status != 0:
        return SupportResult(None, weak, True, r.distance)
    u = B @ res.x
    return SupportResult(u / np.linalg.norm(u), weak, True, r.distance)


def is_extremal_origin(points, eps_ext: float | None = None, eps_qp: float = EPS_QP) -> bool:
    """Whether the origin is a vertex of ``conv(points ∪ {0})``.

    Points within ``eps_ext`` of the origin are removed; the origin is a
    vertex iff the rest of the hull stays farther than ``eps_ext`` from it.
    """
    P = np.atleast_2d(np.asarray(points, float))
    rad = cloud_radius(P)
    if eps_ext is None:
        eps_ext = EPS_EXT * rad
    norms = np.linalg.norm(P, axis=1)
    rest = P[norms > eps_ext]
    if len(rest) == 0:
        return True
    return min_norm_point(rest, eps_qp).distance > eps_ext


def normalize_rays(points, eps_zero: float | None = None) -> np.ndarray:
    """Unit vectors along the nonzero points."""
    P = np.atleast_2d(np.asarray(points, float))
    norms = np.linalg.norm(P, axis=1)
    if eps_zero is None:
        eps_zero = 1e-12 * (norms.max() if len(norms) else 0.0)
    keep = norms > eps_zero
    return P[keep] / norms[keep, None]


def conic_extremality(points, eps_ext: float = EPS_EXT, eps_qp: float = EPS_QP) -> bool:
    """Whether ``cone(points)`` meets ``-cone(points)`` only at the origin.

    After normalising the rays, ``conv(U) - conv(-U) = 2 conv(U)``, so the
    Minkowski-difference test reduces to a min-norm query on ``U`` itself.
    """
    U = normalize_rays(points)
    if len(U) == 0:
        return True
    return min_norm_point(U, eps_qp).distance > eps_ext

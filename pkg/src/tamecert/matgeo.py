"""Matrix-space geometry: distance to singular matrices, kernels, minors.

Matrices are ``n x m`` (maps from R^m to R^n). Norms on matrices are the
spectral norm, so the distance of a tall matrix to the rank-deficient ones
is its smallest singular value.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

EPS_SING = 1e-9


def nu(A) -> float:
    """Distance from ``A`` (``n x m``, ``m <= n``) to the singular matrices.

    Equals ``min |Av|`` over unit ``v``, i.e. the smallest singular value; for
    square invertible ``A`` this is ``1 / ||A^-1||_2``.
    """
    A = np.atleast_2d(np.asarray(A, float))
    n, m = A.shape
    if m > n:
        raise ValueError(f"nu needs m <= n, got a {n}x{m} matrix")
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def nu_batch(A: np.ndarray) -> np.ndarray:
    """Smallest singular value of each matrix in a stack ``(N, n, m)``."""
    return np.linalg.svd(np.asarray(A, float), compute_uv=False)[..., -1]


def g_surrogate(A) -> float:
    """Cheap comparison function for :func:`nu`.

    The maximum, over ``m x m`` row-submatrices ``A_I``, of ``|det A_I|``
    divided by the Euclidean norm of the vector of its ``(m-1)``-minors.
    """
    A = np.atleast_2d(np.asarray(A, float))
    n, m = A.shape
    if m > n:
        raise ValueError(f"g_surrogate needs m <= n, got a {n}x{m} matrix")
    best = 0.0
    for rows in combinations(range(n), m):
        S = A[list(rows)]
        det = np.linalg.det(S)
        if det == 0.0:
            continue
        if m == 1:
            minors_sq = 1.0
        else:
            minors_sq = 0.0
            for i in range(m):
                for j in range(m):
                    M = np.delete(np.delete(S, i, axis=0), j, axis=1)
                    minors_sq += np.linalg.det(M) ** 2
        if minors_sq > 0:
            best = max(best, abs(det) / np.sqrt(minors_sq))
    return float(best)


def kernel(A, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``A`` as columns ``(m, k)``.

    Keeps right singular vectors whose singular value is at most
    ``tol * sigma_max`` (or at most ``tol`` when ``A`` is zero).
    """
    A = np.atleast_2d(np.asarray(A, float))
    n, m = A.shape
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    sv = np.zeros(m)
    sv[: len(s)] = s
    smax = s[0] if len(s) else 0.0
    cut = tol * smax if smax > 0 else tol
    return Vt[sv <= cut].T.copy()


@dataclass(frozen=True, eq=False)
class MinorProfile:
    minors: np.ndarray  # d_1 .. d_n
    ratios: np.ndarray  # d_j / d_{j-1}, NaN where undefined
    undefined: np.ndarray  # True where d_{j-1} is numerically zero


def permuted(A, src_perm=None, tgt_perm=None) -> np.ndarray:
    """Rows reordered by ``tgt_perm`` and columns by ``src_perm`` (0-based)."""
    A = np.asarray(A, float)
    n, m = A.shape[-2:]
    rows = np.arange(n) if tgt_perm is None else np.asarray(tgt_perm)
    cols = np.arange(m) if src_perm is None else np.asarray(src_perm)
    return A[..., rows, :][..., :, cols]


def leading_minors(A: np.ndarray) -> np.ndarray:
    """Leading principal minors ``(..., n)`` of a stack of square matrices."""
    A = np.asarray(A, float)
    n = A.shape[-1]
    return np.stack([np.linalg.det(A[..., :j, :j]) for j in range(1, n + 1)], axis=-1)


def minor_profile(A, src_perm=None, tgt_perm=None, eps_sing: float = EPS_SING) -> MinorProfile:
    """Leading principal minors after permuting coordinates, and their ratios.

    With ``d_0 = 1``, the ratio ``d_j / d_{j-1}`` is the partial derivative of
    the j-th coordinate of the triangular factorisation; it is left undefined
    where ``|d_{j-1}| <= eps_sing * sigma_max^(j-1)``.
    """
    B = permuted(np.atleast_2d(np.asarray(A, float)), src_perm, tgt_perm)
    if B.shape[0] != B.shape[1]:
        raise ValueError("minor_profile needs a square matrix")
    d = leading_minors(B)
    prev = np.concatenate([[1.0], d[:-1]])
    smax = np.linalg.norm(B, 2)
    scale = np.array([smax ** j for j in range(len(d))])
    undefined = np.abs(prev) <= eps_sing * np.maximum(scale, 1e-300)
    undefined[0] = False
    with np.errstate(all="ignore"):
        ratios = np.where(undefined, np.nan, d / prev)
    return MinorProfile(d, ratios, undefined)


def orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-random orthogonal matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))

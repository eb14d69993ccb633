"""Leading-principal-minor conditions: two-sided bounds, signs, finiteness."""

from __future__ import annotations

import numpy as np

from ..matgeo import leading_minors, permuted
from ..piecewise import PiecewiseMap
from .core import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    PASS_HEURISTIC,
    SAMPLED_NOTE,
    DECAY_SLOPE,
    Certificate,
    JacobianSampleSet,
    Tolerances,
    approach_path,
    loglog_slope,
)
from .probes import axis_segments, degenerate_points, map_scale


def _perm(p, n):
    if p is None:
        return np.arange(n)
    p = np.asarray(p, int)
    if sorted(p.tolist()) != list(range(n)):
        raise ValueError(f"{p.tolist()} is not a permutation of 0..{n - 1}")
    return p


def sampled_minors(samples: JacobianSampleSet, src_perm=None, tgt_perm=None) -> np.ndarray:
    """Leading principal minors ``(N, n)`` of every permuted sample."""
    n, m = samples.matrices.shape[1:]
    if n != m:
        raise ValueError("minor conditions need n = m")
    B = permuted(samples.matrices, _perm(src_perm, m), _perm(tgt_perm, n))
    return leading_minors(B)


def approach_slope(f: PiecewiseMap, x, j: int, src_perm=None, tgt_perm=None,
                   near: float | None = None, steps: int = 5):
    """Log-log slope of ``|d_j|`` against the distance to the nearest locus, or ``None``."""
    path = approach_path(f, x, near, steps)
    if path is None:
        return None
    ts, J = path
    D = np.abs(leading_minors(permuted(J, _perm(src_perm, f.m), _perm(tgt_perm, f.n)))[:, j])
    return loglog_slope(ts, D)


def check_thm3(f: PiecewiseMap, samples: JacobianSampleSet, src_perm=None, tgt_perm=None,
               tol: Tolerances | None = None) -> Certificate:
    """Empirical ``K_j <= d_j <= L_j`` (``j < n``) and ``K_n <= d_n``.

    A lower bound counts as positive when ``K̂_j`` exceeds ``eps_minor`` times
    the median ``|d_j|`` and the minimiser, pushed towards the nearest locus,
    shows no power-law decay of ``d_j``. An upper bound counts as finite when
    ``L̂_j * eps_div`` stays below that median and the maximiser shows no
    power-law growth.
    """
    tol = tol or Tolerances()
    if f.n != f.m:
        return Certificate("THM3", INCONCLUSIVE, {"reason": "needs n = m"}, tol.as_dict())
    D = sampled_minors(samples, src_perm, tgt_perm)
    n = D.shape[1]
    K = D.min(axis=0)
    L = D.max(axis=0)
    med = np.median(np.abs(D), axis=0)
    cond, wit = {}, {"K_hat": K, "L_hat": L[:-1], "median_abs_minor": med,
                     "src_perm": _perm(src_perm, n), "tgt_perm": _perm(tgt_perm, n)}
    for j in range(n):
        k = int(np.argmin(D[:, j]))
        slope = approach_slope(f, samples.points[k], j, src_perm, tgt_perm)
        lower_ok = K[j] > tol.eps_minor * med[j] and (slope is None or slope <= DECAY_SLOPE)
        cond[f"R{j + 1}_lower"] = PASS if lower_ok else FAIL
        if not lower_ok:
            wit[f"R{j + 1}_lower_witness"] = {"x": samples.points[k], "minor": D[k, j],
                                              "matrix": samples.matrices[k],
                                              "approach_slope": slope}
        if j < n - 1:
            k = int(np.argmax(D[:, j]))
            slope = approach_slope(f, samples.points[k], j, src_perm, tgt_perm)
            upper_ok = L[j] * tol.eps_div <= med[j] and (slope is None or slope >= -DECAY_SLOPE)
            cond[f"R{j + 1}_upper"] = PASS if upper_ok else FAIL
            if not upper_ok:
                wit[f"R{j + 1}_upper_witness"] = {"x": samples.points[k], "minor": D[k, j],
                                                  "approach_slope": slope}
    verdict = PASS if all(v == PASS for v in cond.values()) else FAIL
    return Certificate("THM3", verdict, wit, tol.as_dict(), conditions=cond, notes=[SAMPLED_NOTE])


def phi_map(f: PiecewiseMap, j: int, src_perm=None, tgt_perm=None):
    """Evaluator for ``x -> (f_1(x), .., f_j(x), x_{j+1}, .., x_n)`` in permuted coordinates."""
    n = f.m
    sp, tp = _perm(src_perm, n), _perm(tgt_perm, n)

    def phi(X):
        X = np.atleast_2d(X)
        vals, status = f.evaluate_batch(X)
        out = np.concatenate([vals[:, tp[:j]], X[:, sp[j:]]], axis=1)
        return out, status

    return phi


def _phi_constant_segments(f, phi, segs, eps_const):
    out = []
    for S in segs:
        vals, status = phi(S)
        if (status != 0).any():
            continue
        spread = float(np.max(np.linalg.norm(vals - vals[0], axis=1)))
        if spread <= eps_const:
            out.append({"start": S[0], "end": S[-1], "spread": spread})
    return out


def fiber_counts(f: PiecewiseMap, j: int, budget: int, rng, src_perm=None, tgt_perm=None,
                 resolution: int = 200) -> np.ndarray:
    """Sign changes of ``f_j - c`` along random coordinate lines in the ``x_j`` direction.

    On such a line ``phi_j`` differs from a constant only through ``f_1..f_j``;
    the count is a diagnostic for how many preimages a fiber has.
    """
    sp, tp = _perm(src_perm, f.m), _perm(tgt_perm, f.m)
    lo, hi = f.domain.bounds()
    k = sp[j - 1]
    counts = []
    for p in f.domain.sample(rng, budget):
        t = np.linspace(lo[k], hi[k], resolution)
        X = np.repeat(p[None], resolution, axis=0)
        X[:, k] = t
        inside = f.domain.contains(X)
        vals, status = f.evaluate_batch(X[inside])
        c, _ = f.evaluate_batch(p[None])
        g = vals[:, tp[j - 1]] - c[0, tp[j - 1]]
        g = g[status == 0]
        s = np.sign(g)
        s = s[s != 0]
        counts.append(int(np.sum(s[1:] != s[:-1])))
    return np.array(counts, int)


def check_thm4(f: PiecewiseMap, samples: JacobianSampleSet, src_perm=None, tgt_perm=None,
               fiber_budget: int = 50, tol: Tolerances | None = None, seed: int = 0,
               max_witnesses: int = 3) -> Certificate:
    """Sign conditions ``d_j >= 0`` and a refutation test for finiteness of ``phi_j``.

    ``(P_j)`` uses the threshold ``-eps_sing * sigma_max^j``. ``(F_j)`` fails
    when ``phi_j`` is constant on a segment spanned by the first ``j`` source
    coordinates through a degenerate or random point; it never does better
    than pass-heuristic.
    """
    tol = tol or Tolerances()
    if f.n != f.m:
        return Certificate("THM4", INCONCLUSIVE, {"reason": "needs n = m"}, tol.as_dict())
    rng = np.random.default_rng(seed)
    n = f.m
    sp = _perm(src_perm, n)
    D = sampled_minors(samples, src_perm, tgt_perm)
    smax = samples.sigma_max
    cond, wit = {}, {"min_minor": D.min(axis=0)}
    for j in range(n):
        thr = -tol.eps_sing * smax ** (j + 1)
        ok = D[:, j].min() >= thr
        cond[f"P{j + 1}"] = PASS if ok else FAIL
        if not ok:
            k = int(np.argmin(D[:, j]))
            wit[f"P{j + 1}_witness"] = {"x": samples.points[k], "minor": D[k, j]}

    eps_const = tol.eps_const * map_scale(f, rng)
    base = degenerate_points(samples)
    rand = f.domain.sample(rng, fiber_budget)
    half = 0.1 * f.domain.diameter
    for j in range(1, n + 1):
        phi = phi_map(f, j, src_perm, tgt_perm)
        pts = np.concatenate([base, rand]) if base.size else rand
        segs = axis_segments(f, pts, axes=sp[:j], half=half)
        found = _phi_constant_segments(f, phi, segs, eps_const)
        counts = fiber_counts(f, j, max(1, fiber_budget // 5), rng, src_perm, tgt_perm)
        wit[f"F{j}_max_sign_changes"] = int(counts.max()) if counts.size else 0
        if found:
            cond[f"F{j}"] = FAIL
            wit[f"F{j}_constant_segments"] = found[:max_witnesses]
        else:
            cond[f"F{j}"] = PASS_HEURISTIC
    wit["eps_const_abs"] = eps_const
    verdict = FAIL if FAIL in cond.values() else PASS_HEURISTIC
    return Certificate("THM4", verdict, wit, tol.as_dict(), conditions=cond,
                       notes=[SAMPLED_NOTE, "(F_j) is a refutation-only heuristic"])


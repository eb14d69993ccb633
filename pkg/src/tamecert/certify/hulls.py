"""Hull-based criteria: the δ-bound, generic regularity, extremality."""

from __future__ import annotations

import numpy as np

from ..convexgeo import conic_extremality, is_extremal_origin, min_norm_point
from ..piecewise import PiecewiseMap, _zero_set_distance, boundary_points
from .core import (
    DECAY_SLOPE,
    FAIL,
    INCONCLUSIVE,
    LOCUS_NOTE,
    PASS,
    PASS_HEURISTIC,
    SAMPLED_NOTE,
    Certificate,
    JacobianSampleSet,
    Tolerances,
    approach_path,
    loglog_slope,
    sphere_grid,
)

PAIR_ALL_LIMIT = 200


def _hull_distance(J: np.ndarray, v: np.ndarray, eps_qp: float):
    return min_norm_point(J @ v, eps_qp)


def _refine_direction(J, v0, step, eps_qp):
    """Locally minimise the hull distance over unit directions near ``v0``."""
    from scipy.optimize import minimize, minimize_scalar

    m = len(v0)
    if m == 1:
        return v0, _hull_distance(J, v0, eps_qp).distance
    if m == 2:
        t0 = np.arctan2(v0[1], v0[0])

        def fun(t):
            return _hull_distance(J, np.array([np.cos(t), np.sin(t)]), eps_qp).distance

        res = minimize_scalar(fun, bounds=(t0 - step, t0 + step), method="bounded",
                              options={"xatol": 1e-12})
        v = np.array([np.cos(res.x), np.sin(res.x)])
        return v, float(res.fun)
    # tangent-plane coordinates around v0
    Q, _ = np.linalg.qr(np.column_stack([v0, np.eye(m)]))
    T = Q[:, 1:m]

    def unit(z):
        w = v0 + T @ z
        return w / np.linalg.norm(w)

    def fun(z):
        return _hull_distance(J, unit(z), eps_qp).distance

    simplex = np.vstack([np.zeros(m - 1), step * np.eye(m - 1)])
    res = minimize(fun, np.zeros(m - 1), method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-14,
                            "maxiter": 400})
    return unit(res.x), float(res.fun)


def hull_delta(samples: JacobianSampleSet, directions=None, tol: Tolerances | None = None,
               refine: bool = True) -> dict:
    """``min_v dist(0, conv{A v})`` over the sample set, with its minimiser."""
    tol = tol or Tolerances()
    J = samples.matrices
    m = J.shape[2]
    V = sphere_grid(m) if directions is None else np.asarray(directions, float)
    dists = np.array([_hull_distance(J, v, tol.eps_qp).distance for v in V])
    order = np.argsort(dists)
    best_v, best = V[order[0]], float(dists[order[0]])
    if refine and m >= 2:
        step = 2 * np.pi / len(V) if m == 2 else 2.0 / np.sqrt(len(V))
        for k in order[:3]:
            v, d = _refine_direction(J, V[k], step, tol.eps_qp)
            if d < best:
                best_v, best = v, d
    r = _hull_distance(J, best_v, tol.eps_qp)
    return {"delta": min(best, r.distance), "v": best_v, "result": r,
            "grid_delta": float(dists[order[0]])}


def _limit_decay(f: PiecewiseMap, points):
    """Largest log-log slope of ``nu(df)`` along approach paths from ``points``.

    Since ``dist(0, conv{A v}) <= |A v|`` for every sampled ``A``, the hull
    distance is at most ``inf nu(df)``; a positive slope means that infimum is 0.
    """
    worst = None
    for x in points:
        path = approach_path(f, x)
        if path is None:
            continue
        ts, J = path
        s = loglog_slope(ts, np.linalg.svd(J, compute_uv=False)[:, -1])
        if s is not None and (worst is None or s > worst):
            worst = s
    return worst


def check_thm1(samples: JacobianSampleSet, directions=None, tol: Tolerances | None = None,
               refine: bool = True, f: PiecewiseMap | None = None) -> Certificate:
    """Lower bound ``δ̂`` on the distance of the sampled hull to singular matrices.

    For a finite sample set ``δ̂ = min_v dist(0, conv{A v})``; the map passes
    when ``δ̂`` exceeds ``eps_sing * sigma_max``. When ``f`` is given, see
    :func:`_limit_decay`: a smallest singular value that decays like a power
    of the distance to a locus means the closed hull reaches the singular
    matrices, and the check fails. A pass predicts ``|f(x') - f(x)| >= δ̂ |x' - x|`` but is
    not a proof.
    """
    tol = tol or Tolerances()
    n, m = samples.matrices.shape[1:]
    if m > n:
        return Certificate("THM1", INCONCLUSIVE, {"reason": f"needs m <= n, got m={m}, n={n}"},
                           tol.as_dict())
    h = hull_delta(samples, directions, tol, refine)
    smax = samples.sigma_max
    eps = tol.eps_sing * smax
    r = h["result"]
    active = list(r.support)
    wit = {
        "delta": h["delta"],
        "grid_delta": h["grid_delta"],
        "direction": h["v"],
        "hull_point": r.point,
        "active_weights": r.weights[active],
        "active_points": samples.points[active],
        "active_matrices": samples.matrices[active],
        "samples": len(samples),
        "sigma_max": smax,
    }
    verdict = PASS if h["delta"] > eps else FAIL
    if verdict == PASS and f is not None:
        nus = np.linalg.svd(samples.matrices, compute_uv=False)[:, -1]
        cand = np.unique(np.concatenate([active, np.argsort(nus)[:5]]))
        slope = _limit_decay(f, samples.points[cand])
        wit["limit_decay_slope"] = slope
        if slope is not None and slope > DECAY_SLOPE:
            verdict = FAIL
    return Certificate("THM1", verdict, wit, {**tol.as_dict(), "eps_sing_abs": eps},
                       notes=[SAMPLED_NOTE])


def _pairs(N: int, budget: int | None, rng) -> np.ndarray:
    if budget is None:
        budget = PAIR_ALL_LIMIT ** 2
    if N <= PAIR_ALL_LIMIT or N * (N - 1) // 2 <= budget:
        i, j = np.triu_indices(N, 1)
        return np.stack([i, j], axis=1)
    P = rng.integers(0, N, size=(budget, 2))
    return P[P[:, 0] != P[:, 1]]


def kernel_pair_witness(A, B, eps_ker: float):
    """Unit ``u`` in ``ker(A+B)`` maximising ``|A u|``, or ``None``.

    The kernel is taken at absolute threshold ``eps_ker``; a witness is
    returned only when ``|A u| > 10 eps_ker``, i.e. ``ker(A+B)`` is not
    contained in ``ker A``.
    """
    out = _kernel_witness_batch(np.asarray(A, float)[None], np.asarray(B, float)[None], eps_ker)
    u, sum_norm, a_norm = out[0][0], out[1][0], out[2][0]
    if not a_norm > 10 * eps_ker:
        return None
    return u, float(sum_norm), float(a_norm)


def _kernel_witness_batch(A: np.ndarray, B: np.ndarray, eps_ker: float):
    S = A + B
    N, n, m = S.shape
    _, s, Vt = np.linalg.svd(S, full_matrices=True)
    sv = np.zeros((N, m))
    sv[:, : s.shape[1]] = s
    mask = sv <= eps_ker  # (N, m) kernel rows of Vt
    V = np.transpose(Vt, (0, 2, 1))  # columns are right singular vectors
    K = V * mask[:, None, :]
    M = A @ K  # (N, n, m)
    _, s2, Vt2 = np.linalg.svd(M, full_matrices=True)
    y = Vt2[:, 0, :]
    u = np.einsum("kij,kj->ki", K, y)
    un = np.linalg.norm(u, axis=1)
    has = mask.any(axis=1) & (un > 0.5)
    u = np.where(has[:, None], u / np.where(un > 0, un, 1.0)[:, None], 0.0)
    a_norm = np.where(has, np.linalg.norm(np.einsum("kij,kj->ki", A, u), axis=1), 0.0)
    sum_norm = np.where(has, np.linalg.norm(np.einsum("kij,kj->ki", S, u), axis=1), np.inf)
    return u, sum_norm, a_norm


def check_Ce(samples: JacobianSampleSet, directions=None, tol: Tolerances | None = None,
             pair_budget: int | None = None, seed: int = 0, max_witnesses: int = 5) -> Certificate:
    """Extremality of every kernel slice in the sampled hull.

    Two sampled tests: (a) ``ker(A+B) ⊆ ker A`` for pairs of samples, and
    (b) the origin is a vertex of ``conv({A v} ∪ {0})`` for each grid
    direction. Any violation is a failure witness.
    """
    tol = tol or Tolerances()
    rng = np.random.default_rng(seed)
    J = samples.matrices
    eps_ker = tol.eps_ker * samples.sigma_max
    P = _pairs(len(J), pair_budget, rng)
    kernel_wit = []
    for start in range(0, len(P), 20000):
        chunk = P[start:start + 20000]
        A, B = J[chunk[:, 0]], J[chunk[:, 1]]
        u, sn, an = _kernel_witness_batch(A, B, eps_ker)
        # test both orders: ker(A+B) ⊆ ker A and ⊆ ker B
        bn = np.linalg.norm(np.einsum("kij,kj->ki", B, u), axis=1)
        score = np.maximum(an, bn)
        hit = np.flatnonzero(score > 10 * eps_ker)
        for k in hit:
            kernel_wit.append((float(score[k]), chunk[k], u[k], float(sn[k])))
    kernel_wit.sort(key=lambda t: -t[0])

    V = sphere_grid(J.shape[2]) if directions is None else np.asarray(directions, float)
    bad_dirs = []
    for v in V:
        C = J @ v
        rad = float(np.linalg.norm(C, axis=1).max())
        if not is_extremal_origin(np.vstack([C, np.zeros(C.shape[1])]), tol.eps_ext * rad,
                                  tol.eps_qp):
            bad_dirs.append(v)

    wit = {"pairs_tested": len(P), "kernel_witness_count": len(kernel_wit),
           "directions_tested": len(V), "nonvertex_direction_count": len(bad_dirs)}
    wit["kernel_witnesses"] = [
        {"pair": pair, "points": samples.points[pair], "A": J[pair[0]], "B": J[pair[1]],
         "u": u, "norm_sum_u": sn, "norm_Au": s}
        for s, pair, u, sn in kernel_wit[:max_witnesses]
    ]
    wit["nonvertex_directions"] = bad_dirs[:max_witnesses]
    verdict = FAIL if kernel_wit or bad_dirs else PASS
    return Certificate("THM2", verdict, wit, {**tol.as_dict(), "eps_ker_abs": eps_ker},
                       conditions={"kernel_pairs": FAIL if kernel_wit else PASS,
                                   "vertex_directions": FAIL if bad_dirs else PASS},
                       notes=[SAMPLED_NOTE])


def check_Cce(samples: JacobianSampleSet, directions=None, tol: Tolerances | None = None,
              max_witnesses: int = 5) -> Certificate:
    """Pointedness of the sampled cone of ``{A v}`` for every grid direction."""
    tol = tol or Tolerances()
    J = samples.matrices
    V = sphere_grid(J.shape[2]) if directions is None else np.asarray(directions, float)
    bad = [v for v in V if not conic_extremality(J @ v, tol.eps_ext, tol.eps_qp)]
    wit = {"directions_tested": len(V), "failing_direction_count": len(bad),
           "failing_directions": bad[:max_witnesses]}
    return Certificate("THM21", FAIL if bad else PASS, wit, tol.as_dict(), notes=[SAMPLED_NOTE])


def check_thm12(f: PiecewiseMap, samples: JacobianSampleSet, loci=None, pair_budget: int = 2000,
                tol: Tolerances | None = None, directions=None, seed: int = 0) -> Certificate:
    """Generic regularity off a declared set B plus injectivity on B.

    ``loci`` are expressions whose zero sets make up B (default: the map's
    declared loci). Regularity is the δ-bound on samples off B; injectivity
    on B is probed by pairwise evaluation at points located on B.
    """
    from .probes import injectivity_probe, map_scale

    tol = tol or Tolerances()
    loci = tuple(f.loci if loci is None else loci)
    rng = np.random.default_rng(seed)
    off = np.ones(len(samples), dtype=bool)
    for g in loci:
        off &= _zero_set_distance(g, samples.points) > samples.eps_bdry
    notes = [SAMPLED_NOTE, LOCUS_NOTE, "injectivity on B is a pairwise heuristic"]
    if not off.any():
        return Certificate("THM12", INCONCLUSIVE, {"reason": "no samples off B"},
                           tol.as_dict(), notes=notes)
    c_r = check_thm1(samples.subset(off), directions, tol, f=f)

    pts = [boundary_points(f, g, max(2, int(np.sqrt(2 * pair_budget)) + 1), rng) for g in loci]
    pts = np.concatenate(pts) if pts else np.empty((0, f.m))
    scale = map_scale(f, rng)
    eps_const = tol.eps_const * scale
    inj_wit = None
    if len(pts) >= 2:
        vals, status = f.evaluate_batch(pts)
        good = status == 0
        pts, vals = pts[good], vals[good]
        i, j = np.triu_indices(len(pts), 1)
        if len(i) > pair_budget:
            sel = rng.choice(len(i), pair_budget, replace=False)
            i, j = i[sel], j[sel]
        df = np.linalg.norm(vals[i] - vals[j], axis=1)
        dx = np.linalg.norm(pts[i] - pts[j], axis=1)
        hit = np.flatnonzero((df <= eps_const) & (dx > 100 * eps_const))
        if hit.size:
            k = hit[0]
            inj_wit = {"x": pts[i[k]], "x_prime": pts[j[k]], "gap": df[k]}
    cond = {"C_r": c_r.verdict, "I": FAIL if inj_wit else PASS_HEURISTIC}
    if not loci:
        cond["I"] = PASS  # B is empty
    wit = {"delta": c_r.witnesses["delta"], "direction": c_r.witnesses["direction"],
           "samples_off_B": int(off.sum()), "points_on_B": len(pts)}
    if inj_wit:
        wit["injectivity_on_B_witness"] = inj_wit
    ok = cond["C_r"] == PASS and cond["I"] in (PASS, PASS_HEURISTIC)
    if not ok:
        probe = injectivity_probe(f, pair_budget=pair_budget, tol=tol, seed=seed)
        if "witness" in probe.witnesses:
            wit["non_injectivity_witness"] = probe.witnesses["witness"]
    verdict = (PASS if cond["I"] == PASS else PASS_HEURISTIC) if ok else FAIL
    return Certificate("THM12", verdict, wit, {**tol.as_dict(), "eps_const_abs": eps_const},
                       conditions=cond, notes=notes)

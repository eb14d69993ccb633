"""Evaluation-based probes: constant segments and non-injective pairs."""

from __future__ import annotations

import numpy as np

from ..piecewise import Domain, PiecewiseMap
from .core import (
    FAIL,
    PASS_HEURISTIC,
    Certificate,
    JacobianSampleSet,
    SampleStrategy,
    Tolerances,
    sample_jacobians,
)

SEGMENT_POINTS = 17


def map_scale(f: PiecewiseMap, rng=None, count: int = 512, domain: Domain | None = None) -> float:
    """Largest sampled ``|f(x)|``, used to make ``eps_const`` scale-free."""
    rng = rng if rng is not None else np.random.default_rng(0)
    domain = domain or f.domain
    X = np.concatenate([domain.grid(5), domain.sample(rng, count)])
    vals, status = f.evaluate_batch(X, check_domain=False)
    norms = np.linalg.norm(vals[status == 0], axis=1)
    s = float(norms.max()) if norms.size else 0.0
    return s if s > 0 else 1.0


def _segment(domain: Domain, p, u, half: float):
    """17 points on ``p + t u``, shrinking the length until all lie in the domain."""
    t = np.linspace(-1.0, 1.0, SEGMENT_POINTS)
    for _ in range(30):
        S = p + np.outer(t * half, u)
        if domain.contains(S).all():
            return S
        half *= 0.5
    return None


def _constant_segments(f: PiecewiseMap, segs, eps_const: float):
    out = []
    for S in segs:
        vals, status = f.evaluate_batch(S)
        if (status != 0).any():
            continue
        spread = float(np.max(np.linalg.norm(vals - vals[0], axis=1)))
        if spread <= eps_const:
            out.append({"start": S[0], "end": S[-1], "spread": spread, "value": vals[0]})
    return out


def degenerate_points(samples: JacobianSampleSet | None, limit: int = 40,
                      rel: float = 1e-3) -> np.ndarray:
    """Nondifferentiable sample points plus samples with nearly singular Jacobians."""
    if samples is None:
        return np.empty((0, 0))
    pts = [samples.nondiff_points] if samples.nondiff_points.size else []
    s = np.linalg.svd(samples.matrices, compute_uv=False)
    ratio = s[:, -1] / np.maximum(s[:, 0], 1e-300)
    ratio[s[:, 0] == 0] = 0.0
    order = np.argsort(ratio)
    order = order[ratio[order] <= rel][:limit]
    pts.append(samples.points[order])
    P = np.concatenate(pts) if pts else np.empty((0, samples.points.shape[1]))
    if len(P) > 2 * limit:
        P = P[np.linspace(0, len(P) - 1, 2 * limit).astype(int)]
    return P


def axis_segments(f: PiecewiseMap, points, axes=None, half: float | None = None):
    half = half or 0.1 * f.domain.diameter
    axes = range(f.m) if axes is None else axes
    segs = []
    for p in np.atleast_2d(points):
        if p.size == 0:
            continue
        for k in axes:
            u = np.zeros(f.m)
            u[k] = 1.0
            S = _segment(f.domain, p, u, half)
            if S is not None:
                segs.append(S)
    return segs


def check_S(f: PiecewiseMap, segment_budget: int = 200, samples: JacobianSampleSet | None = None,
            tol: Tolerances | None = None, seed: int = 0, max_witnesses: int = 5) -> Certificate:
    """Refutation test for "f is not constant on any segment".

    Random segments plus axis-aligned segments through degenerate points;
    a segment whose 17 sampled values stay within ``eps_const`` is a witness.
    Without ``samples`` the default sample set is drawn.
    """
    tol = tol or Tolerances()
    if samples is None:
        samples = sample_jacobians(f, SampleStrategy(seed=seed))
    rng = np.random.default_rng(seed)
    eps_const = tol.eps_const * map_scale(f, rng)
    half = 0.1 * f.domain.diameter
    P = f.domain.sample(rng, segment_budget)
    U = rng.standard_normal((segment_budget, f.m))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    segs = [S for S in (_segment(f.domain, p, u, half) for p, u in zip(P, U)) if S is not None]
    segs += axis_segments(f, degenerate_points(samples), half=half)
    found = _constant_segments(f, segs, eps_const)
    wit = {"segments_tested": len(segs), "constant_segments": found[:max_witnesses]}
    return Certificate("S", FAIL if found else PASS_HEURISTIC, wit,
                       {**tol.as_dict(), "eps_const_abs": eps_const},
                       notes=["refutation-only heuristic: a pass means no constant segment was found"])


def collision_search(f: PiecewiseMap, rng, restarts: int = 20, min_sep: float = 0.0,
                     domain: Domain | None = None):
    """Look for ``x != x'`` with ``f(x) = f(x')`` by least squares from random starts."""
    from scipy.optimize import least_squares

    domain = domain or f.domain
    lo, hi = domain.bounds()
    best = None
    X0 = domain.sample(rng, restarts)
    Y0 = domain.sample(rng, restarts)
    for x, y0 in zip(X0, Y0):
        fx, st = f.evaluate_batch(x[None])
        if st[0] != 0:
            continue
        fx = fx[0]

        def resid(y):
            v, s = f.evaluate_batch(y[None], check_domain=False)
            return v[0] - fx if s[0] == 0 else np.full(f.n, 1e6)

        try:
            r = least_squares(resid, y0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                              max_nfev=400)
        except ValueError:
            continue
        y = r.x
        if not domain.contains(y[None])[0]:
            continue
        sep = float(np.linalg.norm(y - x))
        if sep <= min_sep:
            continue
        gap = float(np.linalg.norm(resid(y)))
        if best is None or gap < best["gap"]:
            best = {"x": x, "x_prime": y, "gap": gap, "separation": sep}
    return best


def injectivity_probe(f: PiecewiseMap, pair_budget: int = 10_000, tol: Tolerances | None = None,
                      seed: int = 0, domain: Domain | None = None, restarts: int = 20) -> Certificate:
    """Random-pair estimate of ``min |f(x') - f(x)| / |x' - x|`` plus a collision search."""
    tol = tol or Tolerances()
    rng = np.random.default_rng(seed)
    domain = domain or f.domain
    eps_const = tol.eps_const * map_scale(f, rng, domain=domain)
    X = domain.sample(rng, pair_budget)
    Y = domain.sample(rng, pair_budget)
    fx, sx = f.evaluate_batch(X, check_domain=False)
    fy, sy = f.evaluate_batch(Y, check_domain=False)
    ok = (sx == 0) & (sy == 0)
    dx = np.linalg.norm(X - Y, axis=1)
    df = np.linalg.norm(fx - fy, axis=1)
    ok &= dx > 0
    ratio = np.full(len(X), np.inf)
    ratio[ok] = df[ok] / dx[ok]
    k = int(np.argmin(ratio))
    wit = {"pairs": int(ok.sum()), "ell_hat": float(ratio[k]),
           "ell_hat_pair": {"x": X[k], "x_prime": Y[k]}}
    min_sep = max(100 * eps_const, 1e-6 * domain.diameter)
    hit = np.flatnonzero(ok & (df <= eps_const) & (dx > min_sep))
    witness = None
    if hit.size:
        j = hit[0]
        witness = {"x": X[j], "x_prime": Y[j], "gap": float(df[j]), "separation": float(dx[j])}
    elif restarts:
        # a tighter separation floor keeps slow convergence at flat points from
        # passing as a collision
        c = collision_search(f, rng, restarts, max(min_sep, 1e-2 * domain.diameter), domain)
        if c is not None and c["gap"] <= eps_const:
            witness = c
    if witness is not None:
        witness["f_x"] = f.evaluate_batch(witness["x"][None], check_domain=False)[0][0]
        witness["f_x_prime"] = f.evaluate_batch(witness["x_prime"][None], check_domain=False)[0][0]
        wit["witness"] = witness
    verdict = FAIL if witness is not None else PASS_HEURISTIC
    return Certificate("PROBE", verdict, wit, {**tol.as_dict(), "eps_const_abs": eps_const},
                       notes=["pairwise probe: a pass only means no collision was found"])

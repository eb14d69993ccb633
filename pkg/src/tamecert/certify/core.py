"""Sampling of Jacobian sets and the certificate record."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..convexgeo import conic_extremality, is_extremal_origin, min_norm_point
from ..expr import EvalState, evaluate_dual
from ..piecewise import NONDIFF, OK, PiecewiseMap, _zero_set_distance, boundary_points

PASS = "pass"
PASS_HEURISTIC = "pass-heuristic"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

SAMPLED_NOTE = "sampled criterion: verdict is an estimate over finitely many Jacobians, not a proof"
LOCUS_NOTE = "B(f) approximated by piece boundaries, kink loci and declared loci"


@dataclass(frozen=True)
class Tolerances:
    """Scale-free tolerance factors; absolute values are derived per run."""

    eps_bdry: float = 1e-7  # x domain diameter
    eps_sing: float = 1e-9  # x largest singular value
    eps_ker: float = 1e-7  # x largest singular value over the sample set
    eps_const: float = 1e-9  # x map scale
    eps_ext: float = 1e-8  # x cloud radius
    eps_qp: float = 1e-12  # x squared cloud radius
    eps_div: float = 1e-6
    eps_minor: float = 1e-3  # x median |minor|
    eps_cont: float = 1e-9
    winding_tol: float = 0.01

    @classmethod
    def from_overrides(cls, overrides: dict | None = None) -> "Tolerances":
        overrides = dict(overrides or {})
        names = {f.name for f in fields(cls)}
        unknown = set(overrides) - names
        if unknown:
            raise ValueError(f"unknown tolerance(s): {', '.join(sorted(unknown))}")
        for k, v in overrides.items():
            v = float(v)
            if not v > 0:
                raise ValueError(f"tolerance {k} must be positive")
            overrides[k] = v
        return cls(**overrides)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SampleStrategy:
    grid: int = 11  # points per axis
    random: int = 500
    boundary: int = 50  # refined points per locus
    seed: int = 0
    eps_bdry: float | None = None  # absolute; default 1e-7 x diameter

    def __post_init__(self):
        for name in ("grid", "random", "boundary"):
            if getattr(self, name) <= 0:
                raise ValueError(f"sample count {name} must be positive")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class JacobianSampleSet:
    """Jacobians at differentiable sample points, with provenance."""

    points: np.ndarray  # (N, m)
    matrices: np.ndarray  # (N, n, m)
    pieces: np.ndarray  # (N,)
    kinds: np.ndarray  # (N,) 0 grid, 1 random, 2 refined
    map_hash: str
    strategy: SampleStrategy
    eps_bdry: float
    nondiff_points: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def sigma_max(self) -> float:
        return float(np.max(np.linalg.svd(self.matrices, compute_uv=False)[:, 0]))

    def subset(self, mask) -> "JacobianSampleSet":
        mask = np.asarray(mask)
        return JacobianSampleSet(self.points[mask], self.matrices[mask], self.pieces[mask],
                                 self.kinds[mask], self.map_hash, self.strategy,
                                 self.eps_bdry, self.nondiff_points)

    def images(self, v) -> np.ndarray:
        """The cloud ``{A v}`` for the sampled matrices."""
        return self.matrices @ np.asarray(v, float)


class EmptySampleError(RuntimeError):
    pass


def _refine(f: PiecewiseMap, count: int, eps: float, rng) -> np.ndarray:
    """Points at distance ``[1.5, 10] * eps`` on both sides of each locus."""
    out = []
    loci = f.boundary_exprs + f.kink_exprs + tuple(f.loci)
    seen = []
    for g in loci:
        if g in seen:
            continue
        seen.append(g)
        B = boundary_points(f, g, count, rng)
        if len(B) == 0:
            continue
        st = EvalState(len(B))
        _, grad = evaluate_dual(g, B, st)
        gn = np.linalg.norm(grad, axis=1)
        ok = np.isfinite(gn) & (gn > 0)
        B, normal = B[ok], grad[ok] / gn[ok, None]
        d = rng.uniform(1.5, 10.0, size=len(B)) * eps
        out += [B + d[:, None] * normal, B - d[:, None] * normal]
    for p in f.domain.excluded:
        u = rng.standard_normal((count, f.m))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        d = rng.uniform(1.5, 10.0, size=count) * eps
        out.append(np.array(p, float) + d[:, None] * u)
    if not out:
        return np.empty((0, f.m))
    R = np.concatenate(out)
    return R[f.domain.contains(R)]


def sample_jacobians(f: PiecewiseMap, strategy: SampleStrategy | None = None) -> JacobianSampleSet:
    """Grid, uniform-random and boundary-refined Jacobian samples of ``f``.

    Points where ``f`` is (numerically) not differentiable are dropped but
    kept in ``nondiff_points`` for the degeneracy probes.
    """
    strategy = strategy or SampleStrategy()
    rng = np.random.default_rng(strategy.seed)
    eps = strategy.eps_bdry if strategy.eps_bdry is not None else f.eps_bdry_default
    G = f.domain.grid(strategy.grid)
    R = f.domain.sample(rng, strategy.random)
    F = _refine(f, strategy.boundary, eps, rng)
    X = np.concatenate([G, R, F])
    kinds = np.concatenate([np.zeros(len(G), int), np.ones(len(R), int), np.full(len(F), 2)])
    J, status = f.jacobian_batch(X, eps)
    ok = status == OK
    if not ok.any():
        raise EmptySampleError("no differentiable sample point at this tolerance")
    idx, _ = f.select_pieces(X[ok])
    return JacobianSampleSet(X[ok], J[ok], idx, kinds[ok], f.hash, strategy, eps,
                             X[status == NONDIFF])


DECAY_SLOPE = 0.1  # |log-log slope| above which a quantity is taken to vanish or blow up


def approach_path(f: PiecewiseMap, x, near: float | None = None, steps: int = 5):
    """Jacobians along a path from ``x`` straight towards the nearest locus.

    The foot point is the linearised projection of ``x`` onto the closest
    boundary, kink or declared locus (or the excluded point); distances shrink
    by 10 per step. Returns ``(distances, matrices)`` or ``None`` when ``x`` is
    not within ``near`` (default ``1e3 * eps_bdry``) of a locus.
    """
    x = np.asarray(x, float)
    near = 1e3 * f.eps_bdry_default if near is None else near
    best, foot = np.inf, None
    for g in f.boundary_exprs + f.kink_exprs + tuple(f.loci):
        d = float(_zero_set_distance(g, x[None])[0])
        if 0 < d < best:
            st = EvalState(1)
            v, grad = evaluate_dual(g, x[None], st)
            gn2 = float(grad[0] @ grad[0])
            if np.isfinite(gn2) and gn2 > 0:
                best, foot = d, x - v[0] * grad[0] / gn2
    for p in f.domain.excluded:
        d = float(np.linalg.norm(x - np.asarray(p, float)))
        if 0 < d < best:
            best, foot = d, np.asarray(p, float)
    if foot is None or best > near:
        return None
    d0 = float(np.linalg.norm(x - foot))
    if d0 == 0:
        return None
    u = (x - foot) / d0
    ts = d0 * 10.0 ** -np.arange(steps)
    J, status = f.jacobian_batch(foot + ts[:, None] * u, eps_bdry=0.0)
    ok = status == OK
    if ok.sum() < 3:
        return None
    return ts[ok], J[ok]


def loglog_slope(ts, values):
    """Least-squares slope of ``log|values|`` against ``log ts`` (``None`` if degenerate)."""
    v = np.abs(np.asarray(values, float))
    good = (v > 0) & np.isfinite(v)
    if good.sum() < 3:
        return None
    return float(np.polyfit(np.log(np.asarray(ts)[good]), np.log(v[good]), 1)[0])


def sphere_grid(m: int, count: int | None = None, circles: int = 360) -> np.ndarray:
    """Unit directions: uniform angles for m=2, a Fibonacci lattice for m=3.

    For m=3 the three coordinate great circles are added (``circles`` points
    each), since degenerate directions of axis-aligned examples lie there.
    """
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        count = count or 720
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    count = count or 2000
    if m == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        r = np.sqrt(1 - z * z)
        phi = np.pi * (3 - np.sqrt(5)) * k
        V = [np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)]
        if circles:
            t = 2 * np.pi * np.arange(circles) / circles
            c, s = np.cos(t), np.sin(t)
            o = np.zeros_like(t)
            V += [np.stack(x, axis=1) for x in ((c, s, o), (o, c, s), (s, o, c))]
        return np.concatenate(V)
    V = np.random.default_rng(0).standard_normal((count, m))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


@dataclass(eq=False)
class DirectionalHull:
    v: np.ndarray
    cloud: np.ndarray
    distance: float
    extremal: bool
    conic: bool


def directional_hull(samples: JacobianSampleSet, v, tol: Tolerances | None = None) -> DirectionalHull:
    tol = tol or Tolerances()
    C = samples.images(v)
    rad = float(np.linalg.norm(C, axis=1).max())
    r = min_norm_point(C, tol.eps_qp)
    ext = is_extremal_origin(np.vstack([C, np.zeros(C.shape[1])]), tol.eps_ext * rad, tol.eps_qp)
    return DirectionalHull(np.asarray(v, float), C, r.distance, ext,
                           conic_extremality(C, tol.eps_ext, tol.eps_qp))


@dataclass(eq=False)
class Certificate:
    theorem: str  # THM1 | THM12 | THM2 | THM21 | THM3 | THM4 | WINDING | FP | S | PROBE
    verdict: str
    witnesses: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    sampled_only: bool = True
    conditions: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.verdict not in (PASS, PASS_HEURISTIC, FAIL, INCONCLUSIVE):
            raise ValueError(f"bad verdict {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict in (PASS, PASS_HEURISTIC)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "verdict": self.verdict,
            "conditions": jsonable(self.conditions),
            "witnesses": jsonable(self.witnesses),
            "tolerances": jsonable(self.tolerances),
            "sampled_only": self.sampled_only,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(d["theorem"], d["verdict"], d.get("witnesses", {}), d.get("tolerances", {}),
                   d.get("sampled_only", True), d.get("conditions", {}), d.get("notes", []))


def jsonable(obj):
    """Plain JSON types; matrices become row-major nested lists.

    NaN maps to ``None`` and infinities to the strings ``"inf"``/``"-inf"``.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if np.isnan(x):
            return None
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)

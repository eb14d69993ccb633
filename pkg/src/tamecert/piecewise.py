"""Piecewise closed-form maps: evaluation, Jacobians, directional derivatives.

A :class:`PiecewiseMap` is an ordered list of guarded pieces; the first piece
whose guard holds at a point defines the value there. The nondifferentiability
set B(f) is approximated by the union of piece boundaries, zero sets of
``abs``/sub-unit-root arguments, declared loci and excluded points. A point
within ``eps_bdry`` of that union gets no Jacobian.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .expr import (
    EvalState,
    Expr,
    PoleError,
    Sub,
    evaluate,
    evaluate_dual,
    kink_arguments,
)


class DomainError(ValueError):
    """Point outside the declared domain."""


class NoPieceError(ValueError):
    """No piece guard holds at the point."""


class _Nondifferentiable:
    def __repr__(self):
        return "NONDIFFERENTIABLE"

    def __bool__(self):
        return False


NONDIFFERENTIABLE = _Nondifferentiable()

# status codes returned by the batch routines
OK, POLE, NOPIECE, NONDIFF, OUTSIDE = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class Comparison:
    lhs: Expr
    op: str  # one of ">=", ">", "<=", "<"
    rhs: Expr

    @property
    def strict(self) -> bool:
        return self.op in (">", "<")

    @property
    def expr(self) -> Expr:
        """``g`` such that the comparison reads ``g >= 0`` (or ``g > 0``)."""
        if self.op in (">=", ">"):
            return Sub(self.lhs, self.rhs)
        return Sub(self.rhs, self.lhs)


@dataclass(frozen=True)
class Piece:
    guards: tuple  # conjunction of Comparison; empty means "true"
    components: tuple  # n expressions


@dataclass(frozen=True)
class Domain:
    kind: str = "box"  # "box" or "ball"
    lower: tuple = ()
    upper: tuple = ()
    center: tuple = ()
    radius: float = 1.0
    inner: float = 0.0
    excluded: tuple = ()

    @classmethod
    def box(cls, m: int, lo: float = -1.0, hi: float = 1.0, excluded=()) -> "Domain":
        return cls("box", lower=(lo,) * m, upper=(hi,) * m, excluded=tuple(excluded))

    @property
    def dim(self) -> int:
        return len(self.lower) if self.kind == "box" else len(self.center)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "box":
            return np.array(self.lower, float), np.array(self.upper, float)
        c = np.array(self.center, float)
        return c - self.radius, c + self.radius

    @property
    def diameter(self) -> float:
        lo, hi = self.bounds()
        if self.kind == "ball":
            return 2.0 * self.radius
        return float(np.linalg.norm(hi - lo))

    def contains(self, X: np.ndarray, *, keep_excluded: bool = False) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if self.kind == "box":
            lo, hi = self.bounds()
            ok = np.all((X >= lo) & (X <= hi), axis=1)
        else:
            r = np.linalg.norm(X - np.array(self.center, float), axis=1)
            ok = (r <= self.radius) & (r >= self.inner)
        if not keep_excluded:
            for p in self.excluded:
                ok &= np.any(X != np.array(p, float), axis=1)
        return ok

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform points of the domain (rejection sampling from the bounding box)."""
        lo, hi = self.bounds()
        out = []
        have = 0
        while have < count:
            Y = rng.uniform(lo, hi, size=(max(2 * (count - have), 16), len(lo)))
            Y = Y[self.contains(Y)]
            out.append(Y)
            have += len(Y)
        return np.concatenate(out)[:count]

    def grid(self, resolution: int) -> np.ndarray:
        lo, hi = self.bounds()
        axes = [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]
        G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        return G[self.contains(G)]


@dataclass(frozen=True)
class PiecewiseMap:
    m: int
    n: int
    pieces: tuple
    domain: Domain
    loci: tuple = ()  # declared nondifferentiable loci, as zero sets
    name: str = field(default="", compare=False)

    # ------------------------------------------------------------------ ids

    def to_text(self) -> str:
        from .dsl import format_map

        return format_map(self)

    @cached_property
    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    @cached_property
    def boundary_exprs(self) -> tuple:
        """Guard expressions of every piece (zero sets bound the pieces)."""
        return tuple(c.expr for p in self.pieces for c in p.guards)

    @cached_property
    def kink_exprs(self) -> tuple:
        out = []
        for p in self.pieces:
            for comp in p.components:
                for k in kink_arguments(comp):
                    if k not in out:
                        out.append(k)
        return tuple(out)

    @property
    def eps_bdry_default(self) -> float:
        return 1e-7 * self.domain.diameter

    # ------------------------------------------------------------- pieces

    def select_pieces(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """First matching piece index per row (``-1`` if none) and a pole mask."""
        X = np.atleast_2d(np.asarray(X, float))
        N = X.shape[0]
        idx = np.full(N, -1)
        st = EvalState(N)
        for k, piece in enumerate(self.pieces):
            todo = idx < 0
            if not todo.any():
                break
            ok = todo.copy()
            for c in piece.guards:
                g = evaluate(c.expr, X, st)
                ok &= (g > 0) if c.strict else (g >= 0)
            idx[ok] = k
        return idx, st.pole

    def evaluate_batch(self, X: np.ndarray, *, check_domain: bool = True):
        """Values ``(N, n)`` with a status code per row."""
        X = np.atleast_2d(np.asarray(X, float))
        N = X.shape[0]
        out = np.full((N, self.n), np.nan)
        status = np.zeros(N, dtype=int)
        idx, gpole = self.select_pieces(X)
        status[idx < 0] = NOPIECE
        status[gpole] = POLE
        for k, piece in enumerate(self.pieces):
            rows = np.flatnonzero((idx == k) & (status == OK))
            if rows.size == 0:
                continue
            st = EvalState(rows.size)
            for j, comp in enumerate(piece.components):
                out[rows, j] = evaluate(comp, X[rows], st)
            status[rows[st.pole]] = POLE
        if check_domain:
            status[~self.domain.contains(X, keep_excluded=True)] = OUTSIDE
        out[status != OK] = np.nan
        return out, status

    def __call__(self, x) -> np.ndarray:
        return eval_map(self, x)

    # ------------------------------------------------------------ jacobian

    def jacobian_batch(self, X: np.ndarray, eps_bdry: float | None = None):
        """Jacobians ``(N, n, m)`` and a status code per row.

        Rows within ``eps_bdry`` of a piece boundary, kink locus, declared
        locus or excluded point get status ``NONDIFF``.
        """
        if eps_bdry is None:
            eps_bdry = self.eps_bdry_default
        X = np.atleast_2d(np.asarray(X, float))
        N = X.shape[0]
        J = np.full((N, self.n, self.m), np.nan)
        status = np.zeros(N, dtype=int)
        idx, gpole = self.select_pieces(X)
        status[idx < 0] = NOPIECE
        status[gpole] = POLE
        status[~self.domain.contains(X, keep_excluded=True)] = OUTSIDE
        for p in self.domain.excluded:
            near = np.linalg.norm(X - np.array(p, float), axis=1) <= eps_bdry
            status[near & (status == OK)] = NONDIFF

        for k, piece in enumerate(self.pieces):
            rows = np.flatnonzero((idx == k) & (status == OK))
            if rows.size == 0:
                continue
            Xk = X[rows]
            st = EvalState(rows.size)
            for j, comp in enumerate(piece.components):
                _, g = evaluate_dual(comp, Xk, st)
                J[rows, j, :] = g
            near = st.kink.copy()
            # earlier pieces' guards bound this piece too
            locus = [c.expr for pc in self.pieces[: k + 1] for c in pc.guards]
            locus += [a for comp in piece.components for a in kink_arguments(comp)]
            locus += list(self.loci)
            for g_expr in locus:
                near |= _near_zero_set(g_expr, Xk, eps_bdry)
            status[rows[near]] = NONDIFF
            status[rows[st.pole & ~near]] = POLE
        bad = status != OK
        J[bad] = np.nan
        finite = np.all(np.isfinite(J.reshape(N, -1)), axis=1)
        status[~bad & ~finite] = NONDIFF
        J[status != OK] = np.nan
        return J, status

    def locus_distance(self, X: np.ndarray) -> np.ndarray:
        """Linearised distance to the nearest boundary/kink/declared locus."""
        X = np.atleast_2d(np.asarray(X, float))
        d = np.full(X.shape[0], np.inf)
        for g_expr in self.boundary_exprs + self.kink_exprs + tuple(self.loci):
            d = np.minimum(d, _zero_set_distance(g_expr, X))
        for p in self.domain.excluded:
            d = np.minimum(d, np.linalg.norm(X - np.array(p, float), axis=1))
        return d


def _zero_set_distance(g_expr: Expr, X: np.ndarray) -> np.ndarray:
    st = EvalState(X.shape[0])
    v, g = evaluate_dual(g_expr, X, st)
    gn = np.linalg.norm(g, axis=1)
    with np.errstate(all="ignore"):
        d = np.where(gn > 0, np.abs(v) / gn, np.where(v == 0, 0.0, np.inf))
    d = np.where(st.kink | ~np.isfinite(v), 0.0, d)
    d = np.where(np.isnan(d), 0.0, d)
    return d


def _near_zero_set(g_expr: Expr, X: np.ndarray, eps: float) -> np.ndarray:
    return _zero_set_distance(g_expr, X) <= eps


# ---------------------------------------------------------------- public API

def eval_map(f: PiecewiseMap, x) -> np.ndarray:
    """Value of the first matching piece at ``x``."""
    x = np.asarray(x, float).reshape(1, -1)
    if x.shape[1] != f.m:
        raise ValueError(f"expected a point in R^{f.m}, got dimension {x.shape[1]}")
    vals, status = f.evaluate_batch(x)
    s = status[0]
    if s == OUTSIDE:
        raise DomainError(f"{x[0].tolist()} is outside the domain")
    if s == NOPIECE:
        raise NoPieceError(f"no piece matches {x[0].tolist()}")
    if s == POLE:
        raise PoleError(f"pole at {x[0].tolist()}")
    return vals[0]


def jacobian(f: PiecewiseMap, x, eps_bdry: float | None = None):
    """Jacobian ``n x m`` at ``x`` or :data:`NONDIFFERENTIABLE`."""
    x = np.asarray(x, float).reshape(1, -1)
    J, status = f.jacobian_batch(x, eps_bdry)
    s = status[0]
    if s == POLE:
        raise PoleError(f"pole at {x[0].tolist()}")
    if s == OUTSIDE:
        raise DomainError(f"{x[0].tolist()} is outside the domain")
    if s == NOPIECE:
        raise NoPieceError(f"no piece matches {x[0].tolist()}")
    if s == NONDIFF:
        return NONDIFFERENTIABLE
    return J[0]


def directional_derivative(f: PiecewiseMap, x, v, h: float = 1e-6, eps_div: float = 1e-6,
                           levels: int = 40) -> np.ndarray:
    """One-sided derivative of ``f`` at ``x`` along the unit vector ``v``.

    Returns the Richardson-refined quotient over ``h`` and ``h/2``. A component
    whose quotients keep growing as the step halves, past ``1/eps_div``, is
    reported as ``+inf`` or ``-inf``.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if h <= 0:
        raise ValueError("step must be positive")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    fx = eval_map(f, x)
    steps = h * 0.5 ** np.arange(levels)
    # below this the increment is lost to rounding in x + h v
    steps = steps[steps >= 1e-13 * max(1.0, float(np.linalg.norm(x)))]
    pts = x[None, :] + steps[:, None] * v[None, :]
    vals, status = f.evaluate_batch(pts)
    if status[0] == OUTSIDE or status[1] == OUTSIDE:
        raise DomainError("x + h v leaves the domain")
    if status[0] != OK or status[1] != OK:
        raise PoleError("pole on the probing segment")
    Q = (vals - fx) / steps[:, None]
    rich = 2.0 * Q[1] - Q[0]
    out = rich.copy()
    valid = status == OK
    Qv = np.abs(Q[valid])
    for j in range(f.n):
        col = Qv[:, j]
        if col.size < 8 or col[-1] <= 1.0 / eps_div:
            continue
        tail = col[-8:]
        growth = tail[1:] / np.maximum(tail[:-1], 1e-300)
        if np.all(growth > 1.05):
            out[j] = np.sign(Q[valid][-1, j]) * np.inf
    return out


def continuity_gaps(f: PiecewiseMap, samples: int = 100, seed: int = 0) -> list[dict]:
    """Largest value gap between adjacent pieces on sampled shared boundaries.

    For every guard of every piece, boundary points are located by bisection
    on random chords that cross its zero set; at each such point all pieces
    whose closure contains it are evaluated and compared.
    """
    rng = np.random.default_rng(seed)
    out = []
    for k, piece in enumerate(f.pieces):
        for c in piece.guards:
            pts = boundary_points(f, c.expr, samples, rng)
            if len(pts) == 0:
                continue
            gaps = _piece_gaps(f, pts)
            out.append({"piece": k, "guard": c, "points": len(pts),
                        "max_gap": float(np.nanmax(gaps)) if np.isfinite(gaps).any() else 0.0})
    return out


def _piece_gaps(f: PiecewiseMap, pts: np.ndarray) -> np.ndarray:
    """Spread of the values of all pieces that match near each point."""
    N = len(pts)
    scale = 1e-6 * f.domain.diameter
    rng = np.random.default_rng(1)
    gaps = np.zeros(N)
    for i, p in enumerate(pts):
        probe = p + scale * rng.standard_normal((16, f.m))
        idx, _ = f.select_pieces(probe)
        active = sorted(set(idx[idx >= 0].tolist()))
        vals = []
        for k in active:
            st = EvalState(1)
            v = np.array([evaluate(c, p[None, :], st)[0] for c in f.pieces[k].components])
            if not st.pole.any():
                vals.append(v)
        if len(vals) > 1:
            V = np.array(vals)
            gaps[i] = float(np.max(np.ptp(V, axis=0)))
    return gaps


def boundary_points(f: PiecewiseMap, g_expr: Expr, count: int,
                    rng: np.random.Generator, tries: int | None = None) -> np.ndarray:
    """Points of the domain on the zero set of ``g_expr``, found by bisection."""
    tries = tries or 20 * count
    A = f.domain.sample(rng, tries)
    B = f.domain.sample(rng, tries)
    st = EvalState(tries)
    ga = evaluate(g_expr, A, st)
    gb = evaluate(g_expr, B, st)
    cross = (np.sign(ga) * np.sign(gb) < 0) & ~st.pole
    A, B, ga = A[cross][:count], B[cross][:count], ga[cross][:count]
    if len(A) == 0:
        return np.empty((0, f.m))
    lo, hi = A.copy(), B.copy()
    slo = np.sign(ga)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        st = EvalState(len(mid))
        gm = evaluate(g_expr, mid, st)
        same = np.sign(gm) == slo
        lo = np.where(same[:, None], mid, lo)
        hi = np.where(same[:, None], hi, mid)
    return 0.5 * (lo + hi)

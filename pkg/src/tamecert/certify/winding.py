"""Planar degree of ``f/|f|`` and winding of the rotation part of ``df``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..piecewise import OK, PiecewiseMap
from .core import FAIL, INCONCLUSIVE, PASS, Certificate, Tolerances


class WindingError(ValueError):
    pass


@dataclass(frozen=True)
class WindingResult:
    degree: int  # of x -> f(x)/|f(x)| on the circle
    winding: int  # of the rotation factor of df along the circle
    degree_raw: float
    winding_raw: float
    flipped: bool  # df had negative determinant; precomposed with diag(1, -1)
    radius: float


MAX_STEP = np.pi / 4  # largest angle change allowed between neighbouring samples


def _turns(angles: np.ndarray, what: str) -> float:
    a = np.unwrap(np.append(angles, angles[0]))
    if np.abs(np.diff(a)).max() > MAX_STEP:
        raise WindingError(f"{what} is not resolved by the samples; it may vanish on the circle")
    return float((a[-1] - a[0]) / (2 * np.pi))


def _snap(x: float, tol: float, what: str) -> int:
    k = round(x)
    if abs(x - k) > tol:
        raise WindingError(f"{what} accumulated {x:.4f} turns, not an integer")
    return int(k)


def rotation_angle(J: np.ndarray) -> np.ndarray:
    """Angle of the orthogonal polar factor of each ``2x2`` matrix with ``det > 0``."""
    a, b, c, d = J[:, 0, 0], J[:, 0, 1], J[:, 1, 0], J[:, 1, 1]
    return np.arctan2(c - b, a + d)


def winding_number(f: PiecewiseMap, radius: float = 1.0, samples: int = 720, center=None,
                   tol: float = 0.01) -> WindingResult:
    """Degree of ``f/|f|`` and winding of ``p(df)`` on a circle.

    ``p`` is the polar projection ``GL+(2) -> SO(2)``. If ``det df < 0`` on the
    whole circle, ``df`` is first composed with ``diag(1, -1)``; a sign change
    means ``df`` is singular somewhere on the circle and is an error.
    """
    if f.m != 2 or f.n != 2:
        raise WindingError("winding numbers need a map R2 -> R2")
    c = np.zeros(2) if center is None else np.asarray(center, float)
    t = 2 * np.pi * np.arange(samples) / samples
    X = c + radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    vals, status = f.evaluate_batch(X)
    if (status != OK).any():
        raise WindingError("circle leaves the domain or hits a pole")
    scale = np.abs(vals).max()
    if np.linalg.norm(vals, axis=1).min() <= 1e-12 * max(scale, 1e-300):
        raise WindingError("f vanishes on the circle")
    deg_raw = _turns(np.arctan2(vals[:, 1], vals[:, 0]), "f/|f|")

    J, st = f.jacobian_batch(X)
    ok = st == OK
    if ok.mean() < 0.95:
        raise WindingError("df undefined at too many circle points")
    J = J[ok]
    det = np.linalg.det(J)
    dscale = np.abs(J).reshape(len(J), -1).max() ** 2
    if np.abs(det).min() <= 1e-12 * dscale or (det > 0).any() and (det < 0).any():
        raise WindingError("df is singular on the circle")
    flipped = bool(det[0] < 0)
    if flipped:
        J = J @ np.diag([1.0, -1.0])
    wind_raw = _turns(rotation_angle(J), "p(df)")
    return WindingResult(_snap(deg_raw, tol, "f/|f|"), _snap(wind_raw, tol, "p(df)"),
                         deg_raw, wind_raw, flipped, radius)


def default_radii(f: PiecewiseMap) -> tuple:
    d = f.domain
    if d.kind == "ball":
        lo = max(d.inner, 0.1 * d.radius)
        return (0.5 * (lo + d.radius), 0.9 * d.radius)
    lo, hi = d.bounds()
    r = float(np.min(np.minimum(-lo, hi)))
    if r <= 0:
        raise WindingError("the origin is not inside the domain")
    return (0.5 * r, 0.9 * r)


def check_winding(f: PiecewiseMap, radii=None, samples: int = 720,
                  tol: Tolerances | None = None) -> Certificate:
    """Null-homotopy test for ``df`` around the origin, at two radii.

    Passes when ``p(df)`` has winding 0 and ``f/|f|`` has degree ``±1`` at
    both radii; fails when the degree is not ``±1``.
    """
    tol = tol or Tolerances()
    if f.m != 2 or f.n != 2:
        return Certificate("WINDING", INCONCLUSIVE, {"reason": "only n = m = 2 is supported"},
                           tol.as_dict())
    try:
        radii = tuple(radii) if radii is not None else default_radii(f)
        res = [winding_number(f, r, samples, tol=tol.winding_tol) for r in radii]
    except WindingError as exc:
        return Certificate("WINDING", INCONCLUSIVE, {"reason": str(exc)}, tol.as_dict())
    wit = {"radii": list(radii), "degree": res[0].degree, "winding": res[0].winding,
           "degrees": [r.degree for r in res], "windings": [r.winding for r in res],
           "degree_raw": [r.degree_raw for r in res], "winding_raw": [r.winding_raw for r in res],
           "flipped": any(r.flipped for r in res)}
    notes = ["reflection diag(1,-1) applied to df"] if wit["flipped"] else []
    if len({(r.degree, r.winding) for r in res}) > 1:
        notes.append("degree or winding differs between radii")
        return Certificate("WINDING", INCONCLUSIVE, wit, tol.as_dict(), notes=notes)
    deg, wind = res[0].degree, res[0].winding
    if abs(deg) != 1:
        verdict = FAIL
    elif wind == 0:
        verdict = PASS
    else:
        verdict = INCONCLUSIVE
    return Certificate("WINDING", verdict, wit, tol.as_dict(), notes=notes)

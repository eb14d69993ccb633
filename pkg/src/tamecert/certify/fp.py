"""Quasi-homogeneous maps ``F_P(x) = (P(x)^{w_i} x_i)`` and their explicit inverses."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..dsl import parse_expr
from ..expr import Add, Const, Expr, Mul, Pow, Var, evaluate, rational_power, to_text
from ..piecewise import Comparison, Domain, DomainError, Piece, PiecewiseMap


class FPSpecError(ValueError):
    pass


def _frac(v) -> Fraction:
    return Fraction(str(v)) if not isinstance(v, Fraction) else v


@dataclass(frozen=True, eq=False)
class FPSpec:
    """Weights, degree and generator of a quasi-homogeneous map.

    ``P`` must satisfy ``P(t^w x) = t^d P(x)`` and be positive off the origin.
    The conjugate degree ``d'`` is fixed by ``(d + 1)(d' + 1) = 1``.
    """

    weights: tuple
    d: Fraction
    P: Expr
    domain: Domain
    d_prime: Fraction | None = None
    name: str = ""
    source: str = field(default="", repr=False)

    def __post_init__(self):
        w = tuple(_frac(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        d = _frac(self.d)
        object.__setattr__(self, "d", d)
        if d + 1 <= 0:
            raise FPSpecError("need d + 1 > 0")
        if any(x <= 0 for x in w):
            raise FPSpecError("weights must be positive")
        dp = 1 / (d + 1) - 1
        if self.d_prime is not None:
            given = _frac(self.d_prime)
            if abs(float((d + 1) * (given + 1)) - 1.0) > 1e-12:
                raise FPSpecError("(d + 1)(d' + 1) must equal 1")
            dp = given
        object.__setattr__(self, "d_prime", dp)
        for x in w:
            for e in (x, -(dp + 1) * x):
                if Fraction(e).denominator % 2 == 0:
                    raise FPSpecError(f"exponent {e} needs an odd denominator")

    @property
    def n(self) -> int:
        return len(self.weights)

    @classmethod
    def from_dict(cls, d: dict) -> "FPSpec":
        allowed = {"weights", "d", "d_prime", "P", "domain", "name"}
        extra = set(d) - allowed
        if extra:
            raise FPSpecError(f"unknown key(s): {', '.join(sorted(extra))}")
        try:
            w = d["weights"]
            P = d["P"]
        except KeyError as exc:
            raise FPSpecError(f"missing key {exc}") from None
        n = len(w)
        box = d.get("domain", [[-1, 1]] * n)
        if len(box) != n:
            raise FPSpecError("domain must give one interval per weight")
        dom = Domain("box", lower=tuple(float(a) for a, _ in box),
                     upper=tuple(float(b) for _, b in box))
        return cls(tuple(w), d.get("d", 0), parse_expr(P, n), dom, d.get("d_prime"),
                   d.get("name", ""), P)

    @classmethod
    def load(cls, path) -> "FPSpec":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        data.setdefault("name", path.stem)
        return cls.from_dict(data)


def check_homogeneity(spec: FPSpec, count: int = 100, seed: int = 0, rtol: float = 1e-8) -> float:
    """Largest relative error of ``P(t^w x) = t^d P(x)`` for ``t`` in {1/2, 2}.

    Also checks that ``P`` is positive at the probes.
    """
    rng = np.random.default_rng(seed)
    X = spec.domain.sample(rng, count)
    X = X[np.linalg.norm(X, axis=1) > 1e-3]
    w = np.array([float(x) for x in spec.weights])
    with np.errstate(all="ignore"):
        p0 = evaluate(spec.P, X)
    if not np.all(p0 > 0):
        raise FPSpecError("P is not positive at every probe point")
    worst = 0.0
    for t in (0.5, 2.0):
        pt = evaluate(spec.P, X * t ** w)
        err = np.abs(pt - t ** float(spec.d) * p0) / np.abs(p0 * t ** float(spec.d))
        worst = max(worst, float(err.max()))
    if worst > rtol:
        raise FPSpecError(f"P fails the homogeneity check (relative error {worst:.3g})")
    return worst


def _scaled_map(P: Expr, exps, domain: Domain, name: str) -> PiecewiseMap:
    n = len(exps)
    comps = []
    for i, e in enumerate(exps):
        e = Fraction(e)
        if e == 0:
            comps.append(Var(i))
        else:
            comps.append(Mul(rational_power(P, e.numerator, e.denominator), Var(i)))
    r2 = Pow(Var(0), 2)
    for i in range(1, n):
        r2 = Add(r2, Pow(Var(i), 2))
    pieces = (Piece((Comparison(r2, ">", Const(0.0)),), tuple(comps)),
              Piece((), tuple(Const(0.0) for _ in range(n))))
    return PiecewiseMap(n, n, pieces, domain, (), name)


def build_fp(spec: FPSpec, check: bool = True) -> tuple[PiecewiseMap, PiecewiseMap]:
    """``F_P`` and ``F_Q`` with ``Q = P^{-(d'+1)}``, both extended by 0 at the origin."""
    if check:
        check_homogeneity(spec)
    c = spec.d_prime + 1
    name = spec.name or "fp"
    F = _scaled_map(spec.P, spec.weights, spec.domain, f"{name}_P")
    G = _scaled_map(spec.P, [-c * w for w in spec.weights], spec.domain, f"{name}_Q")
    return F, G


def verify_inverse(F: PiecewiseMap, G: PiecewiseMap, probes=None, count: int = 1000,
                   seed: int = 0, check_domain: bool = False) -> float:
    """Max of ``|G(F(x)) - x|`` and ``|F(G(y)) - y|`` over probe points.

    Probes default to uniform points of ``F``'s domain. ``G``'s declared domain
    is ignored unless ``check_domain`` is set, because ``F`` may leave it.
    """
    if F.m != G.n or F.n != G.m:
        raise ValueError("dimension mismatch between F and G")
    if probes is None:
        probes = F.domain.sample(np.random.default_rng(seed), count)
    X = np.atleast_2d(np.asarray(probes, float))
    worst = 0.0
    for A, B in ((F, G), (G, F)):
        Y, s1 = A.evaluate_batch(X, check_domain=check_domain)
        Z, s2 = B.evaluate_batch(Y, check_domain=check_domain)
        if (s1 != 0).any() or (s2 != 0).any():
            raise DomainError("composition left the domain or hit a pole")
        worst = max(worst, float(np.max(np.linalg.norm(Z - X, axis=1))))
    return worst


def random_fp_spec(rng: np.random.Generator, n: int = 2, max_weight: int = 3) -> FPSpec:
    """Degree-0 spec with ``P`` a quotient of positive weighted-even polynomials."""
    from math import lcm

    w = [int(x) for x in rng.integers(1, max_weight + 1, size=n)]
    L = lcm(*w) * int(rng.integers(1, 3))

    def poly():
        terms = [f"{rng.uniform(0.5, 2.0):.3f}*x{i + 1}^{2 * L // w[i]}" for i in range(n)]
        if n >= 2 and L % w[0] == 0 and L % w[1] == 0 and L // w[0] >= 2:
            a = L // w[0] // 2
            rest = L - a * w[0]
            if rest % w[1] == 0:
                terms.append(f"{rng.uniform(0.0, 1.0):.3f}*x1^{2 * a}*x2^{2 * (rest // w[1])}")
        return " + ".join(terms)

    text = f"({poly()})/({poly()})"
    return FPSpec(tuple(w), 0, parse_expr(text, n), Domain.box(n), None, "random", text)


def spec_to_dict(spec: FPSpec) -> dict:
    box = [[a, b] for a, b in zip(spec.domain.lower, spec.domain.upper)]
    return {"name": spec.name, "weights": [str(w) for w in spec.weights], "d": str(spec.d),
            "d_prime": str(spec.d_prime), "P": spec.source or to_text(spec.P), "domain": box}

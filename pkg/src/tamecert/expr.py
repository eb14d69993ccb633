"""Expression trees for closed-form map components.

Nodes are immutable dataclasses, so structural equality is plain ``==``.
Evaluation is vectorised over a batch of points ``X`` of shape ``(N, m)``;
the dual evaluator carries a gradient of shape ``(N, m)`` alongside the
value (forward-mode AD with one tangent per input coordinate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Union

import numpy as np


class PoleError(ArithmeticError):
    """Division by zero (or a negative power of zero) during evaluation."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based; printed as x{index+1}


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Root:
    """Signed real power ``t^(p/q)`` with ``q`` odd, ``q > 1``, ``gcd(p, q) = 1``.

    For odd ``p`` this is an odd function of ``t``; for even ``p`` it equals
    ``|t|^(p/q)``.
    """

    base: "Expr"
    p: int
    q: int


@dataclass(frozen=True)
class Abs:
    arg: "Expr"


Expr = Union[Const, Var, Neg, Add, Sub, Mul, Div, Pow, Root, Abs]


def rational_power(base: Expr, p: int, q: int) -> Expr:
    """Build ``base^(p/q)`` in reduced form; even ``q`` is rejected."""
    if q == 0:
        raise ValueError("zero denominator in exponent")
    if q < 0:
        p, q = -p, -q
    g = gcd(p, q)
    p, q = p // g, q // g
    if q == 1:
        return Pow(base, p)
    if q % 2 == 0:
        raise ValueError(f"even root denominator in exponent {p}/{q}")
    return Root(base, p, q)


def sroot(t, p: int, q: int):
    """Sign-aware real power ``t^(p/q)`` for odd ``q`` (numpy-vectorised)."""
    t = np.asarray(t, dtype=float)
    mag = np.abs(t) ** (p / q)
    if p % 2:
        return np.sign(t) * mag
    return mag


# --------------------------------------------------------------------------
# traversal helpers

def children(e: Expr) -> tuple:
    if isinstance(e, (Const, Var)):
        return ()
    if isinstance(e, (Neg, Abs)):
        return (e.arg,)
    if isinstance(e, (Pow, Root)):
        return (e.base,)
    return (e.left, e.right)


def max_var_index(e: Expr) -> int:
    """Largest 0-based variable index used, or -1 for constant expressions."""
    if isinstance(e, Var):
        return e.index
    return max((max_var_index(c) for c in children(e)), default=-1)


def kink_arguments(e: Expr) -> list:
    """Arguments whose zero set is a potential nondifferentiability locus.

    These are the operands of ``abs`` and of rational powers below one.
    """
    out = []
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Abs):
            out.append(node.arg)
        elif isinstance(node, Root) and node.p < node.q:
            out.append(node.base)
        stack.extend(children(node))
    return out


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace ``Var(i)`` by ``mapping[i]`` wherever present."""
    if isinstance(e, Var):
        return mapping.get(e.index, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Abs):
        return Abs(substitute(e.arg, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Root):
        return Root(substitute(e.base, mapping), e.p, e.q)
    return type(e)(substitute(e.left, mapping), substitute(e.right, mapping))


# --------------------------------------------------------------------------
# printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4, Root: 4}


def _fmt_number(v: float) -> str:
    if np.isfinite(v) and float(v).is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(float(v))
    return s


def to_text(e: Expr) -> str:
    """Render in the DSL's infix syntax; parsing the output gives back ``e``."""
    return _print(e, 0)


def _print(e: Expr, ctx: int) -> str:
    if isinstance(e, Const):
        s = _fmt_number(e.value)
        return f"({s})" if e.value < 0 or s.startswith("-") else s
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Abs):
        return f"abs({_print(e.arg, 0)})"
    if isinstance(e, Neg):
        if isinstance(e.arg, Const) and e.arg.value >= 0:
            # "-3" would parse back as a negative literal
            s = f"-({_fmt_number(e.arg.value)})"
        else:
            s = "-" + _print(e.arg, _PREC[Neg])
        return f"({s})" if ctx > _PREC[Neg] else s
    if isinstance(e, Pow):
        base = _print(e.base, _PREC[Pow] + 1)
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        s = f"{base}^{exp}"
        return f"({s})" if ctx > _PREC[Pow] else s
    if isinstance(e, Root):
        base = _print(e.base, _PREC[Root] + 1)
        s = f"{base}^({e.p}/{e.q})"
        return f"({s})" if ctx > _PREC[Root] else s
    prec = _PREC[type(e)]
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    # left-associative: the right operand needs strictly higher precedence
    s = f"{_print(e.left, prec)} {op} {_print(e.right, prec + 1)}"
    return f"({s})" if ctx > prec else s


# --------------------------------------------------------------------------
# evaluation

@dataclass
class EvalState:
    """Per-point flags collected while evaluating a batch."""

    n: int
    pole: np.ndarray = field(init=False)
    kink: np.ndarray = field(init=False)

    def __post_init__(self):
        self.pole = np.zeros(self.n, dtype=bool)
        self.kink = np.zeros(self.n, dtype=bool)


def evaluate(e: Expr, X: np.ndarray, state: EvalState | None = None) -> np.ndarray:
    """Value of ``e`` at each row of ``X``; pole rows come back as NaN.

    Without a ``state`` argument a pole raises :class:`PoleError`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    own = state is None
    st = EvalState(X.shape[0]) if own else state
    with np.errstate(all="ignore"):
        out = _eval(e, X, st)
    if own and st.pole.any():
        raise PoleError(f"pole at {X[np.argmax(st.pole)].tolist()}")
    return out


def _eval(e, X, st):
    if isinstance(e, Const):
        return np.full(X.shape[0], float(e.value))
    if isinstance(e, Var):
        return X[:, e.index].copy()
    if isinstance(e, Neg):
        return -_eval(e.arg, X, st)
    if isinstance(e, Abs):
        return np.abs(_eval(e.arg, X, st))
    if isinstance(e, Pow):
        t = _eval(e.base, X, st)
        if e.exponent < 0:
            zero = t == 0
            st.pole |= zero
            t = np.where(zero, np.nan, t)
        return t ** e.exponent
    if isinstance(e, Root):
        t = _eval(e.base, X, st)
        if e.p < 0:
            zero = t == 0
            st.pole |= zero
            t = np.where(zero, np.nan, t)
        return sroot(t, e.p, e.q)
    a = _eval(e.left, X, st)
    b = _eval(e.right, X, st)
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    zero = b == 0
    st.pole |= zero
    return a / np.where(zero, np.nan, b)


def evaluate_dual(e: Expr, X: np.ndarray, state: EvalState) -> tuple[np.ndarray, np.ndarray]:
    """Value and gradient of ``e`` at each row of ``X``.

    Rows where a kink of ``abs`` or of a sub-unit rational power is hit
    exactly are flagged in ``state.kink``; their gradient is NaN.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with np.errstate(all="ignore"):
        return _dual(e, X, state)


def _dual(e, X, st):
    N, m = X.shape
    if isinstance(e, Const):
        return np.full(N, float(e.value)), np.zeros((N, m))
    if isinstance(e, Var):
        g = np.zeros((N, m))
        g[:, e.index] = 1.0
        return X[:, e.index].copy(), g
    if isinstance(e, Neg):
        v, g = _dual(e.arg, X, st)
        return -v, -g
    if isinstance(e, Abs):
        v, g = _dual(e.arg, X, st)
        zero = v == 0
        st.kink |= zero
        s = np.where(zero, np.nan, np.sign(v))
        return np.abs(v), s[:, None] * g
    if isinstance(e, Pow):
        v, g = _dual(e.base, X, st)
        k = e.exponent
        if k < 0:
            zero = v == 0
            st.pole |= zero
            v = np.where(zero, np.nan, v)
        if k == 0:
            return np.ones(N), np.zeros((N, m))
        return v ** k, (k * v ** (k - 1))[:, None] * g
    if isinstance(e, Root):
        v, g = _dual(e.base, X, st)
        p, q = e.p, e.q
        r = p / q
        zero = v == 0
        if p < 0:
            st.pole |= zero
            v = np.where(zero, np.nan, v)
        elif r < 1:
            st.kink |= zero
        mag = np.abs(v)
        val = sroot(v, p, q)
        if r > 1:
            dmag = r * mag ** (r - 1)
        else:
            dmag = np.where(zero, np.nan, r * mag ** (r - 1))
        d = dmag if p % 2 else np.sign(v) * dmag
        if r > 1:
            d = np.where(zero, 0.0, d)
        return val, d[:, None] * g
    a, ga = _dual(e.left, X, st)
    b, gb = _dual(e.right, X, st)
    if isinstance(e, Add):
        return a + b, ga + gb
    if isinstance(e, Sub):
        return a - b, ga - gb
    if isinstance(e, Mul):
        return a * b, a[:, None] * gb + b[:, None] * ga
    zero = b == 0
    st.pole |= zero
    b = np.where(zero, np.nan, b)
    return a / b, (ga * b[:, None] - a[:, None] * gb) / (b * b)[:, None]

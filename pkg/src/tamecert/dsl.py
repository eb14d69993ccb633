"""Reader and printer for ``.tmap`` map descriptions.

Grammar (EBNF)::

    map        = "map" "R" INT "->" "R" INT "{" { stmt [";"] } "}" ;
    stmt       = domain | locus | piece ;
    domain     = "domain" ( box | ball ) { "exclude" point } ;
    box        = "box" interval { "," interval } ;
    interval   = "[" number "," number "]" ;
    ball       = "ball" point "radius" number [ "inner" number ] ;
    point      = "(" number { "," number } ")" ;
    locus      = "locus" expr ;
    piece      = "piece" guard ":" "(" expr { "," expr } ")" ;
    guard      = "true" | cmp { "&&" cmp } ;
    cmp        = expr ( ">=" | ">" | "<=" | "<" ) expr ;
    expr       = term { ( "+" | "-" ) term } ;
    term       = unary { ( "*" | "/" ) unary } ;
    unary      = "-" unary | power ;
    power      = atom [ "^" exponent ] ;
    exponent   = INT | "-" INT | "(" [ "-" ] INT [ "/" INT ] ")" ;
    atom       = NUMBER | VAR | "abs" "(" expr ")" | "(" expr ")" ;

Variables are ``x1 .. xm``. A rational exponent ``p/q`` must have odd ``q``
after reduction; it denotes the sign-aware real root. ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .expr import (
    Abs,
    Add,
    Const,
    Div,
    Mul,
    Neg,
    Sub,
    Var,
    max_var_index,
    rational_power,
    to_text,
)
from .piecewise import Comparison, Domain, Piece, PiecewiseMap


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>->|>=|<=|&&|[-+*/^(),:;{}\[\]<>])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = mt.lastgroup
        tok = mt.group()
        if kind != "ws":
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = mt.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


_VAR = re.compile(r"x([1-9]\d*)$")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.m = None

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        t = tok or self.tok
        raise ParseError(msg, t.line, t.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.tok
        if not self.accept(text):
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.error(f"expected an integer, found {t.text!r}")
        self.i += 1
        return int(t.text)

    def number(self) -> float:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "num":
            self.error(f"expected a number, found {t.text!r}")
        self.i += 1
        v = float(t.text)
        return -v if neg else v

    # -- map structure
    def parse_map(self) -> PiecewiseMap:
        self.expect("map")
        m, n = self.space(), None
        self.expect("->")
        n = self.space()
        self.m = m
        self.expect("{")
        pieces, loci, domain = [], [], None
        while not self.accept("}"):
            if self.tok.kind == "eof":
                self.error("unterminated map body")
            if self.accept(";"):
                continue
            t = self.tok
            if self.accept("piece"):
                pieces.append(self.piece(n, t))
            elif self.accept("locus"):
                loci.append(self.expr())
            elif self.accept("domain"):
                if domain is not None:
                    self.error("domain declared twice", t)
                domain = self.domain(m, t)
            else:
                self.error(f"expected 'piece', 'domain' or 'locus', found {t.text!r}")
        if self.tok.kind != "eof":
            self.error("trailing input after map")
        if not pieces:
            self.error("map has no pieces")
        return PiecewiseMap(m, n, tuple(pieces), domain or Domain.box(m), tuple(loci))

    def space(self) -> int:
        t = self.tok
        mt = re.fullmatch(r"R(\d+)", t.text) if t.kind == "name" else None
        if not mt or int(mt.group(1)) < 1:
            self.error(f"expected a space like R2, found {t.text!r}")
        self.i += 1
        return int(mt.group(1))

    def point(self, m: int, what: str) -> tuple:
        t = self.expect("(")
        vals = [self.number()]
        while self.accept(","):
            vals.append(self.number())
        self.expect(")")
        if len(vals) != m:
            self.error(f"{what} has {len(vals)} coordinates, expected {m}", t)
        return tuple(vals)

    def domain(self, m: int, start: Token) -> Domain:
        if self.accept("box"):
            lo, hi = [], []
            while True:
                self.expect("[")
                a = self.number()
                self.expect(",")
                b = self.number()
                self.expect("]")
                if not a < b:
                    self.error("empty interval in box", start)
                lo.append(a)
                hi.append(b)
                if not self.accept(","):
                    break
            if len(lo) != m:
                self.error(f"box has {len(lo)} intervals, expected {m}", start)
            kw = dict(kind="box", lower=tuple(lo), upper=tuple(hi))
        elif self.accept("ball"):
            c = self.point(m, "ball center")
            self.expect("radius")
            r = self.number()
            inner = self.number() if self.accept("inner") else 0.0
            if not 0 <= inner < r:
                self.error("ball needs 0 <= inner < radius", start)
            kw = dict(kind="ball", center=c, radius=r, inner=inner)
        else:
            self.error("expected 'box' or 'ball'")
        excl = []
        while self.accept("exclude"):
            excl.append(self.point(m, "excluded point"))
        return Domain(excluded=tuple(excl), **kw)

    def piece(self, n: int, start: Token) -> Piece:
        guards = []
        if not self.accept("true"):
            guards.append(self.comparison())
            while self.accept("&&"):
                guards.append(self.comparison())
        self.expect(":")
        t = self.expect("(")
        comps = [self.expr()]
        while self.accept(","):
            comps.append(self.expr())
        self.expect(")")
        if len(comps) != n:
            self.error(f"piece has {len(comps)} components, expected {n}", t)
        return Piece(tuple(guards), tuple(comps))

    def comparison(self) -> Comparison:
        lhs = self.expr()
        t = self.tok
        for op in (">=", ">", "<=", "<"):
            if self.accept(op):
                return Comparison(lhs, op, self.expr())
        self.error(f"expected a comparison operator, found {t.text!r}")

    # -- expressions
    def expr(self):
        e = self.term()
        while True:
            if self.accept("+"):
                e = Add(e, self.term())
            elif self.accept("-"):
                e = Sub(e, self.term())
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            if self.accept("*"):
                e = Mul(e, self.unary())
            elif self.accept("/"):
                e = Div(e, self.unary())
            else:
                return e

    def unary(self):
        if self.tok.text == "-" and self.toks[self.i + 1].kind == "num" \
                and self.toks[self.i + 2].text != "^":
            self.i += 1
            return Const(-float(self.tok_advance().text))
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def tok_advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def power(self):
        base = self.atom()
        if not self.accept("^"):
            return base
        t = self.tok
        if self.accept("("):
            sign = -1 if self.accept("-") else 1
            p = sign * self.integer()
            q = self.integer() if self.accept("/") else 1
            self.expect(")")
        else:
            sign = -1 if self.accept("-") else 1
            p, q = sign * self.integer(), 1
        try:
            return rational_power(base, p, q)
        except ValueError as exc:
            self.error(str(exc), t)

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Const(float(t.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("abs"):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Abs(e)
        if t.kind == "name":
            mt = _VAR.match(t.text)
            if not mt:
                self.error(f"unknown name {t.text!r}")
            k = int(mt.group(1))
            if self.m is not None and k > self.m:
                self.error(f"variable {t.text} exceeds domain dimension {self.m}")
            self.i += 1
            return Var(k - 1)
        self.error(f"unexpected {t.text or 'end of input'!r}")


def parse_map(text: str, name: str = "") -> PiecewiseMap:
    """Parse ``.tmap`` source into a :class:`PiecewiseMap`."""
    f = _Parser(text).parse_map()
    if name:
        object.__setattr__(f, "name", name)
    return f


def parse_expr(text: str, m: int | None = None):
    p = _Parser(text)
    p.m = m
    e = p.expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    if m is not None and max_var_index(e) >= m:
        raise ParseError(f"expression uses more than {m} variables")
    return e


def parse_domain(text: str, m: int) -> Domain:
    """Parse a domain clause such as ``box [0, 1], [0, 1]`` for dimension ``m``."""
    p = _Parser(text)
    p.m = m
    start = p.tok
    p.accept("domain")
    d = p.domain(m, start)
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return d


def load_map(path) -> PiecewiseMap:
    path = Path(path)
    return parse_map(path.read_text(encoding="utf-8"), name=path.stem)


def _num(v: float) -> str:
    return to_text(Const(v)).strip("()")


def format_map(f: PiecewiseMap) -> str:
    lines = [f"map R{f.m}->R{f.n} {{"]
    d = f.domain
    if d.kind == "box":
        ivs = ", ".join(f"[{_num(a)}, {_num(b)}]" for a, b in zip(d.lower, d.upper))
        dom = f"domain box {ivs}"
    else:
        dom = f"domain ball ({', '.join(_num(c) for c in d.center)}) radius {_num(d.radius)}"
        if d.inner:
            dom += f" inner {_num(d.inner)}"
    for p in d.excluded:
        dom += f" exclude ({', '.join(_num(c) for c in p)})"
    lines.append("  " + dom)
    for g in f.loci:
        lines.append(f"  locus {to_text(g)}")
    for piece in f.pieces:
        guard = " && ".join(f"{to_text(c.lhs)} {c.op} {to_text(c.rhs)}" for c in piece.guards)
        comps = ", ".join(to_text(c) for c in piece.components)
        lines.append(f"  piece {guard or 'true'}: ({comps})")
    lines.append("}")
    return "\n".join(lines) + "\n"

"""Text grammar for polynomials, series and differential operators.

::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := power (('*'|'/') power)*       # '/' only by a constant
    power  := atom ['^' INT]
    atom   := INT | NAME | '(' expr ')'

Names are phase variables (``x``, ``p`` or ``x1``, ``p2``...), parameters
(``h``, ``t``, ``t1``...), the imaginary unit ``i``, derivative symbols
(``dx``, ``dp2``...) where operators are allowed, and named rational
constants supplied by the caller.
"""

import re

from gmpy2 import mpq

from .gaussian import GaussianRational, I, ONE, ZERO, as_rational
from .series import Context, DeformedFn, PhasePoly, var_names

__all__ = ["ParseError", "parse_terms", "parse_poly", "parse_series", "parse_operator"]

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


class ParseError(ValueError):
    """Syntax or name error, with the 0-based character position."""

    def __init__(self, message, position, text=""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}" + (f": {text!r}" if text else ""))


def _tokenize(text):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        start = m.start(m.lastindex) if m.lastindex else pos
        if m.group(1) is not None:
            out.append(("int", int(m.group(1)), start))
        elif m.group(2) is not None:
            out.append(("name", m.group(2), start))
        elif m.group(3) is not None:
            out.append(("op", m.group(3), start))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Parser:
    def __init__(self, text, symbols, aliases, constants):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.symbols = symbols
        self.index = {s: k for k, s in enumerate(symbols)}
        self.index.update({a: self.index[s] for a, s in aliases.items()})
        self.constants = {k: as_rational(v) for k, v in (constants or {}).items()}
        self.width = len(symbols)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], self.text)

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        val = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return val

    # polynomials are plain dicts exponent-tuple -> GaussianRational
    def const(self, c):
        c = GaussianRational.coerce(c)
        return {(0,) * self.width: c} if c else {}

    def add(self, a, b, sign=1):
        out = dict(a)
        for k, c in b.items():
            v = out.get(k, ZERO) + (c if sign > 0 else -c)
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return out

    def mul(self, a, b):
        out = {}
        for ka, ca in a.items():
            for kb, cb in b.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                v = out.get(k)
                out[k] = ca * cb if v is None else v + ca * cb
        return {k: c for k, c in out.items() if c}

    def expr(self):
        sign = 1
        if self.peek()[:2] in (("op", "+"), ("op", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        val = self.term()
        if sign < 0:
            val = {k: -c for k, c in val.items()}
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            val = self.add(val, self.term(), 1 if op == "+" else -1)
        return val

    def term(self):
        val = self.power()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()
            rhs = self.power()
            if op[1] == "*":
                val = self.mul(val, rhs)
            else:
                if set(rhs) - {(0,) * self.width} or not rhs:
                    self.error("division only by a nonzero constant", op)
                inv = rhs[(0,) * self.width].inverse()
                val = {k: c * inv for k, c in val.items()}
        return val

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.take()
            if tok[0] != "int":
                self.error("exponent must be a non-negative integer", tok)
            out = self.const(1)
            for _ in range(tok[1]):
                out = self.mul(out, base)
            return out
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "int":
            return self.const(mpq(val))
        if kind == "name":
            if val == "i":
                return self.const(I)
            if val in self.index:
                key = [0] * self.width
                key[self.index[val]] = 1
                return {tuple(key): ONE}
            if val in self.constants:
                return self.const(self.constants[val])
            self.error(f"unknown name {val!r}", tok)
        if kind == "op" and val == "(":
            inner = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.error("expected ')'")
            self.take()
            return inner
        self.error(f"unexpected {val!r}" if kind != "end" else "unexpected end of input", tok)


def _aliases(dim, prefix=""):
    if dim == 1:
        return {prefix + "x1": prefix + "x", prefix + "p1": prefix + "p"}
    return {}


def parse_terms(text, symbols, constants=None, aliases=None):
    """Parse to ``{exponent tuple over symbols: GaussianRational}``."""
    return _Parser(text, list(symbols), aliases or {}, constants).parse()


def parse_poly(text, dim, constants=None):
    terms = parse_terms(text, var_names(dim), constants, _aliases(dim))
    return PhasePoly(dim, terms)


def parse_series(text, ctx, constants=None):
    """Parse into a DeformedFn on ``ctx`` (terms beyond truncation drop)."""
    if not isinstance(ctx, Context):
        raise TypeError("parse_series needs a Context")
    symbols = list(ctx.params) + var_names(ctx.dim)
    return DeformedFn(ctx.dim, ctx.params, ctx.trunc, parse_terms(text, symbols, constants, _aliases(ctx.dim)))


def parse_operator(text, ctx, constants=None):
    """Parse ``coeff*dx^2*dp + ...`` into a DiffOperator (coefficients to the
    left of the derivative symbols, which are treated as formal)."""
    from .intertwiner import DiffOperator

    dnames = ["d" + n for n in var_names(ctx.dim)]
    symbols = list(ctx.params) + var_names(ctx.dim) + dnames
    aliases = {**_aliases(ctx.dim), **_aliases(ctx.dim, "d")}
    terms = parse_terms(text, symbols, constants, aliases)
    n = len(ctx.params) + 2 * ctx.dim
    grouped = {}
    for key, c in terms.items():
        grouped.setdefault(key[n:], {})[key[:n]] = c
    return DiffOperator(ctx, {alpha: ctx.series(t) for alpha, t in grouped.items()})

"""Moyal star product, its commutator and bracket, and star monomials.

The product is evaluated as the finite bidifferential sum

    f * g = sum_k (i h / 2)^k / k! * P^k(f, g),
    P = sum_i (<-D_{x^i} ->D_{p_i} - <-D_{p_i} ->D_{x^i}),

with ``D = d`` for the Moyal product and ``D`` the stored derivations for a
transformed product.  The sum stops at ``k = K``, the truncation in ``h``.
"""

from dataclasses import dataclass
from math import factorial

from .gaussian import GaussianRational
from .series import DeformedFn, IncompatibleContext, PhasePoly, monomials

__all__ = [
    "HBAR",
    "MissingHbar",
    "StarProductSpec",
    "MOYAL",
    "star",
    "star_commutator",
    "moyal_bracket",
    "poisson_bracket",
    "star_monomial",
]

HBAR = "h"
_HALF_I = GaussianRational(0, "1/2")


class MissingHbar(ValueError):
    """The operands carry no finitely truncated ``h`` parameter."""


@dataclass(frozen=True)
class StarProductSpec:
    """Which star product to use: plain Moyal, or Moyal with the partial
    derivatives replaced by ``derivations`` (ordered ``D_{x^1}..D_{p_N}``)."""

    kind: str = "moyal"
    derivations: tuple = ()

    def __post_init__(self):
        if self.kind == "moyal":
            if self.derivations:
                raise ValueError("the Moyal product takes no derivations")
        elif self.kind == "transformed":
            ds = tuple(self.derivations)
            object.__setattr__(self, "derivations", ds)
            if not ds or len(ds) % 2:
                raise ValueError("a transformed product needs 2N derivations")
            dim = len(ds) // 2
            for d in ds:
                if d.dim != dim:
                    raise ValueError(f"derivation count {len(ds)} does not match dim {d.dim}")
            if len({d.params for d in ds}) != 1:
                raise IncompatibleContext("derivations must share parameters")
        else:
            raise ValueError(f"unknown star product kind {self.kind!r}")

    @classmethod
    def transformed(cls, derivations):
        return cls("transformed", tuple(derivations))

    @property
    def dim(self):
        return self.derivations[0].dim if self.derivations else None


MOYAL = StarProductSpec()


def _prepare(spec, f, g):
    for a in (f, g):
        if not isinstance(a, (DeformedFn, PhasePoly)):
            raise TypeError("star operands must be PhasePoly or DeformedFn")
    if isinstance(f, PhasePoly) and isinstance(g, DeformedFn):
        f = f.lift(g.params, g.trunc)
    elif isinstance(g, PhasePoly) and isinstance(f, DeformedFn):
        g = g.lift(f.params, f.trunc)
    if isinstance(f, PhasePoly):
        raise MissingHbar("star product needs a series in the parameter 'h'")
    if f.dim != g.dim:
        raise IncompatibleContext(f"dimension mismatch: {f.dim} vs {g.dim}")
    if f.params != g.params:
        raise IncompatibleContext(f"parameter mismatch: {f.params} vs {g.params}")
    if HBAR not in f.params:
        raise MissingHbar("star product needs the parameter 'h' among the series parameters")
    if spec.kind == "transformed":
        if spec.dim != f.dim:
            raise IncompatibleContext("derivation count does not match operand dimension")
        if spec.derivations[0].params != f.params:
            raise IncompatibleContext("derivation parameters differ from operand parameters")
    return f, g


def _slots(dim):
    """Pairs (left operator, right operator, sign) making up P."""
    out = []
    for i in range(dim):
        out.append((i, dim + i, 1))
        out.append((dim + i, i, -1))
    return out


class _DerivTable:
    """Memoized ``D^alpha f`` for multi-indices over the 2N operators."""

    def __init__(self, f, ops):
        self.ops = ops
        self.cache = {(0,) * len(ops): f}

    def __call__(self, alpha):
        hit = self.cache.get(alpha)
        if hit is not None:
            return hit
        j = next(i for i, a in enumerate(alpha) if a)
        prev = alpha[:j] + (alpha[j] - 1,) + alpha[j + 1:]
        base = self(prev)
        val = base if base.is_zero() else self.ops[j](base)
        self.cache[alpha] = val
        return val


def _operators(spec, dim):
    if spec.kind == "moyal":
        return [lambda f, j=j: f.partial(j) for j in range(2 * dim)]
    return list(spec.derivations)


def _bidiff_sum(spec, f, g, kmin, kmax, odd_only=False):
    """``sum_{k=kmin}^{kmax} (i h/2)^k / k! P^k(f, g)`` within f's context."""
    dim = f.dim
    ops = _operators(spec, dim)
    left, right = _DerivTable(f, ops), _DerivTable(g, ops)
    slots = _slots(dim)
    nops = 2 * dim
    out = f.context.zero()
    for k in range(kmin, kmax + 1):
        if odd_only and not k % 2:
            continue
        layer = f.context.zero()
        for gamma in monomials(len(slots), k, k):
            la = [0] * nops
            ra = [0] * nops
            sign = 1
            denom = 1
            for (lo, ro, s), gm in zip(slots, gamma):
                if gm:
                    la[lo] += gm
                    ra[ro] += gm
                    denom *= factorial(gm)
                    if s < 0 and gm % 2:
                        sign = -sign
            fl = left(tuple(la))
            if fl.is_zero():
                continue
            gr = right(tuple(ra))
            if gr.is_zero():
                continue
            layer = layer + (fl * gr).scale(GaussianRational(sign) / denom)
        if not layer.is_zero():
            out = out + layer.shift(**{HBAR: k}).scale(_HALF_I**k)
    return out


def star(spec, f, g):
    """Star product of two series (Moyal or transformed)."""
    f, g = _prepare(spec, f, g)
    trunc = tuple(map(min, f.trunc, g.trunc))
    orders = dict(zip(f.params, trunc))
    f, g = f.truncate(**orders), g.truncate(**orders)
    return _bidiff_sum(spec, f, g, 0, orders[HBAR])


def star_commutator(spec, f, g):
    """``f * g - g * f``."""
    f, g = _prepare(spec, f, g)
    return star(spec, f, g) - star(spec, g, f)


def moyal_bracket(spec, f, g):
    """Deformed Poisson bracket ``(f * g - g * f) / (i h)``.

    The ``h^0`` terms of the commutator cancel identically, so its
    ``h^{K+1}`` coefficient only involves data known to order ``K``; the
    bracket therefore keeps the operands' ``h`` truncation.
    """
    f, g = _prepare(spec, f, g)
    trunc = tuple(map(min, f.trunc, g.trunc))
    orders = dict(zip(f.params, trunc))
    K = orders[HBAR]
    raised = {**orders, HBAR: K + 1}
    f1 = f.truncate(**orders).with_truncation(**raised)
    g1 = g.truncate(**orders).with_truncation(**raised)
    if spec.kind == "transformed":
        spec = StarProductSpec.transformed(d.with_truncation(**raised) for d in spec.derivations)
    if spec.kind == "moyal":
        # P^k(g, f) = (-1)^k P^k(f, g): only odd k survive, doubled
        comm = _bidiff_sum(spec, f1, g1, 1, K + 1, odd_only=True).scale(2)
    else:
        comm = _bidiff_sum(spec, f1, g1, 1, K + 1) - _bidiff_sum(spec, g1, f1, 1, K + 1)
    j = comm.param_index(HBAR)
    shifted = {}
    for key, c in comm.terms.items():
        if key[j] == 0:
            raise AssertionError("commutator has an h^0 term")
        shifted[key[:j] + (key[j] - 1,) + key[j + 1:]] = c * GaussianRational(0, -1)
    return DeformedFn(f.dim, f.params, trunc, shifted)


def poisson_bracket(f, g):
    """Classical bracket ``sum_i (d_{x^i} f d_{p_i} g - d_{p_i} f d_{x^i} g)``."""
    if f.dim != g.dim:
        raise IncompatibleContext(f"dimension mismatch: {f.dim} vs {g.dim}")
    n = f.dim
    out = None
    for i in range(n):
        term = f.partial(i) * g.partial(n + i) - f.partial(n + i) * g.partial(i)
        out = term if out is None else out + term
    return out


def star_monomial(spec, ctx, exponents):
    """Left-associated star product ``x1*..*x1*p1*..*p1*x2*..`` (x before p
    within each degree of freedom, degrees of freedom in index order)."""
    dim = ctx.dim
    exponents = tuple(exponents)
    if len(exponents) != 2 * dim:
        raise ValueError(f"need {2 * dim} exponents, got {len(exponents)}")
    coords = ctx.coords()
    result = ctx.one()
    for i in range(dim):
        for v, e in ((i, exponents[i]), (dim + i, exponents[dim + i])):
            for _ in range(e):
                result = star(spec, result, coords[v])
    return result

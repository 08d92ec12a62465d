"""Derivations induced by a phase map and the transformed star product."""

from dataclasses import dataclass

from .maps import invert_map, substitute
from .moyal import MOYAL, StarProductSpec, star
from .series import DeformedFn, IncompatibleContext, PhasePoly, var_names

__all__ = [
    "Derivation",
    "induced_derivations",
    "transformed_star",
    "TransformCheck",
    "verify_transform_identity",
]


class Derivation:
    """First-order operator ``sum_j a_j d_j`` with series coefficients."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, coeffs):
        coeffs = tuple(coeffs)
        if not coeffs or len(coeffs) % 2:
            raise ValueError("a derivation needs 2N coefficients")
        dim = len(coeffs) // 2
        params = coeffs[0].params
        for c in coeffs:
            if not isinstance(c, DeformedFn):
                raise TypeError("derivation coefficients must be DeformedFn")
            if c.dim != dim or c.params != params:
                raise IncompatibleContext("derivation coefficients must share dim and parameters")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Derivation is immutable")

    @classmethod
    def partial(cls, ctx, var):
        """The coordinate derivative ``d_var`` as a Derivation."""
        j = var if isinstance(var, int) else var_names(ctx.dim).index(var)
        return cls(ctx.one() if i == j else ctx.zero() for i in range(2 * ctx.dim))

    @property
    def params(self):
        return self.coeffs[0].params

    @property
    def trunc(self):
        return tuple(map(min, *(c.trunc for c in self.coeffs))) if self.params else ()

    def __call__(self, f):
        if isinstance(f, PhasePoly):
            f = f.lift(self.params, self.trunc)
        out = None
        for j, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            df = f.partial(j)
            if df.is_zero():
                continue
            term = a * df
            out = term if out is None else out + term
        if out is None:
            return (f * self.coeffs[0]).scale(0)
        return out

    def with_truncation(self, **orders):
        return Derivation(c.with_truncation(**orders) for c in self.coeffs)

    def truncate(self, **orders):
        return Derivation(c.truncate(**orders) for c in self.coeffs)

    def __eq__(self, other):
        return isinstance(other, Derivation) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __sub__(self, other):
        return Derivation(a - b for a, b in zip(self.coeffs, other.coeffs))

    def is_zero(self):
        return all(c.is_zero() for c in self.coeffs)

    def to_text(self):
        parts = []
        for name, c in zip(var_names(self.dim), self.coeffs):
            if not c.is_zero():
                parts.append(f"({c.to_text()})*d_{name}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"Derivation({self.to_text()!r})"


def induced_derivations(phi):
    """``D_v = sum_j [(d_v Phi^j) o Phi^{-1}] d_j`` for each phase variable v.

    These satisfy ``(d_v f) o Phi^{-1} = D_v (f o Phi^{-1})``, which follows
    from the chain rule applied to ``f = (f o Phi^{-1}) o Phi``.
    """
    inv = invert_map(phi)
    out = []
    for v in range(2 * phi.dim):
        out.append(Derivation(substitute(comp.partial(v), inv) for comp in phi.components))
    return tuple(out)


def transformed_star(phi):
    """Star product carried over by ``phi``: ``(f*g) o phi^{-1} = (f o phi^{-1}) *_t (g o phi^{-1})``."""
    return StarProductSpec.transformed(induced_derivations(phi))


@dataclass
class TransformCheck:
    lhs: DeformedFn
    rhs: DeformedFn
    difference: DeformedFn

    @property
    def passed(self):
        return self.difference.is_zero()


def verify_transform_identity(phi, f, g, spec=None, inverse=None):
    """Compute both sides of ``(f*g) o phi^{-1} = (f o phi^{-1}) *_t (g o phi^{-1})``.

    ``spec`` and ``inverse`` may be passed in to reuse them across many pairs.
    """
    ctx = phi.context
    f, g = ctx.lift(f), ctx.lift(g)
    inv = inverse or invert_map(phi)
    spec = spec or transformed_star(phi)
    lhs = substitute(star(MOYAL, f, g), inv)
    rhs = star(spec, substitute(f, inv), substitute(g, inv))
    return TransformCheck(lhs, rhs, lhs - rhs)

"""Phase-space maps given by series components: composition and inversion."""

from .series import Context, DeformedFn, IncompatibleContext, PhasePoly, var_names

__all__ = ["PhaseMap", "NotInvertible", "substitute", "invert_map"]


class NotInvertible(ValueError):
    """The map is not the identity at zero parameter values."""


class PhaseMap:
    """A transformation ``(x, p) -> (Q(x, p), P(x, p))`` with series components.

    ``components`` lists ``Q^1..Q^N`` followed by ``P_1..P_N``.
    """

    __slots__ = ("dim", "components")

    def __init__(self, components):
        comps = tuple(components)
        if not comps or len(comps) % 2:
            raise ValueError("a phase map needs 2N components")
        dim = len(comps) // 2
        for c in comps:
            if not isinstance(c, DeformedFn):
                raise TypeError("phase map components must be DeformedFn")
            if c.dim != dim:
                raise IncompatibleContext("component dimension does not match 2N components")
            if c.params != comps[0].params:
                raise IncompatibleContext("components must share parameters")
        trunc = tuple(map(min, *(c.trunc for c in comps))) if comps[0].params else ()
        comps = tuple(c.truncate(**dict(zip(c.params, trunc))) for c in comps)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "components", comps)

    def __setattr__(self, name, value):
        raise AttributeError("PhaseMap is immutable")

    @classmethod
    def identity(cls, ctx):
        return cls(ctx.coords())

    @property
    def params(self):
        return self.components[0].params

    @property
    def trunc(self):
        return self.components[0].trunc

    @property
    def context(self):
        return Context(self.dim, self.params, self.trunc)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __eq__(self, other):
        return isinstance(other, PhaseMap) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __sub__(self, other):
        return tuple(a - b for a, b in zip(self.components, other.components))

    def agrees_with(self, other):
        """Equality up to the common truncation."""
        return all((a - b).is_zero() for a, b in zip(self.components, other.components))

    def is_flow_like(self):
        ctx = self.context
        return all(c.at_zero() == ctx.lift(v).at_zero() for c, v in zip(self.components, ctx.coords()))

    def map(self, fn):
        return PhaseMap(fn(c) for c in self.components)

    def embed(self, params, trunc):
        return self.map(lambda c: c.embed(params, trunc))

    def truncate(self, **orders):
        return self.map(lambda c: c.truncate(**orders))

    def rename_params(self, mapping):
        return self.map(lambda c: c.rename_params(mapping))

    def compose(self, inner):
        """``self o inner``: substitute ``inner`` into every component."""
        return PhaseMap(substitute(c, inner) for c in self.components)

    def to_text(self):
        names = var_names(self.dim)
        return "\n".join(f"{n}' = {c.to_text()}" for n, c in zip(names, self.components))

    def __repr__(self):
        return f"PhaseMap(dim={self.dim}, params={self.params}, trunc={self.trunc})"


def substitute(f, phi):
    """Evaluate ``f`` at ``x^i -> Q^i, p_j -> P_j`` (classical composition).

    ``f`` may be a PhasePoly (treated as parameter-free) or a DeformedFn over
    the same parameters as ``phi``.  Powers of the components are shared
    between terms through a monomial cache.
    """
    if f.dim != phi.dim:
        raise IncompatibleContext(f"dimension mismatch: {f.dim} vs {phi.dim}")
    ctx = phi.context
    if isinstance(f, PhasePoly):
        groups = {k: ctx.const(c) for k, c in f.terms.items()}
        trunc = ctx.trunc
    else:
        if f.params != phi.params:
            raise IncompatibleContext(f"parameter mismatch: {f.params} vs {phi.params}")
        n = len(f.params)
        width = 2 * f.dim
        buckets = {}
        for k, c in f.terms.items():
            buckets.setdefault(k[n:], {})[k[:n] + (0,) * width] = c
        trunc = tuple(map(min, f.trunc, ctx.trunc))
        groups = {ph: DeformedFn(f.dim, f.params, trunc, t) for ph, t in buckets.items()}

    comps = phi.components
    cache = {(0,) * (2 * phi.dim): ctx.one()}

    def mono(exps):
        hit = cache.get(exps)
        if hit is not None:
            return hit
        j = next(i for i, e in enumerate(exps) if e)
        prev = exps[:j] + (exps[j] - 1,) + exps[j + 1:]
        val = mono(prev) * comps[j]
        cache[exps] = val
        return val

    out = ctx.zero()
    if ctx.params:
        out = out.truncate(**dict(zip(ctx.params, trunc)))
    for ph in sorted(groups, key=sum):
        out = out + groups[ph] * mono(ph)
    return out


def invert_map(phi):
    """Series inverse ``psi`` with ``phi o psi = psi o phi = id`` up to truncation.

    Writes ``phi = id + R`` where ``R`` has strictly positive parameter
    degree, then iterates ``psi <- id - R o psi`` until it stops changing;
    each pass fixes at least one more total parameter degree.
    """
    if not phi.is_flow_like():
        raise NotInvertible("map is not the identity at zero parameter values")
    ctx = phi.context
    ident = ctx.coords()
    rest = PhaseMap(c - i for c, i in zip(phi.components, ident))
    psi = PhaseMap(ident)
    for _ in range(sum(ctx.trunc) + 2):
        nxt = PhaseMap(i - substitute(r, psi) for i, r in zip(ident, rest.components))
        if nxt == psi:
            return psi
        psi = nxt
    raise NotInvertible("series reversion did not converge")

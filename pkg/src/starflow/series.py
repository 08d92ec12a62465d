"""Phase-space polynomials and truncated multi-parameter power series.

A :class:`DeformedFn` is stored flat: every term is keyed by the tuple
``(parameter exponents..., x exponents..., p exponents...)``.  A
:class:`PhasePoly` is the same object without parameter slots.  Phase
variables are indexed ``0..N-1`` for ``x^1..x^N`` and ``N..2N-1`` for
``p_1..p_N``.
"""

from dataclasses import dataclass
from math import factorial, comb

from gmpy2 import mpq

from .gaussian import GaussianRational, ONE, ZERO

__all__ = [
    "IncompatibleContext",
    "Context",
    "PhasePoly",
    "DeformedFn",
    "var_names",
    "var_index",
    "partial",
    "param_derivative",
    "monomials",
]


class IncompatibleContext(ValueError):
    """Operands live on different phase spaces or parameter sets."""


def var_names(dim):
    if dim == 1:
        return ["x", "p"]
    return [f"x{i}" for i in range(1, dim + 1)] + [f"p{i}" for i in range(1, dim + 1)]


def var_index(name, dim):
    """Index of a phase variable given its name (``x``, ``p2``, ...)."""
    if isinstance(name, int):
        if not 0 <= name < 2 * dim:
            raise IndexError(f"variable index {name} out of range for dim={dim}")
        return name
    names = var_names(dim)
    if name in names:
        return names.index(name)
    if dim == 1 and name in ("x1", "p1"):
        return 0 if name == "x1" else 1
    raise IndexError(f"unknown phase variable {name!r} for dim={dim}")


def monomials(nvars, max_degree, min_degree=0):
    """All exponent tuples of length ``nvars`` with total degree in range,
    in graded order (low degree first)."""
    out = []

    def rec(prefix, left, remaining):
        if remaining == 1:
            out.append(prefix + (left,))
            return
        for k in range(left, -1, -1):
            rec(prefix + (k,), left - k, remaining - 1)

    for d in range(min_degree, max_degree + 1):
        if nvars == 0:
            if d == 0:
                out.append(())
            continue
        rec((), d, nvars)
    return out


def _within(key, trunc):
    for j, t in enumerate(trunc):
        if key[j] > t:
            return False
    return True


def _coerce_scalar(value):
    return GaussianRational.coerce(value)


def _phase_sort_key(exps):
    # descending graded lex
    return (-sum(exps), tuple(-e for e in exps))


class _TermMap:
    """Shared machinery: a finite map from exponent tuples to coefficients."""

    __slots__ = ("dim", "params", "trunc", "terms", "_np")

    def _init(self, dim, params, trunc, terms, normalized):
        if dim < 1:
            raise ValueError("dim must be positive")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "trunc", tuple(int(t) for t in trunc))
        object.__setattr__(self, "_np", len(self.params))
        if len(self.trunc) != self._np:
            raise ValueError("one truncation order per parameter is required")
        if any(t < 0 for t in self.trunc):
            raise ValueError("truncation orders must be non-negative")
        if not normalized:
            width = self._np + 2 * dim
            clean = {}
            for key, c in terms.items():
                key = tuple(key)
                if len(key) != width:
                    raise ValueError(f"exponent vector {key} has wrong length (want {width})")
                if any(e < 0 for e in key):
                    raise ValueError(f"negative exponent in {key}")
                c = _coerce_scalar(c)
                if not c or not self._within(key):
                    continue
                clean[key] = c
            terms = clean
        object.__setattr__(self, "terms", terms)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _within(self, key):
        return _within(key, self.trunc)

    def _new(self, terms, trunc=None):
        """Same context, new (already clean) terms."""
        return type(self)._from_clean(self.dim, self.params, self.trunc if trunc is None else trunc, terms)

    # -- basic predicates -------------------------------------------------
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def is_real(self):
        return all(c.is_real() for c in self.terms.values())

    def conjugate(self):
        return self._new({k: c.conjugate() for k, c in self.terms.items()})

    def max_phase_degree(self):
        n = self._np
        return max((sum(k[n:]) for k in self.terms), default=0)

    # -- ring operations -------------------------------------------------
    def _combine_context(self, other):
        if isinstance(other, _TermMap):
            if other.dim != self.dim:
                raise IncompatibleContext(f"dimension mismatch: {self.dim} vs {other.dim}")
            if isinstance(self, DeformedFn) and isinstance(other, PhasePoly):
                return self, other.lift(self.params, self.trunc)
            if isinstance(self, PhasePoly) and isinstance(other, DeformedFn):
                return self.lift(other.params, other.trunc), other
            if self.params != other.params:
                raise IncompatibleContext(f"parameter mismatch: {self.params} vs {other.params}")
            return self, other
        return self, self._constant(other)

    def _constant(self, value):
        c = _coerce_scalar(value)
        key = (0,) * (self._np + 2 * self.dim)
        return self._new({key: c} if c else {})

    def __add__(self, other):
        try:
            a, b = self._combine_context(other)
        except TypeError:
            return NotImplemented
        trunc = tuple(map(min, a.trunc, b.trunc))
        out = {}
        for src in (a.terms, b.terms):
            for k, c in src.items():
                out[k] = out[k] + c if k in out else c
        return type(a)._from_clean(a.dim, a.params, trunc, {k: c for k, c in out.items() if c and _within(k, trunc)})

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        try:
            a, b = self._combine_context(other)
        except TypeError:
            return NotImplemented
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, value):
        c = _coerce_scalar(value)
        if not c:
            return self._new({})
        return self._new({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, _TermMap):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        a, b = self._combine_context(other)
        trunc = tuple(map(min, a.trunc, b.trunc))
        return type(a)._from_clean(a.dim, a.params, trunc, _mul_terms(a.terms, b.terms, a._np, trunc))

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = self._constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __truediv__(self, value):
        if isinstance(value, _TermMap):
            return NotImplemented
        return self.scale(_coerce_scalar(value).inverse())

    def __eq__(self, other):
        if isinstance(other, _TermMap):
            return (
                type(self) is type(other)
                and self.dim == other.dim
                and self.params == other.params
                and self.trunc == other.trunc
                and self.terms == other.terms
            )
        try:
            return self == self._constant(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.dim, self.params, self.trunc, frozenset(self.terms.items())))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_text()!r})"

    def __str__(self):
        return self.to_text()

    # -- calculus ----------------------------------------------------------
    def partial(self, var):
        j = self._np + var_index(var, self.dim)
        out = {}
        for k, c in self.terms.items():
            e = k[j]
            if e:
                nk = k[:j] + (e - 1,) + k[j + 1:]
                out[nk] = c * e
        return self._new(out)

    def derivative(self, alpha):
        """Apply ``d^alpha`` for a multi-index over the 2N phase variables."""
        n = self._np
        out = {}
        for k, c in self.terms.items():
            ph = k[n:]
            if any(e < a for e, a in zip(ph, alpha)):
                continue
            f = 1
            for e, a in zip(ph, alpha):
                f *= factorial(e) // factorial(e - a)
            out[k[:n] + tuple(e - a for e, a in zip(ph, alpha))] = c * f
        return self._new(out)

    # -- text ---------------------------------------------------------------
    def sorted_terms(self):
        n = self._np
        return sorted(
            self.terms.items(),
            key=lambda kv: (sum(kv[0][:n]), tuple(-e for e in kv[0][:n]), _phase_sort_key(kv[0][n:])),
        )

    def to_text(self):
        """Canonical text form, parseable by :func:`starflow.parsing.parse`."""
        if not self.terms:
            return "0"
        names = list(self.params) + var_names(self.dim)
        pieces = []
        for key, c in self.sorted_terms():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, key) if e]
            mono = "*".join(factors)
            neg = False
            if not c.im and c.re < 0:
                neg, c = True, -c
            elif not c.re and c.im < 0:
                neg, c = True, -c
            if c == ONE and mono:
                body = mono
            else:
                body = c.to_text() + ("*" + mono if mono else "")
            if not pieces:
                pieces.append(("-" if neg else "") + body)
            else:
                pieces.append((" - " if neg else " + ") + body)
        return "".join(pieces)


def _mul_terms(ta, tb, np, trunc):
    """Multiply two flat term maps, discarding terms beyond truncation."""
    if len(ta) > len(tb):
        ta, tb = tb, ta
    acc_re = {}
    acc_im = {}
    b_items = [(k, c.re, c.im, k[:np]) for k, c in tb.items()]
    for ka, ca in ta.items():
        ar, ai = ca.re, ca.im
        pa = ka[:np]
        for kb, br, bi, pb in b_items:
            if np:
                ok = True
                for j in range(np):
                    if pa[j] + pb[j] > trunc[j]:
                        ok = False
                        break
                if not ok:
                    continue
            k = tuple([x + y for x, y in zip(ka, kb)])
            if ai or bi:
                re = ar * br - ai * bi
                im = ar * bi + ai * br
            else:
                re = ar * br
                im = None
            if re:
                acc_re[k] = acc_re.get(k, 0) + re
            if im:
                acc_im[k] = acc_im.get(k, 0) + im
    out = {}
    zero = mpq(0)
    for k in set(acc_re) | set(acc_im):
        re = acc_re.get(k, zero)
        im = acc_im.get(k, zero)
        if re or im:
            out[k] = GaussianRational._raw(mpq(re), mpq(im))
    return out


class PhasePoly(_TermMap):
    """Exact polynomial in ``x^1..x^N, p_1..p_N`` over Q(i)."""

    __slots__ = ()

    def __init__(self, dim, terms=None):
        self._init(dim, (), (), terms or {}, False)

    @classmethod
    def _from_clean(cls, dim, params, trunc, terms):
        obj = object.__new__(cls)
        obj._init(dim, (), (), terms, True)
        return obj

    @classmethod
    def var(cls, dim, name):
        j = var_index(name, dim)
        key = tuple(1 if i == j else 0 for i in range(2 * dim))
        return cls(dim, {key: 1})

    @classmethod
    def constant(cls, dim, value):
        return cls(dim, {(0,) * (2 * dim): value})

    def lift(self, params, trunc):
        """View this polynomial as a series constant in the given parameters."""
        return DeformedFn(self.dim, params, trunc, {(0,) * len(params) + k: c for k, c in self.terms.items()})

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), ZERO)

    def total_degree(self):
        return max((sum(k) for k in self.terms), default=0)


class DeformedFn(_TermMap):
    """Truncated power series in named parameters with PhasePoly coefficients.

    ``trunc[j]`` is the largest retained degree of ``params[j]``.  Results of
    binary operations carry the componentwise minimum of the operands'
    truncations.
    """

    __slots__ = ()

    def __init__(self, dim, params, trunc, terms=None):
        self._init(dim, params, trunc, terms or {}, False)

    @classmethod
    def _from_clean(cls, dim, params, trunc, terms):
        obj = object.__new__(cls)
        obj._init(dim, params, trunc, terms, True)
        return obj

    @classmethod
    def from_coeffs(cls, dim, params, trunc, coeffs):
        """Build from ``{param multi-degree: PhasePoly}``."""
        terms = {}
        for deg, poly in coeffs.items():
            if isinstance(poly, PhasePoly):
                if poly.dim != dim:
                    raise IncompatibleContext("coefficient dimension mismatch")
                for k, c in poly.terms.items():
                    terms[tuple(deg) + k] = c
            else:
                terms[tuple(deg) + (0,) * (2 * dim)] = poly
        return cls(dim, params, trunc, terms)

    @property
    def context(self):
        return Context(self.dim, self.params, self.trunc)

    @property
    def coeffs(self):
        """``{param multi-degree: PhasePoly}``."""
        n = self._np
        groups = {}
        for k, c in self.terms.items():
            groups.setdefault(k[:n], {})[k[n:]] = c
        return {d: PhasePoly._from_clean(self.dim, (), (), t) for d, t in sorted(groups.items())}

    def coeff(self, **degrees):
        """PhasePoly coefficient at the given parameter degrees (others 0)."""
        want = tuple(degrees.get(p, 0) for p in self.params)
        unknown = set(degrees) - set(self.params)
        if unknown:
            raise KeyError(f"unknown parameters {sorted(unknown)}")
        n = self._np
        return PhasePoly._from_clean(self.dim, (), (), {k[n:]: c for k, c in self.terms.items() if k[:n] == want})

    def param_index(self, name):
        try:
            return self.params.index(name)
        except ValueError:
            raise KeyError(f"unknown parameter {name!r}; have {self.params}") from None

    def part(self, name, degree):
        """Terms of the given degree in one parameter, kept as a series."""
        j = self.param_index(name)
        return self._new({k: c for k, c in self.terms.items() if k[j] == degree})

    def truncate(self, **orders):
        trunc = list(self.trunc)
        for name, order in orders.items():
            j = self.param_index(name)
            if order > trunc[j]:
                raise ValueError(f"cannot raise truncation of {name} from {trunc[j]} to {order}")
            trunc[j] = order
        trunc = tuple(trunc)
        return self._new({k: c for k, c in self.terms.items() if _within(k, trunc)}, trunc)

    def with_truncation(self, **orders):
        """Reset truncation orders, raising allowed only when the series is
        known to be exact in that parameter (caller's responsibility)."""
        trunc = list(self.trunc)
        for name, order in orders.items():
            trunc[self.param_index(name)] = order
        return DeformedFn(self.dim, self.params, tuple(trunc), self.terms)

    def embed(self, params, trunc):
        """Re-express in a larger parameter list; new parameters are absent
        from this series, so it is exact in them at any truncation."""
        params, trunc = tuple(params), tuple(trunc)
        missing = [p for p in self.params if p not in params]
        if missing:
            raise IncompatibleContext(f"cannot embed: parameters {missing} not in target")
        pos = [self.params.index(p) if p in self.params else None for p in params]
        new_trunc = tuple(
            min(t, self.trunc[i]) if i is not None else t for t, i in zip(trunc, pos)
        )
        n = self._np
        terms = {}
        for k, c in self.terms.items():
            terms[tuple(k[i] if i is not None else 0 for i in pos) + k[n:]] = c
        return DeformedFn(self.dim, params, new_trunc, terms)

    def lift(self, params, trunc):
        return self.embed(params, trunc)

    def rename_params(self, mapping):
        params = tuple(mapping.get(p, p) for p in self.params)
        if len(set(params)) != len(params):
            raise IncompatibleContext(f"renaming produces duplicate parameters {params}")
        return DeformedFn._from_clean(self.dim, params, self.trunc, dict(self.terms))

    def shift(self, **degrees):
        """Multiply by a parameter monomial (e.g. ``shift(h=1)`` is ``h*f``)."""
        d = [0] * self._np
        for name, e in degrees.items():
            d[self.param_index(name)] = e
        n = self._np
        out = {}
        for k, c in self.terms.items():
            nk = tuple(k[j] + d[j] for j in range(n)) + k[n:]
            if all(nk[j] <= self.trunc[j] for j in range(n)):
                out[nk] = c
        return self._new(out)

    def param_derivative(self, name):
        j = self.param_index(name)
        trunc = list(self.trunc)
        trunc[j] = max(trunc[j] - 1, 0)
        out = {}
        for k, c in self.terms.items():
            e = k[j]
            if e:
                out[k[:j] + (e - 1,) + k[j + 1:]] = c * e
        trunc = tuple(trunc)
        return self._new({k: c for k, c in out.items() if _within(k, trunc)}, trunc)

    def at_zero(self, *names):
        """Set the named parameters (default: all) to zero."""
        idx = [self.param_index(p) for p in names] if names else list(range(self._np))
        return self._new({k: c for k, c in self.terms.items() if all(k[j] == 0 for j in idx)})

    def phase_part(self):
        """The part with every parameter at degree zero, as a PhasePoly."""
        n = self._np
        return PhasePoly._from_clean(self.dim, (), (), {k[n:]: c for k, c in self.terms.items() if not any(k[:n])})

    def min_degree(self, name):
        j = self.param_index(name)
        return min((k[j] for k in self.terms), default=None)

    def substitute_param(self, name, replacement, trunc):
        """Replace parameter ``name`` by a linear form in new parameters.

        ``replacement`` maps new parameter names to rational multipliers,
        e.g. ``{"t1": 1, "t2": 1}`` realizes ``t -> t1 + t2``.  ``trunc``
        gives the truncation of each new parameter; the source truncation in
        ``name`` must cover the sum of the new truncations.
        """
        j = self.param_index(name)
        new_names = list(replacement)
        if any(p in self.params and p != name for p in new_names):
            raise IncompatibleContext("replacement parameters collide with existing ones")
        needed = sum(trunc[p] for p in new_names)
        if needed > self.trunc[j]:
            raise ValueError(
                f"truncation {self.trunc[j]} in {name!r} is too low for target orders {trunc}"
            )
        others = [p for p in self.params if p != name]
        params = tuple(others) + tuple(new_names)
        new_trunc = tuple(self.trunc[self.params.index(p)] for p in others) + tuple(trunc[p] for p in new_names)
        coef = [GaussianRational.coerce(replacement[p]) for p in new_names]
        n = self._np
        m = len(new_names)
        terms = {}
        for k, c in self.terms.items():
            e = k[j]
            base = tuple(k[i] for i in range(n) if i != j)
            for split in monomials(m, e, e):
                if any(s > trunc[p] for s, p in zip(split, new_names)):
                    continue
                mult = factorial(e)
                val = c
                for s, cf in zip(split, coef):
                    mult //= factorial(s)
                    if s:
                        val = val * cf ** s
                nk = base + split + k[n:]
                val = val * mult
                terms[nk] = terms[nk] + val if nk in terms else val
        return DeformedFn(self.dim, params, new_trunc, terms)


@dataclass(frozen=True)
class Context:
    """Phase-space dimension plus parameter names and truncation orders."""

    dim: int
    params: tuple = ()
    trunc: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "trunc", tuple(self.trunc))
        if len(self.params) != len(self.trunc):
            raise ValueError("one truncation order per parameter is required")

    def series(self, terms=None):
        return DeformedFn(self.dim, self.params, self.trunc, terms or {})

    def zero(self):
        return self.series()

    def const(self, value):
        return self.series({(0,) * (len(self.params) + 2 * self.dim): value})

    def one(self):
        return self.const(1)

    def var(self, name):
        if name in self.params:
            j = self.params.index(name)
            key = tuple(1 if i == j else 0 for i in range(len(self.params))) + (0,) * (2 * self.dim)
            return self.series({key: 1})
        return self.lift(PhasePoly.var(self.dim, name))

    def coords(self):
        """``(x^1, ..., x^N, p_1, ..., p_N)`` as series."""
        return tuple(self.var(i) for i in range(2 * self.dim))

    def lift(self, f):
        if isinstance(f, DeformedFn):
            if f.params != self.params:
                return f.embed(self.params, self.trunc)
            return f.truncate(**dict(zip(self.params, map(min, self.trunc, f.trunc))))
        if isinstance(f, PhasePoly):
            if f.dim != self.dim:
                raise IncompatibleContext("dimension mismatch")
            return f.lift(self.params, self.trunc)
        return self.const(f)

    def with_params(self, **orders):
        params = list(self.params)
        trunc = list(self.trunc)
        for name, order in orders.items():
            if name in params:
                trunc[params.index(name)] = order
            else:
                params.append(name)
                trunc.append(order)
        return Context(self.dim, tuple(params), tuple(trunc))

    def order(self, name):
        return self.trunc[self.params.index(name)]


def partial(f, var):
    """Formal partial derivative with respect to a phase variable."""
    return f.partial(var)


def param_derivative(f, name):
    """Formal derivative with respect to a parameter; its truncation drops by one."""
    if not isinstance(f, DeformedFn):
        raise TypeError("param_derivative needs a DeformedFn")
    return f.param_derivative(name)


def binomial_multi(alpha, beta):
    out = 1
    for a, b in zip(alpha, beta):
        out *= comb(a, b)
    return out

"""Differential-operator intertwiners, quantum pull-back and quantum composition.

An intertwiner ``S = 1 + h S_1 + h^2 S_2 + ...`` for a flow ``Phi`` maps the
Moyal product to the transformed product ``*_t`` of :mod:`starflow.transform`
while fixing the coordinate functions.  The quantum pull-back of an
observable is ``(S A) o Phi`` and flows compose as
``Phi_1 Phi_2 = (S_2 Phi_1) o Phi_2``.
"""

from dataclasses import dataclass, field
from math import factorial

from .gaussian import GaussianRational
from .maps import PhaseMap, substitute
from .moyal import HBAR, MOYAL, star
from .series import Context, DeformedFn, IncompatibleContext, PhasePoly, monomials, var_names
from .transform import transformed_star

__all__ = [
    "DiffOperator",
    "NotNilpotent",
    "apply_op",
    "apply_op_exp",
    "IntertwinerReport",
    "verify_intertwiner",
    "SolveResult",
    "solve_intertwiner",
    "quantum_pullback",
    "quantum_compose",
    "GroupLawReport",
    "check_group_law",
]


class NotNilpotent(ValueError):
    """Operator exponential requested for a generator with an h^0 part."""


def _falling(n, k):
    out = 1
    for j in range(k):
        out *= n - j
    return out


class DiffOperator:
    """``sum_alpha a_alpha d^alpha`` with series coefficients on a common context.

    Multi-indices ``alpha`` run over the 2N phase variables.
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx, terms=None):
        clean = {}
        for alpha, coeff in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != 2 * ctx.dim:
                raise ValueError(f"multi-index {alpha} has wrong length")
            coeff = ctx.lift(coeff)
            if not coeff.is_zero():
                clean[alpha] = coeff
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("DiffOperator is immutable")

    @classmethod
    def identity(cls, ctx):
        return cls(ctx, {(0,) * (2 * ctx.dim): ctx.one()})

    @classmethod
    def zero(cls, ctx):
        return cls(ctx)

    @property
    def dim(self):
        return self.ctx.dim

    def order(self):
        return max((sum(a) for a in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, DiffOperator) and self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        return hash((self.ctx, frozenset(self.terms.items())))

    def __add__(self, other):
        ctx = _common(self.ctx, other.ctx)
        out = {a: ctx.lift(c) for a, c in self.terms.items()}
        for a, c in other.terms.items():
            c = ctx.lift(c)
            out[a] = out[a] + c if a in out else c
        return DiffOperator(ctx, out)

    def __neg__(self):
        return DiffOperator(self.ctx, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, value):
        if isinstance(value, DeformedFn):
            return DiffOperator(self.ctx, {a: c * value for a, c in self.terms.items()})
        return DiffOperator(self.ctx, {a: c.scale(value) for a, c in self.terms.items()})

    def __call__(self, f):
        return apply_op(self, f)

    def __matmul__(self, other):
        """Operator composition ``self o other`` (Leibniz rule on coefficients)."""
        ctx = _common(self.ctx, other.ctx)
        out = {}
        for alpha, a in self.terms.items():
            for beta, b in other.terms.items():
                for gamma in _below(alpha):
                    mult = 1
                    for x, y in zip(alpha, gamma):
                        mult *= _binom(x, y)
                    db = ctx.lift(b).derivative(gamma)
                    if db.is_zero():
                        continue
                    key = tuple(x - y + z for x, y, z in zip(alpha, gamma, beta))
                    val = (ctx.lift(a) * db).scale(mult)
                    out[key] = out[key] + val if key in out else val
        return DiffOperator(ctx, out)

    def hbar_part(self, degree):
        """The operator made of the ``h^degree`` parts of the coefficients."""
        return DiffOperator(self.ctx, {a: c.part(HBAR, degree) for a, c in self.terms.items()})

    def is_s_operator(self):
        """Whether the ``h^0`` part is the identity operator."""
        return self.hbar_part(0) == DiffOperator.identity(self.ctx).hbar_part(0)

    def is_real(self):
        return all(c.is_real() for c in self.terms.values())

    def map_coeffs(self, fn, ctx=None):
        new = {a: fn(c) for a, c in self.terms.items()}
        if ctx is None:
            sample = next(iter(new.values()), None)
            ctx = sample.context if sample is not None else self.ctx
        return DiffOperator(ctx, new)

    def truncate(self, **orders):
        ctx = Context(self.dim, self.ctx.params, tuple(orders.get(p, t) for p, t in zip(self.ctx.params, self.ctx.trunc)))
        return DiffOperator(ctx, {a: c.truncate(**orders) for a, c in self.terms.items()})

    def embed(self, params, trunc):
        ctx = Context(self.dim, params, trunc)
        return DiffOperator(ctx, {a: c.embed(params, trunc) for a, c in self.terms.items()})

    def rename_params(self, mapping):
        params = tuple(mapping.get(p, p) for p in self.ctx.params)
        ctx = Context(self.dim, params, self.ctx.trunc)
        return DiffOperator(ctx, {a: c.rename_params(mapping) for a, c in self.terms.items()})

    def substitute_param(self, name, replacement, trunc):
        probe = self.ctx.one().substitute_param(name, replacement, trunc)
        return DiffOperator(probe.context, {a: c.substitute_param(name, replacement, trunc) for a, c in self.terms.items()})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), tuple(-e for e in kv[0])))

    def to_text(self):
        """Canonical text ``(coeff)*dx^3 + ...`` sorted by multi-index."""
        if not self.terms:
            return "0"
        names = ["d" + n for n in var_names(self.dim)]
        parts = []
        for alpha, c in self.sorted_terms():
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, alpha) if e)
            text = c.to_text()
            if not mono:
                parts.append(f"({text})" if len(c) > 1 else text)
            elif c == self.ctx.one():
                parts.append(mono)
            else:
                parts.append(f"({text})*{mono}")
        return " + ".join(parts)

    def __repr__(self):
        return f"DiffOperator({self.to_text()!r})"


def _binom(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k))


def _below(alpha):
    """All multi-indices gamma <= alpha."""
    out = [()]
    for a in alpha:
        out = [g + (k,) for g in out for k in range(a + 1)]
    return out


def _common(a, b):
    if a.dim != b.dim:
        raise IncompatibleContext("dimension mismatch")
    if a.params != b.params:
        raise IncompatibleContext(f"parameter mismatch: {a.params} vs {b.params}")
    return Context(a.dim, a.params, tuple(map(min, a.trunc, b.trunc)))


def apply_op(S, f):
    """``sum_alpha a_alpha d^alpha f``."""
    ctx = S.ctx
    if isinstance(f, PhasePoly):
        f = ctx.lift(f)
    elif isinstance(f, DeformedFn):
        if f.params != ctx.params:
            raise IncompatibleContext(f"parameter mismatch: {f.params} vs {ctx.params}")
        if f.dim != ctx.dim:
            raise IncompatibleContext("dimension mismatch")
    else:
        f = ctx.const(f)
    trunc = tuple(map(min, f.trunc, ctx.trunc))
    out = ctx.zero().truncate(**dict(zip(ctx.params, trunc))) if ctx.params else ctx.zero()
    for alpha, a in S.terms.items():
        df = f.derivative(alpha)
        if not df.is_zero():
            out = out + a * df
    return out


def apply_op_exp(generator):
    """``exp(G) = sum_n G^n / n!`` for a generator with no ``h^0`` part.

    The series stops once ``G^n`` vanishes, which happens after at most
    ``K`` steps at ``h`` truncation ``K``.
    """
    ctx = generator.ctx
    if HBAR not in ctx.params:
        raise NotNilpotent("generator has no 'h' parameter")
    for c in generator.terms.values():
        if c.min_degree(HBAR) == 0:
            raise NotNilpotent("generator has a nonzero h^0 part")
    result = DiffOperator.identity(ctx)
    power = DiffOperator.identity(ctx)
    n = 0
    while True:
        n += 1
        power = power @ generator
        if power.is_zero():
            return result
        result = result + power.scale(GaussianRational(1) / factorial(n))


# -- verification ----------------------------------------------------------


def monomial_pairs(dim, degree):
    """Ordered pairs of monomials ``(f, g)`` with ``deg f + deg g <= degree``."""
    monos = monomials(2 * dim, degree)
    return [(a, b) for a in monos for b in monos if sum(a) + sum(b) <= degree]


def _mono(ctx, exps):
    return ctx.series({(0,) * len(ctx.params) + tuple(exps): 1})


def _mono_text(dim, exps):
    names = var_names(dim)
    parts = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e]
    return "*".join(parts) or "1"


@dataclass
class IntertwinerReport:
    """Outcome of checking the three defining relations of an intertwiner.

    ``relations`` maps ``"product"``, ``"coordinates"`` and ``"involution"`` to
    dicts with ``passed``, ``checked`` and up to ``max_failures`` failing
    inputs with their residuals.
    """

    order: int
    degree: int
    relations: dict = field(default_factory=dict)
    is_s_operator: bool = True

    @property
    def passed(self):
        return self.is_s_operator and all(r["passed"] for r in self.relations.values())


def _align(S, phi, order):
    ctx = phi.context
    if S.ctx.params != ctx.params:
        missing = set(S.ctx.params) - set(ctx.params)
        if missing:
            raise IncompatibleContext(f"operator parameters {sorted(missing)} absent from the flow")
        S = S.embed(ctx.params, ctx.trunc)
    trunc = tuple(map(min, S.ctx.trunc, ctx.trunc))
    orders = dict(zip(ctx.params, trunc))
    if order is not None:
        if order > orders[HBAR]:
            raise ValueError(f"requested order {order} exceeds available h truncation {orders[HBAR]}")
        orders[HBAR] = order
    return S.truncate(**orders), phi.truncate(**orders)


def verify_intertwiner(S, phi, order=None, degree=6, max_failures=5, spec=None):
    """Check ``S(f*g) = Sf *_t Sg``, ``S x^i = x^i, S p_j = p_j`` and
    ``S(conj f) = conj(S f)`` on all monomial pairs up to ``degree``,
    everything truncated at ``h^order``.
    """
    S, phi = _align(S, phi, order)
    ctx = phi.context
    report = IntertwinerReport(ctx.order(HBAR), degree, is_s_operator=S.is_s_operator())
    spec = spec or transformed_star(phi)
    cache = {}

    def applied(exps):
        if exps not in cache:
            cache[exps] = apply_op(S, _mono(ctx, exps))
        return cache[exps]

    fails = []
    pairs = monomial_pairs(ctx.dim, degree)
    for a, b in pairs:
        lhs = apply_op(S, star(MOYAL, _mono(ctx, a), _mono(ctx, b)))
        rhs = star(spec, applied(a), applied(b))
        diff = lhs - rhs
        if not diff.is_zero() and len(fails) < max_failures:
            fails.append({"f": _mono_text(ctx.dim, a), "g": _mono_text(ctx.dim, b), "residual": diff})
        elif not diff.is_zero():
            fails.append(None)
    report.relations["product"] = _relation(pairs, fails)

    fails = []
    coords = ctx.coords()
    for v, c in enumerate(coords):
        diff = apply_op(S, c) - c
        if not diff.is_zero():
            fails.append({"f": var_names(ctx.dim)[v], "residual": diff})
    report.relations["coordinates"] = _relation(coords, fails)

    fails = []
    monos = monomials(2 * ctx.dim, degree)
    unit = GaussianRational(1, 1)
    for m in monos:
        f = _mono(ctx, m).scale(unit)
        diff = apply_op(S, f.conjugate()) - apply_op(S, f).conjugate()
        if not diff.is_zero() and len(fails) < max_failures:
            fails.append({"f": f"(1 + i)*{_mono_text(ctx.dim, m)}", "residual": diff})
    report.relations["involution"] = _relation(monos, fails)
    return report


def _relation(family, fails):
    shown = [f for f in fails if f is not None]
    return {"passed": not fails, "checked": len(family), "failed": len(fails), "failures": shown}


# -- solver ----------------------------------------------------------------


@dataclass
class SolveResult:
    """``status`` is ``"solved"``, ``"ansatz-exhausted"`` (the bounded ansatz
    has no solution; a larger one might) or ``"inconsistent"`` (no linear
    operator at all satisfies the product relation at some order)."""

    status: str
    operator: DiffOperator = None
    order_reached: int = 0
    message: str = ""
    unique: bool = True
    report: IntertwinerReport = None

    @property
    def found(self):
        return self.status == "solved"


def solve_intertwiner(phi, order, max_derivative_order=3, max_coeff_degree=6, check_degree=None, verify_degree=None):
    """Construct ``S = 1 + h S_1 + ... + h^order S_order`` order by order.

    With ``S_{<n}`` known, the ``h^n`` part of the product relation reads

        S_n(f g) - f S_n(g) - S_n(f) g = R_n(f, g),
        R_n(f, g) = [S_{<n} f *_t S_{<n} g - S_{<n}(f * g)]_{h^n},

    and ``S_n x^i = S_n p_j = 0``.  These constraints are triangular on the
    monomial basis: ``S_n(m v) = S_n(m) v + R_n(m, v)`` for a coordinate
    ``v``, so ``S_n`` is forced on every monomial (homogeneous solutions
    would be vector fields vanishing on the coordinates, i.e. zero).  The
    forced values are checked against the relation on all monomial pairs of
    total degree ``<= check_degree``; differential-operator coefficients are
    then recovered from the values by the Taylor formula
    ``c_b = [S_n(z^b) - sum_{a<b} c_a b!/(b-a)! z^{b-a}] / b!`` and compared
    with the ansatz bounds.
    """
    if not phi.is_flow_like():
        raise ValueError("solve_intertwiner needs a flow-like map")
    ctx0 = phi.context
    if order > ctx0.order(HBAR):
        raise ValueError(f"order {order} exceeds the flow's h truncation {ctx0.order(HBAR)}")
    phi = phi.truncate(**{HBAR: order})
    ctx = phi.context
    if check_degree is None:
        check_degree = max_derivative_order + 1
    if verify_degree is None:
        verify_degree = check_degree
    spec = transformed_star(phi)
    dim = ctx.dim
    nv = 2 * dim
    monos = monomials(nv, check_degree)
    S = DiffOperator.identity(ctx)

    for n in range(1, order + 1):
        applied = {}

        def Sm(exps):
            if exps not in applied:
                applied[exps] = apply_op(S, _mono(ctx, exps))
            return applied[exps]

        rcache = {}

        def R(a, b):
            key = (a, b)
            if key not in rcache:
                lhs = star(spec, Sm(a), Sm(b))
                rhs = apply_op(S, star(MOYAL, _mono(ctx, a), _mono(ctx, b)))
                diff = lhs - rhs
                low = [d for d in range(n) if not diff.part(HBAR, d).is_zero()]
                if low:
                    raise AssertionError(f"lower order h^{low[0]} not satisfied while solving order {n}")
                rcache[key] = _lower_hbar(diff.part(HBAR, n), n)
            return rcache[key]

        zero_mono = (0,) * nv
        values = {zero_mono: -R(zero_mono, zero_mono)}
        for m in monos[1:]:
            if sum(m) == 1:
                values[m] = ctx.zero()
                continue
            j = max(i for i, e in enumerate(m) if e)
            prev = m[:j] + (m[j] - 1,) + m[j + 1:]
            unit = tuple(1 if i == j else 0 for i in range(nv))
            values[m] = values[prev] * _mono(ctx, unit) + R(prev, unit)

        for a, b in monomial_pairs(dim, check_degree):
            prod = tuple(x + y for x, y in zip(a, b))
            lhs = values[prod] - _mono(ctx, a) * values[b] - values[a] * _mono(ctx, b)
            if not (lhs - R(a, b)).is_zero():
                return SolveResult(
                    "inconsistent",
                    S,
                    n - 1,
                    f"order h^{n}: no linear operator satisfies the product relation on "
                    f"({_mono_text(dim, a)}, {_mono_text(dim, b)})",
                )

        coeffs = {}
        for beta in monos:
            acc = values[beta]
            for alpha, c in coeffs.items():
                if all(x <= y for x, y in zip(alpha, beta)) and alpha != beta:
                    mult = 1
                    for x, y in zip(alpha, beta):
                        mult *= _falling(y, x)
                    rest = tuple(y - x for x, y in zip(alpha, beta))
                    acc = acc - (c * _mono(ctx, rest)).scale(mult)
            bf = 1
            for y in beta:
                bf *= factorial(y)
            c = acc.scale(GaussianRational(1) / bf)
            if not c.is_zero():
                coeffs[beta] = c

        for alpha, c in coeffs.items():
            if sum(alpha) > max_derivative_order or c.max_phase_degree() > max_coeff_degree:
                return SolveResult(
                    "ansatz-exhausted",
                    S,
                    n - 1,
                    f"order h^{n} needs a term beyond the ansatz (derivative order {sum(alpha)}, "
                    f"coefficient degree {c.max_phase_degree()}); no solution within the bounds, "
                    "which does not rule out a solution with larger bounds",
                )
        S = S + DiffOperator(ctx, {a: c.shift(**{HBAR: n}) for a, c in coeffs.items()})

    report = verify_intertwiner(S, phi, order, verify_degree)
    status = "solved" if report.passed else "ansatz-exhausted"
    msg = "" if report.passed else "solution of the bounded ansatz fails verification at higher degree"
    return SolveResult(status, S, order, msg, True, report)


def _lower_hbar(f, n):
    j = f.param_index(HBAR)
    return DeformedFn(f.dim, f.params, f.trunc, {k[:j] + (k[j] - n,) + k[j + 1:]: c for k, c in f.terms.items()})


# -- pull-back and composition --------------------------------------------


def quantum_pullback(phi, S, A):
    """``(S A) o phi``; the intertwiner is assumed to belong to ``phi``."""
    ctx = phi.context
    if S.ctx.params != ctx.params:
        S = S.embed(ctx.params, ctx.trunc)
    A = ctx.lift(A)
    return substitute(apply_op(S, A), phi)


def _union(phi1, phi2):
    p1 = [p for p in phi1.params if p != HBAR]
    p2 = [p for p in phi2.params if p != HBAR]
    clash = set(p1) & set(p2)
    if clash:
        raise IncompatibleContext(f"flows share time parameters {sorted(clash)}")
    params = list(phi1.params) + [p for p in phi2.params if p not in phi1.params]
    order = {p: t for p, t in zip(phi1.params, phi1.trunc)}
    for p, t in zip(phi2.params, phi2.trunc):
        order[p] = min(order.get(p, t), t)
    return tuple(params), tuple(order[p] for p in params)


def quantum_compose(phi1, phi2, S2):
    """``Phi_1 Phi_2 = (S_2 Phi_1) o Phi_2`` with ``S_2`` applied per component.

    ``phi1`` and ``phi2`` must use distinct time parameters; the result lives
    on the union of their parameters.
    """
    params, trunc = _union(phi1, phi2)
    a = phi1.embed(params, trunc)
    b = phi2.embed(params, trunc)
    S = S2.embed(params, trunc)
    return PhaseMap(substitute(apply_op(S, c), b) for c in a.components)


@dataclass
class GroupLawReport:
    composition: dict = field(default_factory=dict)
    pullback: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r["passed"] for r in (*self.composition.values(), *self.pullback.values()))


def check_group_law(system, S, compose_order=3, degree=3, flow=None):
    """Check ``Phi_{t1} Phi_{t2} = Phi_{t1+t2}`` (both multiplication orders)
    and ``(Phi_{t1} Phi_{t2})^* = Phi_{t2}^* o Phi_{t1}^*`` on monomials up to
    ``degree``, with truncation ``compose_order`` in each of ``t1``, ``t2``.
    ``degree=None`` skips the pull-back check.
    """
    from .flows import TIME, quantum_flow

    c = compose_order
    need = 2 * c
    if flow is None:
        flow = quantum_flow(system.with_orders(t_order=max(system.t_order, need)))
    phi = flow.map
    if phi.context.order(TIME) < need:
        raise ValueError(f"flow t truncation must be at least {need}")
    if S.ctx.order(TIME) < need:
        raise ValueError(f"intertwiner t truncation must be at least {need}")
    S = S.truncate(**{HBAR: min(S.ctx.order(HBAR), phi.context.order(HBAR))})

    phi1 = phi.rename_params({TIME: "t1"}).truncate(t1=c)
    phi2 = phi.rename_params({TIME: "t2"}).truncate(t2=c)
    S1 = S.rename_params({TIME: "t1"}).truncate(t1=c)
    S2 = S.rename_params({TIME: "t2"}).truncate(t2=c)
    target = phi.map(lambda f: f.substitute_param(TIME, {"t1": 1, "t2": 1}, {"t1": c, "t2": c}))
    params, trunc = target.params, target.trunc

    report = GroupLawReport()
    for label, (a, b, Sb) in {"Phi_t1 Phi_t2": (phi1, phi2, S2), "Phi_t2 Phi_t1": (phi2, phi1, S1)}.items():
        composed = quantum_compose(a, b, Sb).embed(params, trunc)
        diffs = [x - y for x, y in zip(composed.components, target.components)]
        report.composition[label] = {
            "passed": all(d.is_zero() for d in diffs),
            "residuals": diffs,
        }

    if degree is None:
        return report
    composed = quantum_compose(phi1, phi2, S2).embed(params, trunc)
    S12 = S.substitute_param(TIME, {"t1": 1, "t2": 1}, {"t1": c, "t2": c})
    phi1e, phi2e = phi1.embed(params, trunc), phi2.embed(params, trunc)
    S1e, S2e = S1.embed(params, trunc), S2.embed(params, trunc)
    ctx = Context(phi.dim, params, trunc)
    fails = []
    monos = monomials(2 * phi.dim, degree)
    for m in monos:
        A = _mono(ctx, m)
        lhs = substitute(apply_op(S12, A), composed)
        rhs = quantum_pullback(phi2e, S2e, quantum_pullback(phi1e, S1e, A))
        diff = lhs - rhs
        if not diff.is_zero():
            fails.append({"A": _mono_text(phi.dim, m), "residual": diff})
    report.pullback["(Phi_t1 Phi_t2)^* = Phi_t2^* o Phi_t1^*"] = {
        "passed": not fails,
        "checked": len(monos),
        "failures": fails[:5],
    }
    return report

"""Quantum and classical Hamiltonian flows as (h, t) power series."""

from dataclasses import dataclass, field
from math import factorial

from .gaussian import GaussianRational, as_rational
from .maps import PhaseMap
from .moyal import HBAR, MOYAL, moyal_bracket, poisson_bracket
from .series import Context, DeformedFn, IncompatibleContext, PhasePoly, var_names

__all__ = [
    "TIME",
    "HamiltonianSystem",
    "QuantumFlow",
    "builtin_system",
    "BUILTIN_SYSTEMS",
    "evolve_observable",
    "evolve_classical",
    "quantum_flow",
    "classical_flow",
    "CanonicityReport",
    "check_quantum_canonicity",
    "check_classical_canonicity",
]

TIME = "t"


@dataclass(frozen=True)
class HamiltonianSystem:
    """A real polynomial Hamiltonian with the truncation orders used to
    expand its flow: ``hbar_order`` in ``h`` and ``t_order`` in ``t``."""

    H: PhasePoly
    hbar_order: int = 4
    t_order: int = 8
    name: str = ""
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not isinstance(self.H, PhasePoly):
            raise TypeError("the Hamiltonian must be a PhasePoly")
        if not self.H.is_real():
            raise ValueError("the Hamiltonian must have real coefficients")
        if self.hbar_order < 0 or self.t_order < 0:
            raise ValueError("truncation orders must be non-negative")

    @property
    def dim(self):
        return self.H.dim

    @property
    def context(self):
        return Context(self.dim, (HBAR, TIME), (self.hbar_order, self.t_order))

    def with_orders(self, hbar_order=None, t_order=None):
        return HamiltonianSystem(
            self.H,
            self.hbar_order if hbar_order is None else hbar_order,
            self.t_order if t_order is None else t_order,
            self.name,
            self.constants,
        )


@dataclass(frozen=True)
class QuantumFlow:
    system: HamiltonianSystem
    map: PhaseMap

    @property
    def Q(self):
        return self.map.components[: self.system.dim]

    @property
    def P(self):
        return self.map.components[self.system.dim:]


def _constants(values, names):
    out = {}
    for n in names:
        out[n] = as_rational(values.get(n, 1))
    return out


def builtin_system(name, hbar_order=4, t_order=8, **constants):
    """The three worked examples.

    ``harmonic``: ``(p^2 + w^2 x^2)/2``; ``coupled2``:
    ``p1^2/(2 m1) + p2^2/(2 m2) + k x1 p2^2``; ``x2p2``: ``x^2 p^2``.
    Constants default to 1 and must be exact rationals.
    """
    if name == "harmonic":
        c = _constants(constants, ["w"])
        x, p = (PhasePoly.var(1, v) for v in ("x", "p"))
        H = (p * p + x * x * (c["w"] ** 2)) * as_rational("1/2")
    elif name == "coupled2":
        c = _constants(constants, ["m1", "m2", "k"])
        x1, x2, p1, p2 = (PhasePoly.var(2, v) for v in ("x1", "x2", "p1", "p2"))
        H = p1 * p1 / (2 * c["m1"]) + p2 * p2 / (2 * c["m2"]) + x1 * p2 * p2 * c["k"]
    elif name == "x2p2":
        c = {}
        x, p = (PhasePoly.var(1, v) for v in ("x", "p"))
        H = x * x * p * p
    else:
        raise KeyError(f"unknown builtin system {name!r}")
    extra = set(constants) - set(c)
    if extra:
        raise KeyError(f"constants {sorted(extra)} do not apply to {name!r}")
    return HamiltonianSystem(H, hbar_order, t_order, name, c)


BUILTIN_SYSTEMS = ("harmonic", "coupled2", "x2p2")


def _time_series(system, A, bracket):
    ctx = system.context
    A = ctx.lift(A)
    if A.dim != system.dim:
        raise IncompatibleContext("observable dimension does not match the system")
    H = ctx.lift(system.H)
    jt = A.param_index(TIME)
    L = A.trunc[jt]
    out = A
    term = A
    for k in range(1, L + 1):
        term = bracket(H, term)
        if term.is_zero():
            break
        out = out + term.shift(**{TIME: k}).scale(GaussianRational((-1) ** k) / factorial(k))
    return out


def evolve_observable(system, A):
    """Heisenberg evolution ``A(t) = sum_k (-t)^k/k! [[H, ..., [[H, A]]...]]``.

    The sign makes ``dA/dt = [[A(t), H]]`` hold term by term.
    """
    return _time_series(system, A, lambda f, g: moyal_bracket(MOYAL, f, g))


def evolve_classical(system, A):
    """Same series with Poisson brackets (the ``h -> 0`` limit)."""
    return _time_series(system, A, poisson_bracket)


def quantum_flow(system):
    ctx = system.context
    return QuantumFlow(system, PhaseMap(evolve_observable(system, v) for v in ctx.coords()))


def classical_flow(system):
    ctx = system.context
    return QuantumFlow(system, PhaseMap(evolve_classical(system, v) for v in ctx.coords()))


@dataclass
class CanonicityReport:
    """Brackets between flow components and their deviation from
    the canonical values ``{Q^i, P_j} = delta^i_j``, others zero."""

    kind: str
    entries: list

    @property
    def passed(self):
        return all(e["deviation"].is_zero() for e in self.entries)

    def bracket(self, label):
        for e in self.entries:
            if e["label"] == label:
                return e["value"]
        raise KeyError(label)


def _canonicity(flow_or_map, bracket, kind):
    phi = flow_or_map.map if isinstance(flow_or_map, QuantumFlow) else flow_or_map
    n = phi.dim
    names = var_names(n)
    comps = phi.components
    ctx = phi.context
    labels = {j: ("Q" if j < n else "P") + (names[j][1:] if n > 1 else "") for j in range(2 * n)}
    entries = []
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            value = bracket(comps[a], comps[b])
            expected = 1 if (a < n and b == a + n) else 0
            entries.append(
                {
                    "label": f"{labels[a]},{labels[b]}",
                    "value": value,
                    "expected": expected,
                    "deviation": value - ctx.const(expected),
                }
            )
    return CanonicityReport(kind, entries)


def check_quantum_canonicity(flow):
    """Deformed brackets of the flow components under the Moyal product."""
    return _canonicity(flow, lambda f, g: moyal_bracket(MOYAL, f, g), "quantum")


def check_classical_canonicity(flow):
    """Poisson brackets of the flow components."""
    return _canonicity(flow, poisson_bracket, "classical")

"""Scenario files: a flat ``key = value`` format describing one run.

Example::

    # coupled two-particle system
    name = coupled2
    hamiltonian = builtin:coupled2
    constants = m1=2, m2=5, k=3/7
    hbar_order = 4
    t_order = 8
    monomial_test_degree = 3
    tasks = flow, canonicity, verify-S, group-law
    S = builtin

``hamiltonian`` is ``builtin:<harmonic|coupled2|x2p2>`` or a polynomial
literal (then ``dim`` is required).  ``S`` is ``builtin``, ``solve``, an
operator literal such as ``1 + h^2*t*x*dx^2``, or ``exp(<operator>)``.
"""

from dataclasses import dataclass, field

from .flows import BUILTIN_SYSTEMS, HamiltonianSystem, builtin_system
from .gaussian import as_rational
from .parsing import ParseError, parse_operator, parse_poly

__all__ = ["TASKS", "ScenarioError", "Scenario", "parse_scenario", "load_scenario"]

TASKS = ("evolve", "flow", "canonicity", "transform", "verify-S", "solve-S", "compose", "group-law")
# tasks that need a flow are run after it; order of execution is fixed
_ORDER = {t: i for i, t in enumerate(TASKS)}

_INT_KEYS = {
    "dim",
    "hbar_order",
    "t_order",
    "monomial_test_degree",
    "compose_order",
    "verify_order",
    "solve_derivative_order",
    "solve_coeff_degree",
}
_KEYS = _INT_KEYS | {"name", "hamiltonian", "constants", "tasks", "S", "observables"}


class ScenarioError(ValueError):
    """Malformed or invalid scenario; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


@dataclass
class Scenario:
    name: str = "scenario"
    hamiltonian: str = "builtin:harmonic"
    dim: int = None
    constants: dict = field(default_factory=dict)
    hbar_order: int = 4
    t_order: int = 8
    monomial_test_degree: int = 4
    tasks: tuple = ("flow",)
    S: str = None
    observables: tuple = ()
    compose_order: int = 3
    verify_order: int = None
    solve_derivative_order: int = 3
    solve_coeff_degree: int = 6

    @property
    def builtin(self):
        if self.hamiltonian.startswith("builtin:"):
            return self.hamiltonian.split(":", 1)[1].strip()
        return None

    def system(self):
        if self.builtin:
            return builtin_system(self.builtin, self.hbar_order, self.t_order, **self.constants)
        H = parse_poly(self.hamiltonian, self.dim, self.constants)
        return HamiltonianSystem(H, self.hbar_order, self.t_order, self.name, dict(self.constants))

    def validate(self):
        unknown = [t for t in self.tasks if t not in TASKS]
        if unknown:
            raise ScenarioError(f"unknown tasks {unknown}; choose from {list(TASKS)}")
        self.tasks = tuple(sorted(dict.fromkeys(self.tasks), key=_ORDER.get))
        b = self.builtin
        if b is not None:
            if b not in BUILTIN_SYSTEMS:
                raise ScenarioError(f"unknown builtin {b!r}; choose from {list(BUILTIN_SYSTEMS)}")
            dim = 2 if b == "coupled2" else 1
            if self.dim is not None and self.dim != dim:
                raise ScenarioError(f"builtin {b!r} has dim {dim}, scenario says {self.dim}")
            self.dim = dim
        elif self.dim is None:
            raise ScenarioError("a literal Hamiltonian needs 'dim'")
        if self.hbar_order < 0 or self.t_order < 0:
            raise ScenarioError("truncation orders must be non-negative")
        if self.S == "builtin" and b is None:
            raise ScenarioError("S = builtin is only available for builtin systems")
        needs_s = {"verify-S", "compose", "group-law"} & set(self.tasks)
        if needs_s and self.S is None:
            if b is None:
                raise ScenarioError(f"tasks {sorted(needs_s)} need an S operator")
            self.S = "builtin"
        if b == "x2p2" and self.S == "builtin" and needs_s and self.hbar_order < 2:
            raise ScenarioError("the x2p2 intertwiner is second order in h; hbar_order must be >= 2")
        vo = self.verify_order
        if vo is not None and vo > self.hbar_order:
            raise ScenarioError("verify_order exceeds hbar_order")
        try:
            system = self.system()
        except ParseError as exc:
            raise ScenarioError(f"hamiltonian: {exc}") from exc
        except (KeyError, ValueError) as exc:
            raise ScenarioError(str(exc.args[0]) if exc.args else str(exc)) from exc
        if self.S not in (None, "builtin", "solve"):
            text = self.S.strip()
            if text.startswith("exp(") and text.endswith(")"):
                text = text[4:-1]
            try:
                parse_operator(text, system.context, self.constants)
            except ParseError as exc:
                raise ScenarioError(f"S: {exc}") from exc
        for obs in self.observables:
            if obs.strip() != "H":
                try:
                    parse_poly(obs, self.dim, self.constants)
                except ParseError as exc:
                    raise ScenarioError(f"observable {obs!r}: {exc}") from exc
        return self

    def to_dict(self):
        return {
            "name": self.name,
            "hamiltonian": self.hamiltonian,
            "dim": self.dim,
            "constants": {k: str(as_rational(v)) for k, v in sorted(self.constants.items())},
            "hbar_order": self.hbar_order,
            "t_order": self.t_order,
            "monomial_test_degree": self.monomial_test_degree,
            "tasks": list(self.tasks),
            "S": self.S,
            "observables": list(self.observables),
            "compose_order": self.compose_order,
            "verify_order": self.verify_order,
            "solve_derivative_order": self.solve_derivative_order,
            "solve_coeff_degree": self.solve_coeff_degree,
        }


def _split_list(value):
    return tuple(v.strip() for v in value.split(",") if v.strip())


def parse_scenario(text):
    """Parse scenario text; errors carry line and column."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", lineno, len(raw) - len(raw.lstrip()) + 1)
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        col = raw.index("=") + 2
        if key not in _KEYS:
            raise ScenarioError(f"unknown key {key!r}", lineno, 1)
        if key in values:
            raise ScenarioError(f"duplicate key {key!r}", lineno, 1)
        if key in _INT_KEYS:
            try:
                value = int(value)
            except ValueError:
                raise ScenarioError(f"{key} must be an integer", lineno, col) from None
        elif key == "constants":
            consts = {}
            for item in _split_list(value):
                if "=" not in item:
                    raise ScenarioError(f"constant {item!r} must be name=value", lineno, col)
                n, v = item.split("=", 1)
                try:
                    consts[n.strip()] = as_rational(v.strip())
                except (ValueError, TypeError):
                    raise ScenarioError(f"constant {n.strip()!r} is not an exact rational", lineno, col) from None
            value = consts
        elif key in ("tasks", "observables"):
            value = _split_list(value)
        values[key] = (value, lineno)
    sc = Scenario(**{k: v for k, (v, _) in values.items()})
    return sc.validate()


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())

"""Exact Moyal star products, quantum Hamiltonian flows and their intertwiners.

Everything is computed over the Gaussian rationals with truncated power series
in ``h`` (Planck's constant) and ``t`` (time)::

    >>> from starflow import Context, MOYAL, star
    >>> ctx = Context(1, ("h",), (4,))
    >>> star(MOYAL, ctx.var("x"), ctx.var("p")).to_text()
    'x*p + 1/2*i*h'
"""

from .builtins import (
    builtin_intertwiner,
    coupled2_derivations,
    coupled2_generator,
    expected_flow,
    sec4_series,
    x2p2_intertwiner,
)
from .flows import (
    BUILTIN_SYSTEMS,
    TIME,
    CanonicityReport,
    HamiltonianSystem,
    QuantumFlow,
    builtin_system,
    check_classical_canonicity,
    check_quantum_canonicity,
    classical_flow,
    evolve_classical,
    evolve_observable,
    quantum_flow,
)
from .gaussian import GaussianRational, as_rational
from .intertwiner import (
    DiffOperator,
    GroupLawReport,
    IntertwinerReport,
    NotNilpotent,
    SolveResult,
    apply_op,
    apply_op_exp,
    check_group_law,
    monomial_pairs,
    quantum_compose,
    quantum_pullback,
    solve_intertwiner,
    verify_intertwiner,
)
from .maps import NotInvertible, PhaseMap, invert_map, substitute
from .moyal import (
    HBAR,
    MOYAL,
    MissingHbar,
    StarProductSpec,
    moyal_bracket,
    poisson_bracket,
    star,
    star_commutator,
    star_monomial,
)
from .parsing import ParseError, parse_operator, parse_poly, parse_series
from .reports import Report, run_scenario, series_from_json, series_to_json
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .series import Context, DeformedFn, IncompatibleContext, PhasePoly, monomials, var_names
from .transform import (
    Derivation,
    TransformCheck,
    induced_derivations,
    transformed_star,
    verify_transform_identity,
)

__version__ = "0.1.0"

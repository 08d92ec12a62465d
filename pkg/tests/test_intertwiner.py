from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from conftest import deformed, phase_polys
from starflow import (
    MOYAL,
    Context,
    DiffOperator,
    IncompatibleContext,
    NotNilpotent,
    PhaseMap,
    apply_op,
    apply_op_exp,
    builtin_system,
    check_group_law,
    evolve_observable,
    monomial_pairs,
    monomials,
    parse_operator,
    quantum_compose,
    quantum_flow,
    quantum_pullback,
    solve_intertwiner,
    star,
    verify_intertwiner,
)
from starflow.builtins import builtin_intertwiner, coupled2_generator, x2p2_intertwiner

CTX = Context(1, ("h", "t"), (3, 4))
CONSTANTS = [dict(m1=1, m2=1, k=1), dict(m1=2, m2=5, k=F(3, 7)), dict(m1=F(1, 3), m2=4, k=-2)]


def setup(name, K=4, L=6, **constants):
    system = builtin_system(name, K, L, **constants)
    return system, quantum_flow(system).map, builtin_intertwiner(system)


# -- operator algebra ---------------------------------------------------------


@settings(max_examples=15)
@given(deformed(CTX, max_degree=3), deformed(CTX, max_degree=2), deformed(CTX, max_degree=2))
def test_composition_matches_application(f, a, b):
    A = DiffOperator(CTX, {(1, 0): a, (0, 2): b})
    B = DiffOperator(CTX, {(0, 0): CTX.one(), (1, 1): a})
    assert apply_op(A @ B, f) == apply_op(A, apply_op(B, f))


def test_exp_of_commuting_generator():
    G = parse_operator("h*t*dx", CTX)
    f = CTX.var("x") ** 3
    # exp(h t d/dx) shifts x by h t
    assert apply_op(apply_op_exp(G), f) == (CTX.var("x") + CTX.var("h") * CTX.var("t")) ** 3


def test_exp_needs_h():
    with pytest.raises(NotNilpotent):
        apply_op_exp(parse_operator("t*dx", CTX))


def test_operator_text_order():
    S = x2p2_intertwiner(Context(1, ("h", "t"), (2, 3)))
    assert S.to_text().startswith("1 + (2*h^2*t^2*x^2 + 2*h^2*t^3*x^3*p)*dx^2 + (-2*h^2*t^2*x*p)*dx*dp")


def test_monomial_pairs():
    pairs = monomial_pairs(1, 2)
    assert ((1, 0), (0, 1)) in pairs and ((0, 1), (1, 0)) in pairs
    assert all(sum(a) + sum(b) <= 2 for a, b in pairs)
    assert len(pairs) == 15


# -- verification -------------------------------------------------------------


def test_harmonic_identity_intertwiner():
    system, phi, S = setup("harmonic", w=F(3, 2))
    assert S == DiffOperator.identity(phi.context)
    assert verify_intertwiner(S, phi, degree=5).passed


@pytest.mark.parametrize("constants", CONSTANTS)
def test_coupled2_exponential_intertwiner(constants):
    system, phi, S = setup("coupled2", 4, 6, **constants)
    report = verify_intertwiner(S, phi, degree=4)
    assert report.passed, report.relations
    ctx = phi.context
    A = ctx.var("x1") * ctx.var("x2") ** 2
    k, m1 = F(constants["k"]), F(constants["m1"])
    assert apply_op(S, A) == A + ctx.var("h") ** 2 * ctx.var("t") ** 2 * (k / (4 * m1))


def test_coupled2_generator_terms():
    ctx = Context(2, ("h", "t"), (4, 4))
    G = coupled2_generator(ctx, 2, F(3, 7))
    # k t^2/(8 m1), k t/4, k^2 t^3/(12 m1) with m1 = 2, k = 3/7
    assert G.to_text() == "(3/112*h^2*t^2)*dx1*dx2^2 + (3/392*h^2*t^3*p2)*dx2^3 + (3/28*h^2*t)*dx2^2*dp1"


def test_x2p2_intertwiner_second_order():
    system, phi, S = setup("x2p2", 2, 6)
    assert verify_intertwiner(S, phi, order=2, degree=5).passed


def test_wrong_intertwiner_is_reported():
    system, phi, S = setup("x2p2", 2, 5)
    report = verify_intertwiner(DiffOperator.identity(phi.context), phi, order=2, degree=3)
    assert not report.passed
    assert not report.relations["product"]["passed"]
    assert report.relations["coordinates"]["passed"]
    bad = S + parse_operator("h^2*t*dx", phi.context)
    report = verify_intertwiner(bad, phi, order=2, degree=3)
    assert not report.relations["coordinates"]["passed"]
    assert report.relations["coordinates"]["failures"][0]["f"] == "x"


def test_involution_failure():
    system, phi, S = setup("harmonic", 2, 4)
    bad = S + parse_operator("i*h^2*dx^2", phi.context)
    report = verify_intertwiner(bad, phi, degree=3)
    assert not report.relations["involution"]["passed"]


def test_order_beyond_truncation():
    system, phi, S = setup("x2p2", 2, 4)
    with pytest.raises(ValueError):
        verify_intertwiner(S, phi, order=3)


# -- solver -------------------------------------------------------------------


def test_solver_harmonic_identity():
    system, phi, _ = setup("harmonic", 4, 6, w=2)
    res = solve_intertwiner(phi, 4)
    assert res.status == "solved"
    assert res.operator == DiffOperator.identity(phi.context)


@pytest.mark.parametrize("constants", CONSTANTS[1:])
def test_solver_coupled2(constants):
    system, phi, S = setup("coupled2", 2, 6, **constants)
    res = solve_intertwiner(phi, 2)
    assert res.found and res.unique
    assert res.operator == S.truncate(h=2)


def test_solver_x2p2_recovers_closed_operator():
    system, phi, S = setup("x2p2", 2, 6)
    res = solve_intertwiner(phi, 2)
    assert res.found
    assert res.operator == S


def test_solver_ansatz_exhausted():
    system, phi, _ = setup("coupled2", 2, 4)
    res = solve_intertwiner(phi, 2, max_derivative_order=2)
    assert res.status == "ansatz-exhausted"
    assert "does not rule out" in res.message


def test_solver_inconsistent_for_non_canonical_map():
    x, p = CTX.coords()
    res = solve_intertwiner(PhaseMap([x * (1 + CTX.var("t")), p]), 2)
    assert res.status == "inconsistent"
    assert res.order_reached == 0


# -- pull-back and composition -------------------------------------------------


@pytest.mark.parametrize("constants", CONSTANTS[:2])
def test_coupled2_pullback_example(constants):
    system, phi, S = setup("coupled2", 4, 6, **constants)
    ctx = phi.context
    A = ctx.var("x1") * ctx.var("x2") ** 2
    At = quantum_pullback(phi, S, A)
    k, m1 = F(constants["k"]), F(constants["m1"])
    Q1, Q2 = phi[0], phi[1]
    assert At == Q1 * Q2 * Q2 + ctx.var("h") ** 2 * ctx.var("t") ** 2 * (k / (4 * m1))
    assert At == evolve_observable(system, A)


@pytest.mark.parametrize("name, K", [("harmonic", 4), ("coupled2", 4), ("x2p2", 2)])
def test_pullback_is_heisenberg_evolution(name, K):
    system, phi, S = setup(name, K, 5)
    for m in monomials(2 * system.dim, 4 if system.dim == 1 else 3):
        A = phi.context.series({(0, 0) + m: 1})
        assert quantum_pullback(phi, S, A) == evolve_observable(system, A)


@settings(max_examples=8)
@given(phase_polys(1, 3, 3), phase_polys(1, 3, 3))
def test_pullback_is_star_automorphism(f, g):
    system, phi, S = setup("x2p2", 2, 4)
    ctx = phi.context
    f, g = ctx.lift(f), ctx.lift(g)
    lhs = quantum_pullback(phi, S, star(MOYAL, f, g))
    rhs = star(MOYAL, quantum_pullback(phi, S, f), quantum_pullback(phi, S, g))
    assert lhs == rhs


@pytest.mark.parametrize(
    "name, K, constants",
    [("harmonic", 4, {"w": F(2, 3)}), ("coupled2", 4, {"m1": 2, "m2": 5, "k": F(3, 7)}), ("x2p2", 2, {})],
)
def test_group_law(name, K, constants):
    system = builtin_system(name, K, 6, **constants)
    S = builtin_intertwiner(system).truncate(h=K)
    report = check_group_law(system, S, compose_order=3, degree=3)
    assert report.passed


def test_compose_needs_distinct_times():
    system, phi, S = setup("x2p2", 2, 4)
    with pytest.raises(IncompatibleContext):
        quantum_compose(phi, phi, S)


def test_x2p2_composition_differs_from_plain_composition():
    system = builtin_system("x2p2", 2, 6)
    phi = quantum_flow(system).map
    S = builtin_intertwiner(system)
    a = phi.rename_params({"t": "t1"}).truncate(t1=3)
    b = phi.rename_params({"t": "t2"}).truncate(t2=3)
    Sb = S.rename_params({"t": "t2"}).truncate(t2=3)
    params, trunc = ("h", "t1", "t2"), (2, 3, 3)
    plain = a.embed(params, trunc).compose(b.embed(params, trunc))
    quantum = quantum_compose(a, b, Sb).embed(params, trunc)
    assert quantum != plain
    assert quantum.truncate(h=0) == plain.truncate(h=0)

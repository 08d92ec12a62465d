from fractions import Fraction as F

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import phase_polys
from oracle import double_series, h, t, to_sympy, truncate, x2p2_closed_forms
from starflow import (
    MOYAL,
    GaussianRational,
    HamiltonianSystem,
    PhasePoly,
    builtin_system,
    check_classical_canonicity,
    check_quantum_canonicity,
    classical_flow,
    evolve_classical,
    evolve_observable,
    moyal_bracket,
    poisson_bracket,
    quantum_flow,
    star,
)

x, p = sp.symbols("x p")
x1, x2, p1, p2 = sp.symbols("x1 x2 p1 p2")


@pytest.mark.parametrize("w", [1, F(3, 2), F(-2, 5)])
def test_harmonic_matches_trig_series(w):
    L = 8
    flow = quantum_flow(builtin_system("harmonic", 4, L, w=w))
    wq = sp.Rational(w.numerator, w.denominator) if isinstance(w, F) else sp.Integer(w)
    Q = sp.series(x * sp.cos(wq * t) + p * sp.sin(wq * t) / wq, t, 0, L + 1).removeO()
    P = sp.series(p * sp.cos(wq * t) - wq * x * sp.sin(wq * t), t, 0, L + 1).removeO()
    assert to_sympy(flow.map[0]) == sp.expand(Q)
    assert to_sympy(flow.map[1]) == sp.expand(P)
    assert flow.map == classical_flow(flow.system).map


@pytest.mark.parametrize("m1, m2, k", [(1, 1, 1), (2, 5, F(3, 7)), (F(1, 3), 4, -2)])
def test_coupled2_closed_forms(m1, m2, k):
    flow = quantum_flow(builtin_system("coupled2", 4, 6, m1=m1, m2=m2, k=k))
    m1, m2, k = (sp.nsimplify(str(v)) for v in (m1, m2, k))
    expected = [
        x1 + p1 * t / m1 - k / (2 * m1) * p2**2 * t**2,
        x2 + (p2 / m2 + 2 * k * x1 * p2) * t + k / m1 * p1 * p2 * t**2 - k**2 / (3 * m1) * p2**3 * t**3,
        p1 - k * p2**2 * t,
        p2,
    ]
    for comp, want in zip(flow.map, expected):
        assert to_sympy(comp) == sp.expand(want)
    assert flow.map == classical_flow(flow.system).map


def test_x2p2_matches_trig_closed_form():
    K, L = 4, 6
    flow = quantum_flow(builtin_system("x2p2", K, L))
    ref = x2p2_closed_forms(K, L)
    assert to_sympy(flow.map[0]) == ref["Q"]
    assert to_sympy(flow.map[1]) == ref["P"]


def test_x2p2_second_order_expansion():
    L = 6
    flow = quantum_flow(builtin_system("x2p2", 2, L))
    QC = sp.series(x * sp.exp(2 * t * x * p), t, 0, L + 1).removeO()
    PC = sp.series(p * sp.exp(-2 * t * x * p), t, 0, L + 1).removeO()
    Q = truncate(QC * (1 + h**2 * (t**2 + sp.Rational(2, 3) * t**3 * x * p)), {h: 2, t: L})
    P = truncate(PC * (1 + h**2 * (t**2 - sp.Rational(2, 3) * t**3 * x * p)), {h: 2, t: L})
    assert to_sympy(flow.map[0]) == Q
    assert to_sympy(flow.map[1]) == P


def test_x2p2_canonicity():
    flow = quantum_flow(builtin_system("x2p2", 4, 6))
    assert check_quantum_canonicity(flow).passed
    classical = check_classical_canonicity(flow)
    assert not classical.passed
    assert to_sympy(classical.bracket("Q,P")) == x2p2_closed_forms(4, 6)["sec4"]


def test_x2p2_classical_bracket_at_second_order():
    flow = quantum_flow(builtin_system("x2p2", 2, 6))
    assert check_classical_canonicity(flow).bracket("Q,P").to_text() == "1 + 2*h^2*t^2"


def test_sec4_taylor():
    assert double_series(1 / sp.cos(h * t) ** 4, 6, 6) == sp.expand(
        1 + 2 * (h * t) ** 2 + sp.Rational(7, 3) * (h * t) ** 4 + sp.Rational(94, 45) * (h * t) ** 6
    )


def test_coupled2_canonicity_labels():
    rep = check_quantum_canonicity(quantum_flow(builtin_system("coupled2", 2, 4)))
    assert [e["label"] for e in rep.entries] == ["Q1,Q2", "Q1,P1", "Q1,P2", "Q2,P1", "Q2,P2", "P1,P2"]
    assert rep.passed


def test_complex_hamiltonian_rejected():
    with pytest.raises(ValueError):
        HamiltonianSystem(PhasePoly(1, {(1, 1): GaussianRational(0, 1)}))


def test_unknown_builtin_and_constant():
    with pytest.raises(KeyError):
        builtin_system("anharmonic")
    with pytest.raises(KeyError):
        builtin_system("harmonic", k=1)


@settings(max_examples=10)
@given(st.sampled_from([1, 2]).flatmap(lambda d: st.tuples(st.just(d), phase_polys(d, 3, 4, real=True), phase_polys(d, 3, 3))))
def test_evolution_equation(args):
    dim, H, A = args
    system = HamiltonianSystem(H, 3, 4)
    At = evolve_observable(system, A)
    Hs = system.context.lift(H)
    assert At.param_derivative("t") == moyal_bracket(MOYAL, At, Hs).truncate(t=3)
    Ct = evolve_classical(system, A)
    assert Ct.param_derivative("t") == poisson_bracket(Ct, Hs).truncate(t=3)


@settings(max_examples=10)
@given(st.sampled_from([1, 2]).flatmap(lambda d: phase_polys(d, 3, 4, real=True)))
def test_classical_limit(H):
    system = HamiltonianSystem(H, 2, 4)
    q = quantum_flow(system).map.truncate(h=0)
    c = classical_flow(system).map.truncate(h=0)
    assert q == c


@settings(max_examples=8)
@given(phase_polys(1, 3, 3, real=True), phase_polys(1, 2, 2), phase_polys(1, 2, 2))
def test_evolution_is_star_automorphism(H, f, g):
    system = HamiltonianSystem(H, 3, 3)
    ctx = system.context
    fg = star(MOYAL, ctx.lift(f), ctx.lift(g))
    lhs = evolve_observable(system, fg)
    rhs = star(MOYAL, evolve_observable(system, f), evolve_observable(system, g))
    assert lhs == rhs


def test_hamiltonian_is_conserved():
    for name in ("harmonic", "coupled2", "x2p2"):
        system = builtin_system(name, 3, 5)
        assert evolve_observable(system, system.H) == system.context.lift(system.H)

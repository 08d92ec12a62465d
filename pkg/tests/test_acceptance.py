"""Acceptance criteria, all checked as exact identities.

Each criterion prints one ``PASS``/``FAIL`` line.  Run standalone with
``python tests/test_acceptance.py`` or through pytest.
"""

import random
import sys
from fractions import Fraction as F
from pathlib import Path

import pytest
import sympy as sp

sys.path.insert(0, str(Path(__file__).parent))

from oracle import double_series, h, t, to_sympy, truncate  # noqa: E402
from starflow import (  # noqa: E402
    MOYAL,
    DiffOperator,
    GaussianRational,
    HamiltonianSystem,
    PhasePoly,
    apply_op,
    apply_op_exp,
    builtin_system,
    check_classical_canonicity,
    check_group_law,
    check_quantum_canonicity,
    classical_flow,
    evolve_observable,
    induced_derivations,
    moyal_bracket,
    monomials,
    parse_operator,
    parse_series,
    quantum_flow,
    quantum_pullback,
    solve_intertwiner,
    star,
    verify_intertwiner,
)
from starflow.series import Context  # noqa: E402

x, p = sp.symbols("x p")
x1, x2, p1, p2 = sp.symbols("x1 x2 p1 p2")

COUPLED = [dict(m1=1, m2=1, k=1), dict(m1=2, m2=5, k=F(3, 7)), dict(m1=F(1, 3), m2=4, k=-2)]

# the two closed-form intertwiners, written out as operator literals
COUPLED_GENERATOR = "h^2*(k/(8*m1)*t^2*dx1*dx2^2 + k/4*t*dp1*dx2^2 + k^2/(12*m1)*t^3*p2*dx2^3)"
X2P2_OPERATOR = (
    "1 + h^2*(1/6*(3*t^2*x^3 + 4*t^3*x^4*p)*dx^3 + 1/6*(3*t^2*p^3 - 4*t^3*x*p^4)*dp^3"
    " + 1/2*(-t*p - t^2*x*p^2 + 4*t^3*x^2*p^3)*dx*dp^2 + 1/2*(t*x - t^2*x^2*p - 4*t^3*x^3*p^2)*dx^2*dp"
    " + (2*t^2*x^2 + 2*t^3*x^3*p)*dx^2 + (2*t^2*p^2 - 2*t^3*x*p^3)*dp^2 + (-2*t^2*x*p)*dx*dp)"
)


def _random_poly(rng, dim, max_degree, ctx=None, real=False, max_terms=4):
    monos = monomials(2 * dim, max_degree)
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        re = F(rng.randint(-4, 4), rng.randint(1, 3))
        im = 0 if real else F(rng.randint(-4, 4), rng.randint(1, 3))
        terms[rng.choice(monos)] = GaussianRational(re, im)
    poly = PhasePoly(dim, terms)
    return ctx.lift(poly) if ctx is not None else poly


def _sym(value):
    return sp.Rational(F(value).numerator, F(value).denominator)


def _report(number, title, checks):
    failed = [name for name, ok in checks if not ok]
    line = f"criterion {number}: {'PASS' if not failed else 'FAIL'} - {title}"
    if failed:
        line += " (failed: " + "; ".join(failed) + ")"
    return line, not failed


@pytest.fixture
def announce(capsys):
    def emit(line):
        with capsys.disabled():
            print("\n" + line)

    return emit


# -- 1 ----------------------------------------------------------------------------------


def criterion_1():
    checks = []
    ctx = Context(1, ("h",), (4,))
    X, P = ctx.var("x"), ctx.var("p")
    checks.append(("x*p", star(MOYAL, X, P) == parse_series("x*p + 1/2*i*h", ctx)))
    checks.append(("[[x,p]]", moyal_bracket(MOYAL, X, P) == ctx.one()))
    rng = random.Random(20240611)
    ok = True
    for n in range(200):
        dim = 1 if n % 4 else 2
        c = Context(dim, ("h",), (4,))
        f, g, k = (_random_poly(rng, dim, 4, c, max_terms=3) for _ in range(3))
        ok &= star(MOYAL, star(MOYAL, f, g), k) == star(MOYAL, f, star(MOYAL, g, k))
    checks.append(("associativity on 200 triples", ok))
    return _report(1, "Moyal kernel", checks)


# -- 2 ----------------------------------------------------------------------------------


def criterion_2():
    checks = []
    rng = random.Random(7)
    K, L = 4, 6
    for name, constants in [("harmonic", {"w": F(3, 2)}), ("coupled2", COUPLED[1]), ("x2p2", {})]:
        system = builtin_system(name, K, L, **constants)
        ctx = system.context
        H = ctx.lift(system.H)
        observables = list(ctx.coords()) + [H] + [_random_poly(rng, system.dim, 3, ctx) for _ in range(3)]
        ok = True
        for A in observables:
            At = evolve_observable(system, A)
            ok &= At.param_derivative("t") == moyal_bracket(MOYAL, At, H).truncate(t=L - 1)
        checks.append((name, ok))
    return _report(2, "evolution oracle d/dt A = [[A, H]]", checks)


# -- 3 ----------------------------------------------------------------------------------


def criterion_3():
    checks = []
    for w in (1, F(3, 2), F(-2, 5)):
        system = builtin_system("harmonic", 4, 8, w=w)
        flow = quantum_flow(system)
        ws = _sym(w)
        Q = sp.series(x * sp.cos(ws * t) + p * sp.sin(ws * t) / ws, t, 0, 9).removeO()
        P = sp.series(p * sp.cos(ws * t) - ws * x * sp.sin(ws * t), t, 0, 9).removeO()
        checks.append((f"w={w} quantum = classical", flow.map == classical_flow(system).map))
        checks.append((f"w={w} Taylor", to_sympy(flow.map[0]) == sp.expand(Q) and to_sympy(flow.map[1]) == sp.expand(P)))
        S = DiffOperator.identity(system.context)
        checks.append((f"w={w} S = 1", verify_intertwiner(S, flow.map, degree=6).passed))
    return _report(3, "harmonic oscillator", checks)


# -- 4 ----------------------------------------------------------------------------------


def _coupled_expected(c):
    m1, m2, k = (_sym(c[n]) for n in ("m1", "m2", "k"))
    flow = [
        x1 + p1 * t / m1 - k / (2 * m1) * p2**2 * t**2,
        x2 + (p2 / m2 + 2 * k * x1 * p2) * t + k / m1 * p1 * p2 * t**2 - k**2 / (3 * m1) * p2**3 * t**3,
        p1 - k * p2**2 * t,
        p2,
    ]
    # coefficient lists on (d_x1, d_x2, d_p1, d_p2)
    derivs = [
        [1, 2 * k * t * p2, 0, 0],
        [0, 1, 0, 0],
        [t / m1, k / m1 * t**2 * p2, 1, 0],
        [-k / m1 * t**2 * p2, t / m2 + 2 * k * t * x1 - k / m1 * t**2 * p1 - k**2 / m1 * t**3 * p2**2, -2 * k * t * p2, 1],
    ]
    return flow, derivs


def criterion_4():
    checks = []
    for c in COUPLED:
        tag = ",".join(f"{k}={v}" for k, v in c.items())
        system = builtin_system("coupled2", 4, 6, **c)
        ctx = system.context
        phi = quantum_flow(system).map
        flow_ref, deriv_ref = _coupled_expected(c)
        checks.append((f"{tag} trajectories", [to_sympy(q) for q in phi] == [sp.expand(e) for e in flow_ref]))
        D = induced_derivations(phi)
        got = [[to_sympy(a) for a in Dv.coeffs] for Dv in D]
        checks.append((f"{tag} derivations", got == [[sp.expand(e) for e in row] for row in deriv_ref]))
        S = apply_op_exp(parse_operator(COUPLED_GENERATOR, ctx, c))
        checks.append((f"{tag} S passes", verify_intertwiner(S, phi, degree=4).passed))
        A = ctx.var("x1") * ctx.var("x2") ** 2
        SA = apply_op(S, A)
        want = to_sympy(A) + sp.Rational(1, 4) * h**2 * _sym(c["k"]) / _sym(c["m1"]) * t**2
        checks.append((f"{tag} S(x1 x2^2)", to_sympy(SA) == sp.expand(want)))
        At = quantum_pullback(phi, S, A)
        H = ctx.lift(system.H)
        checks.append((f"{tag} pull-back evolves", At.param_derivative("t") == moyal_bracket(MOYAL, At, H).truncate(t=5)))
        checks.append((f"{tag} group law", check_group_law(system, S, compose_order=3, degree=3).passed))
    return _report(4, "coupled system", checks)


# -- 5 ----------------------------------------------------------------------------------


def criterion_5():
    checks = []
    L = 6
    system = builtin_system("x2p2", 2, L)
    flow = quantum_flow(system)
    QC = sp.series(x * sp.exp(2 * t * x * p), t, 0, L + 1).removeO()
    PC = sp.series(p * sp.exp(-2 * t * x * p), t, 0, L + 1).removeO()
    Q = truncate(QC * (1 + h**2 * (t**2 + sp.Rational(2, 3) * t**3 * x * p)), {h: 2, t: L})
    P = truncate(PC * (1 + h**2 * (t**2 - sp.Rational(2, 3) * t**3 * x * p)), {h: 2, t: L})
    checks.append(("Q expansion", to_sympy(flow.map[0]) == Q))
    checks.append(("P expansion", to_sympy(flow.map[1]) == P))
    checks.append(("[[Q,P]] = 1", check_quantum_canonicity(flow).passed))
    qp = check_classical_canonicity(flow).bracket("Q,P")
    sec4 = truncate(double_series(1 / sp.cos(h * t) ** 4, 2, L), {h: 2, t: L})
    checks.append(("{Q,P} = 1 + 2h^2t^2", qp.to_text() == "1 + 2*h^2*t^2" and to_sympy(qp) == sec4))
    S = parse_operator(X2P2_OPERATOR, system.context)
    checks.append(("operator passes to o(h^2)", verify_intertwiner(S, flow.map, order=2, degree=6).passed))
    report = check_group_law(system, S, compose_order=3, degree=None)
    checks.append(("composition law", report.passed))
    return _report(5, "x^2 p^2 system", checks)


# -- 6 ----------------------------------------------------------------------------------


def _same_action(S, T, ctx, degree=4):
    return all(apply_op(S, f) == apply_op(T, f) for f in (ctx.series({(0, 0) + m: 1}) for m in monomials(2 * ctx.dim, degree)))


def criterion_6():
    checks = []
    system = builtin_system("harmonic", 2, 6, w=F(5, 3))
    res = solve_intertwiner(quantum_flow(system).map, 2)
    checks.append(("harmonic identity", res.found and res.operator == DiffOperator.identity(system.context)))
    for c in COUPLED:
        system = builtin_system("coupled2", 2, 6, **c)
        phi = quantum_flow(system).map
        res = solve_intertwiner(phi, 2)
        ref = apply_op_exp(parse_operator(COUPLED_GENERATOR, phi.context, c))
        checks.append((f"coupled2 {c}", res.found and _same_action(res.operator, ref, phi.context)))
    system = builtin_system("x2p2", 2, 6)
    phi = quantum_flow(system).map
    res = solve_intertwiner(phi, 2)
    ref = parse_operator(X2P2_OPERATOR, phi.context)
    checks.append(("x2p2", res.found and _same_action(res.operator, ref, phi.context)))
    return _report(6, "solver consistency", checks)


# -- 7 ----------------------------------------------------------------------------------


def criterion_7():
    checks = []
    rng = random.Random(99)
    ok = True
    for n in range(5):
        dim = 1 + n % 2
        H = _random_poly(rng, dim, 3, real=True, max_terms=5)
        system = HamiltonianSystem(H, 3, 4)
        ok &= quantum_flow(system).map.truncate(h=0) == classical_flow(system).map.truncate(h=0)
    checks.append(("classical limit on 5 random Hamiltonians", ok))

    setups = [
        ("harmonic", 4, {"w": F(3, 2)}, "1"),
        ("coupled2", 4, COUPLED[1], "exp(" + COUPLED_GENERATOR + ")"),
        ("x2p2", 2, {}, X2P2_OPERATOR),
    ]
    for name, K, c, S_text in setups:
        system = builtin_system(name, K, 5, **c)
        ctx = system.context
        phi = quantum_flow(system).map
        text = S_text[4:-1] if S_text.startswith("exp(") else S_text
        S = parse_operator(text, ctx, c)
        if S_text.startswith("exp("):
            S = apply_op_exp(S)
        ok = True
        for _ in range(4):
            f = _random_poly(rng, system.dim, 2, ctx)
            g = _random_poly(rng, system.dim, 2, ctx)
            lhs = quantum_pullback(phi, S, star(MOYAL, f, g))
            ok &= lhs == star(MOYAL, quantum_pullback(phi, S, f), quantum_pullback(phi, S, g))
        checks.append((f"{name} pull-back is a star automorphism", ok))
        ok = all(
            quantum_pullback(phi, S, ctx.series({(0, 0) + m: 1})) == evolve_observable(system, ctx.series({(0, 0) + m: 1}))
            for m in monomials(2 * system.dim, 4)
        )
        checks.append((f"{name} pull-back = exp(-t[[H, .]])", ok))
    return _report(7, "property suite", checks)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 8)])
def test_acceptance(criterion, announce):
    line, ok = criterion()
    announce(line)
    assert ok, line


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    for line, _ in results:
        print(line)
    sys.exit(0 if all(ok for _, ok in results) else 1)

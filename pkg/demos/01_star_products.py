"""
Moyal products of phase-space polynomials
=========================================

Every coefficient is an exact Gaussian rational, and every series carries its
truncation order in ``h``.
"""

from starflow import MOYAL, Context, moyal_bracket, parse_series, poisson_bracket, star, star_monomial

ctx = Context(1, ("h",), (4,))
x, p = ctx.var("x"), ctx.var("p")

print("x * p       =", star(MOYAL, x, p).to_text())
print("p * x       =", star(MOYAL, p, x).to_text())
print("[[x, p]]    =", moyal_bracket(MOYAL, x, p).to_text())

# higher powers pick up h^2 corrections
f, g = parse_series("x^3", ctx), parse_series("p^3", ctx)
print("x^3 * p^3   =", star(MOYAL, f, g).to_text())
print("[[x^3,p^3]] =", moyal_bracket(MOYAL, f, g).to_text())
print("{x^3,p^3}   =", poisson_bracket(f, g).to_text())

# the canonical ordering x's first, then p's
print("x * p * p   =", star_monomial(MOYAL, ctx, (1, 2)).to_text())

# two degrees of freedom
ctx2 = Context(2, ("h",), (2,))
a = parse_series("x1*p2^2", ctx2)
b = parse_series("p1*x2^2", ctx2)
print("two-dim     =", star(MOYAL, a, b).to_text())

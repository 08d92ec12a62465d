"""
Two coupled particles
=====================

``H = p1^2/(2 m1) + p2^2/(2 m2) + k x1 p2^2``.  The trajectories are the
classical ones, yet the flow carries the Moyal product to a different
product, and the intertwiner between them is the exponential of a third
order differential operator.
"""

from fractions import Fraction

from starflow import (
    apply_op,
    builtin_system,
    check_group_law,
    evolve_observable,
    induced_derivations,
    quantum_flow,
    quantum_pullback,
    verify_intertwiner,
)
from starflow.builtins import builtin_intertwiner

constants = dict(m1=2, m2=5, k=Fraction(3, 7))
system = builtin_system("coupled2", hbar_order=4, t_order=6, **constants)
flow = quantum_flow(system)
print(flow.map.to_text())

# derivations defining the transformed product
for name, D in zip(("x1", "x2", "p1", "p2"), induced_derivations(flow.map)):
    print(f"D_{name} =", D.to_text())

S = builtin_intertwiner(system)
print("S =", S.to_text())
print("intertwines:", verify_intertwiner(S, flow.map, degree=4).passed)

# the quantum action on observables is not plain composition
ctx = system.context
A = ctx.var("x1") * ctx.var("x2") ** 2
print("S A     =", apply_op(S, A).to_text())
At = quantum_pullback(flow.map, S, A)
print("A(t) agrees with Heisenberg evolution:", At == evolve_observable(system, A))

print("group law:", check_group_law(system, S, compose_order=3, degree=3).passed)

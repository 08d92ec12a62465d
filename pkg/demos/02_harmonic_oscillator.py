"""
Harmonic oscillator
===================

For a quadratic Hamiltonian the Moyal bracket reduces to the Poisson bracket,
so the quantum flow is the classical rotation in phase space and the
intertwiner is the identity.
"""

from fractions import Fraction

from starflow import (
    DiffOperator,
    builtin_system,
    check_classical_canonicity,
    classical_flow,
    quantum_flow,
    verify_intertwiner,
)

system = builtin_system("harmonic", hbar_order=4, t_order=6, w=Fraction(3, 2))
flow = quantum_flow(system)
print(flow.map.to_text())

print("same as classical flow:", flow.map == classical_flow(system).map)
print("{Q, P} =", check_classical_canonicity(flow).bracket("Q,P").to_text())

S = DiffOperator.identity(system.context)
report = verify_intertwiner(S, flow.map, degree=5)
for name, rel in report.relations.items():
    print(f"{name:12s} checked {rel['checked']:3d}  passed {rel['passed']}")

"""
A purely quantum trajectory
===========================

``H = x^2 p^2`` has a quantum flow with genuine ``h^2`` corrections.  It
preserves the Moyal bracket but not the Poisson bracket.
"""

from starflow import (
    builtin_system,
    check_classical_canonicity,
    check_group_law,
    check_quantum_canonicity,
    quantum_flow,
    verify_intertwiner,
)
from starflow.builtins import sec4_series, x2p2_intertwiner

system = builtin_system("x2p2", hbar_order=2, t_order=6)
flow = quantum_flow(system)
print(flow.map.to_text())

print("[[Q, P]] =", check_quantum_canonicity(flow).bracket("Q,P").to_text())
qp = check_classical_canonicity(flow).bracket("Q,P")
print("{Q, P}   =", qp.to_text())
print("equals sec(h t)^4 series:", qp == sec4_series(system.context))

# the known intertwiner is exact through h^2
S = x2p2_intertwiner(system.context)
print("S =", S.to_text())
print("intertwines to h^2:", verify_intertwiner(S, flow.map, order=2, degree=5).passed)

# Phi_t1 Phi_t2 = Phi_{t1+t2} needs S; plain composition fails at h^2
print("composition law:", check_group_law(system, S, compose_order=3, degree=None).passed)

# one order higher the trajectories pick up h^4 terms
deeper = quantum_flow(builtin_system("x2p2", hbar_order=4, t_order=4))
print("Q at h^4 =", deeper.map[0].part("h", 4).to_text())

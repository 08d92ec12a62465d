"""
Constructing intertwiners order by order
========================================
"""

from starflow import Context, PhaseMap, builtin_system, quantum_flow, solve_intertwiner
from starflow.builtins import x2p2_intertwiner

phi = quantum_flow(builtin_system("x2p2", hbar_order=2, t_order=6)).map
result = solve_intertwiner(phi, order=2)
print(result.status, "through h^%d" % result.order_reached)
print("S =", result.operator.to_text())
print("matches the closed form:", result.operator == x2p2_intertwiner(phi.context))

# a tight ansatz is reported as such, not as a proof of non-existence
phi2 = quantum_flow(builtin_system("coupled2", hbar_order=2, t_order=4)).map
tight = solve_intertwiner(phi2, order=2, max_derivative_order=2)
print(tight.status, "-", tight.message)

# a map that rescales x is not canonical; no operator can intertwine it
ctx = Context(1, ("h", "t"), (2, 3))
x, p = ctx.coords()
bad = solve_intertwiner(PhaseMap([x * (1 + ctx.var("t")), p]), order=2)
print(bad.status, "-", bad.message)

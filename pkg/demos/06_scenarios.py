"""
Scenario files and reports
==========================

The same runs the ``starflow`` command performs, driven from Python.
"""

import json
from pathlib import Path

from starflow import parse_scenario, run_scenario, series_from_json

here = Path(__file__).resolve().parent
report = run_scenario(here.parent / "scenarios" / "x2p2.scn")
print(report.to_text())

# reports serialize exactly; series come back unchanged
data = json.loads(report.to_json())
flow = next(t for t in data["tasks"] if t["task"] == "flow")
Q = series_from_json(flow["computed"]["Q"])
print("round trip:", Q.to_text() == flow["computed"]["Q"]["text"])

# ad-hoc scenario with a literal Hamiltonian
scenario = parse_scenario(
    """
    name = cubic
    hamiltonian = p^2/2 + g*x^3
    dim = 1
    constants = g=1/3
    hbar_order = 2
    t_order = 4
    tasks = flow, canonicity
    """
)
print(run_scenario(scenario).to_text())

"""
Hamiltonian flows
=================

P(dH/du) for a few densities.  The mKdV tail integrates exactly for
these Hamiltonians, so the flows are local evolution equations.
"""
import warnings

from wnl.frontend import load_problem, parse_expression
from wnl.varcalc import NotExactWarning, hamiltonian_flow

P = load_problem("mkdv").operator("P")
for text in ("u1^2/2", "u1^4/12 - u1_x^2/2"):
    h = parse_expression(text, 1)
    flow = hamiltonian_flow(P, h)
    print(f"H = {h}:  u1_t = {flow.component_str(1)}")

# with w = u_x the tail argument u_x * dH/du is always a total derivative;
# with w = u it usually is not, and the flow keeps a D^-1 term
from wnl.jetalg import u
from wnl.varcalc import D
from wnl.wnlop import Tail, WeaklyNonlocalOperator

R = WeaklyNonlocalOperator("R", [[D]], Tail([[1]], [[u(1)]])).validate()
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always", NotExactWarning)
    flow = hamiltonian_flow(R, parse_expression("u1_x^2/2", 1))
print(f"\nnonlocal flow: u1_t = {flow.component_str(1)}")
print("warning:", caught[0].message if caught else None)

# Heisenberg: the ultralocal Q with the simplest density
Q = load_problem("heisenberg").operator("Q")
flow = hamiltonian_flow(Q, parse_expression("u1^2/2 + u2^2/2", 2))
for i in (1, 2):
    print(f"u{i}_t = {flow.component_str(i)}")

"""
Heisenberg magnet: a compatible pair
====================================

P is weakly nonlocal, Q is ultralocal.  Three brackets decide whether
they form a bi-Hamiltonian pair.
"""
from wnl import engine_dist, engine_op
from wnl.frontend import load_problem

prob = load_problem("heisenberg")
P, Q = prob.operator("P"), prob.operator("Q")
print(P, Q, sep="\n\n")
print()

for label, A, B in (("[P,P]", P, P), ("[Q,Q]", Q, Q), ("[P,Q]", P, Q)):
    op = engine_op.schouten_bracket(A, B).is_zero()
    dist = engine_dist.schouten_bracket(A, B).verdict()
    print(f"{label}: op {op}, dist {dist}")

# any P + lam*Q is then Poisson too; spot check one value of lam
pencil = P + Q.scale(3, "3Q")
print("[P+3Q, P+3Q]:", engine_op.schouten_bracket(pencil).is_zero())

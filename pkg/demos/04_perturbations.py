"""
Small changes break the Jacobi identity
=======================================

Two perturbations of the mKdV operator: the sign of the tail, and the
local coefficient 2/3 -> 1/2.  The engines report the same obstruction in
their own bases.
"""
from wnl import engine_dist, engine_op
from wnl.frontend import load_problem

for name in ("mkdv_perturbed", "mkdv_perturbed_local"):
    P = load_problem(name).operator("P")
    vec = engine_op.schouten_bracket(P)
    red = engine_dist.schouten_bracket(P)
    print(f"== {name}")
    print("operator form:")
    print(vec)
    print("distribution form:")
    print(red)
    print()

# the whole one-parameter family c*u_x D^-1 u_x with the local part fixed:
# only c = -2/3 survives
from fractions import Fraction

from wnl.wnlop import Tail, WeaklyNonlocalOperator

base = load_problem("mkdv").operator("P")
for c in (Fraction(-1), Fraction(-2, 3), Fraction(-1, 3), Fraction(0), Fraction(2, 3)):
    P = WeaklyNonlocalOperator("P", base.local, Tail([[c]], base.tail.w))
    print(f"tail c = {c}: {engine_op.schouten_bracket(P).is_zero()}")

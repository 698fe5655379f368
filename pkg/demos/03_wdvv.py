"""
WDVV: a three-component first-order operator
============================================

The largest bundled example.  The operator has a two-column tail, so the
bracket carries both single- and double-nonlocal families until they cancel.
"""
import time

from wnl import engine_dist, engine_op
from wnl.frontend import load_problem

P = load_problem("wdvv").operator("P")
print(P)

t0 = time.perf_counter()
raw = engine_op.raw_bracket(P, P)
print(f"\nraw operator-form bracket: {len(raw)} terms")
vec = engine_op.normalize(raw)
print(f"normalized: {vec.is_zero()} ({time.perf_counter() - t0:.2f} s)")

t0 = time.perf_counter()
res = engine_dist.schouten_bracket_timed(P)
print(f"distribution engine: {res.reduced.verdict()} ({time.perf_counter() - t0:.2f} s)")

# the same operator with one tail sign flipped is no longer Poisson
from wnl.wnlop import Tail, WeaklyNonlocalOperator

c = [[-x for x in P.tail.c[0]], list(P.tail.c[1])]
bad = WeaklyNonlocalOperator("P'", P.local, Tail(c, P.tail.w))
print("flipped c11:", engine_op.schouten_bracket(bad).is_zero())

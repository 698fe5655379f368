"""
The mKdV operator is Poisson
============================

Loads the bundled mKdV operator and computes its self-bracket twice,
once per engine.  Both canonical forms come out empty.
"""
from wnl import engine_dist, engine_op
from wnl.frontend import load_problem

P = load_problem("mkdv").operator("P")
print(P)

# operator engine: six summands, then integration by parts into canonical families
res = engine_op.schouten_bracket_timed(P)
print(f"\noperator engine: {res.raw_terms} raw terms -> {res.vector.is_zero()} in {res.timing_ms:.1f} ms")

# distribution engine: the raw three-point kernel is far from empty ...
raw = engine_dist.raw_bracket(P, P)
print(f"distribution engine: {len(raw)} raw terms")

# ... and the reduction steps take it apart
t = raw
for step in (engine_dist.reduce_step1, engine_dist.reduce_step2, engine_dist.reduce_step3):
    t = step(t)
    print(f"  after {step.__name__}: {len(t)} terms")
print("verdict:", t.verdict())

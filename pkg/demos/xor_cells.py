"""
Random parity constraints as a hash
===================================

A handful of random XOR constraints splits any set of 0/1 vectors into
roughly equal cells.  This walks through the GF(2) machinery on five
variables, then shows the cell sizes on a real itemset solution space.
"""

from collections import Counter

import numpy as np

from flexics.constraints import ConstraintSet
from flexics.data import generate_synthetic_db
from flexics.gf2 import XorConstraint, build_system, draw_random_xors
from flexics.tasks import Task, make_oracle

# four constraints over x1..x5; variables are 0-based in code
xors = [
    XorConstraint.from_vars(5, [0, 4], 1),
    XorConstraint.from_vars(5, [1, 2, 3, 4], 0),
    XorConstraint.from_vars(5, [0, 1, 2, 4], 0),
    XorConstraint.from_vars(5, [1, 3, 4], 1),
]
system = build_system(5, xors)
print("after elimination:")
print(system.serialize())
print("forced:", system.assignments())

# x1 = 1 and x5 = 1 contradicts the first row
print("assign x1=1, x5=1 ->", system.assign([(0, 1), (4, 1)]).conflict and "conflict")

# now a real solution space: frequent itemsets of a small synthetic database
db = generate_synthetic_db(12, 60, 0.8, seed=0)
oracle = make_oracle(Task(db, ConstraintSet(0.35), oracle="table"))
print(f"\n{len(oracle)} frequent itemsets")

rng = np.random.default_rng(1)
for m in (1, 3, 5):
    sizes = [len(oracle.solve_bounded(draw_random_xors(12, m, rng))) for _ in range(200)]
    print(f"{m} XORs: mean cell {np.mean(sizes):7.1f}  (expected {len(oracle) / 2 ** m:7.1f}),"
          f" empty cells {Counter(sizes)[0]}")

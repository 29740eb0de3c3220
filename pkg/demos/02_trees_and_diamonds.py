"""Picard iterates as sums over trees.

The k-th iterate expands into a sum over the rooted p-ary trees of depth k.
We count them, check the bookkeeping identities, and evaluate the weighted
tree sum that controls convergence. Pushing the scale parameter past its
critical value 1/4 (p = 2) is meant to make that sum exceed 2; in practice
it climbs to 1/(1 - flat) and stops there.
"""
from qpbbm import combinatorics as cb

for k in range(1, 5):
    nodes = cb.enumerate_tree(k, 2)
    ok = all(cb.stats(n, 2).sigma == cb.stats(n, 2).ell + 1 for n in nodes)
    print(f"k={k}: {len(nodes):4d} trees (recurrence {cb.node_count(k, 2)}), identity holds: {ok}")

print("\nweighted sums at the critical scale 1/4:")
for k in range(1, 9):
    print(f"  k={k}: {cb.diamond_value(k, 2, 0.25):.6f}")

print("\nat 0.30 the sum converges to 1/0.7 = 1.428571...")
for k in (1, 2, 4, 8, 16, 40):
    print(f"  k={k:2d}: {cb.diamond_value(k, 2, 0.30, max_degree=64):.6f}")

print("\nwhile the cruder induction recursion does cross 2:")
print("  ", [round(x, 4) for x in cb.induction_bound_sequence(0.30, 2, 6)])

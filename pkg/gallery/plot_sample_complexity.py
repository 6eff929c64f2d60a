"""
How many samples does each approach need?
=========================================

Sample sizes guaranteeing ``P(||pi_hat - pi||_1 >= eps) <= delta`` for chains
on ``K`` states.  The vector-valued approach avoids the union bound over
coordinates, and the gain grows with ``K``.
"""

import math

from conclab import complexity_table

Ks = [4, 16, 64, 256]
for rule in ("power:1", "exp"):
    print(f"index rule {rule}")
    print(f"{'K':>5} {'n1':>12} {'n2':>12} {'n3':>12} {'n2/n3':>8}")
    for row in complexity_table(Ks, p=1, eps=0.1, delta=0.05, r=0.5, index_rule=rule):
        n1 = "NA" if math.isnan(row.n1) else f"{row.n1:12.4g}"
        print(f"{row.K:5d} {n1:>12} {row.n2:12.4g} {row.n3:12.4g} {row.ratio23:8.3f}")
    print()

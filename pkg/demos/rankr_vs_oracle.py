"""Exactness of the rank-r solver on small low-rank inputs, checked by exhaustive search.

Run: python3 demos/rankr_vs_oracle.py
"""

import numpy as np

from lowrankcut import brute_force_oracle, solve_rankr
from lowrankcut.rankr import candidate_count_bound
from lowrankcut.pipeline import complex_gaussian

rng = np.random.default_rng(0)
print(" r  K  n   solver        oracle        candidates  bound")
for r, K, n in [(2, 3, 6), (2, 4, 7), (3, 3, 6), (2, 5, 6), (3, 2, 9)]:
    V = complex_gaussian(rng, (n, r), 1.0)
    Q = V @ V.conj().T
    sol = solve_rankr(Q, V, r, K)
    _, opt = brute_force_oracle(Q, K)
    print(f" {r}  {K}  {n}   {sol.objective:12.6f}  {opt:12.6f}  {sol.candidate_count:10d}  "
          f"{candidate_count_bound(n, r, K)}")

# polynomial growth in n at fixed rank
print("\nr=2, K=3 candidate counts:")
for n in (10, 20, 40):
    V = complex_gaussian(rng, (n, 2), 1.0)
    sol = solve_rankr(None, V, 2, 3)
    print(f"  n={n:3d}  {sol.candidate_count}")

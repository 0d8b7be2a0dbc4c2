"""How the rank-r answer degrades as Hermitian noise is added to a low-rank matrix.

Run: python3 demos/perturbation_bounds.py
"""

import numpy as np

from lowrankcut.pipeline import check_additive_bound, check_multiplicative_bound, make_perturbation

n, lam = 7, [6.0, 3.0, 0.5]
print(f"n={n}, spectrum {lam}")
print(" eps     ||H||   status        r  lhs      implied C  ratio")
for eps in (0.0, 0.01, 0.05, 0.2, 1.0):
    inst = make_perturbation(n, 3, lam, eps, seed=1)
    for r in (1, 2):
        add = check_additive_bound(inst, r, 3)
        mul = check_multiplicative_bound(inst, r, 3)
        print(f" {eps:<6}  {inst.noise_norm:6.3f}  {add['status']:12s}  {r}  {add['lhs']:7.3f}"
              f"  {add['implied_constant']:9.3f}  {mul['ratio']:.4f}")

"""
Critical values for the max statistic
=====================================

Three ways to pick the threshold ``k`` in ``max_j |T_j| <= k``: the
Bonferroni and Šidák closed forms, and a Gaussian bootstrap that adapts to
the correlation between coordinates.
"""

import numpy as np

from selfnorm import bonferroni_quantile, bootstrap_quantile, sidak_quantile

alpha = 0.05

# Closed forms only depend on the dimension.
for p in (1, 10, 100, 1000):
    b = bonferroni_quantile(alpha, p).khat
    s = sidak_quantile(alpha, p).khat
    print(f"p={p:5d}  bonferroni={b:.6f}  sidak={s:.6f}")

# With independent coordinates the bootstrap recovers Šidák ...
q = bootstrap_quantile(np.eye(20), alpha, B=200_000, seed=1)
print(f"\nidentity, p=20: bootstrap={q.khat:.4f}  sidak={sidak_quantile(alpha, 20).khat:.4f}")

# ... and with perfectly correlated coordinates it collapses to the scalar quantile,
# which no closed-form correction can see.
q = bootstrap_quantile(np.ones((20, 20)), alpha, B=200_000, seed=1)
print(f"all-ones, p=20: bootstrap={q.khat:.4f}  (scalar 1.959964, jitter {q.jitter:g})")

# An equicorrelated matrix sits in between.
rho = 0.6
gamma = np.full((20, 20), rho) + (1 - rho) * np.eye(20)
q = bootstrap_quantile(gamma, alpha, B=200_000, seed=1)
print(f"rho=0.6, p=20:  bootstrap={q.khat:.4f}")

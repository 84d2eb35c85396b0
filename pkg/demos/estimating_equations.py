"""
Estimating equations beyond least squares
=========================================

The statistic only needs the per-observation score matrix, so the same
test applies to GLM and quantile estimating equations.
"""

import numpy as np

from selfnorm import LOGISTIC, RegressionSample, glm_fit, glm_psi, quantile_fit, quantile_psi, self_normalized_stat
from selfnorm.quantiles import sidak_quantile

rng = np.random.default_rng(3)
x = np.column_stack([np.ones(500), rng.standard_normal(500)])
theta0 = np.array([-0.3, 1.2])
y = (rng.uniform(size=500) < 1 / (1 + np.exp(-x @ theta0))).astype(float)
sample = RegressionSample(x, y)

theta = glm_fit(sample, LOGISTIC)
print("logistic fit:", np.round(theta, 4))
k = sidak_quantile(0.05, 2).khat
for cand in (theta, theta0, theta + [0.5, 0.0]):
    t = self_normalized_stat(glm_psi(sample, LOGISTIC, cand)).value
    print(f"  T({np.round(cand, 3)}) = {t:.3f}  {'inside' if t <= k else 'outside'} (k={k:.3f})")

# median of a skewed sample and a test of two candidate medians
data = rng.exponential(size=301)
med = quantile_fit(data, 0.5)
print(f"\nsample median {med:.4f}; population median {np.log(2):.4f}")
for c in (med, np.log(2), 1.0):
    t = self_normalized_stat(quantile_psi(data, 0.5, c)).value
    print(f"  T({c:.4f}) = {t:.3f}")

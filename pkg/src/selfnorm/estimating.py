"""Estimating functions psi(x, theta) and the Z-estimators that solve them.

Each ``*_psi`` function returns the n x p matrix whose i-th row is
``psi(X_i, theta)``; the matching ``*_fit`` returns the root of the
sample score ``(1/n) sum_i psi(X_i, theta) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg as sla
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    InvalidResponse,
    NoConvergence,
    OutOfRange,
    Separation,
    SingularDesign,
)
from .numlin import as_matrix, as_vector, least_squares


@dataclass(frozen=True)
class RegressionSample:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = as_matrix(self.X, "X")
        y = as_vector(self.y, "y")
        if y.shape[0] != x.shape[0]:
            raise DimensionMismatch(f"X has {x.shape[0]} rows but y has {y.shape[0]}")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "RegressionSample":
        idx = np.asarray(idx, dtype=np.intp)
        return RegressionSample(self.X[idx], self.y[idx])


def _check_beta(sample: RegressionSample, beta) -> np.ndarray:
    beta = as_vector(beta, "beta")
    if beta.shape[0] != sample.p:
        raise DimensionMismatch(f"beta has length {beta.shape[0]}, design has p={sample.p}")
    return beta


def residuals(X: np.ndarray, y: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """``y - X beta`` for each column of ``betas`` (shape ``(p,)`` or ``(p, k)``).

    Entries within the floating-point error bound of the subtraction,
    ``(p + 1) eps (|y_i| + sum_j |x_ij beta_j|)``, are set to exactly zero so
    that an exact fit has an exactly zero score.
    """
    fitted = X @ betas
    resid = (y if betas.ndim == 1 else y[:, None]) - fitted
    bound = (X.shape[1] + 1) * np.finfo(np.float64).eps * (
        (np.abs(y) if betas.ndim == 1 else np.abs(y)[:, None]) + np.abs(X) @ np.abs(betas))
    resid[np.abs(resid) <= bound] = 0.0
    return resid


def linreg_psi(sample: RegressionSample, beta) -> np.ndarray:
    """Rows ``x_i (y_i - x_i' beta)``."""
    beta = _check_beta(sample, beta)
    return sample.X * residuals(sample.X, sample.y, beta)[:, None]


@dataclass(frozen=True)
class GlmFamily:
    """Canonical exponential family: mean function A'(v) and its derivative A''(v)."""

    name: str
    mean: Callable[[np.ndarray], np.ndarray]
    variance: Callable[[np.ndarray], np.ndarray]

    def check_response(self, y: np.ndarray) -> None:
        if self.name == "logistic" and not np.all((y == 0) | (y == 1)):
            raise InvalidResponse("logistic family needs responses in {0, 1}")
        if self.name == "poisson" and np.any(y < 0):
            raise InvalidResponse("poisson family needs non-negative responses")


GAUSSIAN = GlmFamily("gaussian", lambda v: v, np.ones_like)
LOGISTIC = GlmFamily("logistic", expit, lambda v: expit(v) * expit(-v))
POISSON = GlmFamily("poisson", np.exp, np.exp)

FAMILIES = {f.name: f for f in (GAUSSIAN, LOGISTIC, POISSON)}


def get_family(name: str) -> GlmFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown GLM family {name!r}; choose from {sorted(FAMILIES)}") from None


def glm_psi(sample: RegressionSample, family: GlmFamily, theta) -> np.ndarray:
    """Rows ``(A'(theta' x_i) - y_i) x_i``.

    Note the sign: for the gaussian family this is exactly ``-linreg_psi``.
    """
    theta = _check_beta(sample, theta)
    family.check_response(sample.y)
    resid = family.mean(sample.X @ theta) - sample.y
    return sample.X * resid[:, None]


def glm_fit(
    sample: RegressionSample,
    family: GlmFamily,
    tol: float = 1e-9,
    max_iter: int = 100,
    max_halvings: int = 30,
) -> np.ndarray:
    """Newton's method on the mean score, with step halving.

    The gaussian family short-circuits to :func:`least_squares`.
    """
    if family.name == "gaussian":
        return least_squares(sample.X, sample.y)
    family.check_response(sample.y)
    x, y = sample.X, sample.y
    n, p = x.shape
    # rank check on the design before iterating
    least_squares(x, np.zeros(n))

    def score(th):
        return x.T @ (family.mean(x @ th) - y) / n

    theta = np.zeros(p)
    s = score(theta)
    norm = np.max(np.abs(s))
    for it in range(max_iter):
        if norm <= tol:
            return theta
        w = family.variance(x @ theta)
        jac = (x * w[:, None]).T @ x / n
        try:
            step = sla.solve(jac, s, assume_a="pos")
        except (np.linalg.LinAlgError, sla.LinAlgError):
            if family.name == "logistic":
                raise Separation("score Jacobian became singular; data look separable") from None
            raise SingularDesign("score Jacobian is singular") from None
        t = 1.0
        for _ in range(max_halvings + 1):
            cand = theta - t * step
            s_cand = score(cand)
            n_cand = np.max(np.abs(s_cand))
            if np.isfinite(n_cand) and n_cand < norm:
                break
            t *= 0.5
        else:
            raise NoConvergence(norm, it)
        theta, s, norm = cand, s_cand, n_cand
        if np.linalg.norm(theta) > 1e6:
            raise Separation(f"coefficient norm exceeded 1e6 after {it + 1} Newton steps")
    if norm <= tol:
        return theta
    raise NoConvergence(norm, max_iter)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise OutOfRange(f"tau must lie in (0, 1), got {tau!r}")
    return tau


def quantile_psi(data, tau: float, theta: float) -> np.ndarray:
    """Column ``1(x_i <= theta) - tau`` as an n x 1 matrix."""
    data = as_vector(data, "data")
    tau = _check_tau(tau)
    return ((data <= theta).astype(np.float64) - tau)[:, None]


def quantile_fit(data, tau: float) -> float:
    """Order statistic ``x_(ceil(tau n))``, the smallest root of the step score."""
    data = np.sort(as_vector(data, "data"))
    tau = _check_tau(tau)
    n = data.shape[0]
    k = max(1, math.ceil(tau * n))
    # guard against tau * n landing just above an integer
    while k > 1 and (k - 1) / n >= tau:
        k -= 1
    return float(data[k - 1])

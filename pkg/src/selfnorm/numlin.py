"""Dense linear algebra and the standard-normal quantile.

Thin, checked wrappers over LAPACK (through numpy/scipy) plus a
self-contained inverse normal CDF. Vectors and matrices are plain
``float64`` ndarrays throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import DimensionMismatch, NotFactorable, NotSymmetric, OutOfRange, SingularDesign

JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
SYMMETRY_RTOL = 1e-10
GRAM_PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class SpdFactor:
    """Lower Cholesky factor of ``M + jitter * I``."""

    lower: np.ndarray
    jitter: float

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def as_matrix(a, name="matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or min(m.shape) < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise OutOfRange(f"{name} has non-finite entries")
    return m


def as_vector(a, name="vector") -> np.ndarray:
    v = np.asarray(a, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise OutOfRange(f"{name} has non-finite entries")
    return v


def cholesky_jittered(m) -> SpdFactor:
    """Cholesky factor with the smallest diagonal jitter that succeeds.

    Jitter is tried over ``JITTER_LADDER`` in order. The input must be
    symmetric to a relative tolerance of 1e-10; it is symmetrised before
    factoring.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {m.shape}")
    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-10 relative tolerance")
    sym = 0.5 * (m + m.T)
    eye = np.eye(m.shape[0])
    for eps in JITTER_LADDER:
        try:
            lower = np.linalg.cholesky(sym + eps * eye if eps else sym)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(lower)):
            return SpdFactor(lower=lower, jitter=eps)
    raise NotFactorable(f"Cholesky failed for every jitter up to {JITTER_LADDER[-1]:g}")


def solve_spd(factor: SpdFactor, b) -> np.ndarray:
    """Solve ``(M + jitter I) x = b`` given its Cholesky factor. ``b`` may hold several columns."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != factor.dim:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, factor is {factor.dim}x{factor.dim}")
    return sla.cho_solve((factor.lower, True), b)


def least_squares(x, y) -> np.ndarray:
    """Least-squares coefficients via economic QR.

    Raises :class:`SingularDesign` when the Gram matrix ``X'X`` has a
    pivot below ``1e-12`` times its largest (pivots of ``X'X`` are the
    squared diagonal of ``R``).
    """
    x = as_matrix(x, "X")
    y = as_vector(y, "y")
    n, p = x.shape
    if y.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows but y has {y.shape[0]}")
    if n < p:
        raise SingularDesign(f"need n >= p, got n={n}, p={p}")
    q, r = sla.qr(x, mode="economic")
    piv = np.diag(r) ** 2
    if piv.max() <= 0 or piv.min() <= GRAM_PIVOT_RTOL * piv.max():
        raise SingularDesign("design matrix is numerically rank deficient")
    return sla.solve_triangular(r, q.T @ y, lower=False)


# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def _lower_quantile(u: float) -> float:
    # u <= 0.5 here, so every branch returns z <= 0
    if u < _P_LOW:
        q = math.sqrt(-2.0 * math.log(u))
        z = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    else:
        q = u - 0.5
        r = q * q
        z = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    # one Newton step on Phi(z) - u; relative error in the lower tail stays tiny
    # because erfc is accurate there
    pdf = math.exp(-0.5 * z * z) / _SQRT2PI
    if pdf > 0.0:
        z -= (normal_cdf(z) - u) / pdf
    return z


def normal_quantile(u: float) -> float:
    """Inverse of the standard normal CDF on (0, 1).

    Antisymmetric by construction: for ``u > 0.5`` the result is
    ``-normal_quantile(1 - u)``.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise OutOfRange(f"probability must lie in (0, 1), got {u!r}")
    if u > 0.5:
        return -_lower_quantile(1.0 - u)
    if u == 0.5:
        return 0.0
    return _lower_quantile(u)

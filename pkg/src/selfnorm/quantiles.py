"""Critical values for the max statistic.

Bonferroni and Šidák give closed-form conservative quantiles; the
Gaussian bootstrap estimates the upper-alpha quantile of ``||Z||_inf``
with ``Z ~ N(0, Gamma)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import OutOfRange
from .numlin import as_matrix, cholesky_jittered, normal_quantile

BLOCK_SIZE = 4096


@dataclass(frozen=True)
class QuantileValue:
    khat: float
    method: str
    B_used: int | None = None
    seed_used: int | None = None
    jitter: float | None = None

    def __float__(self) -> float:
        return self.khat


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise OutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def _check_p(p) -> int:
    if int(p) != p or p < 1:
        raise OutOfRange(f"p must be a positive integer, got {p!r}")
    return int(p)


def bonferroni_quantile(alpha: float, p: int) -> QuantileValue:
    alpha, p = _check_alpha(alpha), _check_p(p)
    return QuantileValue(-normal_quantile(alpha / (2 * p)), "bonferroni")


def sidak_quantile(alpha: float, p: int) -> QuantileValue:
    alpha, p = _check_alpha(alpha), _check_p(p)
    # two-sided tail 1 - (1 + (1-alpha)^(1/p)) / 2, kept in tail form for large p
    tail = -0.5 * math.expm1(math.log1p(-alpha) / p)
    # the Šidák tail always dominates Bonferroni's; rounding must not flip that
    tail = max(tail, alpha / (2 * p))
    return QuantileValue(-normal_quantile(tail), "sidak")


def exceedance_count(alpha: float, size: int) -> int:
    """Largest ``k`` with ``k / size <= alpha``."""
    k = math.floor(alpha * size)
    while (k + 1) / size <= alpha:
        k += 1
    while k > 0 and k / size > alpha:
        k -= 1
    return k


def max_quantile(maxima, alpha: float) -> float:
    """Smallest ``t >= 0`` with ``mean(maxima > t) <= alpha``.

    This is the ``(B - k)``-th smallest value, ``k = floor(alpha B)``, or 0
    when every draw may exceed.
    """
    alpha = _check_alpha(alpha)
    m = np.sort(np.asarray(maxima, dtype=np.float64).ravel())
    b = m.shape[0]
    if b < 1:
        raise OutOfRange("need at least one bootstrap draw")
    k = exceedance_count(alpha, b)
    if k >= b:
        return 0.0
    return float(m[b - k - 1])


def _block_maxima(lower: np.ndarray, seed: int, block: int, count: int) -> np.ndarray:
    g = streams.stream(seed, streams.BOOTSTRAP, block).standard_normal((count, lower.shape[0]))
    return np.max(np.abs(g @ lower.T), axis=1)


def bootstrap_maxima(gamma, B: int, seed: int, workers: int = 1) -> tuple[np.ndarray, float]:
    """Draw ``||Z_b||_inf`` for ``b = 1..B`` with ``Z_b ~ N(0, gamma)``.

    Draws are generated in fixed blocks of ``BLOCK_SIZE`` whose streams are
    keyed by ``(seed, block index)``, so the output does not depend on
    ``workers``. Returns the maxima and the jitter used to factor ``gamma``.
    """
    if int(B) != B or B < 1:
        raise OutOfRange(f"B must be a positive integer, got {B!r}")
    B = int(B)
    factor = cholesky_jittered(as_matrix(gamma, "gamma"))
    blocks = [(k, min(BLOCK_SIZE, B - k * BLOCK_SIZE)) for k in range(-(-B // BLOCK_SIZE))]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda kc: _block_maxima(factor.lower, seed, *kc), blocks))
    else:
        parts = [_block_maxima(factor.lower, seed, k, c) for k, c in blocks]
    return np.concatenate(parts), factor.jitter


def bootstrap_quantile(gamma, alpha: float, B: int, seed: int, workers: int = 1) -> QuantileValue:
    """Gaussian bootstrap estimate of the upper-alpha quantile of the max statistic."""
    alpha = _check_alpha(alpha)
    maxima, jitter = bootstrap_maxima(gamma, B, seed, workers=workers)
    return QuantileValue(max_quantile(maxima, alpha), "bootstrap", int(B), int(seed), jitter)


def default_bootstrap_size(n: int) -> int:
    return max(int(n), 2000)

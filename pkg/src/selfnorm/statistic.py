"""Self-normalized max statistics and their plug-in correlation matrices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import DegenerateColumn, DimensionMismatch, SingularRotation
from .numlin import as_matrix

ROTATION_RCOND = 1e-14


@dataclass(frozen=True)
class SelfNormStat:
    value: float
    per_coordinate: np.ndarray
    argmax: int


def self_normalized_ratios(numer, sumsq) -> np.ndarray:
    """``|numer| / sqrt(sumsq)`` elementwise, with 0/0 taken as 0.

    An all-zero column means that coordinate of the score is solved
    exactly, so it must not push the max up.
    """
    numer = np.abs(np.asarray(numer, dtype=np.float64))
    denom = np.sqrt(np.asarray(sumsq, dtype=np.float64))
    out = np.zeros(np.broadcast(numer, denom).shape)
    np.divide(numer, denom, out=out, where=denom > 0)
    return out


def self_normalized_stat(psi) -> SelfNormStat:
    """Max over columns of ``|sum_i psi_ij| / sqrt(sum_i psi_ij^2)``."""
    psi = as_matrix(psi, "psi")
    ratios = self_normalized_ratios(psi.sum(axis=0), np.einsum("ij,ij->j", psi, psi))
    j = int(np.argmax(ratios))
    return SelfNormStat(value=float(ratios[j]), per_coordinate=ratios, argmax=j)


def rotate_rows(psi, qa) -> np.ndarray:
    """Return the matrix whose i-th row is ``qa^{-1} psi_i`` (by LU solve, not inversion)."""
    psi = as_matrix(psi, "psi")
    qa = as_matrix(qa, "Qa")
    p = psi.shape[1]
    if qa.shape != (p, p):
        raise DimensionMismatch(f"Qa must be {p}x{p}, got {qa.shape}")
    try:
        with warnings.catch_warnings():
            # singularity is detected below and reported as SingularRotation
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(qa)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularRotation(str(exc)) from None
    u = np.abs(np.diag(lu))
    if u.min() <= ROTATION_RCOND * max(u.max(), np.finfo(float).tiny):
        raise SingularRotation("rotation matrix is numerically singular")
    return sla.lu_solve((lu, piv), psi.T).T


def rotated_stat(psi, qa) -> SelfNormStat:
    return self_normalized_stat(rotate_rows(psi, qa))


def plugin_correlation(psi) -> np.ndarray:
    """Normalized Gram matrix of the columns of ``psi``.

    Entry (k, l) is ``sum_i psi_ik psi_il / sqrt(sum_i psi_ik^2 * sum_i psi_il^2)``.
    The result is exactly symmetric with an exactly unit diagonal.
    """
    psi = as_matrix(psi, "psi")
    gram = psi.T @ psi
    sumsq = np.einsum("ij,ij->j", psi, psi)
    zero = np.flatnonzero(sumsq <= 0)
    if zero.size:
        raise DegenerateColumn(int(zero[0]))
    scale = np.sqrt(sumsq)
    corr = gram / np.outer(scale, scale)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def rotated_plugin_correlation(psi, qa) -> np.ndarray:
    return plugin_correlation(rotate_rows(psi, qa))

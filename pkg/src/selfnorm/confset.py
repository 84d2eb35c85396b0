"""Confidence sets for the least-squares projection parameter.

Two self-normalized constructions built on a random half split of the
data: ``lin`` (plain statistic) and ``reclin`` (rows rotated by the
inverse Gram matrix of the other half, giving an approximately
rectangular set). Wald rectangles with plug-in or oracle sandwich
variance are provided for comparison.

A :class:`CalibratedSet` is a frozen membership oracle; ``contains``
accepts a single point or a ``(k, p)`` batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import streams
from .errors import DimensionMismatch, OutOfRange, TooFew
from .estimating import RegressionSample, linreg_psi, residuals
from .numlin import as_matrix, as_vector, cholesky_jittered, least_squares, solve_spd
from .quantiles import QuantileValue, bootstrap_quantile, default_bootstrap_size, sidak_quantile
from .statistic import (
    plugin_correlation,
    rotate_rows,
    rotated_plugin_correlation,
    rotated_stat,
    self_normalized_ratios,
    self_normalized_stat,
)

VARIANTS = ("lin", "reclin", "wald", "wald_oracle")


@dataclass(frozen=True)
class SplitIndices:
    I1: np.ndarray
    I2: np.ndarray


def split_sample(N: int, seed: int) -> SplitIndices:
    """Uniformly random halving of ``range(N)``; ``I1`` gets the extra index when N is odd."""
    if N < 2:
        raise TooFew(f"need at least 2 observations to split, got {N}")
    perm = streams.stream(seed, streams.SPLIT).permutation(N)
    cut = -(-N // 2)
    return SplitIndices(I1=np.sort(perm[:cut]), I2=np.sort(perm[cut:]))


@dataclass(frozen=True)
class CalibratedSet:
    variant: str
    khat: float
    pilot_beta: np.ndarray | None = None
    analysis_sample: RegressionSample | None = None
    rotation: np.ndarray | None = None
    gamma: np.ndarray | None = None
    wald_center: np.ndarray | None = None
    wald_halfwidths: np.ndarray | None = None
    alpha: float | None = None
    B: int | None = None
    seed: int | None = None
    jitter: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.khat >= 0:
            raise OutOfRange(f"khat must be non-negative, got {self.khat!r}")
        if self.variant in ("lin", "reclin"):
            if self.analysis_sample is None:
                raise ValueError(f"{self.variant} set needs its analysis sample")
            if self.variant == "reclin" and self.rotation is None:
                raise ValueError("reclin set needs a rotation matrix")
        elif self.wald_center is None or self.wald_halfwidths is None:
            raise ValueError(f"{self.variant} set needs center and half-widths")

    @property
    def p(self) -> int:
        if self.analysis_sample is not None:
            return self.analysis_sample.p
        return self.wald_center.shape[0]

    @property
    def is_rectangle(self) -> bool:
        return self.variant in ("wald", "wald_oracle")

    @cached_property
    def _weights(self) -> np.ndarray:
        # rows of the (rotated) design; psi_i = weights_i * residual_i
        x = self.analysis_sample.X
        return x if self.variant == "lin" else rotate_rows(x, self.rotation)

    @cached_property
    def center(self) -> np.ndarray:
        """A point known to be in the set: the analysis-half fit or the Wald center."""
        if self.is_rectangle:
            return self.wald_center
        s = self.analysis_sample
        return least_squares(s.X, s.y)

    def statistic(self, beta) -> np.ndarray | float:
        """Test statistic at ``beta`` (``(p,)`` or ``(k, p)``).

        For Wald sets this is the max standardized coordinate distance, so
        membership is always ``statistic <= khat``.
        """
        pts = np.asarray(beta, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.p:
            raise DimensionMismatch(f"beta has length {pts.shape[1]}, set has p={self.p}")
        if self.is_rectangle:
            # khat * |beta_j - center_j| / halfwidth_j, i.e. sqrt(n) |dev| / sqrt(M_jj)
            dev = np.abs(pts - self.wald_center)
            h = self.wald_halfwidths / self.khat if self.khat > 0 else self.wald_halfwidths
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(dev > 0, dev / h, 0.0)
            vals = ratio.max(axis=1)
        else:
            s = self.analysis_sample
            w = self._weights
            resid = residuals(s.X, s.y, pts.T)
            vals = self_normalized_ratios(w.T @ resid, (w * w).T @ (resid * resid)).max(axis=0)
        return float(vals[0]) if single else vals

    def contains(self, beta) -> np.ndarray | bool:
        if self.is_rectangle:
            pts = np.atleast_2d(np.asarray(beta, dtype=np.float64))
            if pts.shape[1] != self.p:
                raise DimensionMismatch(f"beta has length {pts.shape[1]}, set has p={self.p}")
            inside = np.all(np.abs(pts - self.wald_center) <= self.wald_halfwidths, axis=1)
            return bool(inside[0]) if np.ndim(beta) == 1 else inside
        stat = self.statistic(beta)
        return stat <= self.khat if np.ndim(stat) else bool(stat <= self.khat)

    __call__ = contains

    def to_dict(self) -> dict:
        from .dataio import regression_to_csv_text

        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        doc = {
            "format": "selfnorm.calibrated_set",
            "version": 1,
            "variant": self.variant,
            "alpha": self.alpha,
            "khat": self.khat,
            "B": self.B,
            "seed": self.seed,
            "jitter": self.jitter,
            "pilot_beta": arr(self.pilot_beta),
            "analysis_beta": arr(self.center),
            "rotation": arr(self.rotation),
            "gamma": arr(self.gamma),
            "wald_center": arr(self.wald_center),
            "wald_halfwidths": arr(self.wald_halfwidths),
            "analysis_sample": None,
        }
        if self.analysis_sample is not None:
            doc["analysis_sample"] = {"inline_csv": regression_to_csv_text(self.analysis_sample)}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "CalibratedSet":
        from .dataio import regression_from_csv_text

        if doc.get("format") != "selfnorm.calibrated_set":
            raise ValueError("not a calibrated-set document")

        def arr(key):
            v = doc.get(key)
            return None if v is None else np.asarray(v, dtype=np.float64)

        sample = None
        if doc.get("analysis_sample"):
            sample = regression_from_csv_text(doc["analysis_sample"]["inline_csv"])
        return cls(
            variant=doc["variant"],
            khat=float(doc["khat"]),
            pilot_beta=arr("pilot_beta"),
            analysis_sample=sample,
            rotation=arr("rotation"),
            gamma=arr("gamma"),
            wald_center=arr("wald_center"),
            wald_halfwidths=arr("wald_halfwidths"),
            alpha=doc.get("alpha"),
            B=doc.get("B"),
            seed=doc.get("seed"),
            jitter=doc.get("jitter"),
        )


def _calibrate_split(sample: RegressionSample, alpha, B, seed, rotate: bool, workers: int) -> CalibratedSet:
    idx = split_sample(sample.n, seed)
    analysis, pilot_half = sample.subset(idx.I1), sample.subset(idx.I2)
    pilot = least_squares(pilot_half.X, pilot_half.y)
    psi = linreg_psi(analysis, pilot)
    rotation = None
    if rotate:
        rotation = pilot_half.X.T @ pilot_half.X / pilot_half.n
        rotation = 0.5 * (rotation + rotation.T)
        gamma = rotated_plugin_correlation(psi, rotation)
    else:
        gamma = plugin_correlation(psi)
    if B is None:
        B = default_bootstrap_size(analysis.n)
    q = bootstrap_quantile(gamma, alpha, B, streams.derive_seed(seed, streams.BOOTSTRAP), workers=workers)
    return CalibratedSet(
        variant="reclin" if rotate else "lin",
        khat=q.khat,
        pilot_beta=pilot,
        analysis_sample=analysis,
        rotation=rotation,
        gamma=gamma,
        alpha=float(alpha),
        B=q.B_used,
        seed=int(seed),
        jitter=q.jitter,
        extra={"I1": idx.I1, "I2": idx.I2},
    )


def calibrate_lin(sample: RegressionSample, alpha: float, B: int | None = None, seed: int = 0,
                  workers: int = 1) -> CalibratedSet:
    """Self-normalized set from a random half split.

    The pilot fit on ``I2`` feeds the plug-in correlation of the ``I1``
    scores, whose Gaussian bootstrap quantile becomes ``khat``. Passing
    ``B = n`` (the half size) reproduces the bootstrap size of the
    original procedure; the default is ``max(n, 2000)``.
    """
    return _calibrate_split(sample, alpha, B, seed, rotate=False, workers=workers)


def calibrate_reclin(sample: RegressionSample, alpha: float, B: int | None = None, seed: int = 0,
                     workers: int = 1) -> CalibratedSet:
    """Rotated variant of :func:`calibrate_lin`; the rotation is the ``I2`` Gram matrix."""
    return _calibrate_split(sample, alpha, B, seed, rotate=True, workers=workers)


def _check_variant(cset: CalibratedSet, variant: str):
    if cset.variant != variant:
        raise ValueError(f"expected a {variant} set, got {cset.variant}")


def member_lin(cset: CalibratedSet, beta, psi: Callable | None = None) -> bool:
    """``T(beta) <= khat`` on the analysis half.

    ``psi`` may override the estimating function (any column-sign
    convention gives the same decision).
    """
    _check_variant(cset, "lin")
    psi = psi or linreg_psi
    return self_normalized_stat(psi(cset.analysis_sample, beta)).value <= cset.khat


def member_reclin(cset: CalibratedSet, beta, psi: Callable | None = None) -> bool:
    _check_variant(cset, "reclin")
    psi = psi or linreg_psi
    return rotated_stat(psi(cset.analysis_sample, beta), cset.rotation).value <= cset.khat


def member_wald(cset: CalibratedSet, beta) -> bool:
    if not cset.is_rectangle:
        raise ValueError(f"expected a Wald set, got {cset.variant}")
    beta = as_vector(beta, "beta")
    if beta.shape[0] != cset.p:
        raise DimensionMismatch(f"beta has length {beta.shape[0]}, set has p={cset.p}")
    return bool(np.all(np.abs(beta - cset.wald_center) <= cset.wald_halfwidths))


def sandwich_variance(sample: RegressionSample, beta) -> np.ndarray:
    """``(1/n) sum_i x_i x_i' (y_i - x_i' beta)^2``."""
    psi = linreg_psi(sample, beta)
    v = psi.T @ psi / sample.n
    return 0.5 * (v + v.T)


def sandwich_matrix(sigma, v) -> np.ndarray:
    """``sigma^{-1} v sigma^{-1}`` through a Cholesky factor of ``sigma``."""
    factor = cholesky_jittered(as_matrix(sigma, "Sigma"))
    left = solve_spd(factor, as_matrix(v, "V"))
    m = solve_spd(factor, left.T)
    return 0.5 * (m + m.T)


def calibrate_wald(sample: RegressionSample, K_n: float | QuantileValue | None = None,
                   oracle: dict | None = None, alpha: float = 0.05) -> CalibratedSet:
    """Wald rectangle centered at the full-sample least-squares fit.

    Half-widths are ``K_n * sqrt(M_jj / n)`` where ``M`` is the plug-in
    sandwich, or the oracle one built from ``oracle['Sigma']`` and
    ``oracle['Vstar']``. ``K_n`` defaults to the Šidák quantile at ``alpha``.
    """
    center = least_squares(sample.X, sample.y)
    if K_n is None:
        K_n = sidak_quantile(alpha, sample.p)
    k = float(K_n)
    if oracle is not None:
        m = sandwich_matrix(oracle["Sigma"], oracle["Vstar"])
        variant = "wald_oracle"
    else:
        gram = sample.X.T @ sample.X / sample.n
        m = sandwich_matrix(gram, sandwich_variance(sample, center))
        variant = "wald"
    half = k * np.sqrt(np.clip(np.diag(m), 0.0, None) / sample.n)
    return CalibratedSet(variant=variant, khat=k, wald_center=center, wald_halfwidths=half,
                         alpha=float(alpha))


def wald_from_rectangle(center, halfwidths) -> CalibratedSet:
    """Wrap an explicit rectangle as a membership oracle."""
    center = as_vector(center, "center")
    half = as_vector(halfwidths, "halfwidths")
    if half.shape != center.shape or np.any(half < 0):
        raise ValueError("half-widths must be non-negative and match the center")
    return CalibratedSet(variant="wald", khat=1.0, wald_center=center, wald_halfwidths=half)


def calibrate(sample: RegressionSample, variant: str, alpha: float, B: int | None = None,
              seed: int = 0, workers: int = 1, K_n: float | None = None,
              oracle: dict | None = None) -> CalibratedSet:
    if variant == "lin":
        return calibrate_lin(sample, alpha, B, seed, workers)
    if variant == "reclin":
        return calibrate_reclin(sample, alpha, B, seed, workers)
    if variant == "wald":
        return calibrate_wald(sample, K_n, None, alpha)
    if variant == "wald_oracle":
        if oracle is None:
            raise ValueError("wald_oracle needs oracle Sigma and Vstar")
        return calibrate_wald(sample, K_n, oracle, alpha)
    raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")


def halfwidth_scale(cset: CalibratedSet) -> float:
    """Rough linear size of the set, used to seed geometric searches."""
    if cset.is_rectangle:
        return float(max(np.max(cset.wald_halfwidths), 1e-12))
    s = cset.analysis_sample
    return float(max(np.sqrt(np.mean(s.y ** 2)) / math.sqrt(s.n), 1e-12))

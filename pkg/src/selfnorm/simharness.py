"""Monte Carlo experiments on data with a known projection parameter.

Every generator keeps ``beta* = beta0`` exactly: designs have independent,
symmetric, unit-variance coordinates, the misspecification term is an
even function orthogonal to the covariates, and heteroskedastic noise is
a mean-zero error scaled by a function of ``x``.

All randomness is keyed by ``(base_seed, label, index...)`` streams, so a
report regenerated from its echoed config is identical, and replications
may run in any order or in parallel.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import streams
from .confset import calibrate, calibrate_wald, halfwidth_scale
from .dataio import write_json, write_records_csv
from .errors import InvalidSpec, SelfNormError
from .estimating import RegressionSample, linreg_psi
from .geometry import diameter_estimate, hausdorff_member_rect_detail
from .quantiles import sidak_quantile
from .statistic import plugin_correlation

log = logging.getLogger(__name__)

ORACLE_SIZE = 10**6
ORACLE_CHUNK = 50_000
METHODS = ("lin", "reclin", "wald_plugin", "wald_oracle")


@dataclass(frozen=True)
class DgpSpec:
    n_total: int
    p: int
    design: str = "gaussian"
    df: float = 10.0
    noise: str = "homoskedastic"
    sigma: float = 1.0
    gamma: tuple | None = None
    misspec: str = "none"
    misspec_coord: int = 0
    beta0: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n_total < 2:
            raise InvalidSpec("need p >= 1 and n_total >= 2")
        if self.p > self.n_total / 2:
            raise InvalidSpec(f"p={self.p} exceeds half the sample size {self.n_total}")
        if self.design not in ("gaussian", "student"):
            raise InvalidSpec(f"unknown design {self.design!r}")
        if self.design == "student" and not self.df > 8:
            raise InvalidSpec("student design needs df > 8 (eight finite moments)")
        if self.noise not in ("homoskedastic", "heteroskedastic"):
            raise InvalidSpec(f"unknown noise {self.noise!r}")
        if self.noise == "homoskedastic" and self.sigma < 0:
            raise InvalidSpec("sigma must be non-negative")
        if self.noise == "heteroskedastic":
            if self.gamma is None or len(self.gamma) != self.p:
                raise InvalidSpec("heteroskedastic noise needs a gamma vector of length p")
        if self.misspec not in ("none", "quadratic"):
            raise InvalidSpec(f"unknown misspecification {self.misspec!r}")
        if self.misspec == "quadratic":
            if self.design != "gaussian":
                raise InvalidSpec("quadratic misspecification is only supported with a gaussian design")
            if not 0 <= self.misspec_coord < self.p:
                raise InvalidSpec("misspec_coord out of range")
        if self.beta0 is not None and len(self.beta0) != self.p:
            raise InvalidSpec("beta0 must have length p")
        # tuples keep the spec hashable
        if self.gamma is not None:
            object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.beta0 is not None:
            object.__setattr__(self, "beta0", tuple(float(b) for b in self.beta0))

    @property
    def beta_star(self) -> np.ndarray:
        return np.ones(self.p) if self.beta0 is None else np.asarray(self.beta0, dtype=np.float64)

    @property
    def sigma_matrix(self) -> np.ndarray:
        # independent unit-variance coordinates
        return np.eye(self.p)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma"] = None if self.gamma is None else list(self.gamma)
        d["beta0"] = list(self.beta_star)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        d = dict(d)
        for key in ("gamma", "beta0"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise InvalidSpec(f"unknown DGP fields: {sorted(unknown)}")
        return cls(**d)

    def population_key(self) -> str:
        """Stable hash of everything that defines the population (not n or seed)."""
        d = self.to_dict()
        d.pop("n_total")
        d.pop("seed")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:20]


def _draw(spec: DgpSpec, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    p = spec.p
    if spec.design == "gaussian":
        x = rng.standard_normal((n, p))
    else:
        x = rng.standard_t(spec.df, (n, p)) * math.sqrt((spec.df - 2.0) / spec.df)
    eps = rng.standard_normal(n)
    y = x @ spec.beta_star
    if spec.misspec == "quadratic":
        y = y + (x[:, spec.misspec_coord] ** 2 - 1.0)
    if spec.noise == "homoskedastic":
        if spec.sigma > 0:
            y = y + spec.sigma * eps
    else:
        y = y + np.sqrt(1.0 + (x @ np.asarray(spec.gamma)) ** 2) * eps
    return x, y


def dgp_generate(spec: DgpSpec) -> RegressionSample:
    x, y = _draw(spec, streams.stream(spec.seed, streams.DATA), spec.n_total)
    return RegressionSample(x, y)


def _oracle_chunks(spec: DgpSpec, size: int):
    key = int(spec.population_key(), 16)
    for k, start in enumerate(range(0, size, ORACLE_CHUNK)):
        yield _draw(spec, streams.stream(key, streams.ORACLE, k), min(ORACLE_CHUNK, size - start))


def cache_dir() -> Path:
    env = os.environ.get("SELFNORM_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "selfnorm"


_memory_cache: dict = {}


def oracle_moments(spec: DgpSpec, size: int = ORACLE_SIZE, use_disk: bool = True) -> dict:
    """Population ``Sigma``, ``Vstar = E[x x' (y - x' beta*)^2]`` and its correlation.

    ``Vstar`` is a ``size``-row plug-in at ``beta0``; results are cached in
    memory and on disk (``SELFNORM_CACHE_DIR``) under a hash of the spec.
    """
    key = f"{spec.population_key()}-{size}"
    if key in _memory_cache:
        return _memory_cache[key]
    path = cache_dir() / f"oracle-{key}.npz"
    if use_disk and path.exists():
        with np.load(path) as z:
            out = {k: z[k] for k in z.files}
    else:
        beta = spec.beta_star
        acc = np.zeros((spec.p, spec.p))
        for x, y in _oracle_chunks(spec, size):
            psi = x * (y - x @ beta)[:, None]
            acc += psi.T @ psi
        vstar = acc / size
        vstar = 0.5 * (vstar + vstar.T)
        scale = np.sqrt(np.diag(vstar))
        gamma = vstar / np.outer(scale, scale)
        np.fill_diagonal(gamma, 1.0)
        out = {"Sigma": spec.sigma_matrix, "Vstar": vstar, "gamma": gamma}
        if use_disk:
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp.npz")
                np.savez(tmp, **out)
                os.replace(tmp, path)
            except OSError as exc:
                log.warning("could not write oracle cache %s: %s", path, exc)
    _memory_cache[key] = out
    return out


def _resolve_B(B, half_n: int):
    if B == "n":
        return half_n
    return None if B is None else int(B)


def _map(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


@dataclass
class CoverageReport:
    method: str
    reps_attempted: int
    hits: int
    misses: int
    failures: int
    coverage: float
    mc_se: float
    mean_khat: float
    median_diam2: float
    runtime_s: float
    config: dict
    records: list = field(default_factory=list, repr=False)

    @property
    def reps(self) -> int:
        return self.hits + self.misses

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("records")
        d["reps"] = self.reps
        return d


RECORD_COLUMNS = ["rep", "seed", "status", "covered", "khat", "statistic", "diam2", "error"]


def _coverage_rep(spec: DgpSpec, method: str, alpha: float, B, base_seed: int, r: int,
                  measure_width: bool, oracle: dict | None) -> dict:
    seed = streams.derive_seed(base_seed, streams.REPLICATION, r)
    rec = {"rep": r, "seed": seed, "status": "ok", "covered": None, "khat": None,
           "statistic": None, "diam2": None, "error": None}
    try:
        sample = dgp_generate(replace(spec, seed=streams.derive_seed(seed, streams.DATA)))
        if method in ("lin", "reclin"):
            cset = calibrate(sample, method, alpha, _resolve_B(B, -(-sample.n // 2)), seed)
        elif method == "wald_plugin":
            cset = calibrate_wald(sample, sidak_quantile(alpha, spec.p), None, alpha)
        elif method == "wald_oracle":
            cset = calibrate_wald(sample, sidak_quantile(alpha, spec.p), oracle, alpha)
        else:
            raise ValueError(f"unknown method {method!r}")
        truth = spec.beta_star
        rec["khat"] = cset.khat
        rec["statistic"] = cset.statistic(truth)
        rec["covered"] = bool(cset.contains(truth))
        if measure_width:
            rec["diam2"] = diameter_estimate(cset, cset.center, seed=seed, tol=1e-6 * halfwidth_scale(cset),
                                             scale=halfwidth_scale(cset)).diam2
    except SelfNormError as exc:
        log.info("replication %d failed: %s", r, exc)
        rec.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return rec


def run_coverage(spec: DgpSpec, method: str, alpha: float, B=None, reps: int = 100, base_seed: int = 0,
                 workers: int = 1, measure_width: bool = False) -> CoverageReport:
    """Coverage of ``beta*`` over ``reps`` seeded replications.

    ``B`` is an int, ``None`` (package default) or ``"n"`` (the half-sample
    size). Replications that raise a numerical error are counted as
    failures and excluded from the coverage denominator.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    t0 = time.perf_counter()
    oracle = oracle_moments(spec) if method == "wald_oracle" else None
    records = _map(lambda r: _coverage_rep(spec, method, alpha, B, base_seed, r, measure_width, oracle),
                   range(reps), workers)
    ok = [r for r in records if r["status"] == "ok"]
    hits = sum(r["covered"] for r in ok)
    misses = len(ok) - hits
    cov = hits / len(ok) if ok else float("nan")
    se = math.sqrt(cov * (1 - cov) / len(ok)) if ok else float("nan")
    khats = [r["khat"] for r in ok]
    diams = [r["diam2"] for r in ok if r["diam2"] is not None]
    config = {"dgp": spec.to_dict(), "method": method, "alpha": alpha, "B": B, "reps": reps,
              "base_seed": base_seed, "measure_width": measure_width}
    return CoverageReport(
        method=method, reps_attempted=reps, hits=hits, misses=misses,
        failures=reps - len(ok), coverage=cov, mc_se=se,
        mean_khat=float(np.mean(khats)) if khats else float("nan"),
        median_diam2=float(np.median(diams)) if diams else float("nan"),
        runtime_s=time.perf_counter() - t0, config=config, records=records,
    )


def write_coverage(report: CoverageReport, outdir, stem: str | None = None) -> tuple[Path, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = stem or f"coverage_{report.method}"
    csv_path = outdir / f"{stem}.csv"
    json_path = outdir / f"{stem}.json"
    write_records_csv(report.records, csv_path, RECORD_COLUMNS)
    write_json(report.summary(), json_path)
    return csv_path, json_path


def _median_or_nan(values):
    values = [v for v in values if v is not None]
    return float(np.median(values)) if values else float("nan")


def _width_rep(spec, n, method, alpha, B, base_seed, r, directions):
    seed = streams.derive_seed(base_seed, streams.REPLICATION, n, r)
    try:
        sample = dgp_generate(replace(spec, n_total=2 * n, seed=streams.derive_seed(seed, streams.DATA)))
        cset = calibrate(sample, method, alpha, _resolve_B(B, n), seed,
                         K_n=sidak_quantile(alpha, spec.p) if method.startswith("wald") else None,
                         oracle=oracle_moments(spec) if method == "wald_oracle" else None)
        scale = halfwidth_scale(cset)
        return diameter_estimate(cset, cset.center, directions, tol=1e-6 * scale, seed=seed, scale=scale).diam2
    except SelfNormError as exc:
        log.info("width replication n=%d r=%d failed: %s", n, r, exc)
        return None


def run_width_scaling(spec: DgpSpec, n_grid, method: str = "reclin", alpha: float = 0.1, reps: int = 100,
                      B=None, base_seed: int = 0, directions: int = 50, workers: int = 1) -> list[dict]:
    """Median ``diam_2`` per half-sample size ``n`` (the data have ``2n`` rows).

    ``ratio`` is the previous row's median divided by this one; about
    ``sqrt(2)`` is expected when ``n`` doubles.
    """
    rows = []
    prev = None
    for n in n_grid:
        diams = _map(lambda r: _width_rep(spec, n, method, alpha, B, base_seed, r, directions), range(reps), workers)
        med = _median_or_nan(diams)
        rows.append({"n": n, "n_total": 2 * n, "median_diam2": med,
                     "ratio": (prev / med) if prev is not None else None,
                     "reps_ok": sum(d is not None for d in diams),
                     "failures": sum(d is None for d in diams)})
        prev = med
    return rows


@dataclass
class ConcentrationReport:
    n_grid: list
    medians: list
    oracle_size: int
    reps: int
    config: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list:
        return [None] + [a / b if b > 0 else float("inf") for a, b in zip(self.medians, self.medians[1:])]

    def rows(self) -> list[dict]:
        return [{"n": n, "median_deviation": m, "ratio": r}
                for n, m, r in zip(self.n_grid, self.medians, self.ratios)]


def run_concentration(spec: DgpSpec, n_grid, reps: int = 100, base_seed: int = 0,
                      oracle_size: int = ORACLE_SIZE, workers: int = 1) -> ConcentrationReport:
    """Median max-abs deviation of the plug-in correlation at ``beta*`` from its oracle value.

    A grid entry equal to ``oracle_size`` reuses the oracle's own draws
    (deviation zero up to rounding), as a self-consistency check.
    """
    oracle = oracle_moments(spec, oracle_size)["gamma"]
    beta = spec.beta_star
    medians = []
    for n in n_grid:
        if n == oracle_size:
            acc = np.zeros((spec.p, spec.p))
            for x, y in _oracle_chunks(spec, oracle_size):
                psi = x * (y - x @ beta)[:, None]
                acc += psi.T @ psi
            s = np.sqrt(np.diag(acc))
            g = acc / np.outer(s, s)
            g = 0.5 * (g + g.T)
            np.fill_diagonal(g, 1.0)
            medians.append(float(np.max(np.abs(g - oracle))))
            continue

        def one(r, n=n):
            seed = streams.derive_seed(base_seed, streams.REPLICATION, n, r)
            sample = dgp_generate(replace(spec, n_total=max(n, 2 * spec.p), seed=seed))
            return float(np.max(np.abs(plugin_correlation(linreg_psi(sample, beta)) - oracle)))

        medians.append(float(np.median(_map(one, range(reps), workers))))
    config = {"dgp": spec.to_dict(), "n_grid": list(n_grid), "reps": reps, "base_seed": base_seed,
              "oracle_size": oracle_size}
    return ConcentrationReport(list(n_grid), medians, oracle_size, reps, config)


def _hausdorff_rep(spec, n, method, alpha, B, base_seed, r, directions, n_faces):
    seed = streams.derive_seed(base_seed, streams.REPLICATION, n, r)
    try:
        sample = dgp_generate(replace(spec, n_total=2 * n, seed=streams.derive_seed(seed, streams.DATA)))
        oracle = oracle_moments(spec)
        if method == "reclin":
            cset = calibrate(sample, "reclin", alpha, _resolve_B(B, n), seed)
            analysis, k = cset.analysis_sample, cset.khat
        elif method == "wald_oracle":
            # identical sets on both sides; the distance must vanish
            analysis, k = sample, sidak_quantile(alpha, spec.p).khat
            cset = calibrate_wald(analysis, k, oracle, alpha)
        else:
            raise ValueError(f"unsupported method {method!r}")
        # oracle Wald rectangle on the same half and with the same critical value
        wald = calibrate_wald(analysis, k, oracle, alpha)
        est = hausdorff_member_rect_detail(cset, cset.center, wald, directions, 1e-6 * halfwidth_scale(wald),
                                           seed, n_faces)
        return est.d2, 2.0 * float(np.linalg.norm(wald.wald_halfwidths))
    except SelfNormError as exc:
        log.info("hausdorff replication n=%d r=%d failed: %s", n, r, exc)
        return None


def run_hausdorff_similarity(spec: DgpSpec, n_grid, alpha: float = 0.1, reps: int = 100, B=None,
                             base_seed: int = 0, directions: int = 50, n_faces: int = 200,
                             method: str = "reclin", workers: int = 1) -> list[dict]:
    """Hausdorff distance between the rotated set and the oracle Wald rectangle, per ``n``.

    Both sets use the analysis half and the same critical value. ``ratio``
    is median distance over median Wald diameter.
    """
    rows = []
    for n in n_grid:
        out = _map(lambda r: _hausdorff_rep(spec, n, method, alpha, B, base_seed, r, directions, n_faces),
                   range(reps), workers)
        ok = [o for o in out if o is not None]
        d2 = _median_or_nan([o[0] for o in ok])
        diam = _median_or_nan([o[1] for o in ok])
        rows.append({"n": n, "n_total": 2 * n, "median_d2": d2, "median_diam2_wald": diam,
                     "ratio": d2 / diam if diam > 0 else float("nan"),
                     "reps_ok": len(ok), "failures": len(out) - len(ok)})
    return rows


def write_table(rows: list[dict], summary: dict, outdir, stem: str) -> tuple[Path, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{stem}.csv"
    json_path = outdir / f"{stem}.json"
    columns = list(rows[0]) if rows else []
    write_records_csv(rows, csv_path, columns)
    write_json({**summary, "rows": rows}, json_path)
    return csv_path, json_path

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from selfnorm import simharness
from selfnorm.confset import calibrate_reclin, calibrate_wald
from selfnorm.errors import InvalidSpec, SingularDesign
from selfnorm.geometry import hausdorff_member_rect_detail
from selfnorm.numlin import least_squares
from selfnorm.simharness import (
    DgpSpec,
    dgp_generate,
    oracle_moments,
    run_concentration,
    run_coverage,
    run_hausdorff_similarity,
    run_width_scaling,
    write_coverage,
    write_table,
)


def test_exact_data_without_noise():
    spec = DgpSpec(n_total=50, p=4, sigma=0.0, beta0=(1.0, -2.0, 0.5, 3.0), seed=3)
    s = dgp_generate(spec)
    np.testing.assert_array_equal(s.y, s.X @ spec.beta_star)
    np.testing.assert_allclose(least_squares(s.X, s.y), spec.beta_star, atol=1e-10)


def test_quadratic_misspecification_keeps_beta_star():
    spec = DgpSpec(n_total=10**6, p=3, misspec="quadratic", misspec_coord=1, seed=11)
    s = dgp_generate(spec)
    bhat = least_squares(s.X, s.y)
    # sandwich standard errors with Sigma = I
    v = oracle_moments(spec, size=200_000, use_disk=False)["Vstar"]
    se = np.sqrt(np.diag(v) / s.n)
    assert np.all(np.abs(bhat - spec.beta_star) <= 3 * se)


def test_student_design_unit_variance():
    spec = DgpSpec(n_total=200_000, p=2, design="student", df=10.0, seed=2)
    x = dgp_generate(spec).X
    np.testing.assert_allclose(x.var(axis=0), 1.0, atol=0.03)


def test_generation_deterministic():
    spec = DgpSpec(n_total=40, p=2, noise="heteroskedastic", gamma=(0.5, 0.0), seed=9)
    a, b = dgp_generate(spec), dgp_generate(spec)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    c = dgp_generate(replace(spec, seed=10))
    assert not np.array_equal(a.y, c.y)


@pytest.mark.parametrize("kwargs", [
    dict(n_total=10, p=6),
    dict(n_total=100, p=2, design="student", df=8.0),
    dict(n_total=100, p=2, design="student", df=12.0, misspec="quadratic"),
    dict(n_total=100, p=2, noise="heteroskedastic"),
    dict(n_total=100, p=2, noise="heteroskedastic", gamma=(1.0,)),
    dict(n_total=100, p=2, misspec="quadratic", misspec_coord=2),
    dict(n_total=100, p=2, beta0=(1.0, 2.0, 3.0)),
    dict(n_total=100, p=2, design="uniform"),
    dict(n_total=100, p=2, sigma=-1.0),
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpec):
        DgpSpec(**kwargs)


def test_spec_dict_round_trip_and_key():
    spec = DgpSpec(n_total=100, p=2, noise="heteroskedastic", gamma=(0.5, 0.0), seed=4)
    back = DgpSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert back.population_key() == spec.population_key()
    assert replace(spec, seed=5, n_total=400).population_key() == spec.population_key()
    assert replace(spec, gamma=(0.5, 0.1)).population_key() != spec.population_key()
    with pytest.raises(InvalidSpec):
        DgpSpec.from_dict({"n_total": 10, "p": 1, "colour": "red"})


def test_oracle_cache_on_disk(tmp_path, monkeypatch):
    monkeypatch.setenv("SELFNORM_CACHE_DIR", str(tmp_path))
    spec = DgpSpec(n_total=100, p=2, noise="heteroskedastic", gamma=(0.3, 0.2), seed=1)
    simharness._memory_cache.clear()
    first = oracle_moments(spec, size=60_000)
    assert len(list(tmp_path.glob("oracle-*.npz"))) == 1
    simharness._memory_cache.clear()
    second = oracle_moments(spec, size=60_000)
    for k in ("Sigma", "Vstar", "gamma"):
        np.testing.assert_array_equal(first[k], second[k])
    np.testing.assert_array_equal(first["Sigma"], np.eye(2))
    # heteroskedastic V = E[x x' (1 + (x'g)^2)]; its diagonal is 1 + |g|^2 + 2 g_j^2
    g = np.array([0.3, 0.2])
    np.testing.assert_allclose(np.diag(first["Vstar"]), 1 + g @ g + 2 * g * g, rtol=0.03)


def test_coverage_reps_one():
    spec = DgpSpec(n_total=60, p=2, seed=0)
    rep = run_coverage(spec, "lin", 0.1, B=200, reps=1, base_seed=3)
    assert rep.coverage in (0.0, 1.0)
    assert rep.reps == 1 and rep.failures == 0


def test_coverage_alpha_near_one_collapses():
    spec = DgpSpec(n_total=100, p=2, seed=0)
    rep = run_coverage(spec, "reclin", 0.99, B=500, reps=100, base_seed=1)
    assert rep.coverage <= 0.1


def test_coverage_deterministic_and_order_free():
    spec = DgpSpec(n_total=80, p=3, noise="heteroskedastic", gamma=(0.5, 0.0, 0.0), seed=0)
    a = run_coverage(spec, "reclin", 0.1, B="n", reps=12, base_seed=5)
    b = run_coverage(spec, "reclin", 0.1, B="n", reps=12, base_seed=5, workers=4)
    assert a.records == b.records
    sa, sb = a.summary(), b.summary()
    sa.pop("runtime_s"), sb.pop("runtime_s")
    assert json.dumps(sa, sort_keys=True) == json.dumps(sb, sort_keys=True)
    assert a.config["B"] == "n"


def test_failed_replications_are_excluded(monkeypatch):
    real = simharness.calibrate

    def flaky(sample, method, alpha, B, seed, *args, **kwargs):
        if seed % 3 == 0:
            raise SingularDesign("injected")
        return real(sample, method, alpha, B, seed, *args, **kwargs)

    monkeypatch.setattr(simharness, "calibrate", flaky)
    spec = DgpSpec(n_total=60, p=2, seed=0)
    rep = run_coverage(spec, "lin", 0.1, B=200, reps=30, base_seed=2)
    assert rep.failures > 0
    assert rep.reps_attempted == rep.hits + rep.misses + rep.failures
    assert rep.coverage == rep.hits / (rep.hits + rep.misses)
    failed = [r for r in rep.records if r["status"] == "failed"]
    assert all(r["covered"] is None and "SingularDesign" in r["error"] for r in failed)


@pytest.mark.parametrize("method", ["lin", "reclin", "wald_plugin", "wald_oracle"])
def test_coverage_all_methods_run(method):
    spec = DgpSpec(n_total=200, p=3, seed=0)
    rep = run_coverage(spec, method, 0.1, B="n", reps=20, base_seed=0, measure_width=True)
    assert 0 <= rep.coverage <= 1 and rep.hits <= rep.reps
    assert rep.mc_se == pytest.approx(math.sqrt(rep.coverage * (1 - rep.coverage) / rep.reps))
    assert rep.median_diam2 > 0


def test_coverage_unknown_method():
    with pytest.raises(ValueError):
        run_coverage(DgpSpec(n_total=20, p=1), "box", 0.1)
    with pytest.raises(ValueError):
        run_coverage(DgpSpec(n_total=20, p=1), "lin", 0.1, reps=0)


def test_write_coverage(tmp_path):
    rep = run_coverage(DgpSpec(n_total=40, p=2), "lin", 0.1, B=100, reps=3)
    csv_path, json_path = write_coverage(rep, tmp_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(simharness.RECORD_COLUMNS)
    assert len(lines) == 4
    doc = json.loads(json_path.read_text())
    assert doc["hits"] == rep.hits and doc["config"]["method"] == "lin"


def test_width_p1_matches_interval_scale():
    # lin interval for p = 1 has length ~ 2 k sigma / sqrt(n) with k the 90% normal quantile
    spec = DgpSpec(n_total=2, p=1, sigma=2.0)
    rows = run_width_scaling(spec, [400], method="lin", alpha=0.1, reps=60, B=4000, base_seed=1, directions=2)
    expected = 2 * 1.6448536 * 2.0 / math.sqrt(400)
    assert abs(rows[0]["median_diam2"] / expected - 1) <= 0.1


def test_width_zero_noise_is_degenerate():
    # exact fits leave every score column zero, so the plug-in correlation is undefined
    rows = run_width_scaling(DgpSpec(n_total=4, p=2, sigma=0.0), [50], reps=3, B=200, directions=5)
    assert rows[0]["failures"] == 3 and math.isnan(rows[0]["median_diam2"])
    rep = run_coverage(DgpSpec(n_total=100, p=2, sigma=0.0), "reclin", 0.1, B=200, reps=3)
    assert rep.failures == 3
    assert all("DegenerateColumn" in r["error"] for r in rep.records)


def test_width_tiny_noise_near_floor():
    rows = run_width_scaling(DgpSpec(n_total=4, p=2, sigma=1e-9), [50], reps=5, B=200, directions=5)
    assert rows[0]["failures"] == 0
    assert rows[0]["median_diam2"] <= 1e-6


def test_width_rows_have_ratios():
    spec = DgpSpec(n_total=4, p=2)
    rows = run_width_scaling(spec, [50, 100], reps=5, B=200, directions=5)
    assert rows[0]["ratio"] is None
    assert rows[1]["ratio"] == pytest.approx(rows[0]["median_diam2"] / rows[1]["median_diam2"])


def test_concentration_p1_identically_zero():
    rep = run_concentration(DgpSpec(n_total=2, p=1), [20, 80], reps=5, oracle_size=10_000)
    assert rep.medians == [0.0, 0.0]


def test_concentration_self_comparison():
    spec = DgpSpec(n_total=6, p=3, noise="heteroskedastic", gamma=(0.5, 0.5, 0.0))
    rep = run_concentration(spec, [100, 20_000], reps=10, oracle_size=20_000)
    assert rep.medians[1] <= 1e-12
    assert rep.medians[0] > 0.01
    assert [r["n"] for r in rep.rows()] == [100, 20_000]


def test_hausdorff_identical_sets_zero():
    spec = DgpSpec(n_total=4, p=2)
    rows = run_hausdorff_similarity(spec, [50], reps=3, method="wald_oracle", directions=5, n_faces=20)
    assert rows[0]["ratio"] <= 1e-5


def test_hausdorff_p1_interval_cross_check():
    spec = DgpSpec(n_total=300, p=1, noise="heteroskedastic", gamma=(0.5,), seed=8)
    s = dgp_generate(spec)
    rec = calibrate_reclin(s, 0.1, B=2000, seed=1)
    wald = calibrate_wald(rec.analysis_sample, rec.khat, oracle_moments(spec, 100_000), 0.1)
    a = rec.analysis_sample
    x, y, k = a.X[:, 0], a.y, rec.khat
    qa = np.sum(x * x) ** 2 - k * k * np.sum(x ** 4)
    qb = -2 * (np.sum(x * y) * np.sum(x * x) - k * k * np.sum(x ** 3 * y))
    qc = np.sum(x * y) ** 2 - k * k * np.sum(x * x * y * y)
    root = math.sqrt(qb * qb - 4 * qa * qc)
    lo, hi = (-qb - root) / (2 * qa), (-qb + root) / (2 * qa)
    c, h = wald.wald_center[0], wald.wald_halfwidths[0]
    exact = max(abs(lo - (c - h)), abs(hi - (c + h)))
    est = hausdorff_member_rect_detail(rec, rec.center, wald, directions=2, tol=1e-10)
    assert abs(est.d2 - exact) <= 1e-8


def test_write_table(tmp_path):
    rows = [{"n": 1, "ratio": None}, {"n": 2, "ratio": 1.5}]
    csv_path, json_path = write_table(rows, {"kind": "width"}, tmp_path, "t")
    assert csv_path.read_text().splitlines()[0] == "n,ratio"
    assert json.loads(json_path.read_text())["rows"][1]["ratio"] == 1.5

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kplsqsar.dataset import Dataset
from kplsqsar.errors import ConfigError, DataError, DegeneracyError
from kplsqsar.kernels import KernelSpec
from kplsqsar.kpls import fit_kpls, kpls_predict
from kplsqsar.selection import (
    FoldPlan,
    SearchConfig,
    dump_report,
    loo_cv,
    optimize_eta,
    r_squared,
    search_hyperparameters,
    search_report,
    simplex_search_eta,
)
from kplsqsar.synthetic import make_latent, make_nonlinear

from oracles import loo_refit

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False)


def test_r_squared_reference_values():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(4, y.mean())) == 0.0
    assert r_squared(y, y[::-1]) == pytest.approx(1 - 20 / 5)


def test_r_squared_constant_response():
    with pytest.raises(DegeneracyError):
        r_squared(np.ones(5), np.arange(5.0))
    with pytest.raises(DataError):
        r_squared(np.ones(3), np.ones(2))


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(2, 30), elements=finite), st.floats(0.01, 100), st.floats(-50, 50))
def test_r_squared_affine_invariance(y, a, b):
    if np.ptp(y) < 1e-3:
        return
    z = y + np.sin(np.arange(y.size))
    assert r_squared(y, y) == pytest.approx(1.0)
    assert r_squared(y, np.full_like(y, y.mean())) == pytest.approx(0.0, abs=1e-9)
    assert abs(r_squared(a * y + b, a * z + b) - r_squared(y, z)) < 1e-10
    assert abs(r_squared(-a * y + b, -a * z + b) - r_squared(y, z)) < 1e-10
    assert r_squared(y, z) < 1.0


def test_loo_linear_response():
    x = np.arange(1.0, 11.0)
    d = Dataset(x.reshape(-1, 1), 2 * x)
    cv = loo_cv(d, KernelSpec("linear"), 1, centering=True)
    assert cv.r2 >= 0.99
    assert not cv.fold_failures


@pytest.mark.parametrize("family,eta", [("gaussian", 1.3), ("exponential", 0.7), ("linear", None)])
def test_loo_matches_refit_oracle(rng, family, eta):
    X = rng.standard_normal((7, 3))
    y = rng.standard_normal(7)
    cv = loo_cv(Dataset(X, y), KernelSpec(family, eta), 2)
    np.testing.assert_allclose(cv.predictions, loo_refit(X, y, family, eta, 2), atol=1e-10)


def test_loo_fold_is_an_independent_fit(rng):
    X = rng.standard_normal((9, 4))
    y = rng.standard_normal(9)
    d = Dataset(X, y)
    spec = KernelSpec("gaussian", 2.0)
    cv = loo_cv(d, spec, 3)
    for i in (0, 4, 8):
        rest = [k for k in range(9) if k != i]
        m = fit_kpls(d.subset(rest), spec, 3)
        assert cv.predictions[i] == pytest.approx(kpls_predict(m, X[i : i + 1])[0], abs=1e-10)


def test_held_out_prediction_ignores_own_response(rng):
    X = rng.standard_normal((9, 3))
    y = rng.standard_normal(9)
    spec = KernelSpec("gaussian", 1.7)
    a = loo_cv(Dataset(X, y), spec, 3, centering=True)
    y2 = y.copy()
    y2[4] += 10.0
    b = loo_cv(Dataset(X, y2), spec, 3, centering=True)
    assert b.predictions[4] == a.predictions[4]
    assert not np.allclose(np.delete(b.predictions, 4), np.delete(a.predictions, 4))


def test_loo_permutation_invariance(rng):
    X = rng.standard_normal((10, 3))
    y = rng.standard_normal(10)
    perm = rng.permutation(10)
    spec = KernelSpec("exponential", 1.5)
    a = loo_cv(Dataset(X, y), spec, 3)
    b = loo_cv(Dataset(X[perm], y[perm]), spec, 3)
    np.testing.assert_allclose(b.predictions, a.predictions[perm], atol=1e-10)
    assert b.r2 == pytest.approx(a.r2, abs=1e-10)


def test_global_fold_scaling(rng):
    X = rng.standard_normal((8, 2))
    y = rng.standard_normal(8)
    d = Dataset(X, y)
    cv = loo_cv(d, KernelSpec("gaussian", 1.0), 2, fold_scaling="global")
    # global scaling equals strict scaling on pre-scaled data with scaling off
    from kplsqsar.dataset import scale_apply, scale_fit
    ds = scale_apply(d, scale_fit(d))
    ref = loo_cv(ds, KernelSpec("gaussian", 1.0), 2, scaling="none")
    np.testing.assert_allclose(cv.predictions, ref.predictions, atol=1e-12)


def test_fold_plan_rejects_bad_inputs(rng):
    with pytest.raises(DataError):
        FoldPlan(Dataset(np.ones((2, 1)), [1.0, 2.0]), "gaussian")
    with pytest.raises(DataError):
        FoldPlan(Dataset(np.ones((4, 1))), "gaussian")
    plan = FoldPlan(Dataset(rng.standard_normal((5, 2)), rng.standard_normal(5)), "gaussian")
    with pytest.raises(ConfigError):
        plan.evaluate(1.0, [5])


def test_fold_failure_is_recorded():
    # identical features: every fold sees a constant-row kernel with zero scaled features
    d = Dataset(np.ones((5, 2)), [1.0, 2.0, 3.0, 4.0, 5.0])
    cv = loo_cv(d, KernelSpec("linear"), 1)
    assert cv.r2 is None
    assert len(cv.fold_failures) == 5


def test_simplex_search_on_known_objective():
    cfg = SearchConfig()
    eta, r2, evals = simplex_search_eta(lambda e: -((math.log(e) - math.log(3.0)) ** 2), 1.0, (1e-3, 1e3), cfg)
    assert abs(eta - 3.0) < 1e-3
    assert evals <= cfg.max_simplex_evals


def test_optimize_eta_budget_and_family(rng):
    d = make_nonlinear(20, 6, seed=3)
    cfg = SearchConfig(max_simplex_evals=1, eta_init=2.0)
    eta, r2 = optimize_eta(d, "gaussian", 2, cfg)
    assert eta == pytest.approx(2.0)
    assert r2 == pytest.approx(loo_cv(d, KernelSpec("gaussian", 2.0), 2).r2, abs=1e-12)
    with pytest.raises(ConfigError):
        optimize_eta(d, "linear", 2)


def test_search_config_validation():
    with pytest.raises(ConfigError):
        SearchConfig(nu_min=5, nu_max=2)
    with pytest.raises(ConfigError):
        SearchConfig(eta_init=-1.0)
    with pytest.raises(ConfigError):
        SearchConfig(eta_init=10.0, eta_bounds=(1.0, 2.0))
    assert list(SearchConfig().nu_range) == list(range(1, 21))


def test_linear_search_has_no_eta():
    d = make_latent(25, 8, seed=1, n_components=2)
    res = search_hyperparameters(d, "linear", SearchConfig(nu_max=6))
    assert res.eta is None
    assert [g["nu"] for g in res.grid] == list(range(1, 7))


@pytest.mark.parametrize("seed", range(10))
def test_search_recovers_latent_dimension(seed):
    # many collinear features make extra components overfit, so LOO r2 peaks at the true count
    d = make_latent(40, 200, seed=seed, n_components=2, noise=0.05, feature_noise=0.1)
    res = search_hyperparameters(d, "linear", SearchConfig(nu_max=8), centering=True)
    assert res.nu in (2, 3)


def test_search_clips_nu_to_sample_count():
    d = make_nonlinear(6, 3, seed=2)
    res = search_hyperparameters(d, "gaussian", SearchConfig(max_simplex_evals=5))
    assert max(g["nu"] for g in res.grid) == 5


def test_search_is_deterministic_and_consistent():
    d = make_nonlinear(18, 5, seed=11)
    cfg = SearchConfig(nu_max=5, max_simplex_evals=15)
    a = search_hyperparameters(d, "gaussian", cfg)
    b = search_hyperparameters(d, "gaussian", cfg)
    assert dump_report(search_report(a)) == dump_report(search_report(b))
    again = loo_cv(d, KernelSpec("gaussian", a.eta), a.nu)
    assert abs(again.r2 - a.r2) <= 1e-12
    best = max(g["r2"] for g in a.grid if g["r2"] is not None)
    assert a.r2 == best

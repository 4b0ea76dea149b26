import math

import numpy as np
import pandas as pd
import pytest

from fastnn.errors import ConfigError, NumericError, ShapeError
from fastnn.factor import (
    FactorDgp,
    estimate_dpm_pca,
    export_dataset_csv,
    generate,
    projection_diagnostics,
    random_projection,
    surrogate_factor,
)
from fastnn.factor.projection import fix_signs
from fastnn.factor.regression_fns import CANDIDATE_IDS, additive, regression_fast

from oracles import jacobi_eigh


def test_generate_is_seeded_and_consistent():
    dgp = FactorDgp.create(30, 3, seed=7)
    a = generate(dgp, 40)
    b = generate(FactorDgp.create(30, 3, seed=7), 40)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_allclose(a.x, a.f @ dgp.loading.T + a.u)
    np.testing.assert_allclose(a.y, a.m_star + a.eps)
    assert np.all(np.abs(a.f) <= 1.0) and np.all(np.abs(a.u) <= 1.0)
    assert np.all(np.abs(dgp.loading) <= math.sqrt(3.0))


def test_noiseless_dgp_has_zero_eps():
    sample = generate(FactorDgp.create(10, 2, noise_var=0.0, seed=1), 20)
    np.testing.assert_array_equal(sample.eps, 0.0)
    np.testing.assert_array_equal(sample.y, sample.m_star)


def test_null_regression_is_pure_noise():
    sample = generate(FactorDgp.create(10, 2, regression_fn="null", seed=1), 50)
    np.testing.assert_array_equal(sample.m_star, 0.0)


@pytest.mark.parametrize(
    "regression, expected",
    [("additive-random", ()), ("null", ()), ("fast1", (0, 1, 2, 3, 4)), ("fanam-additive", (0, 1, 2))],
)
def test_important_coords(regression, expected):
    r = 4 if regression == "fast1" else 3
    assert FactorDgp.create(20, r, regression_fn=regression).important_coords == expected


def test_dgp_validation():
    with pytest.raises(ConfigError):
        FactorDgp.create(20, 3, regression_fn="fast1")
    with pytest.raises(ConfigError):
        FactorDgp.create(20, 3, regression_fn="cubic")
    with pytest.raises(ShapeError):
        FactorDgp.create(20, 3, loading=np.ones((20, 2)))


def test_fast_regressions_at_origin():
    f = np.zeros((1, 4))
    u = np.zeros((1, 6))
    assert regression_fast(1, f, u)[0] == 0.0
    assert regression_fast(2, f, u)[0] == pytest.approx(math.log(9.0) + math.tan(0.1))


def test_fast1_is_linear():
    f = np.array([[1.0, 0.0, 0.0, 0.0]])
    u = np.array([[0.0, 1.0, 0.0, 0.0, 0.0, 5.0]])
    assert regression_fast(1, f, u)[0] == pytest.approx(2.0)


def test_additive_sums_components():
    values = np.array([[0.0, 0.0]])
    assert additive(values, ("cos", "sq"))[0] == pytest.approx(2.0)
    assert set(CANDIDATE_IDS) == {"cos", "sin", "sq", "sigmoid", "sqrt"}


def test_pca_projection_matches_jacobi_eigenpairs(rng):
    X = rng.normal(size=(12, 30))
    proj = estimate_dpm_pca(X, 3)
    values, vectors = jacobi_eigh(X @ X.T / 12)
    np.testing.assert_allclose(proj.eigenvalues, values[:3], rtol=1e-8)
    expected = X.T @ vectors[:, :3]
    expected = fix_signs(expected / np.linalg.norm(expected, axis=0)) * math.sqrt(30)
    np.testing.assert_allclose(proj.W, expected, atol=1e-8)
    np.testing.assert_allclose(np.linalg.norm(proj.W, axis=0), math.sqrt(30))


def test_pca_projection_sign_rule(rng):
    proj = estimate_dpm_pca(rng.normal(size=(20, 15)), 4)
    lead = np.argmax(np.abs(proj.W), axis=0)
    assert np.all(proj.W[lead, np.arange(4)] > 0)


def test_pca_projection_errors(rng):
    with pytest.raises(ConfigError):
        estimate_dpm_pca(rng.normal(size=(5, 10)), 6)
    low_rank = np.outer(rng.normal(size=8), rng.normal(size=10))
    with pytest.raises(NumericError):
        estimate_dpm_pca(low_rank, 3)


def test_pca_projection_is_diversified_on_factor_data():
    dgp = FactorDgp.create(200, 3, seed=2)
    unlabeled = generate(dgp, 100)
    proj = estimate_dpm_pca(unlabeled.x, 5)
    smallest, largest = projection_diagnostics(proj.W[:, :3], dgp.loading)
    assert smallest > 0.1 and largest < 10.0


def test_surrogate_factor_scales_by_p(rng):
    W = rng.normal(size=(6, 2))
    x = rng.normal(size=(4, 6))
    np.testing.assert_allclose(surrogate_factor(W, x), x @ W / 6)
    np.testing.assert_allclose(surrogate_factor(W, x[0]), x[0] @ W / 6)
    with pytest.raises(ShapeError):
        surrogate_factor(W, np.ones(5))


def test_random_projection_shape(rng):
    proj = random_projection(9, 4, rng)
    assert (proj.p, proj.r_bar) == (9, 4)


def test_export_dataset_csv(tmp_path):
    sample = generate(FactorDgp.create(4, 2, seed=3), 5)
    data_path, latent_path = export_dataset_csv(sample, tmp_path / "draw")
    data = pd.read_csv(data_path)
    assert list(data.columns) == ["x1", "x2", "x3", "x4", "y"]
    latent = pd.read_csv(latent_path)
    assert list(latent.columns[-2:]) == ["eps", "m_star"]
    np.testing.assert_allclose(latent["m_star"], sample.m_star)

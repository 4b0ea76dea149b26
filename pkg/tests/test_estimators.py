import json

import numpy as np
import pytest

from fastnn.bench.metrics import eval_mse
from fastnn.errors import ConfigError, ShapeError
from fastnn.estimators import (
    ArchConfig,
    ClippedL1Config,
    FanamModel,
    FastNnModel,
    fit_baseline_nn,
    fit_fanam,
    fit_far_nn,
    fit_fast_nn,
    fit_pcr,
    model_from_dict,
    model_to_dict,
    select_penalty_lambda,
    selection_scores,
)
import fastnn.estimators.fast_nn as fast_nn_module
from fastnn.estimators.fanam import residualizer_ols
from fastnn.estimators.neural import DROPOUT_GRID, NetRegressor, model_inputs, net_from_dict, net_to_dict
from fastnn.estimators.scaling import ScaledModel, Standardizer
from fastnn.estimators.training import TrainStreams, fit_parameters
from fastnn.factor import FactorDgp, FactorSample, estimate_dpm_pca, generate
from fastnn.nets import TrainConfig, init_net

SMALL = ArchConfig(depth=2, width=16)
QUICK = TrainConfig(epochs=5, batch_size=32, lr=5e-3, seed=1)


@pytest.fixture(scope="module")
def factor_data():
    dgp = FactorDgp.create(40, 3, noise_var=0.05, seed=4)
    rng = np.random.default_rng(9)
    train, valid, test, unlabeled = (generate(dgp, n, rng) for n in (300, 100, 400, 60))
    W = estimate_dpm_pca(unlabeled.x, 4)
    return dgp, train, valid, test, W


@pytest.fixture(scope="module")
def fast_data():
    dgp = FactorDgp.create(30, 4, regression_fn="fast1", noise_var=0.05, seed=5)
    rng = np.random.default_rng(10)
    train, valid, unlabeled = (generate(dgp, n, rng) for n in (200, 60, 40))
    return dgp, train, valid, estimate_dpm_pca(unlabeled.x, 4)


def _json_round_trip(model):
    return model_from_dict(json.loads(json.dumps(model_to_dict(model))))


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def test_fit_parameters_returns_best_checkpoint():
    # minimize (w - 3)^2 with a criterion that prefers w near 1
    def objective(params, idx, rng):
        w = params[0]
        return float(np.sum((w - 3.0) ** 2)), [2.0 * (w - 3.0)]

    def criterion(params):
        return float(np.sum((params[0] - 1.0) ** 2))

    config = TrainConfig(epochs=40, batch_size=10, lr=0.1)
    result = fit_parameters([np.zeros(1)], objective, criterion, 10, config, TrainStreams.from_seed(0))
    assert result.best_valid <= min(result.history) + 1e-15
    assert abs(result.params[0][0] - 1.0) < 0.2
    assert len(result.history) == 41


def test_fit_parameters_frozen_positions_do_not_move():
    def objective(params, idx, rng):
        return 0.0, [np.ones_like(p) for p in params]

    config = TrainConfig(epochs=3, batch_size=4, early_stopping=False)
    result = fit_parameters(
        [np.zeros(2), np.zeros(2)], objective, lambda ps: 0.0, 4, config, TrainStreams.from_seed(0), frozen=[1]
    )
    np.testing.assert_array_equal(result.params[1], 0.0)
    assert np.all(result.params[0] < 0.0)


# ---------------------------------------------------------------------------
# FAR-NN and baselines
# ---------------------------------------------------------------------------


def test_far_nn_learns_factor_regression(factor_data):
    _, train, valid, test, W = factor_data
    config = TrainConfig(epochs=80, batch_size=32, lr=5e-3, seed=0)
    model = fit_far_nn(train, valid, W, ArchConfig(depth=2, width=32), config)
    assert model.kind == "far-nn"
    assert eval_mse(model, test) < 0.5 * float(np.var(test.m_star))


def test_far_nn_is_deterministic_given_seed(factor_data):
    _, train, valid, test, W = factor_data
    a = fit_far_nn(train, valid, W, SMALL, QUICK)
    b = fit_far_nn(train, valid, W, SMALL, QUICK)
    np.testing.assert_array_equal(a.predict(test.x), b.predict(test.x))


def test_oracle_needs_latent_truth(factor_data):
    _, train, valid, _, _ = factor_data
    observed = FactorSample(train.x, train.y)
    with pytest.raises(ConfigError):
        fit_baseline_nn("oracle", observed, valid, SMALL, QUICK)


def test_oracle_reads_factors_and_important_coordinates(factor_data):
    _, train, valid, test, _ = factor_data
    model = fit_baseline_nn("oracle", train, valid, SMALL, QUICK, important=(0, 2))
    assert model.inputs == "f+uJ"
    assert model.net.input_dim == 3 + 2
    assert model.predict_batch(test).shape == (len(test),)
    plain = fit_baseline_nn("oracle-factor", train, valid, SMALL, QUICK, important=(0, 2))
    assert plain.inputs == "f" and plain.net.input_dim == 3


def test_model_inputs_rejects_unknown_kind(factor_data):
    _, train, _, _, _ = factor_data
    with pytest.raises(ConfigError):
        model_inputs(train, "z")


def test_nn_joint_trains_projection(factor_data):
    _, train, valid, test, W = factor_data
    config = TrainConfig(epochs=3, batch_size=32, lr=5e-3, seed=1, early_stopping=False)
    model = fit_baseline_nn("nn-joint", train, valid, SMALL, config, W=W)
    assert model.projection.shape == W.W.shape
    assert not np.allclose(model.projection, W.W)
    with pytest.raises(ConfigError):
        fit_baseline_nn("nn-joint", train, valid, SMALL, QUICK)


def test_dropout_baseline_picks_rate_from_grid(factor_data):
    _, train, valid, _, _ = factor_data
    config = TrainConfig(epochs=2, batch_size=64, seed=3)
    model = fit_baseline_nn("dropout-vanilla", train, valid, SMALL, config, dropout_grid=(0.0, 0.5))
    assert model.hyper["dropout_rate"] in (0.0, 0.5)
    assert set(DROPOUT_GRID) == {0.0, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9}


def test_unknown_baseline(factor_data):
    _, train, valid, _, _ = factor_data
    with pytest.raises(ConfigError):
        fit_baseline_nn("resnet", train, valid, SMALL, QUICK)


def test_net_dict_round_trip_keeps_infinite_truncation():
    net = init_net([3, 4, 1], seed=0)
    again = net_from_dict(json.loads(json.dumps(net_to_dict(net))))
    assert again.truncation == net.truncation
    np.testing.assert_array_equal(again.weights[0], net.weights[0])


# ---------------------------------------------------------------------------
# FAST-NN
# ---------------------------------------------------------------------------


def test_fast_nn_shapes_and_scores(fast_data):
    _, train, valid, W = fast_data
    model = fit_fast_nn(train, valid, W, SMALL, ClippedL1Config(lam=1e-2, tau=1e-2), QUICK, n_sel=6)
    assert isinstance(model, FastNnModel)
    assert model.theta.shape == (30, 6) and model.n_sel == 6
    assert model.trunk.input_dim == 4 + 6
    scores = selection_scores(model)
    assert scores.shape == (30,) and np.all(scores >= 0)
    assert model.penalty_value() == pytest.approx(
        1e-2 * float(np.sum(np.minimum(np.abs(model.theta) / 1e-2, 1.0)))
    )


def test_fast_nn_without_epochs_keeps_small_initial_theta(fast_data):
    _, train, valid, W = fast_data
    config = TrainConfig(epochs=0, seed=2)
    model = fit_fast_nn(train, valid, W, SMALL, ClippedL1Config(lam=1e-2, tau=1e-2), config, n_sel=3)
    assert np.all(np.abs(model.theta) <= 0.5e-2)


def test_fast_nn_validation(fast_data):
    _, train, valid, W = fast_data
    with pytest.raises(ConfigError):
        fit_fast_nn(train, valid, W, SMALL, ClippedL1Config(), QUICK, n_sel=0)
    with pytest.raises(ShapeError):
        fit_fast_nn(FactorSample(train.x[:, :10], train.y), valid, W, SMALL, ClippedL1Config(), QUICK)


def test_select_penalty_lambda_records_grid(fast_data):
    _, train, valid, W = fast_data
    config = TrainConfig(epochs=2, seed=0)
    model = select_penalty_lambda(train, valid, W, SMALL, 1e-2, [1e-3, 1e-1], config, n_sel=2)
    assert model.hyper["lambda_grid"] == [1e-3, 1e-1]
    assert model.penalty.lam in (1e-3, 1e-1)
    with pytest.raises(ConfigError):
        select_penalty_lambda(train, valid, W, SMALL, 1e-2, [], config)


def test_select_penalty_lambda_ranks_on_validation_mse(fast_data, monkeypatch):
    _, train, valid, W = fast_data

    class Fitted:
        def __init__(self, penalty):
            self.penalty = penalty
            self.hyper = {}

        def predict(self, x):
            # only the largest lambda fits the validation rows
            return valid.y.copy() if self.penalty.lam == 1.0 else np.zeros(len(x))

        def penalty_value(self):
            return 100.0 * self.penalty.lam

    monkeypatch.setattr(fast_nn_module, "fit_fast_nn", lambda *args: Fitted(args[4]))
    model = select_penalty_lambda(train, valid, W, SMALL, 1e-2, [1e-4, 1e-2, 1.0], TrainConfig(epochs=1))
    assert model.penalty.lam == 1.0
    assert model.hyper["lambda_valid_mse"][2] == 0.0
    assert min(model.hyper["lambda_valid_mse"][:2]) > 0.0


# ---------------------------------------------------------------------------
# FANAM
# ---------------------------------------------------------------------------


def test_residualizer_recovers_exact_loadings(rng):
    F = rng.normal(size=(50, 2))
    V = rng.normal(size=(6, 2))
    np.testing.assert_allclose(residualizer_ols(F @ V.T, F), V, atol=1e-10)


def test_fanam_frozen_beta_is_pure_factor_model(factor_data):
    _, train, valid, test, W = factor_data
    model = fit_fanam(train, valid, W, SMALL, 1e-3, QUICK, sub_arch=ArchConfig(2, 4), freeze_beta=True)
    assert isinstance(model, FanamModel)
    np.testing.assert_array_equal(model.beta, 0.0)
    base, G = model.components(test.x)
    assert G.shape == (len(test), 40)
    np.testing.assert_allclose(model.predict(test.x), base)


def test_fanam_trains_beta(factor_data):
    _, train, valid, _, W = factor_data
    config = TrainConfig(epochs=3, batch_size=32, lr=5e-3, seed=1, early_stopping=False)
    model = fit_fanam(train, valid, W, SMALL, 1e-4, config, sub_arch=ArchConfig(2, 4))
    assert model.subnets.count == 40
    assert np.any(model.beta != 0.0)
    assert model.penalty_value() == pytest.approx(1e-4 * float(np.sum(np.abs(model.beta))))


def test_fanam_rejects_negative_lambda(factor_data):
    _, train, valid, _, W = factor_data
    with pytest.raises(ConfigError):
        fit_fanam(train, valid, W, SMALL, -1.0, QUICK)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_every_model_kind_survives_json(factor_data, fast_data):
    _, train, valid, test, W = factor_data
    _, ftrain, fvalid, fW = fast_data
    fast = fit_fast_nn(ftrain, fvalid, fW, SMALL, ClippedL1Config(), QUICK, n_sel=2)
    models = [
        (fit_far_nn(train, valid, W, SMALL, QUICK), test.x),
        (fit_fanam(train, valid, W, SMALL, 1e-3, QUICK, sub_arch=ArchConfig(1, 3)), test.x),
        (fit_pcr(train.x, train.y, 3), test.x),
        (fast, ftrain.x),
        (ScaledModel(fit_pcr(train.x, train.y, 2), Standardizer.fit(train.x, train.y, scale_response=True)), test.x),
    ]
    for model, x in models:
        again = _json_round_trip(model)
        assert again.kind == model.kind
        np.testing.assert_allclose(again.predict(x), model.predict(x), atol=1e-12)


def test_baseline_regressor_survives_json(factor_data):
    _, train, valid, test, _ = factor_data
    model = fit_baseline_nn("oracle", train, valid, SMALL, QUICK, important=(1,))
    again = _json_round_trip(model)
    assert isinstance(again, NetRegressor) and again.important == (1,)
    np.testing.assert_allclose(again.predict_batch(test), model.predict_batch(test))


def test_unknown_kind_and_schema_version():
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "forest", "schema_version": 1})
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "pcr", "schema_version": 2})

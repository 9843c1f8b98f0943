import numpy as np
import pytest

from fingertrace.regressor import (
    Conv2d,
    Dense,
    ReLU,
    TorqueRegressor,
    TrainConfig,
    TrainingError,
    evaluate_regressor,
    load_model,
    save_model,
    train_regressor,
)

from oracles import finite_difference_loss_gradients

TINY = (2, 16, 24)


def rel_err(a, b):
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-8)


def test_memorizes_single_sample():
    rng = np.random.default_rng(0)
    images = rng.uniform(0, 255, size=(1, *TINY))
    targets = np.array([[-70.0, 12.0]])
    model, history = train_regressor(images, targets, TrainConfig(epochs=200, seed=1))
    assert history[-1] < 1e-4
    rb, rt, _ = evaluate_regressor(model, images, targets)
    assert rb < 1e-2 and rt < 1e-2


def test_full_model_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    images = rng.uniform(0, 255, size=(3, *TINY))
    targets_std = rng.normal(size=(3, 2))
    model = TorqueRegressor(TINY, seed=5)
    analytic_loss = model.loss_and_gradients(images, targets_std)
    analytic = [g.copy() for g in model.gradient_arrays()]

    def loss_fn():
        pred = model.forward(images)
        return float(np.mean((pred - targets_std) ** 2))

    assert loss_fn() == pytest.approx(analytic_loss)
    numeric = finite_difference_loss_gradients(loss_fn, model.parameter_arrays(), step=1e-5)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        worst = max(worst, float(rel_err(a, n).max()))
    assert worst < 1e-4


def test_conv_layer_gradients_independently():
    rng = np.random.default_rng(7)
    layer = Conv2d(2, 3, kernel=3, stride=2, rng=rng)
    x = rng.normal(size=(2, 2, 7, 9))

    def loss_fn():
        return float(np.mean(layer.forward(x) ** 2))

    out = layer.forward(x)
    dout = 2.0 * out / out.size
    dx = layer.backward(dout)
    numeric = finite_difference_loss_gradients(loss_fn, [layer.w, layer.b], step=1e-6)
    assert rel_err(layer.dw, numeric[0]).max() < 1e-4
    assert rel_err(layer.db, numeric[1]).max() < 1e-4
    numeric_dx = finite_difference_loss_gradients(loss_fn, [x], step=1e-6)[0]
    assert rel_err(dx, numeric_dx).max() < 1e-4


def test_dense_layer_gradients_independently():
    rng = np.random.default_rng(9)
    layer = Dense(6, 4, rng)
    x = rng.normal(size=(5, 6))

    def loss_fn():
        return float(np.mean(layer.forward(x) ** 2))

    out = layer.forward(x)
    dx = layer.backward(2.0 * out / out.size)
    numeric = finite_difference_loss_gradients(loss_fn, [layer.w, layer.b, x], step=1e-6)
    assert rel_err(layer.dw, numeric[0]).max() < 1e-4
    assert rel_err(layer.db, numeric[1]).max() < 1e-4
    assert rel_err(dx, numeric[2]).max() < 1e-4


def test_relu_gradient():
    rng = np.random.default_rng(11)
    layer = ReLU()
    x = rng.normal(size=(4, 6)) + 0.1  # keep away from the kink

    def loss_fn():
        return float(np.mean(layer.forward(x) ** 2))

    out = layer.forward(x)
    dx = layer.backward(2.0 * out / out.size)
    numeric = finite_difference_loss_gradients(loss_fn, [x], step=1e-6)[0]
    assert rel_err(dx, numeric).max() < 1e-4


def test_training_is_seeded_deterministic():
    rng = np.random.default_rng(13)
    images = rng.uniform(0, 255, size=(12, *TINY))
    targets = rng.normal(-60, 25, size=(12, 2))
    cfg = TrainConfig(epochs=5, seed=21)
    m1, h1 = train_regressor(images, targets, cfg)
    m2, h2 = train_regressor(images, targets, cfg)
    assert h1 == h2
    for a, b in zip(m1.parameter_arrays(), m2.parameter_arrays()):
        assert np.array_equal(a, b)


def test_scaled_targets_scale_predictions():
    rng = np.random.default_rng(15)
    images = rng.uniform(0, 255, size=(16, *TINY))
    targets = rng.normal(-60, 25, size=(16, 2))
    cfg = TrainConfig(epochs=8, seed=2)
    base, _ = train_regressor(images, targets, cfg)
    scaled, _ = train_regressor(images, 2.0 * targets, cfg)
    p1 = base.predict(images)
    p2 = scaled.predict(images)
    assert np.allclose(p2, 2.0 * p1, rtol=1e-9, atol=1e-9)


def test_mean_predictor_rmse_equals_population_std():
    rng = np.random.default_rng(17)
    targets = rng.normal(-60, 25, size=(40, 2))
    images = rng.uniform(0, 255, size=(40, *TINY))
    model = TorqueRegressor(TINY, seed=3,
                            target_mean=targets.mean(axis=0),
                            target_std=targets.std(axis=0))
    # Zero the last layer: the net then predicts exactly the training mean.
    model.fc2.w[...] = 0.0
    model.fc2.b[...] = 0.0
    rb, rt, preds = evaluate_regressor(model, images, targets)
    assert np.allclose(preds, targets.mean(axis=0))
    assert rb == pytest.approx(targets[:, 0].std(), rel=1e-12)
    assert rt == pytest.approx(targets[:, 1].std(), rel=1e-12)


def test_perfect_predictor_rmse_zero():
    rng = np.random.default_rng(19)
    targets = rng.normal(size=(7, 2))
    preds_model = TorqueRegressor(TINY, seed=0)
    rb, rt, _ = evaluate_regressor(preds_model, np.zeros((7, *TINY)),
                                   preds_model.predict(np.zeros((7, *TINY))))
    assert rb == 0.0 and rt == 0.0


def test_divergent_training_raises_with_epoch():
    rng = np.random.default_rng(23)
    images = rng.uniform(0, 255, size=(8, *TINY))
    targets = rng.normal(size=(8, 2))
    with np.errstate(invalid="ignore", over="ignore"):
        with pytest.raises(TrainingError) as err:
            train_regressor(images, targets,
                            TrainConfig(epochs=50, learning_rate=1e14, seed=0))
    assert err.value.epoch >= 0


def test_model_roundtrip(tmp_path):
    rng = np.random.default_rng(29)
    images = rng.uniform(0, 255, size=(6, *TINY))
    targets = rng.normal(-60, 25, size=(6, 2))
    model, _ = train_regressor(images, targets, TrainConfig(epochs=3, seed=4))
    path = tmp_path / "model.bin"
    save_model(model, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.predict(images), model.predict(images))
    assert path.read_bytes()[:4] == b"FTRQ"


def test_rejects_empty_dataset():
    with pytest.raises(ValueError):
        train_regressor(np.zeros((0, *TINY)), np.zeros((0, 2)))


def test_input_too_small_rejected():
    with pytest.raises(ValueError):
        TorqueRegressor((2, 8, 8), seed=0)

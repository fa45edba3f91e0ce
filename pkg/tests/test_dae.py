"""Testes do autoencoder denoising: gradiente, corrupção, treino e amostragem."""

import numpy as np
import pytest

from services.dae_service import (
    DaeModel,
    StopReason,
    TrainConfig,
    corrupt,
    cross_entropy,
    forward,
    init_dae,
    is_overfitting,
    load_model,
    loss_and_gradients,
    sample,
    save_model,
    train,
    train_step,
    training_converged,
)
from utils.errors import DomainError, InsufficientDataError, InvalidArgumentError, ShapeMismatchError
from utils.population import binarize
from utils.rng import make_rng

STEP = 1e-5


def _numeric_gradient(model, x, x_hat, name):
    param = getattr(model, name)
    grad = np.zeros_like(param)
    for index in np.ndindex(param.shape):
        original = param[index]
        param[index] = original + STEP
        up, _ = loss_and_gradients(model, x, x_hat)
        param[index] = original - STEP
        down, _ = loss_and_gradients(model, x, x_hat)
        param[index] = original
        grad[index] = (up - down) / (2 * STEP)
    return grad


def test_gradients_match_finite_differences() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(25):
        n, m, batch = rng.integers(1, 9), rng.integers(1, 9), rng.integers(1, 6)
        model = DaeModel(rng.normal(0, 0.8, (n, m)), rng.normal(0, 0.5, m), rng.normal(0, 0.5, n))
        x = rng.integers(0, 2, (batch, n)).astype(float)
        x_hat = corrupt(x, 0.3, rng)
        _, grads = loss_and_gradients(model, x, x_hat)
        for name in ("W", "b_h", "b_z"):
            numeric = _numeric_gradient(model, x, x_hat, name)
            analytic = getattr(grads, name)
            relative = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-4)
            assert relative.max() < 1e-4, name


def test_zero_gradient_when_reconstruction_is_exact() -> None:
    model = DaeModel(np.zeros((4, 3)), np.zeros(3), np.zeros(4))
    x = np.full((2, 4), 0.5)
    _, grads = loss_and_gradients(model, x, x)
    assert np.all(grads.W == 0) and np.all(grads.b_h == 0) and np.all(grads.b_z == 0)


def test_small_step_does_not_increase_loss() -> None:
    rng = np.random.default_rng(5)
    model = init_dae(10, 10, make_rng(1, 1, "model_init"))
    x = rng.integers(0, 2, (30, 10)).astype(float)
    x_hat = corrupt(x, 0.1, rng)
    before, grads = loss_and_gradients(model, x, x_hat)
    model.W -= 1e-3 * grads.W
    model.b_h -= 1e-3 * grads.b_h
    model.b_z -= 1e-3 * grads.b_z
    after, _ = loss_and_gradients(model, x, x_hat)
    assert after <= before


def test_init_dae_ranges() -> None:
    model = init_dae(16, 8, make_rng(3, 1, "model_init"))
    assert model.W.shape == (16, 8)
    assert np.abs(model.W).max() <= 0.25
    assert not model.b_h.any() and not model.b_z.any()
    with pytest.raises(InvalidArgumentError):
        init_dae(0, 3, make_rng(3, 1, "model_init"))


def test_corrupt_changes_at_most_rounded_count() -> None:
    rng = make_rng(9, 1, "train")
    x = np.zeros((200, 10))
    noisy = corrupt(x, 0.1, rng)
    changed = (noisy != x).sum(axis=1)
    assert changed.max() <= 1
    # metade das posições sorteadas recebe 1
    assert 0.35 < changed.mean() < 0.65
    assert np.array_equal(corrupt(x, 0.0, rng), x)
    assert corrupt(np.ones(20), 0.25, rng).sum() >= 15
    with pytest.raises(DomainError):
        corrupt(x, 1.5, rng)


@pytest.mark.parametrize("n, rate, count", [(20, 0.1, 2), (5, 0.1, 1), (10, 0.25, 3), (8, 1.0, 8)])
def test_corrupt_overwrites_exactly_rounded_count(n, rate, count) -> None:
    # 0.5 nunca é valor de ruído: toda posição sobrescrita muda
    x = np.full((300, n), 0.5)
    noisy = corrupt(x, rate, make_rng(6, 1, "train"))
    overwritten = noisy != 0.5
    assert np.all(overwritten.sum(axis=1) == count)
    assert set(np.unique(noisy[overwritten]).tolist()) <= {0.0, 1.0}
    # posições uniformes entre as colunas
    assert np.abs(overwritten.mean(axis=0) - count / n).max() < 0.1


def test_corrupt_overwrites_the_drawn_positions() -> None:
    x = np.full((50, 12), 0.5)
    noisy = corrupt(x, 0.25, make_rng(3, 2, "train"))
    replay = make_rng(3, 2, "train")
    positions = np.argsort(replay.random(x.shape), axis=1)[:, :3]
    for row, drawn in zip(noisy, positions):
        assert set(np.flatnonzero(row != 0.5).tolist()) == set(drawn.tolist())


def test_corrupt_rounds_half_up() -> None:
    x = np.zeros((500, 5))
    noisy = corrupt(x, 0.1, make_rng(4, 1, "train"))
    # round(0.5) = 1 posição sorteada por linha
    assert (noisy != x).sum(axis=1).max() == 1
    assert (noisy != x).any()


def test_forward_outputs_in_open_interval() -> None:
    model = init_dae(6, 4, make_rng(1, 1, "model_init"))
    h, z = forward(model, np.ones((3, 6)))
    assert h.shape == (3, 4) and z.shape == (3, 6)
    assert np.all((h > 0) & (h < 1)) and np.all((z > 0) & (z < 1))
    with pytest.raises(ShapeMismatchError):
        forward(model, np.ones(5))
    assert np.all(cross_entropy(np.ones((3, 6)), z) >= 0)


def test_train_requires_minimum_data() -> None:
    model = init_dae(5, 5, make_rng(1, 1, "model_init"))
    with pytest.raises(InsufficientDataError):
        train(model, np.zeros((9, 5)), TrainConfig(), make_rng(1, 1, "train"))


def test_train_reconstructs_repeated_string() -> None:
    s = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1], dtype=float)
    data = np.tile(s, (200, 1))
    cfg = TrainConfig(gamma_threshold=0.001)
    model, report = train(init_dae(10, 10, make_rng(8, 1, "model_init")), data, cfg, make_rng(8, 1, "train"))
    _, z = forward(model, s)
    assert np.abs(z - s).max() < 0.1
    assert 1 <= report.epochs_run <= cfg.max_epochs
    assert isinstance(report.stop_reason, StopReason)


def test_train_is_deterministic() -> None:
    data = make_rng(2, 0, "init").integers(0, 2, (40, 8))
    cfg = TrainConfig(max_epochs=20)
    a, ra = train(init_dae(8, 8, make_rng(2, 1, "model_init")), data, cfg, make_rng(2, 1, "train"))
    b, rb = train(init_dae(8, 8, make_rng(2, 1, "model_init")), data, cfg, make_rng(2, 1, "train"))
    assert np.array_equal(a.W, b.W)
    assert ra.error_history == rb.error_history
    assert ra.epochs_run <= 20


def test_train_runs_minimum_updates_before_stopping() -> None:
    # 30 exemplos: um lote por época
    data = make_rng(5, 0, "init").integers(0, 2, (30, 8))
    cfg = TrainConfig(min_updates=300, max_epochs=1000)
    _, report = train(init_dae(8, 8, make_rng(5, 1, "model_init")), data, cfg, make_rng(5, 1, "train"))
    assert report.updates == report.epochs_run
    assert report.epochs_run >= 300
    assert report.updates >= cfg.min_updates
    with pytest.raises(InvalidArgumentError):
        TrainConfig(min_updates=-1)


def test_train_stops_at_epoch_cap_below_update_floor() -> None:
    data = make_rng(5, 0, "init").integers(0, 2, (30, 8))
    cfg = TrainConfig(min_updates=2000, max_epochs=40)
    _, report = train(init_dae(8, 8, make_rng(5, 1, "model_init")), data, cfg, make_rng(5, 1, "train"))
    assert report.stop_reason is StopReason.MAX_EPOCHS
    assert report.epochs_run == 40


def test_flat_error_counts_as_converged() -> None:
    cfg = TrainConfig()
    flat = [(epoch, 3.0, 3.0) for epoch in range(0, 12, 2)]
    assert training_converged(flat, cfg)
    assert not training_converged(flat[:5], cfg)


def test_gamma_uses_checkpoint_below_two_thirds() -> None:
    cfg = TrainConfig()
    # e_0=10, e_6=2.1, e_10=2.0 -> gamma = 0.1/8 < 0.05
    history = [(0, 10.0, 10.0), (2, 5.0, 5.0), (4, 3.0, 3.0), (6, 2.1, 2.1), (8, 2.05, 2.05), (10, 2.0, 2.0)]
    assert training_converged(history, cfg)
    # e_6=6, e_10=2 -> gamma = 4/8
    history[3] = (6, 6.0, 6.0)
    assert not training_converged(history, cfg)


def test_overfit_criterion() -> None:
    cfg = TrainConfig()
    assert is_overfitting(1.0, 1.1, cfg)
    assert not is_overfitting(1.0, 1.05, cfg)


def test_train_step_updates_model_in_place() -> None:
    model = init_dae(6, 6, make_rng(1, 1, "model_init"))
    before = model.W.copy()
    _, loss = train_step(model, np.ones((4, 6)), TrainConfig(), make_rng(1, 1, "train"))
    assert loss > 0
    assert not np.array_equal(model.W, before)


def test_zero_model_samples_one_half() -> None:
    model = DaeModel(np.zeros((7, 7)), np.zeros(7), np.zeros(7))
    x = sample(model, 3, 0.1, make_rng(1, 1, "sample"))
    assert np.allclose(x, 0.5)
    with pytest.raises(InvalidArgumentError):
        sample(model, 0, 0.1, make_rng(1, 1, "sample"))


def test_sample_stays_in_unit_cube_with_large_weights() -> None:
    rng = np.random.default_rng(11)
    model = DaeModel(rng.normal(0, 1e4, (9, 9)), rng.normal(0, 1e4, 9), rng.normal(0, 1e4, 9))
    x = sample(model, 10, 0.1, make_rng(1, 1, "sample"), count=64)
    assert x.shape == (64, 9)
    assert np.all(np.isfinite(x))
    assert np.all((x >= 0.0) & (x <= 1.0))


def test_sample_is_deterministic() -> None:
    model = init_dae(9, 9, make_rng(1, 1, "model_init"))
    a = sample(model, 10, 0.1, make_rng(5, 2, "sample"), count=4)
    b = sample(model, 10, 0.1, make_rng(5, 2, "sample"), count=4)
    assert a.shape == (4, 9)
    assert np.array_equal(a, b)


def test_trained_model_recovers_modes() -> None:
    n = 12
    data = np.vstack([np.zeros((500, n)), np.ones((500, n))])
    model, _ = train(init_dae(n, n, make_rng(17, 1, "model_init")), data, TrainConfig(), make_rng(17, 1, "train"))
    probs = sample(model, 10, 0.1, make_rng(17, 1, "sample"), count=500)
    bits = binarize(probs, make_rng(17, 1, "binarize"))
    ones = bits.sum(axis=1)
    near_mode = (ones <= 1) | (ones >= n - 1)
    assert near_mode.mean() >= 0.7


def test_model_dump_round_trip(tmp_path) -> None:
    model = init_dae(5, 3, make_rng(1, 1, "model_init"))
    model.b_h += 0.25
    loaded = load_model(save_model(model, tmp_path / "dae.json"))
    assert np.array_equal(loaded.W, model.W)
    assert np.array_equal(loaded.b_h, model.b_h)
    (tmp_path / "bad.json").write_text('{"format": "other"}')
    with pytest.raises(ShapeMismatchError):
        load_model(tmp_path / "bad.json")

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rt4ucp.classifier import (
    ModelParams,
    TrainConfig,
    cross_entropy_soft,
    dataset_loss,
    init_model,
    loss_and_grads,
    mae_loss,
    predict_logits,
    softmax,
    train,
)
from rt4ucp.data_model import Dataset, NumericalError, ValidationError, one_hot



def finite_difference_grad(model, x, t, loss, h=1e-5):
    """Central differences of the mean batch loss over every parameter."""
    theta = model.flat()
    out = np.empty_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        lu, _ = loss_and_grads(model.with_flat(up), x, t, loss)
        ld, _ = loss_and_grads(model.with_flat(down), x, t, loss)
        out[i] = (lu - ld) / (2 * h)
    return out


def random_problem(rng, hidden):
    d, k = rng.integers(1, 6), rng.integers(2, 5)
    h = int(rng.integers(1, 4)) if hidden else 0
    model = init_model(int(d), h, int(k), int(rng.integers(0, 2**32)))
    model = model.with_flat(rng.standard_normal(model.flat().size))
    x = rng.standard_normal((int(rng.integers(1, 6)), int(d)))
    t = rng.dirichlet(np.ones(int(k)), size=x.shape[0])
    return model, x, t


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)


@pytest.mark.parametrize("loss", ["cross_entropy_soft", "mae"])
@pytest.mark.parametrize("hidden", [False, True])
def test_gradients_match_finite_differences(loss, hidden):
    rng = np.random.default_rng(123)
    for _ in range(10):
        model, x, t = random_problem(rng, hidden)
        _, g = loss_and_grads(model, x, t, loss)
        assert rel_err(g, finite_difference_grad(model, x, t, loss)) < 1e-4


def test_init_model_determinism_and_shapes():
    a = init_model(4, 0, 3, 11)
    b = init_model(4, 0, 3, 11)
    c = init_model(4, 0, 3, 12)
    assert np.array_equal(a.flat(), b.flat())
    assert not np.array_equal(a.flat(), c.flat())
    assert len(a.weights) == 1 and a.weights[0].shape == (3, 4)
    h = init_model(4, 5, 3, 0)
    assert [w.shape for w in h.weights] == [(5, 4), (3, 5)]


@pytest.mark.parametrize("dims", [(0, 0, 3), (4, 0, 1), (4, -1, 3)])
def test_init_model_rejects_bad_dims(dims):
    with pytest.raises(ValueError):
        init_model(*dims, seed=0)


def test_softmax_examples():
    assert np.allclose(softmax([0.0, 0.0, 0.0]), [1 / 3] * 3, atol=1e-15)
    for c in (-50.0, 0.0, 3.7, 400.0):
        assert np.allclose(softmax([c, c + math.log(2)]), [1 / 3, 2 / 3], atol=1e-12)
    p = softmax([1000.0, 0.0])
    assert p[0] == 1.0 and 0 <= p[1] < 1e-300
    with pytest.raises(ValidationError):
        softmax([float("nan"), 1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=10), st.floats(-100, 100))
def test_softmax_shift_invariance(z, c):
    z = np.array(z)
    assert np.allclose(softmax(z), softmax(z + c), atol=1e-12, rtol=0)


def test_cross_entropy_examples():
    assert cross_entropy_soft([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
    assert cross_entropy_soft([0.5, 0.5], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)
    # -(0.3 ln 0.6 + 0.7 ln 0.4), evaluated separately
    assert cross_entropy_soft([0.6, 0.4], [0.3, 0.7]) == pytest.approx(0.7946511994417057, abs=1e-15)
    with pytest.raises(ValidationError):
        cross_entropy_soft([0.5, 0.5], [1.0, 0.0, 0.0])


def test_soft_ce_reduces_to_hard_ce():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(2, 8))
        p = softmax(rng.standard_normal(k) * 3)
        y = int(rng.integers(k))
        assert abs(cross_entropy_soft(p, np.eye(k)[y]) + math.log(p[y])) < 1e-12


def test_mae_examples():
    assert mae_loss([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert mae_loss([0.0, 1.0], [1.0, 0.0]) == 2.0
    assert mae_loss([0.6, 0.4], [1.0, 0.0]) == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(ValidationError):
        mae_loss([1.0], [0.5, 0.5])


def test_predict_logits_linear_and_batch_agree():
    rng = np.random.default_rng(1)
    w, b = rng.standard_normal((3, 4)), rng.standard_normal(3)
    model = ModelParams(4, 0, 3, (w,), (b,))
    x = rng.standard_normal((6, 4))
    batch = predict_logits(model, x)
    assert np.array_equal(predict_logits(model, x[2]), w @ x[2] + b)
    for i in range(6):
        assert np.allclose(predict_logits(model, x[i]), batch[i], atol=1e-12, rtol=0)
    zero = ModelParams(4, 2, 3, (np.zeros((2, 4)), np.zeros((3, 2))), (np.zeros(2), np.zeros(3)))
    assert np.array_equal(predict_logits(zero, x[0]), np.zeros(3))
    with pytest.raises(ValidationError):
        predict_logits(model, np.zeros(5))


def test_separable_blobs_are_fit(blob_data):
    model = init_model(2, 0, 2, 0)
    cfg = TrainConfig(epochs=30, learning_rate=0.5, batch_size=16, seed=0)
    model, hist = train(model, blob_data, one_hot(blob_data.labels, 2), cfg)
    acc = np.mean(predict_logits(model, blob_data.features).argmax(1) == blob_data.labels)
    assert acc >= 0.99
    assert hist.logits.shape == (100, 30, 2)
    assert np.array_equal(hist.logits[:, -1], predict_logits(model, blob_data.features))


def test_single_epoch_history_and_determinism(blob_data):
    cfg = TrainConfig(epochs=1, learning_rate=0.1, batch_size=7, seed=4)
    y = one_hot(blob_data.labels, 2)
    m1, h1 = train(init_model(2, 3, 2, 1), blob_data, y, cfg)
    m2, h2 = train(init_model(2, 3, 2, 1), blob_data, y, cfg)
    assert h1.num_epochs == 1
    assert np.array_equal(h1.logits, h2.logits)
    assert np.array_equal(m1.flat(), m2.flat())


def test_full_batch_training_is_permutation_invariant(blob_data):
    perm = np.random.default_rng(9).permutation(len(blob_data))
    permuted = blob_data.subset(perm)
    cfg = TrainConfig(epochs=5, learning_rate=0.3, batch_size=len(blob_data), seed=2)
    m1, _ = train(init_model(2, 0, 2, 5), blob_data, one_hot(blob_data.labels, 2), cfg)
    m2, _ = train(init_model(2, 0, 2, 5), permuted, one_hot(permuted.labels, 2), cfg)
    l1 = dataset_loss(m1, blob_data, one_hot(blob_data.labels, 2))
    l2 = dataset_loss(m2, permuted, one_hot(permuted.labels, 2))
    assert abs(l1 - l2) < 1e-10


def test_targets_by_id_mapping(blob_data):
    y = one_hot(blob_data.labels, 2)
    mapping = {i: row for i, row in zip(reversed(blob_data.ids), y[::-1])}
    cfg = TrainConfig(epochs=2, learning_rate=0.1, batch_size=10, seed=0)
    _, h1 = train(init_model(2, 0, 2, 0), blob_data, y, cfg)
    _, h2 = train(init_model(2, 0, 2, 0), blob_data, mapping, cfg)
    assert np.array_equal(h1.logits, h2.logits)
    with pytest.raises(ValidationError):
        train(init_model(2, 0, 2, 0), blob_data, {"b0": y[0]}, cfg)


def test_non_finite_loss_aborts_with_location():
    # identical huge features with conflicting labels: the gradient never vanishes
    ids = ["a", "b", "c", "d"]
    data = Dataset.from_arrays(ids, np.full((4, 1), 1e300), [0, 1, 0, 1], ids, 2)
    cfg = TrainConfig(epochs=3, learning_rate=1e10, batch_size=4, seed=0)
    with pytest.raises(NumericalError, match=r"epoch \d+, batch \d+"):
        train(init_model(1, 0, 2, 0), data, one_hot(data.labels, 2), cfg)


@pytest.mark.parametrize("kwargs", [dict(epochs=0), dict(learning_rate=0.0), dict(batch_size=0), dict(loss="hinge")])
def test_train_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_dataset_and_model_dims_must_agree(blob_data):
    with pytest.raises(ValidationError):
        train(init_model(3, 0, 2, 0), blob_data, one_hot(blob_data.labels, 2), TrainConfig())
    empty = Dataset((), 2)
    with pytest.raises(ValidationError):
        train(init_model(1, 0, 2, 0), empty, np.zeros((0, 2)), TrainConfig())

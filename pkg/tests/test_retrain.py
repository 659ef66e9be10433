import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rt4ucp.classifier import TrainConfig, softmax
from rt4ucp.data_model import Dataset, Instance, PredictionHistory, ValidationError
from rt4ucp.retrain import form_pseudo_labels, rt4u_train
from rt4ucp.synthdata import QuadrantGenConfig, generate

from conftest import blobs


def scalar_softmax(row):
    """Plain-Python softmax used as an independent oracle."""
    m = max(row)
    e = [math.exp(v - m) for v in row]
    s = sum(e)
    return [v / s for v in e]


def test_single_epoch_is_plain_softmax():
    z = np.array([[[0.3, -1.2, 2.0]], [[5.0, 5.0, -3.0]]])
    pl = form_pseudo_labels(PredictionHistory(("a", "b"), z))
    assert np.array_equal(pl.targets, softmax(z[:, 0, :]))
    assert pl.num_epochs == 1 and pl.normalization == "mean"


def test_two_opposite_epochs_average_to_uniform():
    z = np.array([[[800.0, -800.0], [-800.0, 800.0]]])
    pl = form_pseudo_labels(PredictionHistory(("a",), z))
    assert np.allclose(pl.targets[0], [0.5, 0.5], atol=1e-15)


def test_three_epoch_mean_matches_brute_force():
    rng = np.random.default_rng(42)
    z = rng.standard_normal((6, 3, 3)) * 2
    pl = form_pseudo_labels(PredictionHistory(tuple("abcdef"), z))
    for i in range(6):
        rows = [scalar_softmax(z[i, t].tolist()) for t in range(3)]
        brute = [sum(r[k] for r in rows) / 3 for k in range(3)]
        assert np.allclose(pl.targets[i], brute, atol=1e-12, rtol=0)


def test_constant_history_reproduces_prediction_exactly():
    rng = np.random.default_rng(0)
    for t in (1, 2, 3, 7, 30):
        row = rng.standard_normal(5) * 3
        z = np.tile(row, (1, t, 1))
        pl = form_pseudo_labels(PredictionHistory(("x",), z))
        assert np.array_equal(pl.targets[0], softmax(z)[0, 0])


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 6), st.integers(2, 6)),
              elements=st.floats(-60, 60)))
def test_pseudo_labels_are_distributions(z):
    ids = tuple(f"i{n}" for n in range(z.shape[0]))
    pl = form_pseudo_labels(PredictionHistory(ids, z))
    assert np.all(pl.targets >= 0) and np.all(pl.targets <= 1)
    assert np.allclose(pl.targets.sum(axis=1), 1.0, atol=1e-9, rtol=0)


def test_order_invariance():
    rng = np.random.default_rng(3)
    z = rng.standard_normal((5, 4, 3))
    ids = tuple("abcde")
    perm = [3, 0, 4, 1, 2]
    a = form_pseudo_labels(PredictionHistory(ids, z)).as_mapping()
    b = form_pseudo_labels(PredictionHistory(tuple(ids[p] for p in perm), z[perm])).as_mapping()
    for i in ids:
        assert np.array_equal(a[i], b[i])


def test_consistently_correct_instances_keep_their_label():
    rng = np.random.default_rng(7)
    for _ in range(200):
        k, t = int(rng.integers(2, 6)), int(rng.integers(1, 8))
        y = int(rng.integers(k))
        z = rng.standard_normal((t, k))
        z[:, y] = z.max(axis=1) + rng.random(t) + 1e-3
        pl = form_pseudo_labels(PredictionHistory(("a",), z[None]))
        assert pl.targets[0].argmax() == y


def test_empty_history_rejected():
    with pytest.raises(ValidationError):
        form_pseudo_labels(PredictionHistory((), np.zeros((0, 2, 3))))


def test_rt4u_is_deterministic():
    data = blobs(n_per_class=20, num_classes=3, dim=3, spread=1.5)
    cfg = TrainConfig(epochs=4, learning_rate=0.2, batch_size=8, seed=9)
    a = rt4u_train(data, cfg)
    b = rt4u_train(data, cfg)
    assert np.array_equal(a.model.flat(), b.model.flat())
    assert np.array_equal(a.pseudo_labels.targets, b.pseudo_labels.targets)
    # round 2 starts from different parameters than round 1
    assert not np.array_equal(a.model.flat(), a.round1_model.flat())


def test_separable_data_gives_confident_pseudo_labels():
    data = blobs(n_per_class=50, num_classes=3, dim=3, spread=0.3)
    res = rt4u_train(data, TrainConfig(epochs=30, learning_rate=0.5, batch_size=16, seed=0))
    assert res.history.num_epochs == 30
    assert res.pseudo_labels.targets.max(axis=1).mean() >= 0.9
    assert np.array_equal(res.pseudo_labels.targets.argmax(axis=1), data.labels)


def test_noise_slices_get_higher_entropy_pseudo_labels():
    data = generate(QuadrantGenConfig(n_studies=150, slices_per_study=4, num_classes=3, num_features=8,
                                      informative_fraction=0.5, class_separation=6.0, noise_sigma=1.0, seed=1))
    res = rt4u_train(data, TrainConfig(epochs=30, learning_rate=0.1, batch_size=16, seed=1))
    p = res.pseudo_labels.targets
    entropy = -(p * np.log(p)).sum(axis=1)
    informative = np.array(data.informative)
    assert np.all(entropy[~informative] > np.median(entropy[informative]))


def test_missing_class_in_training_split_rejected():
    d = Dataset((Instance("a", (0.0,), 0, "s"), Instance("b", (1.0,), 0, "t")), 2)
    with pytest.raises(ValidationError, match="class"):
        rt4u_train(d, TrainConfig())

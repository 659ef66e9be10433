import numpy as np
import pytest

from rt4ucp import formats as fm
from rt4ucp.classifier import softmax
from rt4ucp.conformal import PredictionSet, calibrate, conformal_score, quantile_rank, set_mask
from rt4ucp.data_model import ValidationError
from rt4ucp.metrics import (
    balanced_accuracy,
    balanced_coverage,
    coverage,
    is_ordinal,
    mean_set_size,
    ordinality_fraction,
    run_trials,
)


def ps(*members):
    return PredictionSet(tuple(members), 0.5)


def test_balanced_accuracy_examples():
    assert balanced_accuracy([0, 1, 2], [0, 1, 2], 3) == 1.0
    assert balanced_accuracy([0, 0, 0, 0], [0, 0, 1, 1], 2) == 0.5
    assert balanced_accuracy([0, 0], [0, 0], 2) == 1.0
    with pytest.raises(ValidationError):
        balanced_accuracy([], [], 2)


def test_balanced_coverage_examples():
    assert balanced_coverage([ps(0, 1), ps(0, 1)], [0, 1], 2) == 1.0
    assert balanced_coverage([ps(), ps()], [0, 1], 2) == 0.0
    sets = [ps(0), ps(1), ps(1), ps(0, 1)]
    assert balanced_coverage(sets, [0, 0, 1, 1], 2) == 0.75
    assert coverage(sets, [0, 0, 1, 1], 2) == 0.75
    with pytest.raises(ValidationError):
        balanced_coverage([], [], 2)


def test_mean_set_size_examples():
    assert mean_set_size([ps(0), ps(0, 1)]) == 1.5
    assert mean_set_size([ps(2), ps(0), ps(1)]) == 1.0
    # an uninformative calibrated model on 10 classes only ever returns full sets
    p = np.full((50, 10), 0.1)
    cal = calibrate(p, np.arange(50) % 10, 0.05)
    assert mean_set_size(set_mask(p, cal)) == 10.0
    with pytest.raises(ValidationError):
        mean_set_size([])


def test_ordinality():
    assert is_ordinal((1, 2, 3))
    assert not is_ordinal((0, 2))
    assert is_ordinal(()) and is_ordinal((2,))
    assert ordinality_fraction([ps(1, 2, 3), ps(0, 2), ps(), ps(2)]) == 0.75
    mask = np.array([[True, False, True], [False, True, True]])
    assert ordinality_fraction(mask) == 0.5


def test_metrics_invariant_to_permutation_and_relabeling():
    rng = np.random.default_rng(0)
    k = 4
    truth = rng.integers(0, k, 300)
    pred = np.where(rng.random(300) < 0.6, truth, rng.integers(0, k, 300))
    mask = rng.random((300, k)) < 0.5
    perm = rng.permutation(300)
    relabel = np.array([2, 0, 3, 1])
    base_acc = balanced_accuracy(pred, truth, k)
    base_cov = balanced_coverage(mask, truth, k)
    assert balanced_accuracy(pred[perm], truth[perm], k) == pytest.approx(base_acc, abs=1e-12)
    assert balanced_coverage(mask[perm], truth[perm], k) == pytest.approx(base_cov, abs=1e-12)
    new_mask = np.zeros_like(mask)
    new_mask[:, relabel] = mask
    assert balanced_accuracy(relabel[pred], relabel[truth], k) == pytest.approx(base_acc, abs=1e-12)
    assert balanced_coverage(new_mask, relabel[truth], k) == pytest.approx(base_cov, abs=1e-12)


def test_calibration_self_consistency():
    rng = np.random.default_rng(1)
    for n in (5, 19, 50, 200):
        p = softmax(rng.standard_normal((n, 3)))
        y = rng.integers(0, 3, n)
        for alpha in (0.05, 0.1, 0.2):
            cal = calibrate(p, y, alpha)
            cov = coverage(set_mask(p, cal), y, 3)
            k = quantile_rank(n, alpha)
            assert cov >= min(k, n) / n - 1 / n


def _pool(n=400, k=3, seed=0):
    rng = np.random.default_rng(seed)
    p = softmax(rng.standard_normal((n, k)) * 2)
    y = (rng.random((n, 1)) > p.cumsum(axis=1)).sum(axis=1)
    return p, y


def test_single_trial_medians_equal_values():
    p, y = _pool()
    rep = run_trials(p, y, 0.1, n_trials=1, seed=3)
    assert rep.median_bcov == rep.bcov[0] and rep.median_set_size == rep.mean_set_size[0]
    # recompute the single trial by hand
    perm = np.random.Generator(np.random.PCG64(np.random.SeedSequence(3, spawn_key=(11, 0)))).permutation(400)
    cal = calibrate(p[perm[:200]], y[perm[:200]], 0.1)
    m = set_mask(p[perm[200:]], cal)
    assert rep.mean_set_size[0] == m.sum(axis=1).mean()
    assert rep.median_bcov == balanced_coverage(m, y[perm[200:]], 3)


def test_trials_are_reproducible_and_seed_sensitive():
    p, y = _pool()
    a = run_trials(p, y, 0.1, n_trials=20, seed=5)
    b = run_trials(p, y, 0.1, n_trials=20, seed=5)
    c = run_trials(p, y, 0.1, n_trials=20, seed=6)
    assert np.array_equal(a.bcov, b.bcov) and np.array_equal(a.mean_set_size, b.mean_set_size)
    assert not np.array_equal(a.bcov, c.bcov)


def test_trial_i_depends_only_on_its_index():
    p, y = _pool()
    short = run_trials(p, y, 0.1, n_trials=5, seed=2)
    long = run_trials(p, y, 0.1, n_trials=12, seed=2)
    assert np.array_equal(short.bcov, long.bcov[:5])


def test_trials_median_bcov_near_target():
    p, y = _pool(n=1000, seed=4)
    rep = run_trials(p, y, 0.1, n_trials=100, cal_fraction=0.5, seed=0)
    assert 0.88 <= rep.median_bcov <= 0.92


def test_fixed_test_resample_mode():
    p, y = _pool(n=600)
    rep = run_trials(p[:300], y[:300], 0.1, n_trials=10, seed=0, resample="cal",
                     test_probs=p[300:], test_labels=y[300:])
    assert rep.n_cal == 150 and rep.n_eval == 300
    with pytest.raises(ValidationError):
        run_trials(p, y, 0.1, resample="cal")


def test_trial_argument_checks():
    p, y = _pool(n=10)
    with pytest.raises(ValueError):
        run_trials(p, y, 0.1, cal_fraction=1.0)
    with pytest.raises(ValueError):
        run_trials(p, y, 0.1, cal_fraction=0.0)
    with pytest.raises(ValidationError):
        run_trials(p[:1], y[:1], 0.1)


def test_medians_recomputed_from_exported_csv(tmp_path):
    p, y = _pool()
    rep = run_trials(p, y, 0.1, n_trials=31, seed=1)
    path = tmp_path / "trials.csv"
    fm.write_trials_csv(path, rep, fm.trailer(1))
    bcov, size = fm.read_trials_csv(path)
    assert np.median(bcov) == rep.median_bcov
    assert np.median(size) == rep.median_set_size


def test_conformal_score_vectorized_matches_scalar():
    p, y = _pool(n=20)
    vec = conformal_score(p, y)
    assert all(vec[i] == conformal_score(p[i], y[i]) for i in range(20))

import json
import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eoselm import jaya
from eoselm.errors import ConfigurationError, InputError
from eoselm.featsel import (
    ClassificationTable,
    FitnessCache,
    brute_force_best_subset,
    kfrs_certainty,
    kfrs_criterion,
    kfrs_dependency,
    select_features,
    subset_fitness,
    write_selection_report,
)


def parity_table(seed, n=60, start=0, d=10):
    """Labels are the parity of three binary features; the rest is uniform noise."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n, 3))
    y = np.where(bits.sum(1) % 2 == 1, 1, -1)
    X = rng.uniform(0, 1, size=(n, d))
    X[:, start : start + 3] = np.clip(0.1 + 0.8 * bits + rng.normal(scale=0.03, size=(n, 3)), 0, 1)
    return ClassificationTable(X, y)


def random_table(seed, n=20, d=4):
    rng = np.random.default_rng(seed)
    y = np.tile([1, -1], n // 2)
    return ClassificationTable(rng.uniform(size=(n, d)), y)


def naive_dependency(X, y, cols, sigma):
    total = 0.0
    for i in range(len(y)):
        best = math.inf
        for j in range(len(y)):
            if y[j] != y[i]:
                d2 = sum((X[i, c] - X[j, c]) ** 2 for c in cols)
                best = min(best, 1.0 - math.exp(-d2 / (2 * sigma**2)))
        total += best
    return total / len(y)


def test_table_validation():
    with pytest.raises(InputError):
        ClassificationTable(np.array([[0.5]]), np.array([1]))
    with pytest.raises(InputError):
        ClassificationTable(np.array([[0.1], [0.2]]), np.array([1, 1]))
    with pytest.raises(InputError):
        ClassificationTable(np.array([[0.1], [1.5]]), np.array([1, -1]))
    t = ClassificationTable(np.array([[0.1], [0.2]]), np.array([1, -1]))
    assert t.names == ("f1",)


def test_indistinguishable_pair_has_zero_dependency():
    t = ClassificationTable(np.array([[0.3, 0.7], [0.3, 0.7]]), np.array([1, -1]))
    assert kfrs_dependency(t, [0, 1]) == 0.0
    assert kfrs_criterion(t, [0, 1]) == 0.0


def test_separated_clusters_small_sigma():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.uniform(0, 0.1, (10, 2)), rng.uniform(0.9, 1, (10, 2))])
    t = ClassificationTable(X, np.repeat([1, -1], 10))
    assert kfrs_dependency(t, [0, 1], sigma=0.05) == pytest.approx(1.0, abs=1e-12)
    assert kfrs_criterion(t, [0, 1], sigma=0.05) == pytest.approx(1.0, abs=1e-12)


def test_empty_subset_and_bad_sigma_rejected():
    t = random_table(0)
    with pytest.raises(ConfigurationError):
        kfrs_dependency(t, [])
    with pytest.raises(ConfigurationError):
        kfrs_dependency(t, np.zeros(4, dtype=bool))
    with pytest.raises(ConfigurationError):
        kfrs_dependency(t, [0], sigma=0.0)


@pytest.mark.parametrize("cols", [[0], [1, 3], [0, 1, 2, 3]])
def test_dependency_matches_double_loop(cols):
    t = random_table(1)
    assert abs(kfrs_dependency(t, cols, 0.2) - naive_dependency(t.X, t.y, cols, 0.2)) <= 1e-12


def test_certainty_surrogate_equals_dependency():
    # min(1 - k) over opposite-class samples is 1 - max k over the same set
    t = random_table(2, n=30, d=5)
    for cols in ([0], [1, 2], [0, 2, 4]):
        assert kfrs_certainty(t, cols) == pytest.approx(kfrs_dependency(t, cols), abs=1e-15)


def test_informative_half_beats_noise_half():
    t = parity_table(3, n=60, d=6)
    assert kfrs_criterion(t, [0, 1, 2]) >= kfrs_criterion(t, [3, 4, 5])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), sigma=st.floats(0.01, 2.0))
def test_values_in_unit_interval(seed, sigma):
    t = random_table(seed, n=12, d=3)
    for cols in ([0], [0, 2], [0, 1, 2]):
        assert 0.0 <= kfrs_dependency(t, cols, sigma) <= 1.0
        assert 0.0 <= kfrs_criterion(t, cols, sigma) <= 1.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_sample_permutation_invariance(seed):
    t = random_table(seed % 97, n=16, d=3)
    perm = np.random.default_rng(seed).permutation(16)
    tp = ClassificationTable(t.X[perm], t.y[perm])
    assert kfrs_criterion(tp, [0, 2]) == kfrs_criterion(t, [0, 2])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), flip=st.integers(0, 19))
def test_label_noise_never_raises_dependency(seed, flip):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.uniform(0, 0.2, (10, 2)), rng.uniform(0.8, 1, (10, 2))])
    y = np.repeat([1, -1], 10)
    noisy = y.copy()
    noisy[flip] *= -1
    clean = kfrs_dependency(ClassificationTable(X, y), [0, 1])
    assert kfrs_dependency(ClassificationTable(X, noisy), [0, 1]) <= clean


def test_duplicate_column_is_rescaled_sigma():
    t = random_table(4, n=20, d=3)
    dup = ClassificationTable(np.column_stack([t.X, t.X[:, 0]]), t.y)
    sigma = 0.2
    g_pair = kfrs_criterion(dup, [0, 3], sigma)
    # two identical coordinates double |dx|^2, which is the single coordinate at sigma / sqrt(2)
    assert g_pair == pytest.approx(kfrs_criterion(t, [0], sigma / math.sqrt(2)), abs=1e-14)
    f_single = subset_fitness(dup, [True, False, False, False], sigma)
    f_pair = subset_fitness(dup, [True, False, False, True], sigma)
    assert f_pair.dim_penalty - f_single.dim_penalty == pytest.approx(0.1 / 4)
    assert f_pair.total == pytest.approx(-g_pair + f_pair.dim_penalty)


def test_empty_mask_scores_infinity():
    t = random_table(5)
    assert subset_fitness(t, np.zeros(4, dtype=bool)).total == math.inf


def test_cache_hits_and_threads():
    t = random_table(6, n=20, d=6)
    cache = FitnessCache(t)
    masks = [np.array([(c >> i) & 1 for i in range(6)], dtype=bool) for c in range(1, 64)]

    def work():
        for m in masks:
            assert cache(m).total == subset_fitness(t, m).total

    threads = [threading.Thread(target=work) for _ in range(4)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert len(cache) == 63


def test_brute_force_single_feature():
    t = ClassificationTable(np.array([[0.1], [0.9]]), np.array([1, -1]))
    res = brute_force_best_subset(t)
    assert res.indices == [0]


def test_brute_force_refuses_wide_tables():
    t = ClassificationTable(np.random.default_rng(0).uniform(size=(4, 13)), np.array([1, -1, 1, -1]))
    with pytest.raises(ConfigurationError):
        brute_force_best_subset(t)


def test_brute_force_finds_informative_block():
    res = brute_force_best_subset(parity_table(0, start=4))
    assert res.indices == [4, 5, 6]


def test_brute_force_agrees_with_fitness_function():
    t = parity_table(1)
    res = brute_force_best_subset(t)
    assert res.fitness.total == subset_fitness(t, res.mask).total


@pytest.mark.parametrize("seed", range(4))
def test_select_never_beats_oracle(seed):
    t = parity_table(seed)
    oracle = brute_force_best_subset(t)
    res = select_features(t, jaya.binjaya_config(pop_size=10, max_iters=20, seed=seed))
    assert res.mask.any()
    assert res.fitness.total >= oracle.fitness.total


def test_select_single_separating_feature_w0():
    rng = np.random.default_rng(7)
    n = 40
    y = np.repeat([1, -1], n // 2)
    X = rng.uniform(size=(n, 33))
    X[:, 0] = np.where(y > 0, 0.05, 0.95) + rng.uniform(-0.03, 0.03, n)
    t = ClassificationTable(X, y)
    res = select_features(t, jaya.binjaya_config(pop_size=20, max_iters=60, seed=0), w=0.0)
    # brute force on a 10-feature reduction, at the size that select_features returned
    small = ClassificationTable(X[:, :10], y)
    k = min(len(res.indices), 10)
    best_at_k = max(
        kfrs_criterion(small, np.flatnonzero(m))
        for m in (np.array([(c >> i) & 1 for i in range(10)], bool) for c in range(1, 1024))
        if m.sum() == k
    )
    assert res.fitness.g_C >= best_at_k - 1e-6


def test_select_falls_back_when_everything_decodes_empty(monkeypatch):
    t = random_table(8, d=5)
    monkeypatch.setattr(jaya, "angle_modulate", lambda params, n: np.zeros(n, dtype=bool))
    res = select_features(t, jaya.binjaya_config(pop_size=4, max_iters=3, seed=0))
    assert res.mask.sum() == 1 and math.isfinite(res.fitness.total)


def test_report(tmp_path):
    t = parity_table(2)
    res = select_features(t, jaya.binjaya_config(pop_size=10, max_iters=10, seed=0))
    path = tmp_path / "subset.json"
    write_selection_report(res, path, trace_path="trace.csv")
    doc = json.loads(path.read_text())
    assert doc["features"] == res.features and doc["trace"] == "trace.csv"
    assert doc["fitness"] == pytest.approx(res.fitness.total)

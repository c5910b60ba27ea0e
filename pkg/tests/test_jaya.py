import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eoselm.errors import ConfigurationError
from eoselm.jaya import (
    AngleModParams,
    JayaConfig,
    angle_modulate,
    binjaya_config,
    binjaya_run,
    jaya_run,
    jaya_step,
    write_trace,
)


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


SPHERE_CFG = JayaConfig(pop_size=20, dims=10, lower=-5, upper=5, max_iters=250, seed=42)


def test_identical_nonnegative_population_does_not_move():
    X = np.tile([0.5, 2.0, 0.0], (5, 1))
    f = np.array([sphere(x) for x in X])
    rng = np.random.default_rng(0)
    X2, f2 = jaya_step(X, f, sphere, rng, np.full(3, -5.0), np.full(3, 5.0))
    assert np.array_equal(X2, X) and np.array_equal(f2, f)


def test_zero_random_numbers_is_identity():
    rng = np.random.default_rng(1)
    X = rng.uniform(-3, 3, size=(6, 4))
    f = np.array([sphere(x) for x in X])
    X2, _ = jaya_step(X, f, sphere, rng, -5 * np.ones(4), 5 * np.ones(4), r=(np.zeros(4), np.zeros(4)))
    assert np.array_equal(X2, X)


def test_step_never_worsens_population_best_and_respects_bounds():
    rng = np.random.default_rng(2)
    lo, hi = -np.ones(3), np.ones(3)
    X = rng.uniform(lo, hi, size=(8, 3))
    f = np.array([sphere(x - 0.9) for x in X])
    for _ in range(30):
        X_new, f_new = jaya_step(X, f, lambda x: sphere(x - 0.9), rng, lo, hi)
        assert f_new.min() <= f.min()
        assert np.all(f_new <= f)
        assert np.all((X_new >= lo) & (X_new <= hi))
        X, f = X_new, f_new


def test_non_finite_objective_is_rejected():
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(4, 2))
    f = np.array([sphere(x) for x in X])
    X2, f2 = jaya_step(X, f, lambda x: np.nan, rng, -np.ones(2), np.ones(2))
    assert np.array_equal(X2, X) and np.array_equal(f2, f)


def test_vectorized_objective_matches_scalar():
    vec = jaya_run(SPHERE_CFG, lambda X: np.sum(X**2, axis=1), vectorized=True)
    assert vec.best.f == pytest.approx(jaya_run(SPHERE_CFG, sphere).best.f, rel=1e-9)
    assert vec.iterations == 250


def test_sphere_regression_anchor():
    res = jaya_run(SPHERE_CFG, sphere)
    assert res.best.f <= 1e-3
    # seed-locked value recorded from this implementation
    assert res.best.f == pytest.approx(4.977988423647431e-08, rel=1e-6)
    assert res.iterations == 250


def test_max_iters_zero_returns_initial_best():
    cfg = JayaConfig(pop_size=7, dims=2, lower=-1, upper=1, max_iters=0, seed=5)
    res = jaya_run(cfg, sphere)
    X0 = np.random.default_rng(5).uniform(-1, 1, size=(7, 2))
    f0 = [sphere(x) for x in X0]
    assert res.history == []
    assert res.best.f == min(f0)
    assert np.array_equal(res.best.x, X0[int(np.argmin(f0))])


def test_one_dimensional_quadratic():
    cfg = JayaConfig(pop_size=20, dims=1, lower=-10, upper=10, max_iters=100, seed=0)
    res = jaya_run(cfg, lambda x: (x[0] - 3.0) ** 2)
    assert abs(res.best.x[0] - 3.0) <= 1e-2


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_history_monotone(seed):
    res = jaya_run(JayaConfig(pop_size=10, dims=3, lower=-5, upper=5, max_iters=40, seed=seed), sphere)
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))


def test_target_tolerance_stops_early():
    cfg = JayaConfig(pop_size=20, dims=2, lower=-5, upper=5, max_iters=500, seed=1, target_tolerance=1e-2)
    res = jaya_run(cfg, sphere)
    assert res.iterations < 500 and res.best.f <= 1e-2


def test_config_validation():
    with pytest.raises(ConfigurationError):
        JayaConfig(pop_size=1)
    with pytest.raises(ConfigurationError):
        JayaConfig(dims=2, lower=[0, 1], upper=[1, 1])


def test_trace_csv(tmp_path):
    res = jaya_run(JayaConfig(pop_size=5, dims=2, max_iters=4, seed=0), sphere)
    path = tmp_path / "trace.csv"
    write_trace(res, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iter", "best_f", "mean_f", "worst_f"]
    assert len(rows) == 1 + 1 + 4
    for r in rows[1:]:
        assert float(r[1]) <= float(r[2]) <= float(r[3])


# -- angle modulation --------------------------------------------------------


@pytest.mark.parametrize(
    "params, expected",
    [((0, 0, 0, 1), True), ((0, 0, 0, -1), False), ((0, 0, 0, 0), False)],
)
def test_angle_modulate_constant_functions(params, expected):
    bits = angle_modulate(params, 12)
    assert bits.shape == (12,) and np.all(bits == expected)


def test_angle_modulate_matches_formula():
    o, p, r, s = 0.1, 0.8, -0.3, 0.05
    bits = angle_modulate(AngleModParams(o, p, r, s), 16)
    for j in range(16):
        y = j / 16
        g = np.sin(2 * np.pi * (y - o) * p * np.cos(2 * np.pi * r * (y - o))) + s
        assert bits[j] == (g > 0)


@given(st.tuples(*[st.floats(-1, 1)] * 4), st.integers(1, 40))
def test_angle_modulate_is_pure(params, n):
    assert np.array_equal(angle_modulate(params, n), angle_modulate(params, n))


def test_binjaya_count_of_ones():
    res = binjaya_run(binjaya_config(pop_size=20, max_iters=50, seed=0), lambda b: float(b.sum()), 8)
    assert res.f == 0.0 and not res.bits.any()


def test_binjaya_hamming_not_worse_than_grid_oracle():
    target = np.array([1, 0, 1, 0, 1, 0, 1, 0, 1, 0], dtype=bool)

    def hamming(bits):
        return float(np.sum(bits != target))

    grid = np.linspace(-1, 1, 9)
    oracle = min(hamming(angle_modulate(p, 10)) for p in itertools.product(grid, repeat=4))
    res = binjaya_run(binjaya_config(pop_size=30, max_iters=150, seed=3), hamming, 10)
    assert res.f <= oracle
    assert hamming(res.bits) == res.f


def test_binjaya_constant_objective_runs_to_max_iters():
    res = binjaya_run(binjaya_config(pop_size=6, max_iters=12, seed=0), lambda b: 1.0, 5)
    assert res.f == 1.0 and len(res.history) == 12 and res.bits.shape == (5,)


def test_binjaya_deterministic():
    cfg = binjaya_config(pop_size=10, max_iters=20, seed=9)
    f = lambda b: float(np.sum(b[::2]) - np.sum(b[1::2]))
    a, b = binjaya_run(cfg, f, 9), binjaya_run(cfg, f, 9)
    assert np.array_equal(a.bits, b.bits) and a.params == b.params


def test_binjaya_requires_four_dims():
    with pytest.raises(ConfigurationError):
        binjaya_run(JayaConfig(dims=3), lambda b: 0.0, 4)

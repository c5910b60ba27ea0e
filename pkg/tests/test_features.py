import json
import math
from dataclasses import dataclass, replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eoselm.errors import ExtractionError, InputError
from eoselm.features import (
    FEATURE_NAMES,
    FEATURE_TABLE,
    AnchorTimes,
    coi_frame,
    extract_features,
    feature_dictionary,
    fit_scaling,
    kinetic_energy,
    normalize_kb,
    system_impact,
)
from eoselm.powersim.dynamics import Trajectory, prepare, save_trajectory, simulate, simulate_batch
from eoselm.powersim.network import Contingency, load_network

WS = 2 * math.pi * 60


def faulted_trajectory(branch=6, cycles=8, T=1.0):
    return simulate(load_network("wscc9"), Contingency(branch, 0.0, 0.2, 0.2 + cycles / 60), T=T)


def reread_features(path):
    """Straight-line recomputation of every feature from the saved file."""
    doc = json.loads(open(path).read())
    t, dl, om, pe, pm, M = doc["t"], doc["delta"], doc["omega"], doc["pe"], doc["pm"], doc["M"]
    n = len(pm)

    def at(time):
        for k, tk in enumerate(t):
            if abs(tk - time) < 1e-9:
                return k
        raise AssertionError(time)

    def frame(k):
        msum = sum(M)
        dc = sum(M[i] * dl[k][i] for i in range(n)) / msum
        wc = sum(M[i] * om[k][i] for i in range(n)) / msum
        return [dl[k][i] - dc for i in range(n)], [om[k][i] - wc for i in range(n)]

    def argmax(vals):
        best = 0
        for i in range(1, len(vals)):
            if vals[i] > vals[best]:
                best = i
        return best

    def block(k, order):
        ang, spd = frame(k)
        ke = [0.5 * M[i] * spd[i] ** 2 for i in range(n)]
        ext = argmax([abs(a) for a in ang])
        vals = {
            "impact": sum(pm[i] - pe[k][i] for i in range(n)),
            "angle_of_extreme": ang[ext],
            "ke_of_max_angle": ke[argmax(ang)],
            "angle_of_max_ke": ang[argmax(ke)],
            "max_ke": max(ke),
            "mean_ke": sum(ke) / n,
            "spread": max(dl[k]) - min(dl[k]),
            "speed_of_extreme": spd[ext],
        }
        return [vals[q] for q in order]

    tf, tc = doc["t_fault"], doc["t_clear"]
    k0 = at(tf)
    acc = [(pm[i] - pe[k0][i]) / M[i] for i in range(n)]
    ang0, _ = frame(k0)
    out = [sum(pm) / n, max(acc), ang0[argmax(acc)], sum(pm[i] - pe[k0][i] for i in range(n)) / n]
    out += block(at(tc), ["impact", "angle_of_extreme", "ke_of_max_angle", "angle_of_max_ke", "max_ke", "mean_ke", "spread", "speed_of_extreme"])
    out += block(at(tc + 3 / 60), ["impact", "max_ke", "mean_ke", "angle_of_extreme", "spread", "ke_of_max_angle", "speed_of_extreme"])
    out += block(at(tc + 6 / 60), ["impact", "max_ke", "mean_ke", "ke_of_max_angle", "angle_of_extreme", "spread", "speed_of_extreme"])
    out += block(at(tc + 9 / 60), ["impact", "ke_of_max_angle", "max_ke", "mean_ke", "angle_of_extreme", "spread", "speed_of_extreme"])
    return out


def test_table_layout():
    assert len(FEATURE_TABLE) == 33 and FEATURE_NAMES[0] == "Tz1" and FEATURE_NAMES[-1] == "Tz33"
    anchors = [s.anchor for s in FEATURE_TABLE]
    assert anchors.count("t_cl") == 8 and anchors.count("t_cl+3c") == 7
    assert anchors.count("t_cl+6c") == 7 and anchors.count("t_cl+9c") == 7


def test_coi_frame_identities():
    d_coi, d_rel, w_rel = coi_frame(np.full(4, 0.7), np.full(4, 2.0), np.array([1.0, 2, 3, 4]))
    assert np.allclose(d_rel, 0) and np.allclose(w_rel, 0) and d_coi == pytest.approx(0.7)
    _, d_rel, _ = coi_frame(np.array([0.3, -0.3]), np.zeros(2), np.ones(2))
    assert np.allclose(d_rel, [0.3, -0.3])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_coi_weighted_sum_zero(seed):
    rng = np.random.default_rng(seed)
    M = rng.uniform(0.01, 1, 5)
    _, d_rel, w_rel = coi_frame(rng.normal(size=5), rng.normal(size=5), M)
    assert abs(M @ d_rel) <= 1e-12 and abs(M @ w_rel) <= 1e-12


def test_kinetic_energy_arithmetic():
    assert np.all(kinetic_energy(np.ones(3), np.zeros(3)) == 0)
    assert kinetic_energy(2 * 3 / WS, 1.0) == pytest.approx(3 / WS)


def test_anchor_times_on_grid_and_increasing():
    traj = faulted_trajectory()
    a = list(AnchorTimes.for_trajectory(traj).as_dict().values())
    assert all(x < y for x, y in zip(a, a[1:]))
    for t in a:
        assert np.min(np.abs(traj.t - t)) <= 1e-9


def test_features_match_independent_reread(tmp_path):
    traj = faulted_trajectory()
    path = tmp_path / "traj.json"
    save_trajectory(traj, path)
    ours = extract_features(traj)
    theirs = np.array(reread_features(path))
    assert np.max(np.abs(ours - theirs)) <= 1e-9


def test_equilibrium_features():
    s = prepare(load_network("wscc9"), Contingency(5, 0.0, 0.2, 0.3))
    traj = simulate_batch([replace(s, Y_fault=s.Y_pre, Y_post=s.Y_pre)], T=1.0)[0]
    x = extract_features(traj)
    f = dict(zip(FEATURE_NAMES, x))
    for name in ("Tz2", "Tz4", "Tz5"):
        assert abs(f[name]) <= 1e-6
    for name in ("Tz7", "Tz9", "Tz10", "Tz14", "Tz15", "Tz18", "Tz21", "Tz22", "Tz23", "Tz28", "Tz29", "Tz30"):
        assert f[name] <= 1e-12
    _, d_rel, _ = coi_frame(traj.delta[0], traj.omega[0], traj.M)
    for name in ("Tz6", "Tz16", "Tz24", "Tz31"):
        assert f[name] == pytest.approx(d_rel[np.argmax(np.abs(d_rel))], abs=1e-6)


def test_symmetric_two_machine_spread():
    t = np.arange(0, 721) / 1200
    a = 0.4 * np.sin(3 * t)
    delta = np.column_stack([a, -a])
    z = np.zeros_like(delta)
    traj = Trajectory(t, delta, z, z, np.zeros(2), np.ones(2), 0.2, 0.3, 1 / 1200)
    x = extract_features(traj)
    k = traj.index_at(0.3)
    assert x[10] == pytest.approx(2 * abs(a[k]))


def test_system_impact_positive_during_fault():
    traj = faulted_trajectory()
    k = traj.index_at(traj.t_fault)
    assert system_impact(traj, traj.t_fault) > 0
    assert system_impact(traj, traj.t_fault) == pytest.approx(sum(traj.pm[i] - traj.pe[k, i] for i in range(3)))


def test_angle_shift_invariance():
    traj = faulted_trajectory()
    shifted = replace(traj, delta=traj.delta + 2.5)
    assert np.max(np.abs(extract_features(shifted) - extract_features(traj))) <= 1e-10


def test_extraction_is_pure():
    traj = faulted_trajectory()
    assert np.array_equal(extract_features(traj), extract_features(traj))


def test_short_horizon_names_missing_anchor():
    traj = simulate(load_network("wscc9"), Contingency(6, 0.0, 0.2, 0.3), T=0.35)
    with pytest.raises(ExtractionError, match="t_cl"):
        extract_features(traj)


def test_ties_resolve_to_lowest_index():
    t = np.arange(0, 721) / 1200
    delta = np.zeros((721, 3))
    omega = np.tile([1.0, -1.0, 0.0], (721, 1))
    z = np.zeros_like(delta)
    traj = Trajectory(t, delta, omega, z, np.zeros(3), np.ones(3), 0.2, 0.3, 1 / 1200)
    x = extract_features(traj)
    # machines 0 and 1 tie on |COI angle| and on kinetic energy: machine 0 wins
    assert x[11] == pytest.approx(1.0)


def test_feature_dictionary_lists_every_feature():
    doc = feature_dictionary()
    for name in FEATURE_NAMES:
        assert f"| {name} |" in doc


# -- normalization ----------------------------------------------------------------


@dataclass
class TinyKB:
    X: np.ndarray
    split: np.ndarray


def tiny_kb(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 4)) * [1, 10, 0.1, 0]
    X[:, 3] = 7.0
    return TinyKB(X, np.array(["train"] * 20 + ["test"] * 10))


def test_normalize_training_rows_unit_range():
    kb, sc = normalize_kb(tiny_kb())
    tr = kb.X[kb.split == "train"]
    assert np.allclose(tr[:, :3].min(axis=0), 0) and np.allclose(tr[:, :3].max(axis=0), 1)
    assert np.all(kb.X[:, 3] == 0.5) and sc.zero_range.tolist() == [False, False, False, True]
    te = kb.X[kb.split == "test"]
    assert te.min() >= -0.1 and te.max() <= 1.1


def test_renormalizing_is_identity():
    kb, _ = normalize_kb(tiny_kb(1))
    again, _ = normalize_kb(kb)
    assert np.allclose(again.X, kb.X, atol=1e-15)


def test_inverse_round_trip():
    raw = tiny_kb(2)
    sc = fit_scaling(raw.X[:20])
    assert np.max(np.abs(sc.inverse(sc.transform(raw.X)) - raw.X)) <= 1e-9


def test_normalize_needs_training_rows():
    kb = tiny_kb()
    with pytest.raises(InputError):
        normalize_kb(TinyKB(kb.X, np.array(["test"] * 30)))

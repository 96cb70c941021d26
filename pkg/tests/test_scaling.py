import numpy as np
import pytest

from conftest import binary_table, synthetic_curves
from teleport_transition.scaling import (ScalingDataset, bootstrap_collapse, collapse_points, collapse_residual,
                                         crossing_scan, fit_collapse, kt_fit_at_time, kt_form, kt_scan)

TRUE = (2.0, 2.0, 0.3)


def test_residual_minimal_at_truth():
    data = synthetic_curves(*TRUE)
    best = collapse_residual(data, *TRUE)
    assert best < 1e-4  # linear-interpolation error only
    for k in range(3):
        for f in (0.8, 1.2):
            p = list(TRUE)
            p[k] *= f
            assert collapse_residual(data, *p) > best


def test_single_size_rejected():
    data = synthetic_curves(sizes=(64,))
    with pytest.raises(ValueError):
        collapse_residual(data, *TRUE)
    with pytest.raises(ValueError):
        fit_collapse(synthetic_curves(sizes=(32, 64)))


def test_identity_limit_is_unscaled_mismatch():
    data = synthetic_curves(*TRUE, sizes=(32, 64))
    r = collapse_residual(data, 2.0, np.inf, 0.0, use_errors=False)
    t, y1, _ = data.curve(32)
    _, y2, _ = data.curve(64)
    w = np.exp(-0.5 * ((t - 2.0) / 40) ** 2)  # x stays (t - t_c) as nu -> inf
    assert np.isclose(r, np.sum(w * (y1 - y2) ** 2) / np.sum(w), rtol=1e-6)


def test_synthetic_recovery_with_noise():
    data = synthetic_curves(*TRUE, noise=0.01, seed=4)
    fit = fit_collapse(data, (1.8, 1.6, 0.2))
    for got, want in zip(fit.params, TRUE):
        assert abs(got - want) <= 0.05 * want, fit


def test_reordering_invariance():
    data = synthetic_curves(*TRUE, noise=0.01, seed=1)
    perm = np.random.default_rng(0).permutation(data.y.size)
    shuffled = ScalingDataset(data.N[perm], data.t[perm], data.y[perm], data.sem[perm])
    for p in [(2.0, 2.0, 0.3), (1.9, 2.4, 0.1)]:
        assert np.isclose(collapse_residual(data, *p), collapse_residual(shuffled, *p), rtol=1e-12)


def test_collapse_points_shape():
    data = synthetic_curves(*TRUE)
    fit = fit_collapse(data, TRUE, restarts=False)
    x, y, N = collapse_points(data, fit)
    assert x.shape == y.shape == N.shape == data.y.shape


def _bootstrap_data(n, seed=0):
    probs = {}
    for N in (16, 32, 64):
        for t in np.round(np.arange(1.0, 3.01, 0.25), 10):
            y = N ** (-0.3) * (1 + np.tanh(0.5 * (t - 2.0) * N ** 0.5 + 0.3))
            probs[(N, float(t))] = y / 2
    return ScalingDataset.from_table(binary_table(probs, n, seed))


def test_bootstrap_zero_noise_and_determinism():
    data = synthetic_curves(*TRUE, sizes=(32, 64, 128), times=np.arange(1.5, 2.51, 0.1))
    samples = {(int(N), float(t)): np.full(40, y) for N, t, y in zip(data.N, data.t, data.y)}
    data.samples = samples
    boot = bootstrap_collapse(data, n_boot=4, seed=3, initial_guess=TRUE)
    for k, v in boot.std.items():
        assert v < 1e-3 * abs(boot.mean[k]) + 1e-9
    again = bootstrap_collapse(data, n_boot=4, seed=3, initial_guess=TRUE)
    assert np.array_equal(boot.params, again.params)


def test_bootstrap_std_shrinks_with_trajectories():
    small = bootstrap_collapse(_bootstrap_data(400, 1), n_boot=24, seed=5, initial_guess=(2.0, 2.0, 0.3))
    large = bootstrap_collapse(_bootstrap_data(1600, 2), n_boot=24, seed=5, initial_guess=(2.0, 2.0, 0.3))
    ratio = small.std["t_c"] / large.std["t_c"]
    assert 1.2 < ratio < 3.5, ratio


def test_bootstrap_needs_samples():
    with pytest.raises(ValueError):
        bootstrap_collapse(synthetic_curves(), n_boot=2)


def test_kt_exact_recovery():
    N = np.array([32, 64, 128, 256, 512])
    fit = kt_fit_at_time(N, kt_form(N, 0.5, 1.0))
    assert abs(fit.a - 0.5) < 1e-6 and abs(fit.b - 1.0) < 1e-6
    assert fit.lse_over_variance < 1e-12


def test_kt_equal_means_rejected():
    with pytest.raises(ValueError):
        kt_fit_at_time([32, 64, 128], [0.4, 0.4, 0.4])


def test_kt_noise_ratio_small():
    N = np.array([32, 64, 128, 256, 512])
    y = kt_form(N, 0.5, 1.0) * (1 + 0.01 * np.random.default_rng(0).normal(size=N.size))
    assert kt_fit_at_time(N, y).lse_over_variance < 0.2


def test_kt_scan_picks_exact_slice():
    sizes = np.array([32, 64, 128, 256])
    rng = np.random.default_rng(1)
    Ns, ts, ys = [], [], []
    for t in np.round(np.arange(3.0, 5.01, 0.25), 10):
        y = kt_form(sizes, 0.5, 1.0) if t == 4.25 else 0.5 + 0.2 * rng.normal(size=sizes.size) * (t - 3)
        Ns += list(sizes)
        ts += [t] * sizes.size
        ys += list(y)
    scan = kt_scan(ScalingDataset(Ns, ts, ys, None))
    assert scan.t_c == 4.25


def test_kt_scan_featureless_data():
    Ns, ts, ys = [], [], []
    for t in np.arange(1.0, 3.01, 0.25):
        for N in (32, 64, 128):
            Ns.append(N)
            ts.append(t)
            ys.append(0.1 * t + 0.001 * np.log(N))
    scan = kt_scan(ScalingDataset(Ns, ts, ys, None))
    assert np.isfinite(scan.error) and scan.t_lo <= scan.t_c <= scan.t_hi


def _curves(fn, sizes=(16, 32, 64), sem=0.01):
    Ns, ts, ys = [], [], []
    for N in sizes:
        for t in np.round(np.arange(0.0, 4.01, 0.1), 10):
            Ns.append(N)
            ts.append(t)
            ys.append(fn(N, t))
    return ScalingDataset(Ns, ts, ys, np.full(len(ys), sem))


def test_crossings_identical_curves_none():
    found = crossing_scan(_curves(lambda N, t: np.tanh(t)))
    assert [c.t for c in found] == [None, None]


def test_crossings_located():
    found = crossing_scan(_curves(lambda N, t: 0.5 + 0.1 * np.log2(N) * (t - 2.0)))
    assert all(abs(c.t - 2.0) < 0.05 for c in found)


def test_crossing_hidden_in_noise_is_none():
    found = crossing_scan(_curves(lambda N, t: 0.5 + 1e-3 * np.log2(N) * (t - 2.0), sem=0.05))
    assert all(c.t is None for c in found)


def test_crossing_needs_two_sizes():
    with pytest.raises(ValueError):
        crossing_scan(_curves(np.hypot, sizes=(16,)))


def test_zero_error_points_do_not_disable_weighting():
    data = synthetic_curves(*TRUE, noise=0.01, seed=2)
    data.sem[:5] = 0.0
    with_zero = collapse_residual(data, *TRUE)
    unweighted = collapse_residual(data, *TRUE, use_errors=False)
    assert with_zero > 100 * unweighted  # still divided by variances ~ 1e-4

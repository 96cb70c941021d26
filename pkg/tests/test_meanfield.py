import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teleport_transition.meanfield import (BOUNDARY_FIELD, EffectiveCouplings, MfParams, analytic_haar_projector,
                                           block_magnetization, chain_magnetization, fit_beta, fit_delta,
                                           haar_projector_check, haar_unitaries, order_parameter_correlation,
                                           scan_critical_time, solve_self_consistency)
from teleport_transition.geometry import AllToAll
from teleport_transition.verify import chain_enumeration, enumerate_chain


def brute_chain(bond, fields):
    K = len(fields)
    num = np.zeros(K)
    Z = 0.0
    for s in itertools.product((1, -1), repeat=K):
        s = np.array(s)
        w = np.exp(bond * np.sum(s[:-1] * s[1:]) + np.dot(fields, s))
        Z += w
        num += w * s
    return num / Z


def test_chain_symmetry_and_single_spin():
    assert np.allclose(chain_magnetization(0.9, np.zeros(7)), 0)
    assert np.isclose(chain_magnetization(1.3, [0.4])[0], np.tanh(0.4), atol=1e-14)


def test_chain_two_spins_against_four_configurations():
    got = chain_magnetization(0.7, [0.3, 0.1])
    assert np.allclose(got, brute_chain(0.7, [0.3, 0.1]), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(K=st.integers(1, 12), bond=st.floats(-2, 4), seed=st.integers(0, 2**31))
def test_chain_matches_enumeration(K, bond, seed):
    fields = np.random.default_rng(seed).normal(0, 1, K)
    assert np.allclose(chain_magnetization(bond, fields), enumerate_chain(bond, fields), atol=1e-10)


def test_enumeration_helpers_agree():
    f = np.array([0.2, -0.5, 0.1, 0.7])
    assert np.allclose(enumerate_chain(0.4, f), brute_chain(0.4, f), atol=1e-13)
    assert chain_enumeration(10, 2, 0).passed


def test_block_solver_matches_spin_chain_at_strong_coupling():
    p = MfParams()
    rng = np.random.default_rng(0)
    bf = rng.normal(0, 1e-3, 6)
    m = p.N - 1
    ref = chain_magnetization(p.bond, np.repeat(bf, m)).reshape(-1, m).mean(axis=1)
    assert np.allclose(block_magnetization(p.bond, bf, m), ref, atol=1e-10)


def test_params_and_couplings():
    p = MfParams(N=101, dt=0.05)
    assert np.isclose(p.h, 2 * 0.05 / (5 * 100))
    assert np.isclose(p.bond, -np.log(p.h) / 2)
    assert np.isclose(p.j_zz, 2 * p.h)
    q = p.at_time(2.03)
    assert q.n_steps * q.dt == pytest.approx(2.03) and q.dt <= p.dt
    with pytest.raises(ValueError):
        MfParams(N=2, dt=2.0, t=2.0)  # h = 4/5 >= 1/2
    with pytest.raises(ValueError):
        MfParams(t=1.01, dt=0.02)
    c = EffectiveCouplings.from_geometry(AllToAll(6))
    assert np.isclose(np.triu(c.J, 1).sum(), 6) and (c.zz, c.yy, c.x) == (0.4, 0.1, 0.2)
    assert np.isclose(np.exp(BOUNDARY_FIELD), np.sqrt(1.5) - np.sqrt(0.5))


def test_disordered_below_and_ordered_above():
    low = solve_self_consistency(MfParams().at_time(1.0))
    assert low.converged and np.max(np.abs(low.psi)) < 1e-6
    high = solve_self_consistency(MfParams().at_time(3.0))
    assert high.converged and high.global_psi > 0.3
    finer = solve_self_consistency(MfParams(dt=0.01).at_time(3.0))
    assert abs(finer.global_psi - high.global_psi) < 1e-5


def test_zero_is_a_fixed_point():
    p = solve_self_consistency(MfParams().at_time(3.0), init=0.0)
    assert np.max(np.abs(p.psi)) < 1e-15


def test_field_breaks_symmetry():
    for t in (0.5, 1.5, 3.0):
        prof = solve_self_consistency(replace(MfParams(), h_z=0.1).at_time(t), init=0.0)
        assert prof.global_psi > 0
        assert order_parameter_correlation(prof) > 0


def test_order_parameter_correlation():
    assert order_parameter_correlation(solve_self_consistency(MfParams().at_time(1.5))) < 1e-10
    vals = [order_parameter_correlation(solve_self_consistency(MfParams().at_time(t))) for t in (2.2, 2.6, 3.0)]
    assert vals[0] > 0 and np.all(np.diff(vals) > 0)


def test_field_removes_transition():
    scan = scan_critical_time(replace(MfParams(N=100), h_z=0.1), np.arange(1.0, 3.01, 0.5))
    assert scan.t_c is None and not scan.has_transition and np.all(scan.psi > scan.eps)


def test_critical_time_stable_under_doubling_n():
    grid = np.arange(1.5, 2.51, 0.1)
    a = scan_critical_time(MfParams(N=100), grid, resolution=2e-3).t_c
    b = scan_critical_time(MfParams(N=200), grid, resolution=2e-3).t_c
    assert abs(a - b) / a < 0.01


def test_fit_beta_on_constructed_power_law():
    t = 2 + np.geomspace(1e-3, 0.4, 15)
    fit = fit_beta(t, (t - 2) ** 0.5, 2.0, window=0.5)
    assert abs(fit.value - 0.5) < 1e-10 and fit.sensitivity < 1e-10
    with pytest.raises(ValueError):
        fit_beta(t[:4], (t[:4] - 2) ** 0.5, 2.0)


def test_fit_beta_window_stability():
    t = 2 + np.geomspace(1e-3, 0.5, 20)
    psi = (t - 2) ** 0.5 * (1 + 0.3 * (t - 2))  # correction to scaling
    wide = fit_beta(t, psi, 2.0, window=0.5)
    narrow = fit_beta(t, psi, 2.0, window=0.1)
    assert abs(wide.value - narrow.value) <= wide.sensitivity + narrow.sensitivity + 1e-3


def test_fit_delta_on_constructed_power_law():
    h = np.geomspace(1e-4, 1e-1, 10)
    assert abs(fit_delta(h, h ** (1 / 3)).value - 3) < 1e-10
    with pytest.raises(ValueError):
        fit_delta([0.1, 0.2], [1, 2])


def test_haar_projector():
    P = analytic_haar_projector()
    assert np.max(np.abs(P @ P - P)) < 1e-12
    assert np.isclose(np.trace(P), 2)
    v = np.zeros(16)
    v[1] = 1.0  # |0001> is orthogonal to both |I> and |C>
    assert np.allclose(P @ v, 0)
    assert haar_projector_check(100_000, np.random.default_rng(0)) < 5e-3


def test_haar_unitaries_are_unitary():
    u = haar_unitaries(50, np.random.default_rng(1))
    assert np.allclose(np.einsum("nij,nkj->nik", u, u.conj()), np.eye(2))

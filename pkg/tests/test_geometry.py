import numpy as np
import pytest

from teleport_transition.geometry import (AllToAll, Lattice2D, PowerLaw1D, ab_sites, couplings, from_descriptor,
                                          pair_pmf, sample_pair, sample_pairs, to_descriptor)


def _freqs(geom, n, seed=0):
    i, j = sample_pairs(geom, np.random.default_rng(seed), n)
    assert np.all(i != j)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    keys, counts = np.unique(np.stack([lo, hi], 1), axis=0, return_counts=True)
    return {tuple(map(int, k)): c for k, c in zip(keys, counts)}


@pytest.mark.parametrize("geom", [AllToAll(7), PowerLaw1D(10, 1.5), PowerLaw1D(9, 2.0), Lattice2D(4)])
def test_pmf_is_normalised_and_couplings_sum_to_n(geom):
    pmf = pair_pmf(geom)
    assert abs(sum(pmf.values()) - 1) < 1e-12
    J = couplings(geom)
    assert np.allclose(J, J.T)
    assert abs(np.triu(J, 1).sum() - geom.n_sites) < 1e-9


def test_all_to_all_pairs_uniform():
    n = 100_000
    f = _freqs(AllToAll(4), n)
    assert len(f) == 6
    p = 1 / 6
    for c in f.values():
        assert abs(c - n * p) < 3 * np.sqrt(n * p * (1 - p))
    assert set(pair_pmf(AllToAll(5)).values()) == {0.1}


def test_power_law_hand_normalisation():
    g = PowerLaw1D(6, 2.0)
    w = g.separation_weights()
    assert np.allclose(w / w[0], [1, 1 / 4, 1 / 18])  # half weight at r = N/2
    pmf = pair_pmf(g)
    # ring symmetrisation restores the full 1/9 for the N/2 pairs
    z = 6 * (1 + 1 / 4) + 3 / 9
    assert abs(pmf[(0, 1)] - 1 / z) < 1e-12
    assert abs(pmf[(0, 2)] - 1 / 4 / z) < 1e-12
    assert abs(pmf[(0, 3)] - 1 / 9 / z) < 1e-12


def test_power_law_alpha_zero_induced_distribution():
    g = PowerLaw1D(8, 0.0)
    pmf = pair_pmf(g)
    assert len(pmf) == 28 and np.allclose(list(pmf.values()), 1 / 28)
    n = 100_000
    f = _freqs(g, n, seed=1)
    chi2 = sum((f.get(k, 0) - n * p) ** 2 / (n * p) for k, p in pmf.items())
    assert chi2 < 60  # 27 dof, p ~ 4e-4


def test_power_law_sampling_matches_pmf():
    g = PowerLaw1D(10, 1.75)
    pmf = pair_pmf(g)
    n = 200_000
    f = _freqs(g, n, seed=2)
    assert set(f) <= set(pmf)
    for k, p in pmf.items():
        assert abs(f.get(k, 0) - n * p) < 4.5 * np.sqrt(n * p * (1 - p))


def test_lattice_bonds():
    g = Lattice2D(3)
    pmf = pair_pmf(g)
    assert len(pmf) == 18 and np.allclose(list(pmf.values()), 1 / 18)
    f = _freqs(g, 50_000, seed=3)
    assert set(f) == set(pmf)
    for i, j in f:
        ri, ci = divmod(i, 3)
        rj, cj = divmod(j, 3)
        dr, dc = min((ri - rj) % 3, (rj - ri) % 3), min((ci - cj) % 3, (cj - ci) % 3)
        assert dr + dc == 1


def test_ab_sites():
    assert ab_sites(PowerLaw1D(32, 2.0)) == (0, 16)
    assert ab_sites(Lattice2D(8)) == (0, 36)
    assert ab_sites(AllToAll(16)) == (0, 8)
    with pytest.raises(ValueError):
        ab_sites(AllToAll(7))
    with pytest.raises(ValueError):
        ab_sites(Lattice2D(5))


def test_descriptor_roundtrip_and_validation():
    for g in (AllToAll(8), PowerLaw1D(16, 1.75), Lattice2D(6)):
        assert from_descriptor(to_descriptor(g)) == g
    assert from_descriptor('{"family": "powerlaw", "N": 8, "alpha": 3}') == PowerLaw1D(8, 3.0)
    with pytest.raises(ValueError):
        from_descriptor({"family": "torus"})
    with pytest.raises(ValueError):
        PowerLaw1D(8, -1.0)
    with pytest.raises(ValueError):
        Lattice2D(2)
    with pytest.raises(ValueError):
        AllToAll(1)


def test_sample_pair_is_reproducible():
    g = PowerLaw1D(12, 2.0)
    assert sample_pair(g, np.random.default_rng(4)) == sample_pair(g, np.random.default_rng(4))

"""Oracle checks used by ``teleport verify`` and the test suite.

Each check returns a :class:`CheckResult`; none of them raise on a failed
comparison, so a caller can list every outcome before deciding an exit code.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.stats import chisquare

from .clifford2 import GROUP_ORDER, clifford_group, group_tables, key_to_index, sample_clifford2, sample_clifford2_keys
from .dense import DenseState, gate_unitary
from .meanfield import analytic_haar_projector, block_magnetization, chain_magnetization, haar_projector_check
from .tableau import StabilizerTableau, measure_kernel


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    stats: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


@numba.njit(cache=True)
def _sample_all_qubits(x, z, r, coins):
    """Measure every qubit of a fresh copy once per shot; joint outcome counts."""
    shots, n = coins.shape
    counts = np.zeros(1 << n, dtype=np.int64)
    for s in range(shots):
        xs = x.copy()
        zs = z.copy()
        rs = r.copy()
        word = 0
        for q in range(n):
            out, _ = measure_kernel(xs, zs, rs, q, coins[s, q])
            word |= out << q
        counts[word] += 1
    return counts


def _random_circuit(rng: np.random.Generator, n: int, depth: int, p_measure: float):
    ops = []
    for _ in range(depth):
        if rng.random() < p_measure:
            ops.append(("m", int(rng.integers(n))))
        else:
            i, j = rng.choice(n, size=2, replace=False)
            ops.append(("g", sample_clifford2(rng), int(i), int(j)))
    return ops


def dense_equivalence(n_circuits: int = 500, shots: int = 10_000, seed: int = 0, max_qubits: int = 5,
                      z_max: float = 4.0) -> CheckResult:
    """Tableau vs state vector on random circuits with mid-circuit measurements.

    Mid-circuit outcomes come from the tableau and the dense state is
    projected onto them (its probability must be 1/2 for random outcomes and
    1 for deterministic ones).  At the end the entropy of every subset must
    agree exactly and the single-qubit outcome frequencies of ``shots``
    sequential full readouts must lie within ``z_max`` binomial sigma of the
    dense marginals.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    unitaries: dict[int, np.ndarray] = {}
    failures = []
    worst_z = 0.0
    n_freq = 0
    for c in range(n_circuits):
        n = int(rng.integers(2, max_qubits + 1))
        ops = _random_circuit(rng, n, int(rng.integers(1, 4 * n + 1)), 0.3)
        tab = StabilizerTableau.zero_state(n)
        psi = DenseState(n)
        for op in ops:
            if op[0] == "g":
                _, gate, i, j = op
                u = unitaries.get(gate.key)
                if u is None:
                    u = unitaries[gate.key] = gate_unitary(gate)
                tab.apply_clifford2(gate, i, j)
                psi.apply(u, i, j)
            else:
                q = op[1]
                random_outcome = not tab.is_deterministic(q)
                bit = tab.measure_z(q, rng)
                p = psi.project(q, bit) if (psi.prob_one(q) if bit else 1 - psi.prob_one(q)) > 1e-12 else 0.0
                if abs(p - (0.5 if random_outcome else 1.0)) > 1e-9:
                    failures.append(f"circuit {c}: outcome probability {p:.3g} on qubit {q}")
                    break
        else:
            for k in range(1, n + 1):
                for sub in itertools.combinations(range(n), k):
                    s_dense = psi.entropy_bits(sub)
                    if abs(s_dense - tab.entropy_bits(sub)) > 1e-8:
                        failures.append(f"circuit {c}: entropy of {sub} differs")
            coins = rng.integers(0, 2, size=(shots, n)).astype(np.uint8)
            counts = _sample_all_qubits(tab.x, tab.z, tab.r, coins)
            probs = np.abs(psi.psi.transpose(range(n - 1, -1, -1)).reshape(-1)) ** 2
            words = np.arange(1 << n)
            for q in range(n):
                ones = (words >> q) & 1
                p1 = min(1.0, float(probs[ones == 1].sum()))
                f1 = int(counts[ones == 1].sum())
                sigma = np.sqrt(shots * p1 * (1 - p1))
                n_freq += 1
                if sigma < 1e-9:
                    if abs(f1 - shots * p1) > 0.5:
                        failures.append(f"circuit {c}: deterministic qubit {q} fluctuated")
                    continue
                zs = abs(f1 - shots * p1) / sigma
                worst_z = max(worst_z, zs)
                if zs > z_max:
                    failures.append(f"circuit {c}: qubit {q} frequency off by {zs:.1f} sigma")
    dt = time.perf_counter() - t0
    detail = (f"{n_circuits} circuits, {n_freq} marginals, worst {worst_z:.2f} sigma"
              if not failures else f"{len(failures)} mismatches, first: {failures[0]}")
    return CheckResult("dense state-vector equivalence", not failures, detail, dt,
                       {"failures": failures, "worst_z": worst_z})


def clifford_uniformity(n_draws: int = 1_000_000, seed: int = 0, p_min: float = 1e-3) -> CheckResult:
    """Chi-square of sampled gates against the enumerated group, plus X1 orbit."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    keys = sample_clifford2_keys(rng, n_draws)
    counts = np.bincount(key_to_index(keys), minlength=GROUP_ORDER)
    p_gate = float(chisquare(counts).pvalue)
    _, images, signs = group_tables()
    # image of X1 (code 1) under each sampled gate, with sign
    idx = key_to_index(keys[:200_000])
    signed = images[idx, 1].astype(np.int64) + 16 * signs[idx, 1]
    orbit = np.unique(images[:, 1].astype(np.int64) + 16 * signs[:, 1])
    obs = np.bincount(np.searchsorted(orbit, signed), minlength=orbit.size)
    p_orbit = float(chisquare(obs).pvalue)
    symplectic = all(g.is_symplectic() for g in clifford_group())
    ok = p_gate > p_min and p_orbit > p_min and orbit.size == 30 and symplectic and len(clifford_group()) == GROUP_ORDER
    detail = f"{n_draws} draws, p = {p_gate:.3g}; X1 orbit {orbit.size} signed Paulis, p = {p_orbit:.3g}"
    return CheckResult("Clifford sampler uniformity", ok, detail, time.perf_counter() - t0,
                       {"p_value": p_gate, "orbit_size": int(orbit.size), "orbit_p": p_orbit})


def haar_projector(n_samples: int = 100_000, seed: int = 0, tol: float = 5e-3) -> CheckResult:
    t0 = time.perf_counter()
    dev = haar_projector_check(n_samples, np.random.default_rng(seed))
    P = analytic_haar_projector()
    idem = float(np.max(np.abs(P @ P - P)))
    ok = dev < tol and idem < 1e-12
    return CheckResult("Haar replica projector", ok, f"max deviation {dev:.2e}, idempotency {idem:.1e}",
                       time.perf_counter() - t0, {"deviation": dev, "idempotency": idem})


def enumerate_chain(bond: float, fields) -> np.ndarray:
    """``<s_k>`` by summing all ``2^K`` configurations (small K only)."""
    f = np.asarray(fields, dtype=float)
    K = f.size
    s = 1 - 2 * ((np.arange(1 << K)[:, None] >> np.arange(K)) & 1)
    energy = bond * np.sum(s[:, :-1] * s[:, 1:], axis=1) + s @ f
    w = np.exp(energy - energy.max())
    return (w @ s) / w.sum()


def chain_enumeration(max_K: int = 12, trials: int = 5, seed: int = 0, tol: float = 1e-10) -> CheckResult:
    """Transfer-matrix chains (spin by spin and block-wise) vs brute force."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for K in range(1, max_K + 1):
        for _ in range(trials):
            bond = float(rng.uniform(-1.5, 3.0))
            fields = rng.normal(0, 1, K)
            worst = max(worst, float(np.max(np.abs(chain_magnetization(bond, fields) - enumerate_chain(bond, fields)))))
    # block solver vs spin-by-spin chain, including large couplings
    for m in (1, 3, 7):
        for _ in range(trials):
            bond = float(rng.uniform(0.5, 8.0))
            bf = rng.normal(0, 0.3, int(rng.integers(1, 6)))
            ref = chain_magnetization(bond, np.repeat(bf, m)).reshape(-1, m).mean(axis=1)
            worst = max(worst, float(np.max(np.abs(block_magnetization(bond, bf, m) - ref))))
    return CheckResult("Ising chain enumeration", worst < tol, f"K <= {max_K}, max error {worst:.1e}",
                       time.perf_counter() - t0, {"max_error": worst})


def two_qubit_stabilizer_states() -> tuple[int, int]:
    """Distinct states ``g|00>`` over the group and how many are entangled.

    Uses the dense simulator only: states are compared after fixing the
    global phase.
    """
    seen: dict[bytes, bool] = {}
    for g in clifford_group():
        v = gate_unitary(g)[:, 0]
        k = int(np.argmax(np.abs(v) > 1e-9))
        v = v * abs(v[k]) / v[k]
        key = (np.round(v, 6) + 0.0).tobytes()  # + 0.0 folds -0.0 into 0.0
        if key not in seen:
            s = np.linalg.svd(v.reshape(2, 2), compute_uv=False) ** 2
            seen[key] = bool(np.min(s) > 1e-9)
    return len(seen), sum(seen.values())


def saturation_oracle() -> CheckResult:
    t0 = time.perf_counter()
    n_states, n_ent = two_qubit_stabilizer_states()
    value = 2 * n_ent / n_states
    ok = n_states == 60 and n_ent == 24
    return CheckResult("two-qubit stabilizer state census", ok,
                       f"{n_states} states, {n_ent} entangled, 2*{n_ent}/{n_states} = {value:.3f}",
                       time.perf_counter() - t0, {"value": value})


def run_all(quick: bool = False, seed: int = 0) -> list[CheckResult]:
    """The full oracle suite; ``quick`` shrinks sample counts for smoke tests."""
    if quick:
        return [
            dense_equivalence(40, 2000, seed),
            clifford_uniformity(200_000, seed),
            haar_projector(100_000, seed),
            chain_enumeration(10, 2, seed),
            saturation_oracle(),
        ]
    return [
        dense_equivalence(500, 10_000, seed),
        clifford_uniformity(1_000_000, seed),
        haar_projector(100_000, seed),
        chain_enumeration(12, 5, seed),
        saturation_oracle(),
    ]

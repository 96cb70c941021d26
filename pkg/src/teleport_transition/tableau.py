"""Stabilizer tableau simulation of pure states under two-qubit Cliffords.

Storage follows the Aaronson-Gottesman layout: rows ``0..n-1`` are
destabilizers, rows ``n..2n-1`` stabilizers, each row an X bit-vector, a Z
bit-vector and one sign bit.  The hot loops are numba kernels; the
:class:`StabilizerTableau` methods only validate arguments and dispatch.
"""

from __future__ import annotations

import os
from collections.abc import Iterable

import numba
import numpy as np

from .clifford2 import CNOT12, H1, TwoQubitClifford
from .gf2 import gf2_rank, rank_columns

DEBUG = bool(os.environ.get("TELEPORT_DEBUG"))


@numba.njit(cache=True)
def apply_gate_kernel(x, z, r, img, sgn, i, j):
    for k in range(x.shape[0]):
        idx = x[k, i] | (z[k, i] << 1) | (x[k, j] << 2) | (z[k, j] << 3)
        c = img[idx]
        x[k, i] = c & 1
        z[k, i] = (c >> 1) & 1
        x[k, j] = (c >> 2) & 1
        z[k, j] = (c >> 3) & 1
        r[k] ^= sgn[idx]


@numba.njit(cache=True)
def apply_gates_kernel(x, z, r, images, signs, gate_idx, pi, pj, start, stop):
    for g in range(start, stop):
        apply_gate_kernel(x, z, r, images[gate_idx[g]], signs[gate_idx[g]], pi[g], pj[g])


@numba.njit(cache=True)
def _phase_exponent(a1, b1, a2, b2):
    # exponent of i in P(x1, z1) P(x2, z2), single qubit
    x1 = np.int64(a1)
    z1 = np.int64(b1)
    x2 = np.int64(a2)
    z2 = np.int64(b2)
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@numba.njit(cache=True)
def _rowsum(x, z, r, h, i):
    n = x.shape[1]
    total = 2 * r[h] + 2 * r[i]
    for q in range(n):
        total += _phase_exponent(x[i, q], z[i, q], x[h, q], z[h, q])
        x[h, q] ^= x[i, q]
        z[h, q] ^= z[i, q]
    r[h] = 1 if total % 4 == 2 else 0


@numba.njit(cache=True)
def measure_kernel(x, z, r, q, coin):
    """Z measurement of qubit ``q``; returns ``(outcome, was_random)``."""
    n = x.shape[1]
    p = -1
    for k in range(n, 2 * n):
        if x[k, q]:
            p = k
            break
    if p >= 0:
        for k in range(2 * n):
            if k != p and x[k, q]:
                _rowsum(x, z, r, k, p)
        x[p - n, :] = x[p, :]
        z[p - n, :] = z[p, :]
        r[p - n] = r[p]
        x[p, :] = 0
        z[p, :] = 0
        z[p, q] = 1
        r[p] = coin
        return coin, True
    # deterministic: accumulate the stabilizers selected by the destabilizers
    sx = np.zeros(n, dtype=np.uint8)
    sz = np.zeros(n, dtype=np.uint8)
    total = 0
    for k in range(n):
        if x[k, q]:
            s = k + n
            total += 2 * r[s]
            for c in range(n):
                total += _phase_exponent(x[s, c], z[s, c], sx[c], sz[c])
                sx[c] ^= x[s, c]
                sz[c] ^= z[s, c]
    return (1 if total % 4 == 2 else 0), False


class StabilizerTableau:
    """Pure n-qubit stabilizer state with destabilizers and sign bits."""

    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray, debug: bool | None = None):
        self.x = x
        self.z = z
        self.r = r
        self.debug = DEBUG if debug is None else debug

    @classmethod
    def zero_state(cls, n: int, debug: bool | None = None) -> "StabilizerTableau":
        """|0...0>: destabilizers X_i, stabilizers Z_i, all signs +."""
        if n < 1:
            raise ValueError(f"need at least one qubit, got n={n}")
        x = np.zeros((2 * n, n), dtype=np.uint8)
        z = np.zeros((2 * n, n), dtype=np.uint8)
        x[np.arange(n), np.arange(n)] = 1
        z[n + np.arange(n), np.arange(n)] = 1
        return cls(x, z, np.zeros(2 * n, dtype=np.uint8), debug)

    @property
    def n_qubits(self) -> int:
        return self.x.shape[1]

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.x.copy(), self.z.copy(), self.r.copy(), self.debug)

    def stab_matrix(self) -> np.ndarray:
        """Stabilizer rows as an ``n x 2n`` binary matrix (X part | Z part)."""
        n = self.n_qubits
        return np.hstack([self.x[n:], self.z[n:]])

    def destab_matrix(self) -> np.ndarray:
        n = self.n_qubits
        return np.hstack([self.x[:n], self.z[:n]])

    @property
    def stab_signs(self) -> np.ndarray:
        return self.r[self.n_qubits:]

    def _check_qubit(self, q: int) -> None:
        if not 0 <= q < self.n_qubits:
            raise IndexError(f"qubit {q} out of range for {self.n_qubits} qubits")

    def apply_clifford2(self, gate: TwoQubitClifford, i: int, j: int) -> "StabilizerTableau":
        """Conjugate every row by ``gate`` acting on qubits (i, j), in place."""
        self._check_qubit(i)
        self._check_qubit(j)
        if i == j:
            raise ValueError("two-qubit gate needs distinct qubits")
        img, sgn = gate.table()
        apply_gate_kernel(self.x, self.z, self.r, img, sgn, i, j)
        if self.debug:
            self.validate()
        return self

    def measure_z(self, q: int, rng: np.random.Generator) -> int:
        """Projective Z measurement of qubit ``q`` (in place); returns the bit."""
        self._check_qubit(q)
        coin = int(rng.integers(2))
        outcome, _ = measure_kernel(self.x, self.z, self.r, q, coin)
        if self.debug:
            self.validate()
        return int(outcome)

    def is_deterministic(self, q: int) -> bool:
        self._check_qubit(q)
        return not self.x[self.n_qubits:, q].any()

    def entropy_bits(self, subset: Iterable[int]) -> int:
        """Entanglement entropy (bits) of the qubits in ``subset``."""
        qs = sorted(set(int(q) for q in subset))
        if not qs:
            raise ValueError("subset must be nonempty")
        for q in qs:
            self._check_qubit(q)
        n = self.n_qubits
        cols = np.array(qs + [n + q for q in qs], dtype=np.int64)
        return int(rank_columns(self.stab_matrix(), cols)) - len(qs)

    def validate(self) -> None:
        """Raise ``AssertionError`` unless the tableau invariants hold."""
        n = self.n_qubits
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        omega = (x @ z.T + z @ x.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[:n, n:] = np.eye(n, dtype=np.int64)
        expected[n:, :n] = np.eye(n, dtype=np.int64)
        # destabilizers need not commute among themselves once measured
        omega[:n, :n] = 0
        assert np.array_equal(omega, expected), "commutation relations violated"
        assert gf2_rank(self.stab_matrix()) == n, "stabilizers are dependent"

    def stabilizers(self) -> list[str]:
        """Stabilizer generators as strings such as ``'+XZI'``."""
        n = self.n_qubits
        labels = "IXZY"
        out = []
        for k in range(n, 2 * n):
            ops = "".join(labels[self.x[k, q] | (self.z[k, q] << 1)] for q in range(n))
            out.append(("-" if self.r[k] else "+") + ops)
        return out

    def __repr__(self) -> str:
        return f"StabilizerTableau(n={self.n_qubits}, stabilizers={self.stabilizers()})"


def init_state(n: int, debug: bool | None = None) -> StabilizerTableau:
    return StabilizerTableau.zero_state(n, debug)


def entangle_reference(state: StabilizerTableau, ref_q: int, sys_q: int) -> StabilizerTableau:
    """Put two fresh |0> qubits into (|00> + |11>)/sqrt(2) via H then CNOT."""
    if ref_q == sys_q:
        raise ValueError("reference and system qubit must differ")
    for q in (ref_q, sys_q):
        state._check_qubit(q)
        if not state.is_deterministic(q) or state.entropy_bits([q]) != 0:
            raise ValueError(f"qubit {q} is not in a fresh computational state")
    state.apply_clifford2(H1, ref_q, sys_q)
    state.apply_clifford2(CNOT12, ref_q, sys_q)
    return state


def apply_clifford2(state: StabilizerTableau, gate: TwoQubitClifford, i: int, j: int) -> StabilizerTableau:
    return state.apply_clifford2(gate, i, j)


def measure_z(state: StabilizerTableau, q: int, rng: np.random.Generator) -> int:
    return state.measure_z(q, rng)


def entropy_bits(state: StabilizerTableau, subset: Iterable[int]) -> int:
    return state.entropy_bits(subset)

"""Dense state-vector reference simulator for a handful of qubits.

Independent of the tableau code: gate unitaries are reconstructed from their
Pauli conjugation action by solving ``U P = P' U`` for the null space.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from .clifford2 import TwoQubitClifford

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_SINGLE = {(0, 0): _I, (1, 0): _X, (0, 1): _Z, (1, 1): _Y}


def pauli_matrix(code: int) -> np.ndarray:
    """4x4 Hermitian Pauli for a two-qubit code; the first factor is qubit 1."""
    a = _SINGLE[(code & 1, (code >> 1) & 1)]
    b = _SINGLE[((code >> 2) & 1, (code >> 3) & 1)]
    return np.kron(a, b)


def gate_unitary(gate: TwoQubitClifford) -> np.ndarray:
    """Unitary (up to phase) realising the conjugation action of ``gate``."""
    rows = []
    eye = np.eye(4)
    for gen, img, sign in zip((1, 2, 4, 8), gate.images, gate.signs):
        p = pauli_matrix(gen)
        q = (-1) ** sign * pauli_matrix(img)
        # vec(U P - Q U) = (P^T kron I - I kron Q) vec(U), column-major vec
        rows.append(np.kron(p.T, eye) - np.kron(eye, q))
    _, s, vh = np.linalg.svd(np.vstack(rows))
    if s[-1] > 1e-8 or s[-2] < 1e-6:
        raise ValueError("conjugation action does not fix a unique unitary")
    u = vh[-1].conj().reshape(4, 4, order="F")
    return u / np.sqrt(abs(np.linalg.det(u)) ** 0.5)


class DenseState:
    """State vector on n qubits; qubit q is tensor axis q."""

    def __init__(self, n: int):
        self.n = n
        self.psi = np.zeros((2,) * n, dtype=complex)
        self.psi[(0,) * n] = 1.0

    def copy(self) -> "DenseState":
        other = DenseState.__new__(DenseState)
        other.n = self.n
        other.psi = self.psi.copy()
        return other

    def apply(self, u: np.ndarray, i: int, j: int) -> None:
        psi = np.moveaxis(self.psi, (i, j), (0, 1))
        shape = psi.shape
        psi = (u @ psi.reshape(4, -1)).reshape(shape)
        self.psi = np.moveaxis(psi, (0, 1), (i, j))

    def apply_single(self, u: np.ndarray, q: int) -> None:
        psi = np.moveaxis(self.psi, q, 0)
        shape = psi.shape
        psi = (u @ psi.reshape(2, -1)).reshape(shape)
        self.psi = np.moveaxis(psi, 0, q)

    def prob_one(self, q: int) -> float:
        return float(np.sum(np.abs(np.take(self.psi, 1, axis=q)) ** 2))

    def project(self, q: int, outcome: int) -> float:
        """Project qubit ``q`` onto ``outcome``; returns its probability."""
        p = self.prob_one(q) if outcome else 1.0 - self.prob_one(q)
        if p < 1e-12:
            raise ValueError("projection onto a zero-probability outcome")
        idx = [slice(None)] * self.n
        idx[q] = 1 - outcome
        self.psi[tuple(idx)] = 0.0
        self.psi /= np.sqrt(p)
        return p

    def entropy_bits(self, subset: Iterable[int]) -> float:
        qs = sorted(set(subset))
        rest = [q for q in range(self.n) if q not in qs]
        mat = np.transpose(self.psi, qs + rest).reshape(2 ** len(qs), -1)
        s = np.linalg.svd(mat, compute_uv=False) ** 2
        s = s[s > 1e-12]
        return float(-np.sum(s * np.log2(s)))


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

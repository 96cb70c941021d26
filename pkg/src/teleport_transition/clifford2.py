"""Two-qubit Clifford gates: representation, enumeration and uniform sampling.

A two-qubit Pauli (modulo phase) is a 4-bit code with bit layout
``x1 | z1 << 1 | x2 << 2 | z2 << 3``; a code stands for the Hermitian
operator ``i^(x1 z1 + x2 z2) X1^x1 Z1^z1 X2^x2 Z2^z2``.

A gate is stored by the signed images of ``X1, Z1, X2, Z2`` under
conjugation.  Packed into an integer "key" (4 bits per image code, then the
four sign bits) every one of the 11520 group elements has a distinct key.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GROUP_ORDER = 11520
GENERATOR_CODES = (1, 2, 4, 8)  # X1, Z1, X2, Z2


def _g(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of i picked up by the single-qubit product P(x1,z1) P(x2,z2)."""
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


def pauli_mul(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    """Multiply phased Paulis ``(phase, code)`` meaning ``i^phase * P(code)``."""
    pa, ca = a
    pb, cb = b
    phase = pa + pb
    for q in range(2):
        phase += _g((ca >> 2 * q) & 1, (ca >> 2 * q + 1) & 1, (cb >> 2 * q) & 1, (cb >> 2 * q + 1) & 1)
    return phase % 4, ca ^ cb


def symplectic_product(a: int, b: int) -> int:
    """1 if the Paulis with codes ``a`` and ``b`` anticommute, else 0."""
    s = 0
    for q in range(2):
        s ^= ((a >> 2 * q) & 1) & ((b >> 2 * q + 1) & 1)
        s ^= ((a >> 2 * q + 1) & 1) & ((b >> 2 * q) & 1)
    return s


@dataclass(frozen=True)
class TwoQubitClifford:
    """A two-qubit Clifford up to global phase.

    ``images[k]`` and ``signs[k]`` give the conjugated image of the k-th
    generator in ``(X1, Z1, X2, Z2)``.
    """

    images: tuple[int, int, int, int]
    signs: tuple[int, int, int, int]

    @property
    def key(self) -> int:
        k = 0
        for n, c in enumerate(self.images):
            k |= c << (4 * n)
        for n, s in enumerate(self.signs):
            k |= s << (16 + n)
        return k

    @classmethod
    def from_key(cls, key: int) -> "TwoQubitClifford":
        images = tuple((key >> (4 * n)) & 15 for n in range(4))
        signs = tuple((key >> (16 + n)) & 1 for n in range(4))
        return cls(images, signs)  # type: ignore[arg-type]

    def symplectic_matrix(self) -> np.ndarray:
        """4x4 binary matrix whose column k is the image of generator k."""
        m = np.zeros((4, 4), dtype=np.uint8)
        for k, c in enumerate(self.images):
            for bit in range(4):
                m[bit, k] = (c >> bit) & 1
        return m

    def is_symplectic(self) -> bool:
        gens = GENERATOR_CODES
        for a in range(4):
            for b in range(4):
                if symplectic_product(self.images[a], self.images[b]) != symplectic_product(gens[a], gens[b]):
                    return False
        return True

    def conjugate(self, code: int) -> tuple[int, int]:
        """Image of the Hermitian Pauli ``code`` as ``(new_code, sign_bit)``."""
        acc = (0, 0)
        for k in range(4):
            if (code >> k) & 1:
                acc = pauli_mul(acc, (2 * self.signs[k], self.images[k]))
        # P(code) = i^(x1 z1 + x2 z2) X1^x1 Z1^z1 X2^x2 Z2^z2
        extra = ((code & 1) & ((code >> 1) & 1)) + (((code >> 2) & 1) & ((code >> 3) & 1))
        phase = (acc[0] + extra) % 4
        if phase % 2:
            raise ValueError("image is not Hermitian; gate is not a valid Clifford")
        return acc[1], phase // 2

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """Lookup tables over all 16 local Paulis: image codes and sign flips."""
        img = np.zeros(16, dtype=np.uint8)
        sgn = np.zeros(16, dtype=np.uint8)
        for code in range(16):
            img[code], sgn[code] = self.conjugate(code)
        return img, sgn

    def then(self, other: "TwoQubitClifford") -> "TwoQubitClifford":
        """Gate that applies ``self`` first and ``other`` second."""
        images, signs = [], []
        for k in range(4):
            c, s = other.conjugate(self.images[k])
            images.append(c)
            signs.append(s ^ self.signs[k])
        return TwoQubitClifford(tuple(images), tuple(signs))  # type: ignore[arg-type]

    def inverse(self) -> "TwoQubitClifford":
        """Invert the conjugation table: the preimage of each generator."""
        img, sgn = self.table()
        images, signs = [], []
        for gen in GENERATOR_CODES:
            pre = np.nonzero(img == gen)[0]
            if pre.size != 1:
                raise ValueError("gate is not invertible")
            images.append(int(pre[0]))
            signs.append(int(sgn[pre[0]]))
        return TwoQubitClifford(tuple(images), tuple(signs))  # type: ignore[arg-type]


IDENTITY = TwoQubitClifford((1, 2, 4, 8), (0, 0, 0, 0))
H1 = TwoQubitClifford((2, 1, 4, 8), (0, 0, 0, 0))
H2 = TwoQubitClifford((1, 2, 8, 4), (0, 0, 0, 0))
S1 = TwoQubitClifford((3, 2, 4, 8), (0, 0, 0, 0))
S2 = TwoQubitClifford((1, 2, 12, 8), (0, 0, 0, 0))
CNOT12 = TwoQubitClifford((5, 2, 4, 10), (0, 0, 0, 0))
X1 = TwoQubitClifford((1, 2, 4, 8), (0, 1, 0, 0))
X2 = TwoQubitClifford((1, 2, 4, 8), (0, 0, 0, 1))
SWAP = TwoQubitClifford((4, 8, 1, 2), (0, 0, 0, 0))


@lru_cache(maxsize=1)
def clifford_group() -> tuple[TwoQubitClifford, ...]:
    """All 11520 two-qubit Cliffords, by closure of H, S and CNOT."""
    gens = (H1, H2, S1, S2, CNOT12)
    seen = {IDENTITY.key: IDENTITY}
    frontier = [IDENTITY]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                c = g.then(h)
                if c.key not in seen:
                    seen[c.key] = c
                    nxt.append(c)
        frontier = nxt
    return tuple(seen[k] for k in sorted(seen))


@lru_cache(maxsize=1)
def group_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Conjugation tables for the whole group.

    Returns ``(keys, images, signs)`` with ``images``/``signs`` of shape
    (11520, 16); row ``k`` belongs to the gate with ``keys[k]``.
    """
    group = clifford_group()
    keys = np.array([g.key for g in group], dtype=np.int64)
    images = np.empty((len(group), 16), dtype=np.uint8)
    signs = np.empty((len(group), 16), dtype=np.uint8)
    for n, g in enumerate(group):
        images[n], signs[n] = g.table()
    return keys, images, signs


@lru_cache(maxsize=1)
def _key_index() -> np.ndarray:
    keys = group_tables()[0]
    index = np.full(1 << 20, -1, dtype=np.int32)
    index[keys] = np.arange(len(keys), dtype=np.int32)
    return index


def key_to_index(keys: np.ndarray) -> np.ndarray:
    """Position of each gate key in :func:`group_tables`."""
    idx = _key_index()[np.asarray(keys, dtype=np.int64)]
    if np.any(idx < 0):
        raise ValueError("key does not describe a two-qubit Clifford")
    return idx


@lru_cache(maxsize=1)
def _sampling_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Z1 image given X1 image: the 8 Paulis anticommuting with it.
    anti = np.zeros((16, 8), dtype=np.int64)
    for a in range(1, 16):
        anti[a] = [b for b in range(1, 16) if symplectic_product(a, b)]
    # X2 image given (X1, Z1) images: the 3 nonzero elements of the
    # symplectic complement of span{a, b}.
    comp = np.zeros((16, 16, 3), dtype=np.int64)
    # Z2 image given the complement and X2 image: 2 anticommuting choices.
    partner = np.zeros((16, 16, 16, 2), dtype=np.int64)
    for a in range(1, 16):
        for b in anti[a]:
            c3 = [c for c in range(1, 16) if not symplectic_product(a, c) and not symplectic_product(b, c)]
            comp[a, b] = c3
            for c in c3:
                partner[a, b, c] = [d for d in c3 if symplectic_product(c, d)]
    return anti, comp, partner


def sample_clifford2_keys(rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` uniform two-qubit Cliffords, returned as integer keys.

    The images of X1, Z1, X2, Z2 are drawn one after another, each uniformly
    among the choices that keep the commutation relations intact
    (15 * 8 * 3 * 2 symplectic maps), then four independent sign bits.
    """
    anti, comp, partner = _sampling_tables()
    a = rng.integers(1, 16, size=size)
    b = anti[a, rng.integers(0, 8, size=size)]
    c = comp[a, b, rng.integers(0, 3, size=size)]
    d = partner[a, b, c, rng.integers(0, 2, size=size)]
    s = rng.integers(0, 16, size=size)
    return a | (b << 4) | (c << 8) | (d << 12) | (s << 16)


def sample_clifford2(rng: np.random.Generator) -> TwoQubitClifford:
    """One uniformly random two-qubit Clifford."""
    return TwoQubitClifford.from_key(int(sample_clifford2_keys(rng, 1)[0]))

"""Circuit geometries: where two-qubit gates land and where A and B sit.

Every geometry defines a distribution ``P(i, j)`` over unordered pairs of
distinct qubits.  Couplings of the effective spin model are ``J_ij = N P(i,j)``
so that they sum to ``N`` over pairs.

* ``AllToAll``: uniform over all ``N(N-1)/2`` pairs.
* ``PowerLaw1D``: ring of ``N`` sites, ``P(i, j)`` proportional to
  ``r^-alpha`` with ``r`` the ring separation.  A separation is drawn first,
  then a uniform base site; ``r = N/2`` carries half weight in the separation
  measure because both directions reach the same partner.
* ``Lattice2D``: periodic ``L x L`` square lattice, uniform over the ``2 L^2``
  nearest-neighbour bonds.  Sites are indexed row-major, ``(row, col) -> row*L + col``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class AllToAll:
    N: int
    family = "alltoall"

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("AllToAll needs N >= 2")

    @property
    def n_sites(self) -> int:
        return self.N

    @property
    def alpha(self) -> float | None:
        return None


@dataclass(frozen=True)
class PowerLaw1D:
    N: int
    alpha: float
    family = "powerlaw"

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("PowerLaw1D needs N >= 3")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    @property
    def n_sites(self) -> int:
        return self.N

    def separation_weights(self) -> np.ndarray:
        """Normalised probability of each separation ``r = 1..N//2``."""
        r = np.arange(1, self.N // 2 + 1, dtype=float)
        w = r ** (-float(self.alpha))
        if self.N % 2 == 0:
            w[-1] *= 0.5
        return w / w.sum()


@dataclass(frozen=True)
class Lattice2D:
    L: int
    family = "lattice2d"

    def __post_init__(self):
        if self.L < 3:
            raise ValueError("Lattice2D needs L >= 3 (L = 2 double-counts bonds)")

    @property
    def n_sites(self) -> int:
        return self.L * self.L

    @property
    def alpha(self) -> float | None:
        return None

    def bonds(self) -> np.ndarray:
        L = self.L
        row, col = np.divmod(np.arange(L * L), L)
        right = row * L + (col + 1) % L
        down = ((row + 1) % L) * L + col
        site = np.arange(L * L)
        return np.concatenate([np.stack([site, right], 1), np.stack([site, down], 1)])


Geometry = Union[AllToAll, PowerLaw1D, Lattice2D]


def sample_pairs(geometry: Geometry, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` gate locations; returns two index arrays with ``i != j``."""
    if isinstance(geometry, AllToAll):
        N = geometry.N
        i = rng.integers(0, N, size=size)
        j = rng.integers(0, N - 1, size=size)
        j = j + (j >= i)
        return i, j
    if isinstance(geometry, PowerLaw1D):
        N = geometry.N
        w = geometry.separation_weights()
        r = 1 + np.searchsorted(np.cumsum(w), rng.random(size), side="right")
        r = np.minimum(r, len(w))
        i = rng.integers(0, N, size=size)
        return i, (i + r) % N
    if isinstance(geometry, Lattice2D):
        bonds = geometry.bonds()
        pick = bonds[rng.integers(0, len(bonds), size=size)]
        return pick[:, 0], pick[:, 1]
    raise TypeError(f"unknown geometry {geometry!r}")


def sample_pair(geometry: Geometry, rng: np.random.Generator) -> tuple[int, int]:
    i, j = sample_pairs(geometry, rng, 1)
    return int(i[0]), int(j[0])


def ab_sites(geometry: Geometry) -> tuple[int, int]:
    """Input site (entangled with the reference) and the output site B."""
    if isinstance(geometry, Lattice2D):
        if geometry.L % 2:
            raise ValueError(f"Lattice2D needs even L, got {geometry.L}")
        half = geometry.L // 2
        return 0, half * geometry.L + half
    if geometry.N % 2:
        raise ValueError(f"needs even N, got {geometry.N}")
    return 0, geometry.N // 2


def pair_pmf(geometry: Geometry) -> dict[tuple[int, int], float]:
    """Exact ``P(i, j)`` for ``i < j``, pairs with zero weight omitted."""
    n = geometry.n_sites
    if n > 4096:
        raise ValueError("geometry too large to tabulate")
    if isinstance(geometry, AllToAll):
        p = 2.0 / (n * (n - 1))
        return {(i, j): p for i in range(n) for j in range(i + 1, n)}
    if isinstance(geometry, PowerLaw1D):
        w = geometry.separation_weights()
        table: dict[tuple[int, int], float] = {}
        for base in range(n):
            for r, wr in enumerate(w, start=1):
                key = tuple(sorted((base, (base + r) % n)))
                table[key] = table.get(key, 0.0) + wr / n
        return table
    if isinstance(geometry, Lattice2D):
        bonds = geometry.bonds()
        p = 1.0 / len(bonds)
        return {tuple(sorted(map(int, b))): p for b in bonds}
    raise TypeError(f"unknown geometry {geometry!r}")


def couplings(geometry: Geometry) -> np.ndarray:
    """Symmetric matrix ``J_ij = N P(i, j)``; its upper triangle sums to N."""
    n = geometry.n_sites
    J = np.zeros((n, n))
    for (i, j), p in pair_pmf(geometry).items():
        J[i, j] = J[j, i] = n * p
    return J


def to_descriptor(geometry: Geometry) -> dict:
    d = {"family": geometry.family}
    d.update(asdict(geometry))
    return d


def from_descriptor(desc: dict | str) -> Geometry:
    if isinstance(desc, str):
        desc = json.loads(desc)
    family = desc.get("family")
    if family == "alltoall":
        return AllToAll(int(desc["N"]))
    if family == "powerlaw":
        return PowerLaw1D(int(desc["N"]), float(desc["alpha"]))
    if family == "lattice2d":
        return Lattice2D(int(desc["L"]))
    raise ValueError(f"unknown geometry family {family!r}")

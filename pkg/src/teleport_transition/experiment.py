"""Teleportation protocol over ensembles of random Clifford circuits.

One trajectory: N system qubits plus a reference (index N) Bell-paired with
the input site; one random two-qubit Clifford every 1/N time units.  At each
checkpoint every system qubit except the output site is measured in Z and
``I = 2 S(reference)`` is recorded.

The default checkpoint evaluation never performs the measurements.  After
measuring the set M in Z, the stabilizer group restricted to A = reference
is determined by two GF(2) ranks of the stabilizer matrix (outcomes only
change signs), which gives the same entropy as copy-measure-discard at a
fraction of the cost.  ``method="measure"`` runs the literal protocol.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .clifford2 import group_tables, key_to_index, sample_clifford2_keys
from .geometry import Geometry, ab_sites, sample_pairs
from .tableau import StabilizerTableau, apply_gates_kernel, entangle_reference

log = logging.getLogger(__name__)

RAW_HEADER = ["family", "alpha", "N", "t", "trajectory", "I"]
AGG_HEADER = ["family", "alpha", "N", "t", "mean_I", "sem", "n"]


def default_checkpoints(t_max: float = 6.0, step: float = 0.1, t_min: float = 0.0) -> np.ndarray:
    n = int(round((t_max - t_min) / step))
    return np.round(t_min + step * np.arange(n + 1), 10)


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: Geometry
    checkpoint_times: tuple[float, ...]
    n_trajectories: int
    master_seed: int
    t_max: float | None = None
    output: str | None = None

    def __post_init__(self):
        times = np.asarray(self.checkpoint_times, dtype=float)
        if times.size == 0:
            raise ValueError("need at least one checkpoint time")
        if np.any(times < 0) or np.any(np.diff(times) <= 0):
            raise ValueError("checkpoint times must be >= 0 and strictly increasing")
        if self.t_max is not None and times[-1] > self.t_max + 1e-12:
            raise ValueError(f"checkpoint {times[-1]} beyond t_max={self.t_max}")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        counts = np.rint(times * self.geometry.n_sites).astype(np.int64)
        if np.any(np.diff(counts) < 0):
            raise ValueError("checkpoint times do not map to increasing gate counts")

    @property
    def gate_counts(self) -> np.ndarray:
        """Number of gates applied before each checkpoint, ``round(t N)``."""
        return np.rint(np.asarray(self.checkpoint_times) * self.geometry.n_sites).astype(np.int64)


@dataclass
class TrajectorySeries:
    trajectory: int
    times: np.ndarray
    I: np.ndarray


def _seed_sequence(config: ExperimentConfig, traj_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.master_seed, config.geometry.n_sites, traj_index])


def _circuit(config: ExperimentConfig, traj_index: int):
    rng = np.random.default_rng(_seed_sequence(config, traj_index))
    n_gates = int(config.gate_counts[-1])
    pi, pj = sample_pairs(config.geometry, rng, n_gates)
    gate_idx = key_to_index(sample_clifford2_keys(rng, n_gates))
    return pi.astype(np.int64), pj.astype(np.int64), gate_idx.astype(np.int64)


def _prepare(config: ExperimentConfig) -> tuple[StabilizerTableau, int, int, int]:
    N = config.geometry.n_sites
    a_site, b_site = ab_sites(config.geometry)
    state = StabilizerTableau.zero_state(N + 1)
    entangle_reference(state, N, a_site)
    return state, N, a_site, b_site


@numba.njit(cache=True)
def _reference_entropy(x, z, cols, n_prefix):
    """1 - (rank(cols) - rank(cols[:n_prefix])) over the stabilizer rows."""
    n = x.shape[1]
    ncols = cols.shape[0]
    words = (ncols + 63) // 64
    packed = np.zeros((n, words), dtype=np.uint64)
    for r in range(n):
        for k in range(ncols):
            c = cols[k]
            bit = x[n + r, c] if c < n else z[n + r, c - n]
            if bit:
                packed[r, k >> 6] |= np.uint64(1) << np.uint64(k & 63)
    rank = 0
    prefix_rank = 0
    for c in range(ncols):
        if c == n_prefix:
            prefix_rank = rank
        if rank == n:
            continue
        w = c >> 6
        bit = np.uint64(1) << np.uint64(c & 63)
        pivot = -1
        for r in range(rank, n):
            if packed[r, w] & bit:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != rank:
            for k in range(w, words):
                tmp = packed[pivot, k]
                packed[pivot, k] = packed[rank, k]
                packed[rank, k] = tmp
        for r in range(rank + 1, n):
            if packed[r, w] & bit:
                for k in range(w, words):
                    packed[r, k] ^= packed[rank, k]
        rank += 1
    if n_prefix >= ncols:
        prefix_rank = rank
    return 1 - (rank - prefix_rank)


@numba.njit(cache=True)
def _trajectory_kernel(x, z, r, images, signs, gate_idx, pi, pj, counts, cols, n_prefix):
    out = np.empty(counts.shape[0], dtype=np.int8)
    done = 0
    for k in range(counts.shape[0]):
        apply_gates_kernel(x, z, r, images, signs, gate_idx, pi, pj, done, counts[k])
        done = counts[k]
        out[k] = 2 * _reference_entropy(x, z, cols, n_prefix)
    return out


def _rank_columns_for(N: int, b_site: int) -> tuple[np.ndarray, int]:
    n = N + 1
    # constraint columns of "no X on M or B, nothing on B", then the reference's X and Z
    base = list(range(N)) + [n + b_site]
    return np.array(base + [N, n + N], dtype=np.int64), len(base)


def run_trajectory(config: ExperimentConfig, traj_index: int, method: str = "rank") -> TrajectorySeries:
    """I at every checkpoint for one circuit realisation.

    Deterministic in ``(config.master_seed, traj_index)``; ``method`` picks the
    rank shortcut or literal copy-measure-discard, both give the same values.
    """
    state, N, _, b_site = _prepare(config)
    pi, pj, gate_idx = _circuit(config, traj_index)
    _, images, signs = group_tables()
    counts = config.gate_counts
    if method == "rank":
        cols, n_prefix = _rank_columns_for(N, b_site)
        values = _trajectory_kernel(state.x, state.z, state.r, images, signs, gate_idx, pi, pj, counts, cols, n_prefix)
    elif method == "measure":
        meas_rng = np.random.default_rng(_seed_sequence(config, traj_index).spawn(1)[0])
        values = np.empty(len(counts), dtype=np.int8)
        done = 0
        for k, c in enumerate(counts):
            apply_gates_kernel(state.x, state.z, state.r, images, signs, gate_idx, pi, pj, done, c)
            done = c
            values[k] = measured_information(state, N, b_site, meas_rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TrajectorySeries(traj_index, np.asarray(config.checkpoint_times, dtype=float), values)


def measured_information(state: StabilizerTableau, ref_q: int, b_site: int, rng: np.random.Generator) -> int:
    """Copy, measure every system qubit but ``b_site``, return ``2 S(ref)``."""
    work = state.copy()
    for q in range(ref_q):
        if q != b_site:
            work.measure_z(q, rng)
    return 2 * work.entropy_bits([ref_q])


def _run_chunk(args) -> tuple[list[int], np.ndarray]:
    config, indices = args
    rows = [run_trajectory(config, i).I for i in indices]
    return list(indices), np.array(rows, dtype=np.int8)


@dataclass
class EnsembleTable:
    """Aggregated ``I(t, N)`` plus the trajectory-level samples behind it."""

    family: str
    alpha: float | None
    N: np.ndarray
    t: np.ndarray
    mean_I: np.ndarray
    sem: np.ndarray
    n: np.ndarray
    raw: dict[tuple[int, float], np.ndarray] = field(default_factory=dict)

    def sizes(self) -> list[int]:
        return sorted(set(int(v) for v in self.N))

    def select(self, N: int) -> "EnsembleTable":
        m = self.N == N
        raw = {k: v for k, v in self.raw.items() if k[0] == N}
        return EnsembleTable(self.family, self.alpha, self.N[m], self.t[m], self.mean_I[m], self.sem[m], self.n[m], raw)


def aggregate(samples: dict[tuple[int, float], np.ndarray], family: str = "", alpha: float | None = None) -> EnsembleTable:
    """Mean, sample std (ddof=1) and standard error for each ``(N, t)`` group."""
    keys = sorted(samples)
    Ns, ts, means, sems, ns = [], [], [], [], []
    for key in keys:
        v = np.asarray(samples[key], dtype=float)
        if v.size == 0:
            raise ValueError(f"empty sample group {key}")
        sd = v.std(ddof=1) if v.size > 1 else 0.0
        Ns.append(key[0])
        ts.append(key[1])
        means.append(v.mean())
        sems.append(sd / math.sqrt(v.size))
        ns.append(v.size)
    return EnsembleTable(
        family, alpha, np.array(Ns, dtype=np.int64), np.array(ts, dtype=float), np.array(means),
        np.array(sems), np.array(ns, dtype=np.int64), {k: np.asarray(samples[k]) for k in keys},
    )


def merge_samples(*groups: dict[tuple[int, float], np.ndarray]) -> dict[tuple[int, float], np.ndarray]:
    out: dict[tuple[int, float], list[np.ndarray]] = {}
    for g in groups:
        for k, v in g.items():
            out.setdefault(k, []).append(np.asarray(v))
    return {k: np.concatenate(v) for k, v in out.items()}


def run_trajectories(config: ExperimentConfig, threads: int = 1, chunk: int = 64) -> np.ndarray:
    """All trajectories as an ``(n_trajectories, n_checkpoints)`` int8 array."""
    n = config.n_trajectories
    out = np.empty((n, len(config.checkpoint_times)), dtype=np.int8)
    jobs = [(config, range(s, min(s + chunk, n))) for s in range(0, n, chunk)]
    if threads <= 1:
        results = map(_run_chunk, jobs)
        for idx, rows in results:
            out[idx] = rows
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for idx, rows in pool.map(_run_chunk, jobs):
                out[idx] = rows
    return out


def run_ensemble(config: ExperimentConfig, threads: int = 1) -> EnsembleTable:
    """Run every trajectory and aggregate per checkpoint.

    Output depends only on the config: per-trajectory seeding and results
    slotted by trajectory index make it independent of ``threads``.
    """
    data = run_trajectories(config, threads)
    N = config.geometry.n_sites
    samples = {(N, float(t)): data[:, k] for k, t in enumerate(config.checkpoint_times)}
    table = aggregate(samples, config.geometry.family, getattr(config.geometry, "alpha", None))
    if config.output:
        out = Path(config.output)
        write_raw_csv(out / "raw.csv", table)
        write_aggregate_csv(out / "aggregate.csv", table)
    return table


def concat_tables(tables: list[EnsembleTable]) -> EnsembleTable:
    if not tables:
        raise ValueError("nothing to concatenate")
    samples = merge_samples(*(t.raw for t in tables))
    return aggregate(samples, tables[0].family, tables[0].alpha)


def _fmt_t(t: float) -> str:
    return f"{t:.10g}"


def _fmt_alpha(alpha: float | None) -> str:
    return "" if alpha is None else f"{alpha:.10g}"


def _write(path: Path, header: list[str], rows, comment: str | None) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        if comment:
            for line in comment.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_raw_csv(path: Path, table: EnsembleTable, comment: str | None = None) -> None:
    fam, al = table.family, _fmt_alpha(table.alpha)
    rows = []
    for (N, t), v in sorted(table.raw.items()):
        rows.extend([fam, al, N, _fmt_t(t), k, int(x)] for k, x in enumerate(v))
    _write(path, RAW_HEADER, rows, comment)


def write_aggregate_csv(path: Path, table: EnsembleTable, comment: str | None = None) -> None:
    fam, al = table.family, _fmt_alpha(table.alpha)
    rows = [
        [fam, al, int(N), _fmt_t(t), f"{m:.10g}", f"{s:.10g}", int(n)]
        for N, t, m, s, n in zip(table.N, table.t, table.mean_I, table.sem, table.n)
    ]
    _write(path, AGG_HEADER, rows, comment)


def _read_rows(path: Path) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def read_raw_csv(path: Path) -> EnsembleTable:
    rows = _read_rows(path)
    if not rows or set(RAW_HEADER) - set(rows[0]):
        raise ValueError(f"{path}: expected header {','.join(RAW_HEADER)}")
    groups: dict[tuple[int, float], list[tuple[int, int]]] = {}
    for row in rows:
        groups.setdefault((int(row["N"]), float(row["t"])), []).append((int(row["trajectory"]), int(row["I"])))
    samples = {k: np.array([v for _, v in sorted(g)], dtype=np.int8) for k, g in groups.items()}
    alpha = rows[0]["alpha"]
    return aggregate(samples, rows[0]["family"], float(alpha) if alpha else None)


def read_aggregate_csv(path: Path) -> EnsembleTable:
    rows = _read_rows(path)
    if not rows or set(AGG_HEADER) - set(rows[0]):
        raise ValueError(f"{path}: expected header {','.join(AGG_HEADER)}")
    alpha = rows[0]["alpha"]
    return EnsembleTable(
        rows[0]["family"], float(alpha) if alpha else None,
        np.array([int(r["N"]) for r in rows]), np.array([float(r["t"]) for r in rows]),
        np.array([float(r["mean_I"]) for r in rows]), np.array([float(r["sem"]) for r in rows]),
        np.array([int(r["n"]) for r in rows]),
    )


def read_table(path: Path) -> EnsembleTable:
    """Read either CSV schema, picked from its header."""
    rows = _read_rows(path)
    if rows and "trajectory" in rows[0]:
        return read_raw_csv(path)
    return read_aggregate_csv(path)

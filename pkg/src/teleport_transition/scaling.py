"""Finite-size scaling of I(t, N): data collapse, bootstrap, KT fits, crossings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .experiment import EnsembleTable

WEIGHT_WIDTH = 40.0
NU_MAX = 50.0
MIN_OVERLAP = 0.25


@dataclass
class ScalingDataset:
    N: np.ndarray
    t: np.ndarray
    y: np.ndarray
    sem: np.ndarray
    samples: dict[tuple[int, float], np.ndarray] | None = None

    def __post_init__(self):
        self.N = np.asarray(self.N, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.sem = np.zeros_like(self.y) if self.sem is None else np.asarray(self.sem, dtype=float)
        if not (self.N.shape == self.t.shape == self.y.shape == self.sem.shape):
            raise ValueError("N, t, y and sem must have equal length")

    @classmethod
    def from_table(cls, table: EnsembleTable) -> "ScalingDataset":
        """Scaling variable is the qubit count, or the linear size L for the 2-d lattice."""
        if table.family == "lattice2d":
            L = np.rint(np.sqrt(table.N)).astype(np.int64)
            raw = {(int(round(math.sqrt(k[0]))), k[1]): v for k, v in table.raw.items()}
            return cls(L, table.t, table.mean_I, table.sem, raw or None)
        return cls(table.N, table.t, table.mean_I, table.sem, dict(table.raw) or None)

    def sizes(self) -> np.ndarray:
        return np.unique(self.N)

    def window(self, t_min: float = -np.inf, t_max: float = np.inf) -> "ScalingDataset":
        m = (self.t >= t_min - 1e-12) & (self.t <= t_max + 1e-12)
        samples = None
        if self.samples:
            samples = {k: v for k, v in self.samples.items() if t_min - 1e-12 <= k[1] <= t_max + 1e-12}
        return ScalingDataset(self.N[m], self.t[m], self.y[m], self.sem[m], samples)

    def curve(self, N: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self.N == N
        order = np.argsort(self.t[m])
        return self.t[m][order], self.y[m][order], self.sem[m][order]


@dataclass
class CollapseFit:
    t_c: float
    nu: float
    beta: float
    lse: float
    converged: bool = True
    boot_mean: dict[str, float] = field(default_factory=dict)
    boot_std: dict[str, float] = field(default_factory=dict)
    n_boot: int = 0

    @property
    def params(self) -> np.ndarray:
        return np.array([self.t_c, self.nu, self.beta])

    def as_dict(self) -> dict:
        return {
            "t_c": self.t_c, "nu": self.nu, "beta": self.beta, "lse": self.lse,
            "converged": self.converged, "errors": self.boot_std, "bootstrap_mean": self.boot_mean,
            "n_boot": self.n_boot,
        }


def scaled_coordinates(data: ScalingDataset, t_c: float, nu: float, beta: float):
    """``x = (t - t_c) N^(1/nu)``, ``y N^(2 beta/nu)`` and the scaled errors."""
    x = (data.t - t_c) * data.N ** (1.0 / nu)
    scale = data.N ** (2.0 * beta / nu)
    return x, data.y * scale, data.sem * scale


def collapse_residual(
    data: ScalingDataset, t_c: float, nu: float, beta: float, width: float = WEIGHT_WIDTH, use_errors: bool = True,
    min_overlap: float = MIN_OVERLAP,
) -> float:
    """Weighted mismatch of the collapsed curves.

    Every point is compared with the linear interpolation of each other
    system size's collapsed curve at the same ``x``; points outside an other
    size's x-range are skipped for that size.  A term is weighted by
    ``exp(-x^2 / (2 width^2))`` and, when errors are given and
    ``use_errors`` is set, divided by the combined variance (zero errors are
    raised to the smallest positive one).  The result is
    the weighted mean of the terms.  Parameters under which the total weight
    of the overlapping comparisons is below ``min_overlap`` times the number
    of possible point/other-size comparisons score ``inf``; otherwise a very
    small ``nu`` stretches x until the weight leaves a handful of terms.
    """
    sizes = data.sizes()
    if sizes.size < 2:
        raise ValueError("collapse needs at least 2 system sizes")
    if nu <= 0:
        raise ValueError("nu must be positive")
    x, y, dy = scaled_coordinates(data, t_c, nu, beta)
    positive = data.sem[data.sem > 0]
    weighted = use_errors and positive.size > 0
    if weighted and positive.size < data.sem.size:
        # all-zero samples (I = 0 in every trajectory) still carry uncertainty
        dy = np.maximum(data.sem, positive.min()) * data.N ** (2.0 * beta / nu)
    curves = {}
    for n in sizes:
        m = data.N == n
        order = np.argsort(x[m])
        curves[n] = (x[m][order], y[m][order], dy[m][order], m)
    total = 0.0
    norm = 0.0
    for n in sizes:
        _, _, _, m = curves[n]
        xs, ys, dys = x[m], y[m], dy[m]
        w = np.exp(-0.5 * (xs / width) ** 2)
        for other in sizes:
            if other == n:
                continue
            ox, oy, ody, _ = curves[other]
            inside = (xs >= ox[0]) & (xs <= ox[-1])
            if not inside.any():
                continue
            pred = np.interp(xs[inside], ox, oy)
            diff2 = (ys[inside] - pred) ** 2
            if weighted:
                diff2 = diff2 / (dys[inside] ** 2 + np.interp(xs[inside], ox, ody) ** 2)
            total += float(np.sum(w[inside] * diff2))
            norm += float(np.sum(w[inside]))
    if norm == 0 or norm < min_overlap * data.y.size * (sizes.size - 1):
        return math.inf
    return total / norm


def _bounds(data: ScalingDataset):
    return [(float(data.t.min()), float(data.t.max())), (0.05, NU_MAX), (0.0, 5.0)]


def _start_grid(guess) -> list[np.ndarray]:
    t0, nu0, b0 = guess
    starts = []
    for dt in (-0.25, 0.25):
        for fn in (0.75, 1.3):
            for fb in (0.6, 1.4):
                starts.append(np.array([t0 + dt, nu0 * fn, b0 * fb + 0.02]))
    return starts


def _minimize(data, start, width, use_errors, bounds, max_iter):
    def objective(p):
        return collapse_residual(data, p[0], p[1], p[2], width, use_errors)

    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    start = np.clip(start, lo + 1e-9, hi - 1e-9)
    res = minimize(
        objective, start, method="Nelder-Mead", bounds=bounds,
        options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": max_iter, "maxfev": 4 * max_iter},
    )
    # converged when the simplex diameter is below 1e-4 relative to the parameters
    simplex = res.final_simplex[0]
    diam = np.max(np.abs(simplex - simplex[0]), axis=0)
    ok = bool(np.all(diam <= 1e-4 * np.maximum(np.abs(simplex[0]), 1e-2)))
    return res.x, float(res.fun), ok


def fit_collapse(
    data: ScalingDataset, initial_guess=(2.0, 2.0, 0.3), width: float = WEIGHT_WIDTH, use_errors: bool = True,
    restarts: bool = True, max_iter: int = 2000,
) -> CollapseFit:
    """Best ``(t_c, nu, beta)`` by Nelder-Mead, restarted from 8 nearby points."""
    if data.sizes().size < 3:
        raise ValueError(f"collapse fit needs at least 3 system sizes, got {data.sizes().size}")
    bounds = _bounds(data)
    starts = [np.asarray(initial_guess, dtype=float)]
    if restarts:
        starts += _start_grid(initial_guess)
    best = None
    for s in starts:
        x, f, ok = _minimize(data, s, width, use_errors, bounds, max_iter)
        if best is None or f < best[1]:
            best = (x, f, ok)
    x, f, ok = best
    if not ok:
        # polish from the best point; report non-convergence if it persists
        x, f2, ok = _minimize(data, x, width, use_errors, bounds, max_iter)
        f = min(f, f2)
    return CollapseFit(float(x[0]), float(x[1]), float(x[2]), f, ok)


@dataclass
class BootstrapResult:
    params: np.ndarray  # (n_boot, 3): t_c, nu, beta
    seed: int
    fraction: float

    @property
    def mean(self) -> dict[str, float]:
        return dict(zip(("t_c", "nu", "beta"), map(float, self.params.mean(axis=0))))

    @property
    def std(self) -> dict[str, float]:
        ddof = 1 if len(self.params) > 1 else 0
        return dict(zip(("t_c", "nu", "beta"), map(float, self.params.std(axis=0, ddof=ddof))))


def resample(samples: dict[tuple[int, float], np.ndarray], fraction: float, rng: np.random.Generator) -> ScalingDataset:
    """Draw ``floor(fraction n)`` trajectories with replacement per ``(N, t)``."""
    Ns, ts, ys, sems = [], [], [], []
    for key in sorted(samples):
        v = np.asarray(samples[key], dtype=float)
        k = max(1, int(math.floor(fraction * v.size)))
        pick = v[rng.integers(0, v.size, size=k)]
        Ns.append(key[0])
        ts.append(key[1])
        ys.append(pick.mean())
        sems.append(pick.std(ddof=1) / math.sqrt(k) if k > 1 else 0.0)
    return ScalingDataset(np.array(Ns), np.array(ts), np.array(ys), np.array(sems))


def bootstrap_collapse(
    data: ScalingDataset, n_boot: int = 1000, resample_fraction: float = 0.5, seed: int = 0,
    initial_guess=None, width: float = WEIGHT_WIDTH, use_errors: bool = True,
) -> BootstrapResult:
    """Refit collapses on trajectory resamples; replicate ``r`` uses stream ``(seed, r)``."""
    if not data.samples:
        raise ValueError("bootstrap needs trajectory-level samples")
    if initial_guess is None:
        initial_guess = fit_collapse(data, width=width, use_errors=use_errors).params
    out = np.empty((n_boot, 3))
    for r in range(n_boot):
        rng = np.random.default_rng([seed, r])
        rep = resample(data.samples, resample_fraction, rng)
        fit = fit_collapse(rep, initial_guess, width, use_errors, restarts=False)
        out[r] = fit.params
    return BootstrapResult(out, seed, resample_fraction)


@dataclass
class KtFit:
    a: float
    b: float
    lse: float
    lse_over_variance: float


def kt_form(N, a: float, b: float):
    return a * np.exp(1.0 / (np.log(N) + b))


def kt_fit_at_time(N, y) -> KtFit:
    """Fit ``y = a exp(1/(ln N + b))``; ``lse`` is the mean squared residual.

    ``b`` is kept above ``0.1 - ln N_min`` so the form stays finite.
    """
    N = np.asarray(N, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(N).size < 3:
        raise ValueError("KT fit needs at least 3 system sizes")
    var = float(np.var(y))
    if var <= 1e-24 * max(1.0, float(np.mean(y)) ** 2):
        raise ValueError("all means equal: LSE/variance ratio undefined")
    b_lo = 0.1 - math.log(N.min())

    def resid(p):
        return kt_form(N, p[0], p[1]) - y

    best = None
    for b0 in (b_lo + 0.5, 0.0, 1.0, 5.0, 20.0):
        b0 = max(b0, b_lo + 1e-3)
        basis = np.exp(1.0 / (np.log(N) + b0))
        a0 = float(basis @ y / (basis @ basis))
        res = least_squares(resid, [a0, b0], bounds=([-np.inf, b_lo], [np.inf, np.inf]),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
        if best is None or res.cost < best.cost:
            best = res
    lse = float(np.mean(best.fun ** 2))
    return KtFit(float(best.x[0]), float(best.x[1]), lse, lse / var)


@dataclass
class KtScan:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ratio: np.ndarray
    t_c: float
    t_lo: float
    t_hi: float

    @property
    def error(self) -> float:
        return max(self.t_c - self.t_lo, self.t_hi - self.t_c)


def kt_scan(data: ScalingDataset) -> KtScan:
    """KT fit at every time; ``t_c`` minimises LSE/variance, its error bar spans
    the times with ratio within twice the minimum."""
    ts, a_s, b_s, ratios = [], [], [], []
    for t in np.unique(data.t):
        m = np.isclose(data.t, t)
        if np.unique(data.N[m]).size < 3:
            continue
        try:
            fit = kt_fit_at_time(data.N[m], data.y[m])
        except ValueError:
            continue
        ts.append(t)
        a_s.append(fit.a)
        b_s.append(fit.b)
        ratios.append(fit.lse_over_variance)
    if not ts:
        raise ValueError("no time slice has 3 sizes with varying means")
    ts, ratios = np.array(ts), np.array(ratios)
    k = int(np.argmin(ratios))
    good = ts[ratios <= 2 * ratios[k] + 1e-300]
    return KtScan(ts, np.array(a_s), np.array(b_s), ratios, float(ts[k]), float(good.min()), float(good.max()))


@dataclass
class Crossing:
    N1: int
    N2: int
    t: float | None  # None: no significant crossing


def crossing_scan(data: ScalingDataset, threshold: float = 2.0) -> list[Crossing]:
    """Where does the larger system overtake (or drop below) the smaller one?

    For each consecutive pair of sizes the difference ``I_N2 - I_N1`` is taken
    on the common times.  Only points where it exceeds ``threshold`` combined
    standard errors count; a crossing is a sign change between two
    consecutive significant points, located by linear interpolation of the
    last sign change of the difference between them.
    """
    sizes = data.sizes()
    if sizes.size < 2:
        raise ValueError("crossing scan needs at least 2 system sizes")
    out = []
    for n1, n2 in zip(sizes[:-1], sizes[1:]):
        t1, y1, s1 = data.curve(n1)
        t2, y2, s2 = data.curve(n2)
        lo, hi = max(t1[0], t2[0]), min(t1[-1], t2[-1])
        grid = np.union1d(t1, t2)
        grid = grid[(grid >= lo - 1e-12) & (grid <= hi + 1e-12)]
        if grid.size < 2:
            raise ValueError(f"sizes {n1} and {n2} have no overlapping times")
        diff = np.interp(grid, t2, y2) - np.interp(grid, t1, y1)
        sig = np.sqrt(np.interp(grid, t1, s1) ** 2 + np.interp(grid, t2, s2) ** 2)
        significant = np.nonzero(np.abs(diff) > threshold * sig)[0]
        found = None
        for a, b in zip(significant[:-1], significant[1:]):
            if np.sign(diff[a]) != np.sign(diff[b]):
                seg = diff[a:b + 1]
                k = a + int(np.nonzero(np.sign(seg[:-1]) != np.sign(seg[1:]))[0][-1])
                d0, d1 = diff[k], diff[k + 1]
                found = float(grid[k] + (grid[k + 1] - grid[k]) * d0 / (d0 - d1)) if d0 != d1 else float(grid[k])
                break
        out.append(Crossing(int(n1), int(n2), found))
    return out


def collapse_points(data: ScalingDataset, fit: CollapseFit) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, y, _ = scaled_coordinates(data, fit.t_c, fit.nu, fit.beta)
    return x, y, data.N

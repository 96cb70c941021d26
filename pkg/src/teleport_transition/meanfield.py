"""Mean-field solution of the all-to-all effective Ising model.

Decoupling the all-to-all couplings leaves, for every site, an open 1-d
classical Ising chain running along imaginary time: ``N_t`` time steps of
``N - 1`` spins each, bond coupling ``Jt = -ln(h)/2`` with
``h = 2 dt / (5 (N - 1))``, and on every spin of step ``tau`` the field
``J_zz Psi_tau + h_z dt / (N - 1)`` with ``J_zz = 4 dt / (5 (N - 1))``.
``Psi_tau`` is fixed self-consistently as the average magnetisation of the
spins in step ``tau``.  Nearest-step correlations are set to one, the leading
order in ``1/N``.

Within a time step all spins feel the same field, so the chain is handled
block by block with 2x2 transfer matrices diagonalised in closed form
(:func:`block_magnetization`).  :func:`chain_magnetization` is the plain
spin-by-spin version used to check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

ZZ_COEFF = 2 / 5
YY_COEFF = 1 / 10
X_COEFF = 1 / 5
#: boundary field from the overlap of the swap/identity boundary states
BOUNDARY_FIELD = math.log(math.sqrt(1.5) - math.sqrt(0.5))


@dataclass(frozen=True)
class EffectiveCouplings:
    """Coefficients of the effective Hamiltonian per unit ``J_ij``."""

    J: np.ndarray
    zz: float = ZZ_COEFF
    yy: float = YY_COEFF
    x: float = X_COEFF
    boundary_field: float = BOUNDARY_FIELD

    @classmethod
    def from_geometry(cls, geometry) -> "EffectiveCouplings":
        from .geometry import couplings

        return cls(couplings(geometry))


@dataclass(frozen=True)
class MfParams:
    N: int = 200
    dt: float = 0.02
    t: float = 2.0
    tol: float = 1e-8
    damping: float = 0.5
    max_iter: int = 10_000
    h_z: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.dt <= 0 or self.t <= 0:
            raise ValueError("dt and t must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if abs(self.t / self.dt - round(self.t / self.dt)) > 1e-9:
            raise ValueError(f"t={self.t} is not a whole number of steps dt={self.dt}")
        if self.h >= 0.5:
            raise ValueError(f"h={self.h} >= 1/2 gives a non-ferromagnetic chain; lower dt or raise N")

    @property
    def n_steps(self) -> int:
        return int(round(self.t / self.dt))

    @property
    def h(self) -> float:
        return 2 * self.dt / (5 * (self.N - 1))

    @property
    def bond(self) -> float:
        return -math.log(self.h) / 2

    @property
    def j_zz(self) -> float:
        return 4 * self.dt / (5 * (self.N - 1))

    @property
    def field_per_spin(self) -> float:
        return self.h_z * self.dt / (self.N - 1)

    def at_time(self, t: float) -> "MfParams":
        """Same settings at total time ``t``; dt shrinks so ``t/dt`` is whole."""
        steps = max(1, math.ceil(t / self.dt - 1e-9))
        return replace(self, t=t, dt=t / steps)


@dataclass
class MagnetizationProfile:
    psi: np.ndarray
    iterations: int
    converged: bool
    params: MfParams
    phi: float = 1.0

    @property
    def global_psi(self) -> float:
        return float(np.mean(self.psi))


def chain_magnetization(bond: float, fields) -> np.ndarray:
    """Exact ``<s_k>`` of the open chain ``H = sum -bond s_k s_k+1 - f_k s_k``.

    Left and right environment vectors are renormalised at every step, so
    large couplings do not overflow.
    """
    f = np.asarray(fields, dtype=float)
    K = f.size
    if K < 1:
        raise ValueError("chain needs at least one spin")
    if not np.all(np.isfinite(f)):
        raise ValueError("fields must be finite")
    spins = np.array([1.0, -1.0])
    T = np.exp(bond * np.outer(spins, spins) - abs(bond))
    left = np.empty((K, 2))
    right = np.empty((K, 2))
    env = np.ones(2)
    for k in range(K):
        left[k] = env
        env = T @ (env * np.exp(f[k] * spins - abs(f[k])))
        env /= env.sum()
    env = np.ones(2)
    for k in range(K - 1, -1, -1):
        right[k] = env
        env = T @ (env * np.exp(f[k] * spins - abs(f[k])))
        env /= env.sum()
    w = left * right * np.exp(f[:, None] * spins - np.abs(f)[:, None])
    return (w[:, 0] - w[:, 1]) / (w[:, 0] + w[:, 1])


@numba.njit(cache=True)
def _block_means(bond, fields, m):
    # Per block: A = D^1/2 T D^1/2 scaled by e^-bond, eigenvalues
    # l1 > l2 > 0, eigenvectors rotated by theta.
    nb = fields.shape[0]
    b = math.exp(-2.0 * bond)
    c2 = np.empty(nb)
    s2 = np.empty(nb)
    ct = np.empty(nb)
    st = np.empty(nb)
    xm = np.empty(nb)
    xm1 = np.empty(nb)
    geo = np.empty(nb)
    for k in range(nb):
        f = fields[k]
        root = math.sqrt(math.sinh(f) ** 2 + b * b)
        l1 = math.cosh(f) + root
        gap = 2.0 * root / l1  # 1 - l2/l1
        logx = math.log1p(-gap)
        xm[k] = math.exp(m * logx)
        xm1[k] = math.exp((m - 1) * logx)
        geo[k] = -math.expm1(m * logx) / gap
        th = 0.5 * math.atan2(2.0 * b, 2.0 * math.sinh(f))
        ct[k] = math.cos(th)
        st[k] = math.sin(th)
        c2[k] = math.cos(2.0 * th)
        s2[k] = math.sin(2.0 * th)

    def propagate(k, v0, v1):
        # (T D)^m v = D^-1/2 V diag(1, x^m) V^T D^1/2 v
        e = math.exp(0.5 * fields[k])
        u0 = v0 * e
        u1 = v1 / e
        a0 = ct[k] * u0 + st[k] * u1
        a1 = (-st[k] * u0 + ct[k] * u1) * xm[k]
        w0 = (ct[k] * a0 - st[k] * a1) / e
        w1 = (st[k] * a0 + ct[k] * a1) * e
        tot = w0 + w1
        return w0 / tot, w1 / tot

    left = np.empty((nb, 2))
    right = np.empty((nb, 2))
    v0, v1 = 1.0, 1.0
    for k in range(nb):
        left[k, 0] = v0
        left[k, 1] = v1
        v0, v1 = propagate(k, v0, v1)
    v0, v1 = 1.0, 1.0
    for k in range(nb - 1, -1, -1):
        right[k, 0] = v0
        right[k, 1] = v1
        v0, v1 = propagate(k, v0, v1)

    out = np.empty(nb)
    for k in range(nb):
        e = math.exp(0.5 * fields[k])
        u0 = left[k, 0] * e
        u1 = left[k, 1] / e
        r0 = right[k, 0] * e
        r1 = right[k, 1] / e
        a0 = ct[k] * u0 + st[k] * u1
        a1 = -st[k] * u0 + ct[k] * u1
        b0 = ct[k] * r0 + st[k] * r1
        b1 = -st[k] * r0 + ct[k] * r1
        num = c2[k] * m * a0 * b0 - s2[k] * geo[k] * (a0 * b1 + a1 * b0) - c2[k] * m * xm1[k] * a1 * b1
        z = a0 * b0 + xm1[k] * a1 * b1
        out[k] = num / (m * z)
    return out


def block_magnetization(bond: float, block_fields, block_length: int) -> np.ndarray:
    """Mean ``<s>`` within each block of an open chain of equal-length,
    uniform-field blocks (chain length ``len(block_fields) * block_length``).
    """
    f = np.ascontiguousarray(block_fields, dtype=float)
    if block_length < 1 or f.size < 1:
        raise ValueError("need at least one block of at least one spin")
    if bond <= 0:
        raise ValueError("bond coupling must be ferromagnetic")
    return _block_means(float(bond), f, int(block_length))


@numba.njit(cache=True)
def _iterate(bond, jzz, hfield, m, psi, damping, tol, max_iter):
    fields = np.empty(psi.shape[0])
    for it in range(1, max_iter + 1):
        for k in range(psi.shape[0]):
            fields[k] = jzz * psi[k] + hfield
        new = _block_means(bond, fields, m)
        delta = 0.0
        for k in range(psi.shape[0]):
            d = abs(new[k] - psi[k])
            if d > delta:
                delta = d
            psi[k] = (1.0 - damping) * psi[k] + damping * new[k]
        if delta < tol:
            return psi, it, True
    return psi, max_iter, False


def solve_self_consistency(params: MfParams, init: float | np.ndarray = 0.5) -> MagnetizationProfile:
    """Damped fixed-point iteration for the per-step magnetisations ``Psi_tau``."""
    psi = np.empty(params.n_steps)
    psi[:] = init
    psi, iters, ok = _iterate(
        params.bond, params.j_zz, params.field_per_spin, params.N - 1, psi,
        params.damping, params.tol, params.max_iter,
    )
    return MagnetizationProfile(psi.copy(), int(iters), bool(ok), params)


@dataclass
class CriticalScan:
    t: np.ndarray
    psi: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    t_c: float | None
    eps: float
    profiles: list = field(default_factory=list, repr=False)

    @property
    def has_transition(self) -> bool:
        return self.t_c is not None


def scan_critical_time(
    params: MfParams, t_grid, eps: float = 1e-3, resolution: float = 1e-3, bisect_max_iter: int = 200_000
) -> CriticalScan:
    """Global ``Psi(t)`` on a grid and the onset time where it first exceeds ``eps``.

    The onset is bisected to ``resolution``.  Close to the transition the
    iteration slows down critically, so bisection solves get
    ``bisect_max_iter`` iterations; otherwise a slowly decaying disordered
    solution would still sit above ``eps`` and bias the onset low.
    When ``Psi > eps`` at the first grid point, or nowhere, ``t_c`` is None.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be increasing with at least two points")
    profiles = [solve_self_consistency(params.at_time(t)) for t in t_grid]
    psi = np.array([p.global_psi for p in profiles])
    conv = np.array([p.converged for p in profiles])
    iters = np.array([p.iterations for p in profiles])
    above = np.nonzero(psi > eps)[0]
    t_c = None
    if above.size and above[0] > 0:
        lo, hi = t_grid[above[0] - 1], t_grid[above[0]]
        slow = replace(params, max_iter=max(params.max_iter, bisect_max_iter))
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if solve_self_consistency(slow.at_time(mid)).global_psi > eps:
                hi = mid
            else:
                lo = mid
        t_c = 0.5 * (lo + hi)
    return CriticalScan(t_grid, psi, conv, iters, t_c, eps, profiles)


def linear_response_radius(params: MfParams, step: float = 1e-7) -> float:
    """Largest eigenvalue of the linearised self-consistency map at ``Psi = 0``.

    Columns of the Jacobian come from central differences of the block
    magnetisations; the disordered solution loses stability where this
    crosses one.
    """
    nt = params.n_steps
    m = params.N - 1
    jac = np.empty((nt, nt))
    base = np.full(nt, params.field_per_spin)
    for k in range(nt):
        d = np.zeros(nt)
        d[k] = step
        jac[:, k] = (block_magnetization(params.bond, base + d, m) - block_magnetization(params.bond, base - d, m)) / (2 * step)
    return float(np.max(np.linalg.eigvalsh(params.j_zz * 0.5 * (jac + jac.T))))


def critical_time_from_stability(params: MfParams, t_lo: float = 1.0, t_hi: float = 3.0, xtol: float = 1e-4) -> float:
    """Time at which the disordered fixed point turns unstable (radius = 1)."""
    from scipy.optimize import brentq

    return float(brentq(lambda t: linear_response_radius(params.at_time(t)) - 1.0, t_lo, t_hi, xtol=xtol))


@dataclass
class ExponentFit:
    value: float
    stderr: float
    sensitivity: float
    n_points: int
    prefactor: float


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    n = lx.size
    resid = ly - A @ coef
    s2 = resid @ resid / max(n - 2, 1)
    stderr = math.sqrt(s2 / np.sum((lx - lx.mean()) ** 2))
    return float(coef[0]), stderr, float(math.exp(coef[1]))


def fit_beta(t, psi, t_c: float, window: float = 0.5) -> ExponentFit:
    """Exponent of ``Psi = c (t - t_c)^beta`` from points with ``0 < t - t_c <= window``.

    ``sensitivity`` is the spread of the estimate when the window is cut to
    its first or last two thirds.
    """
    t = np.asarray(t, dtype=float)
    psi = np.asarray(psi, dtype=float)
    sel = (t - t_c > 0) & (t - t_c <= window) & (psi > 0)
    if sel.sum() < 6:
        raise ValueError(f"need >= 6 points with 0 < t - t_c <= {window}, got {int(sel.sum())}")
    x, y = t[sel] - t_c, psi[sel]
    beta, se, c = _loglog_slope(x, y)
    k = max(4, int(round(2 * x.size / 3)))
    alt = [_loglog_slope(x[:k], y[:k])[0], _loglog_slope(x[-k:], y[-k:])[0]]
    return ExponentFit(beta, se, float(max(abs(a - beta) for a in alt)), int(x.size), c)


def fit_delta(h_z, psi) -> ExponentFit:
    """``delta`` from ``h_z ~ Psi^delta``: inverse slope of ln Psi against ln h_z."""
    h_z = np.asarray(h_z, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if h_z.size < 3 or np.any(h_z <= 0) or np.any(psi <= 0):
        raise ValueError("need >= 3 positive field values with positive magnetisation")
    slope, se, c = _loglog_slope(h_z, psi)
    k = max(3, int(round(2 * h_z.size / 3)))
    alt = [1 / _loglog_slope(h_z[:k], psi[:k])[0], 1 / _loglog_slope(h_z[-k:], psi[-k:])[0]]
    delta = 1 / slope
    return ExponentFit(delta, se / slope**2, float(max(abs(a - delta) for a in alt)), int(h_z.size), c)


def field_response(params: MfParams, t_c: float, h_z_grid) -> np.ndarray:
    """Global ``Psi`` at ``t_c`` for each symmetry-breaking field (started at 0)."""
    base = params.at_time(t_c)
    out = []
    for hz in h_z_grid:
        prof = solve_self_consistency(replace(base, h_z=float(hz)), init=0.0)
        if not prof.converged:
            raise RuntimeError(f"self-consistency did not converge at h_z={hz}")
        out.append(prof.global_psi)
    return np.array(out)


def order_parameter_correlation(profile: MagnetizationProfile) -> float:
    """Factorised ``<s_A s_B>`` proxy: first- times last-step magnetisation."""
    return float(profile.psi[0] * profile.psi[-1])


def analytic_haar_projector() -> np.ndarray:
    """Exact single-qubit average of ``(U x U*)^(x2)`` on the 16-dim replica space.

    Basis index ``(a, b, c, d)`` for ``U_a.. U*_b.. U_c.. U*_d..``.
    """
    I_vec = np.zeros(16)
    C_vec = np.zeros(16)
    for a in range(2):
        for b in range(2):
            I_vec[8 * a + 4 * a + 2 * b + b] = 1  # |a a b b>
            C_vec[8 * a + 4 * b + 2 * b + a] = 1  # |a b b a>
    return (
        np.outer(I_vec, I_vec) / 3 + np.outer(C_vec, C_vec) / 3
        - np.outer(I_vec, C_vec) / 6 - np.outer(C_vec, I_vec) / 6
    )


def haar_unitaries(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random 2x2 unitaries (QR of Ginibre matrices, phases fixed)."""
    g = (rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def haar_projector_check(n_samples: int, rng: np.random.Generator, batch: int = 20_000) -> float:
    """Max elementwise gap between the Monte-Carlo and analytic projector."""
    if n_samples < 1000:
        raise ValueError("use at least 1000 samples")
    acc = np.zeros((16, 16), dtype=complex)
    done = 0
    while done < n_samples:
        k = min(batch, n_samples - done)
        u = haar_unitaries(k, rng)
        uu = np.einsum("nij,nkl->nikjl", u, u.conj()).reshape(k, 4, 4)
        acc += np.einsum("nij,nkl->ikjl", uu, uu).reshape(16, 16)
        done += k
    return float(np.max(np.abs(acc / n_samples - analytic_haar_projector())))

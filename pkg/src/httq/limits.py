"""Samplers and solvers for the two diffusion-limit regimes.

Below the critical scale (alpha < 1) the limit solves a reflected
equation driven by two independent Brownian motions:

    x(t) = xi + e(t) - sqrt(mu) s(t) + beta mu t
           - mu int_0^t f(x(u)^+ / mu) du + ell(t),    x >= 0,

handled by the reflected map with g(x) = mu f(x/mu).  At the critical
scale (alpha = 1) the limit is unreflected but remembers the service
law H through its renewal function M:

    x(t) = xi + e(t) - s(t) + beta mu t + xi^- (mu t - M(t))
           + int_0^t (x(t-u))^- dM(u) - mu int_0^t f(x(u)^+ / mu) du,

where s is a zero-mean Gaussian process built from two independent
sources of service-time fluctuation: the residual services of the
initially busy servers (equilibrium law H_e) and the services of
customers entering later at the fluid pace mu n.  Writing z for the
sum of those two centered indicator fields, s(t) = -(z(t) +
int_0^t z(t-u) dM(u)), which gives the covariance

    Cov[s(a), s(b)] = (A C A^T)_{ab},   A = I + (right-endpoint dM conv),
    C(a, b) = H_e(a^b) H_e^c(avb) + mu int_0^{a^b} H(a^b - r) H^c(avb - r) dr

on the renewal table's lattice (a^b = min, avb = max).  The same
discrete convolution operator A is reused by the finite-n replica
construction, so comparisons between the two are free of quadrature
bias.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .distributions import DistributionSpec
from .maps import (
    MappingSolution,
    _phi_mg_picard,
    _skorokhod_euler,
    _vectorize_g,
    solve_phi_Mg,
    solve_skorokhod_g,
)
from .paths import CadlagPath, linear_path
from .renewal import RenewalTable, equilibrium_distribution
from .streams import make_rng

__all__ = [
    "NoiseSample",
    "LimitSolution",
    "ServiceCovariance",
    "covariance_S",
    "sample_brownian",
    "sample_gaussian_S",
    "sample_noise",
    "solve_limit_case_i",
    "solve_limit_case_ii",
    "sample_case_i_paths",
    "sample_case_ii_paths",
    "sample_service_noise_finite_n",
]

JITTERS = (0.0, 1e-12, 1e-10, 1e-8)


def _check_noise_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a one-dimensional array of times")
    if grid[0] != 0.0 or (grid.size > 1 and np.any(np.diff(grid) <= 0)):
        raise ValueError("grid must start at 0 and increase strictly")
    return grid


# ---------------------------------------------------------------------------
# driving noises


def _brownian_batch(rng: np.random.Generator, variance_rate: float,
                    grid: np.ndarray, reps: int) -> np.ndarray:
    out = np.zeros((reps, grid.size))
    if variance_rate > 0 and grid.size > 1:
        sd = np.sqrt(variance_rate * np.diff(grid))
        out[:, 1:] = np.cumsum(rng.standard_normal((reps, grid.size - 1)) * sd, axis=1)
    return out


def sample_brownian(variance_rate: float, grid, stream: np.random.Generator) -> CadlagPath:
    """Brownian path on the grid: independent N(0, rate * dt) increments."""
    if variance_rate < 0:
        raise ValueError("variance rate must be nonnegative")
    grid = _check_noise_grid(grid)
    vals = _brownian_batch(stream, variance_rate, grid, 1)[0]
    return linear_path(grid, vals, float(grid[-1]))


# ---------------------------------------------------------------------------
# the Gaussian service noise at the critical scale


def _stieltjes_matrix(w: np.ndarray) -> np.ndarray:
    """A = I + lower Toeplitz of dM: (A z)_k = z_k + sum_{j>=1} w_j z_{k-j}."""
    col = np.concatenate(([1.0], w))
    return scipy.linalg.toeplitz(col, np.zeros_like(col))


def _table_key(table: RenewalTable) -> tuple:
    digest = hashlib.sha256(np.ascontiguousarray(table.values).tobytes()).hexdigest()[:16]
    return (table.H, table.step, table.times.size, digest)


class ServiceCovariance:
    """Covariance model of the critical-scale service noise on a lattice.

    Built once per renewal table; grids handed to `marginal`, `sampler`
    or `covariance` must be sub-lattices of the table's.
    """

    def __init__(self, table: RenewalTable):
        self.table = table
        self.H = table.H
        self.mu = table.rate()
        t = table.times
        h = table.step
        m = t.size - 1
        eq = equilibrium_distribution(self.H)
        he = np.asarray(eq.cdf(t), dtype=float)
        hec = 1.0 - he
        # midpoint rule for J[i, d] = int_0^{t_i} H(u) H^c(u + t_d) du:
        # exact for lattice-aligned atoms, second order for smooth H
        mids = (np.arange(2 * m, dtype=float) + 0.5) * h
        h_mid = np.asarray(self.H.cdf(mids[:m]), dtype=float)
        hc_mid = 1.0 - np.asarray(self.H.cdf(mids), dtype=float)
        ks = np.arange(m)[:, None]
        ds = np.arange(m + 1)[None, :]
        prod = h_mid[:, None] * hc_mid[ks + ds]
        J = h * np.vstack([np.zeros(m + 1), np.cumsum(prod, axis=0)])
        ii = np.arange(m + 1)[:, None]
        jj = np.arange(m + 1)[None, :]
        lo = np.minimum(ii, jj)
        hi = np.maximum(ii, jj)
        C = he[lo] * hec[hi] + self.mu * J[lo, hi - lo]
        A = _stieltjes_matrix(np.diff(table.values))
        cov = A @ C @ A.T
        self.matrix = 0.5 * (cov + cov.T)
        self._cholesky_cache: dict = {}

    def _indices(self, grid) -> np.ndarray:
        return self.table._indices_on(np.asarray(grid, dtype=float))

    def covariance(self, s: float, t: float) -> float:
        idx = self._indices([min(s, t), max(s, t)])
        return float(self.matrix[idx[0], idx[1]])

    def marginal(self, grid) -> np.ndarray:
        idx = self._indices(grid)
        return self.matrix[np.ix_(idx, idx)]

    def cholesky(self, grid) -> tuple[np.ndarray, float]:
        """Lower factor of the covariance on grid[1:], with the jitter used."""
        grid = np.asarray(grid, dtype=float)
        key = grid.tobytes()
        hit = self._cholesky_cache.get(key)
        if hit is not None:
            return hit
        if grid[0] != 0.0:
            raise ValueError("noise grids must start at 0")
        sub = self.marginal(grid[1:]) if grid.size > 1 else np.zeros((0, 0))
        err = None
        for jit in JITTERS:
            try:
                L = scipy.linalg.cholesky(
                    sub + jit * np.eye(sub.shape[0]), lower=True
                ) if sub.size else sub
                self._cholesky_cache[key] = (L, jit)
                return L, jit
            except scipy.linalg.LinAlgError as exc:
                err = exc
        raise RuntimeError(
            f"covariance factorization failed even at jitter {JITTERS[-1]:g}: {err}"
        )

    def sample_batch(self, grid, rng: np.random.Generator, reps: int) -> np.ndarray:
        grid = _check_noise_grid(grid)
        L, _ = self.cholesky(grid)
        out = np.zeros((reps, grid.size))
        if grid.size > 1:
            out[:, 1:] = rng.standard_normal((reps, grid.size - 1)) @ L.T
        return out


_covariance_cache: dict = {}


def _covariance_model(M: RenewalTable, H: DistributionSpec | None = None) -> ServiceCovariance:
    if H is not None and H != M.H:
        raise ValueError("renewal table was built from a different service law")
    key = _table_key(M)
    model = _covariance_cache.get(key)
    if model is None:
        model = ServiceCovariance(M)
        _covariance_cache[key] = model
    return model


def covariance_S(s: float, t: float, M: RenewalTable, H: DistributionSpec) -> float:
    """Covariance of the critical-scale service noise at lattice times s, t.

    Symmetric in (s, t); both must be aligned with M's table.
    """
    if min(s, t) < 0 or max(s, t) > M.horizon + 1e-9:
        raise ValueError("times must lie within the renewal table horizon")
    return _covariance_model(M, H).covariance(s, t)


def sample_gaussian_S(M: RenewalTable, H: DistributionSpec, grid,
                      stream: np.random.Generator) -> CadlagPath:
    """One sample path of the critical-scale service noise on the grid."""
    grid = _check_noise_grid(grid)
    vals = _covariance_model(M, H).sample_batch(grid, stream, 1)[0]
    return linear_path(grid, vals, float(grid[-1]))


def sample_service_noise_finite_n(M: RenewalTable, H: DistributionSpec, n: int,
                                  grid, rng: np.random.Generator,
                                  reps: int) -> np.ndarray:
    """Direct finite-n replica of the service noise, (reps, len(grid)).

    Each replication builds the two centered indicator fields from n
    equilibrium residual draws and floor(mu n T) fresh services entering
    at the fluid pace, then applies the same discrete dM convolution as
    the covariance model.
    """
    if H != M.H:
        raise ValueError("renewal table was built from a different service law")
    grid = _check_noise_grid(grid)
    t = M.times[M.times <= grid[-1] + 1e-12]
    idx = M._indices_on(grid)
    mu = M.rate()
    sqn = math.sqrt(n)
    eq = equilibrium_distribution(H)

    n_ent = int(math.floor(mu * n * t[-1] + 1e-9))
    tau = np.arange(1, n_ent + 1) / (mu * n)
    m_at = np.floor(mu * n * t + 1e-9).astype(int)
    # deterministic centerings, shared by every replication
    w_center = n * np.asarray(eq.survival(t), dtype=float)
    hc_tail = np.zeros(t.size)
    for k in range(t.size):
        hc_tail[k] = float(np.sum(1.0 - np.asarray(H.cdf(t[k] - tau[: m_at[k]]), dtype=float)))

    A = _stieltjes_matrix(np.diff(M.values_on(t)))
    out = np.empty((reps, t.size))
    for r in range(reps):
        u = np.sort(eq.sample(rng, n))
        w_part = (n - np.searchsorted(u, t, side="right")) - w_center
        d = np.sort(tau + H.sample(rng, n_ent))
        m_part = (m_at - np.searchsorted(d, t, side="right")) - hc_tail
        z = (w_part + m_part) / sqn
        out[r] = -(A @ z)
    return out[:, idx]


# ---------------------------------------------------------------------------
# noise bundles


@dataclass(frozen=True)
class NoiseSample:
    """A pair of driving-noise paths with their generation metadata."""

    E: CadlagPath
    S: CadlagPath
    seed: int | None = None
    covariance_source: str = "brownian"
    jitter: float = 0.0

    def __post_init__(self):
        if abs(self.E(0.0)) > 1e-12 or abs(self.S(0.0)) > 1e-12:
            raise ValueError("noise paths must start at 0")


def sample_noise(case: str, mu: float, ca2: float, grid, seed: int,
                 replication: int = 0, M: RenewalTable | None = None,
                 H: DistributionSpec | None = None) -> NoiseSample:
    """Draw the driving pair (E, S) for one limit equation.

    E is Brownian with variance rate mu * ca2 in both cases.  S is a
    standard Brownian motion for case "i" and the renewal-coupled
    Gaussian service noise for case "ii" (which needs M and H).  The two
    use separate derived streams, so they are independent.
    """
    grid = _check_noise_grid(grid)
    rng_e = make_rng(seed, replication, "arrivals")
    rng_s = make_rng(seed, replication, "gaussian")
    e_path = sample_brownian(mu * ca2, grid, rng_e)
    if case == "i":
        s_path = sample_brownian(1.0, grid, rng_s)
        return NoiseSample(e_path, s_path, seed=seed, covariance_source="brownian")
    if case == "ii":
        if M is None:
            raise ValueError("case 'ii' needs the renewal table M")
        model = _covariance_model(M, H)
        _, jitter = model.cholesky(grid)
        vals = model.sample_batch(grid, rng_s, 1)[0]
        s_path = linear_path(grid, vals, float(grid[-1]))
        return NoiseSample(e_path, s_path, seed=seed,
                           covariance_source="renewal-gaussian", jitter=jitter)
    raise ValueError(f"unknown case {case!r}; use 'i' or 'ii'")


# ---------------------------------------------------------------------------
# limit equations


@dataclass(frozen=True)
class LimitSolution:
    """Solved limit path with the regulator's certificates."""

    case: str
    x: CadlagPath
    ell: CadlagPath | None
    residual: float
    grid: np.ndarray = field(repr=False)
    diagnostics: dict = field(repr=False)
    inputs: NoiseSample | None = None


def _drift_g(f, mu: float):
    if f is None:
        return None

    def g(x, _f=f, _mu=mu):
        return _mu * np.asarray(_f(np.asarray(x, dtype=float) / _mu), dtype=float)

    return g


def solve_limit_case_i(xi: float, e_path: CadlagPath, s_path: CadlagPath,
                       beta: float, mu: float, f, grid,
                       inputs: NoiseSample | None = None) -> LimitSolution:
    """Reflected limit equation for the sub-critical regimes."""
    if xi < 0:
        raise ValueError("xi must be nonnegative in the reflected regime")
    grid = np.asarray(grid, dtype=float)
    y = (xi + e_path.sampled(grid) - math.sqrt(mu) * s_path.sampled(grid)
         + beta * mu * grid)
    sol = solve_skorokhod_g(y, _drift_g(f, mu), grid)
    return LimitSolution(case="i", x=sol.x, ell=sol.ell, residual=sol.residual,
                         grid=grid, diagnostics=dict(sol.diagnostics), inputs=inputs)


def solve_limit_case_ii(xi: float, e_path: CadlagPath, s_path: CadlagPath,
                        beta: float, mu: float, f, M: RenewalTable, grid,
                        tol: float = 1e-10,
                        inputs: NoiseSample | None = None) -> LimitSolution:
    """Critical-scale limit equation; residual is the quadrature defect."""
    grid = np.asarray(grid, dtype=float)
    xi_neg = max(-xi, 0.0)
    y = (xi + e_path.sampled(grid) - s_path.sampled(grid) + beta * mu * grid
         + xi_neg * (mu * grid - M.values_on(grid)))
    sol = solve_phi_Mg(y, M, _drift_g(f, mu), grid, tol=tol, g_sign=-1.0)
    diag = dict(sol.diagnostics)
    diag["closure_residual"] = sol.residual
    return LimitSolution(case="ii", x=sol.x, ell=None,
                         residual=diag["quadrature_defect"],
                         grid=grid, diagnostics=diag, inputs=inputs)


# ---------------------------------------------------------------------------
# batch marginal samplers for convergence sweeps


def sample_case_i_paths(xi: float, beta: float, mu: float, ca2: float, f,
                        grid, seed: int, reps: int,
                        replication: int = 0) -> np.ndarray:
    """(reps, len(grid)) array of reflected-limit sample paths."""
    if xi < 0:
        raise ValueError("xi must be nonnegative in the reflected regime")
    grid = _check_noise_grid(grid)
    h = float(grid[1] - grid[0])
    if np.any(np.abs(np.diff(grid) - h) > 1e-9 * max(1.0, h)):
        raise ValueError("batch solving needs a uniform grid")
    rng_e = make_rng(seed, replication, "arrivals")
    rng_s = make_rng(seed, replication, "gaussian")
    Y = (xi + _brownian_batch(rng_e, mu * ca2, grid, reps)
         - math.sqrt(mu) * _brownian_batch(rng_s, 1.0, grid, reps)
         + beta * mu * grid)
    X, _ = _skorokhod_euler(Y, _vectorize_g(_drift_g(f, mu)), h)
    return X


def sample_case_ii_paths(xi: float, beta: float, mu: float, ca2: float, f,
                         M: RenewalTable, grid, seed: int, reps: int,
                         replication: int = 0, tol: float = 1e-10) -> np.ndarray:
    """(reps, len(grid)) array of critical-scale limit sample paths."""
    grid = _check_noise_grid(grid)
    h = float(grid[1] - grid[0])
    if np.any(np.abs(np.diff(grid) - h) > 1e-9 * max(1.0, h)):
        raise ValueError("batch solving needs a uniform grid")
    rng_e = make_rng(seed, replication, "arrivals")
    rng_s = make_rng(seed, replication, "gaussian")
    model = _covariance_model(M)
    xi_neg = max(-xi, 0.0)
    Y = (xi + _brownian_batch(rng_e, mu * ca2, grid, reps)
         - model.sample_batch(grid, rng_s, reps)
         + beta * mu * grid
         + xi_neg * (mu * grid - M.values_on(grid)))
    w = M.increments_on(grid)
    X, _, _, _ = _phi_mg_picard(
        Y, w, _vectorize_g(_drift_g(f, mu)), h, -1.0, tol, "y"
    )
    return X

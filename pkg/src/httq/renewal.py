"""Renewal functions and equilibrium (stationary-excess) distributions.

The renewal function M(t) = E[number of renewals in (0, t]] solves
M = H + H * dM.  On a uniform grid the Riemann-Stieltjes trapezoid
discretization gives a stable forward recursion; the deterministic family is
dispatched to the exact lattice formula M(t) = floor(t / v) instead of
quadrature.

The equilibrium distribution H_e(x) = mu * int_0^x (1 - H(u)) du (mu the
reciprocal mean) is analytic for the exponential and deterministic families
and tabulated by cumulative trapezoid otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import DistributionSpec

__all__ = ["RenewalTable", "compute_renewal_function", "EquilibriumDistribution", "equilibrium_distribution"]


def _default_step(H: DistributionSpec) -> float:
    return min(1e-2, H.mean() / 20.0)


@dataclass(frozen=True)
class RenewalTable:
    """M tabulated on a uniform grid [0, horizon]."""

    H: DistributionSpec
    times: np.ndarray
    values: np.ndarray
    step: float
    method: str  # "trapezoid" | "lattice"

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def rate(self) -> float:
        """Reciprocal mean of H (the long-run renewal rate)."""
        return 1.0 / self.H.mean()

    def _indices_on(self, grid: np.ndarray) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        idx = np.rint(grid / self.step).astype(int)
        if np.any(np.abs(idx * self.step - grid) > 1e-9) or np.any(idx < 0) or np.any(idx >= self.times.size):
            raise ValueError("grid is not aligned with the renewal table (integer multiples of its step)")
        return idx

    def values_on(self, grid: np.ndarray) -> np.ndarray:
        """M at grid points; the grid must be a sub-grid of the table."""
        return self.values[self._indices_on(grid)]

    def increments_on(self, grid: np.ndarray) -> np.ndarray:
        """dM over the cells of an aligned grid: M(t_k) - M(t_{k-1}), k >= 1."""
        return np.diff(self.values_on(grid))

    def residual(self) -> float:
        """sup over the grid of |M - H - H * dM| under the scheme's quadrature."""
        m = self.times.size - 1
        dM = np.diff(self.values)
        if self.method == "lattice":
            Hg = np.asarray(self.H.cdf(self.times + 1e-12), dtype=float)
            # Exact Stieltjes sums against the atom train of M.
            v = self.H["value"]
            r = 0.0
            for k in range(1, m + 1):
                t = self.times[k]
                jumps = np.arange(1, int((t + 1e-12) / v) + 1) * v
                # Same lattice nudge as the values: t - j*v == v up to float noise counts.
                conv = np.sum(np.asarray(self.H.cdf(t - jumps + 1e-12), dtype=float))
                r = max(r, abs(self.values[k] - Hg[k] - conv))
            return float(r)
        Hg = np.asarray(self.H.cdf(self.times), dtype=float)
        b = 0.5 * (Hg[:-1] + Hg[1:])  # b[i] = (H(t_i) + H(t_{i+1})) / 2
        r = 0.0
        for k in range(1, m + 1):
            conv = float(np.dot(dM[:k], b[k - 1 :: -1]))
            r = max(r, abs(self.values[k] - Hg[k] - conv))
        return float(r)

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w") as fh:
            if header:
                fh.write(header if header.endswith("\n") else header + "\n")
            fh.write("t,M\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{float(t)!r},{float(v)!r}\n")


def compute_renewal_function(H: DistributionSpec, horizon: float, step: float | None = None) -> RenewalTable:
    """Solve M = H + H * dM on [0, horizon].

    ``step`` defaults to min(1e-2, mean(H)/20) and may be set smaller but not
    larger.  Deterministic H uses the exact lattice formula.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    cap = _default_step(H)
    if step is None:
        step = cap
    if step > cap + 1e-15:
        raise ValueError(f"step {step} exceeds the stability cap min(1e-2, mean/20) = {cap}")
    if float(H.cdf(0.0)) != 0.0:
        raise ValueError("interrenewal law must have no atom at 0")
    m = math.ceil(horizon / step - 1e-9)
    times = step * np.arange(m + 1)
    if times[-1] < horizon - 1e-12:
        m += 1
        times = step * np.arange(m + 1)

    if H.family == "deterministic":
        v = H["value"]
        values = np.floor((times + 1e-12) / v)
        return RenewalTable(H, times, values, float(step), "lattice")

    Hg = np.asarray(H.cdf(times), dtype=float)
    b = 0.5 * (Hg[:-1] + Hg[1:])
    M = np.zeros(m + 1)
    dM = np.zeros(m + 1)  # dM[k] = M_k - M_{k-1}
    denom = 1.0 - 0.5 * Hg[1]
    if denom <= 0:
        raise ValueError("step too coarse: H(step) >= 2")
    for k in range(1, m + 1):
        conv = float(np.dot(dM[1:k], b[k - 1 : 0 : -1])) if k > 1 else 0.0
        M[k] = (Hg[k] + conv - 0.5 * Hg[1] * M[k - 1]) / denom
        dM[k] = M[k] - M[k - 1]
    return RenewalTable(H, times, M, float(step), "trapezoid")


@dataclass(frozen=True)
class EquilibriumDistribution:
    """H_e(x) = mu * int_0^x (1 - H(u)) du with sampling support."""

    H: DistributionSpec
    kind: str  # "exponential" | "uniform" | "table"
    xs: np.ndarray | None = None
    cs: np.ndarray | None = None

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            out = -np.expm1(-self.H["rate"] * np.maximum(x, 0.0))
        elif self.kind == "uniform":
            v = self.H["value"]
            out = np.clip(x / v, 0.0, 1.0)
        else:
            out = np.interp(x, self.xs, self.cs, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    def survival(self, x):
        return 1.0 - np.asarray(self.cdf(x))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "exponential":
            return rng.exponential(1.0 / self.H["rate"], size)
        if self.kind == "uniform":
            return rng.uniform(0.0, self.H["value"], size)
        u = rng.random(size)
        idx = np.searchsorted(self.cs, u, side="left")
        idx = np.clip(idx, 1, self.cs.size - 1)
        c_lo, c_hi = self.cs[idx - 1], self.cs[idx]
        x_lo, x_hi = self.xs[idx - 1], self.xs[idx]
        dc = c_hi - c_lo
        frac = np.where(dc > 0, (u - c_lo) / np.where(dc > 0, dc, 1.0), 0.0)
        return x_lo + frac * (x_hi - x_lo)


def equilibrium_distribution(H: DistributionSpec) -> EquilibriumDistribution:
    if H.family == "exponential":
        return EquilibriumDistribution(H, "exponential")
    if H.family == "deterministic":
        return EquilibriumDistribution(H, "uniform")
    mu = 1.0 / H.mean()
    step = H.mean() / 2000.0
    hi = H.mean()
    xs = None
    cs = None
    # Extend the table until essentially all equilibrium mass is covered.
    for _ in range(40):
        xs = np.arange(0.0, hi + step, step)
        surv = 1.0 - np.asarray(H.cdf(xs), dtype=float)
        cs = mu * np.concatenate(([0.0], np.cumsum(0.5 * (surv[1:] + surv[:-1]) * step)))
        if cs[-1] >= 1.0 - 1e-9:
            break
        hi *= 2.0
    cs = np.minimum(cs, 1.0)
    return EquilibriumDistribution(H, "table", xs, cs)

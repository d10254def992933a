"""Diffusion scalings that turn raw simulation records into centered paths.

With N_n servers, arrival rate lambda_n and service rate mu_n:

    Xt(t) = (X(t) - N_n) / sqrt(n)          head-count deviation
    Qt(t) = Xt(t)^+                         scaled queue length
    Et(t) = (E(t) - lambda_n t) / sqrt(n)   centered arrivals
    St(t) = (S(t) - mu_n int_0^t (X ^ N_n) ds) / sqrt(n)
    Gt(t) = G(t) / sqrt(n)                  scaled abandonment count
    wt(t) = sqrt(n) w(t)                    scaled virtual wait
    Gh(t) = Gt(t) - mu int_0^t f(Qt(s)/mu) ds

Xt, Qt and Gt are exact step paths on the event breakpoints.  Et, St and
Gh mix jumps with continuous drifts, so they are reported as linear paths
holding exact values at the sampling grid.  The abandonment compensator
mu int f(Qt/mu) is also kept as an exact piecewise-linear path on the
event breakpoints, which lets downstream statistics take exact suprema
of Gt minus the compensator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import CadlagPath, linear_path, uniform_grid
from .simulator import SimRecord, SystemConfig, virtual_wait_path

__all__ = ["ScaledBundle", "abandonment_compensator", "scale"]


def abandonment_compensator(q_tilde: CadlagPath, f, mu: float) -> CadlagPath:
    """mu * int_0^t f(Qt(s)/mu) ds as an exact linear path.

    Exact because Qt is a step path: the integral is a sum of f-values
    times sojourn lengths.  f = None means no abandonment (zero path).
    """
    if f is None:
        return linear_path([0.0, q_tilde.horizon], [0.0, 0.0], q_tilde.horizon)
    integrand = q_tilde.map_values(lambda q: np.asarray(f(q / mu), dtype=float))
    return integrand.cumulative_integral().scale(mu)


@dataclass(frozen=True)
class ScaledBundle:
    """Centered and sqrt(n)-scaled paths from one simulation record.

    X, Q, G and the compensator live on the event breakpoints of the
    record (horizon = record horizon); E, S and G_hat live on `grid`.
    `omega` is an array of scaled virtual waits on `grid`, NaN where the
    replay ran past the horizon; `omega_truncated` counts those.
    """

    n: int
    mu: float
    grid: np.ndarray
    X: CadlagPath
    Q: CadlagPath
    E: CadlagPath
    S: CadlagPath
    G: CadlagPath
    G_hat: CadlagPath
    compensator: CadlagPath
    omega: np.ndarray
    omega_truncated: int
    replication: int = 0


def scale(record: SimRecord, config: SystemConfig | None = None,
          grid: np.ndarray | None = None) -> ScaledBundle:
    """Scale a simulation record onto diffusion coordinates.

    `config` defaults to the record's own; `grid` defaults to 200 uniform
    steps over the record horizon and must not extend beyond it.
    """
    if config is None:
        config = record.config
    horizon = record.config.horizon
    if grid is None:
        grid = uniform_grid(horizon, horizon / 200.0)
    grid = np.asarray(grid, dtype=float)
    if grid[-1] > horizon + 1e-12:
        raise ValueError("grid extends beyond the record horizon")

    n = config.n
    sqn = math.sqrt(n)
    servers = config.servers

    x_t = record.X.shift_values(-float(servers)).scale(1.0 / sqn)
    q_t = x_t.pos_part()
    g_t = record.G.scale(1.0 / sqn)

    e_vals = (record.E.sampled(grid) - config.lambda_n * grid) / sqn
    e_t = linear_path(grid, e_vals, float(grid[-1]))

    busy = record.X.map_values(lambda v: np.minimum(v, float(servers)))
    busy_time = busy.cumulative_integral()
    s_vals = (record.S.sampled(grid) - config.mu_n * busy_time.sampled(grid)) / sqn
    s_t = linear_path(grid, s_vals, float(grid[-1]))

    f = None
    if config.abandon and config.patience is not None:
        f = config.patience.limit_function()
    comp = abandonment_compensator(q_t, f, config.mu)
    gh_vals = g_t.sampled(grid) - comp.sampled(grid)
    g_hat = linear_path(grid, gh_vals, float(grid[-1]))

    waits, truncated = virtual_wait_path(record, grid)
    return ScaledBundle(
        n=n, mu=config.mu, grid=grid,
        X=x_t, Q=q_t, E=e_t, S=s_t, G=g_t, G_hat=g_hat,
        compensator=comp, omega=sqn * waits, omega_truncated=truncated,
        replication=record.replication,
    )

"""Finite-n statistics probing the limit relationships.

Three nonnegative path statistics are tracked per replication:

    coupling_gap  sup_t |Gt(t) - mu int_0^t f(Qt(s)/mu) ds|
    little_gap    sup_t |mu wt(t) - Qt(t)|      (over the sampling grid)
    neg_part_sup  sup_t (Xt(t))^-

All three should shrink as n grows whenever the modeling assumptions
hold; `convergence_sweep` runs the n-sweep that turns "vanishes in the
limit" into a measurable decreasing trend, and compares the simulated
marginals Xt(t*) against equal-count samples of the limit law via the
exact two-sample Kolmogorov-Smirnov statistic.

`compare_abandonment` replays one configuration with abandonment on and
off under common random numbers and checks the pathwise queue-length
domination Q(t) <= Q_0(t).  A violation is a simulator-correctness alarm,
never an expected outcome, so the verdict carries a counterexample dump.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from .limits import sample_case_i_paths, sample_case_ii_paths
from .paths import uniform_grid
from .renewal import compute_renewal_function
from .scaling import ScaledBundle, abandonment_compensator, scale
from .simulator import SystemConfig, simulate

__all__ = [
    "GAP_NAMES",
    "GapStatistic",
    "ComparisonVerdict",
    "ConvergenceReport",
    "coupling_gap",
    "little_gap",
    "neg_part_sup",
    "gap_statistics",
    "compare_abandonment",
    "ks_two_sample",
    "convergence_sweep",
]

GAP_NAMES = ("coupling_gap", "little_gap", "neg_part_sup")

_USE_BUNDLE = object()


@dataclass(frozen=True)
class GapStatistic:
    """One nonnegative sup-statistic from one scaled replication.

    `excluded` counts grid points dropped from the sup (virtual waits
    whose replay ran past the horizon); it is zero for the other names.
    """

    name: str
    value: float
    n: int
    horizon: float
    replication: int
    excluded: int = 0

    def __post_init__(self):
        if self.name not in GAP_NAMES:
            raise ValueError(f"unknown gap statistic {self.name!r}")
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise ValueError(f"{self.name} must be finite and >= 0, got {self.value}")


def coupling_gap(bundle: ScaledBundle, f=_USE_BUNDLE, mu: float | None = None) -> GapStatistic:
    """Exact sup of |Gt - compensator| over the union of breakpoints.

    By default the bundle's own compensator is reused; pass `f` (a limit
    abandonment-rate function, or None for f = 0) to recompute it.  Gt is
    a step path and the compensator is piecewise linear, so the sup over
    each segment is attained at a breakpoint or a pre-jump left limit.
    """
    mu = bundle.mu if mu is None else float(mu)
    if f is _USE_BUNDLE:
        comp = bundle.compensator
    else:
        comp = abandonment_compensator(bundle.Q, f, mu)
    g = bundle.G
    ts = np.union1d(g.times, comp.times)
    c = comp.sampled(ts)
    post = np.abs(g.sampled(ts) - c)
    pre = np.abs(np.asarray(g.left_limit(ts)) - c)
    value = float(max(post.max(), pre.max()))
    return GapStatistic("coupling_gap", value, bundle.n, g.horizon, bundle.replication)


def little_gap(bundle: ScaledBundle, mu: float | None = None) -> GapStatistic:
    """sup over the sampling grid of |mu wt - Qt|.

    Grid-sup, hence a lower bound on the true sup.  Truncated virtual
    waits (NaN entries) are excluded and counted in `excluded`.
    """
    mu = bundle.mu if mu is None else float(mu)
    q = bundle.Q.sampled(bundle.grid)
    w = bundle.omega
    mask = np.isfinite(w)
    excluded = int(np.count_nonzero(~mask))
    value = float(np.max(np.abs(mu * w[mask] - q[mask]))) if mask.any() else 0.0
    return GapStatistic("little_gap", value, bundle.n, bundle.X.horizon,
                        bundle.replication, excluded=excluded)


def neg_part_sup(bundle: ScaledBundle) -> GapStatistic:
    """Exact sup of (Xt)^- over the event breakpoints."""
    value = bundle.X.neg_part().sup_norm()
    return GapStatistic("neg_part_sup", value, bundle.n, bundle.X.horizon,
                        bundle.replication)


def gap_statistics(bundle: ScaledBundle) -> dict[str, GapStatistic]:
    """All three gap statistics of one bundle, keyed by name."""
    return {
        "coupling_gap": coupling_gap(bundle),
        "little_gap": little_gap(bundle),
        "neg_part_sup": neg_part_sup(bundle),
    }


# ---------------------------------------------------------------------------
# pathwise comparison against the no-abandonment benchmark


@dataclass(frozen=True)
class ComparisonVerdict:
    """Outcome of one common-random-numbers domination check."""

    holds: bool
    n_checked: int
    max_queue_excess: float
    first_violation: tuple[float, float, float] | None
    detail: str = ""


def compare_abandonment(config: SystemConfig, seed: int, replication: int = 0) -> ComparisonVerdict:
    """Check Q(t) <= Q_0(t) pathwise against the benchmark without abandonment.

    Both systems consume identical arrival, service and patience streams;
    the benchmark simply never removes waiting customers.  The queue
    lengths are compared at every event time of either record.  With
    abandonment already off the two runs coincide and the verdict holds
    with equality.  A failed verdict is a correctness alarm and carries
    a counterexample dump.
    """
    rec_ab = simulate(config, seed, replication)
    rec_0 = simulate(dataclasses.replace(config, abandon=False), seed, replication)
    ts = np.union1d(rec_ab.X.times, rec_0.X.times)
    q_ab = rec_ab.Q.sampled(ts)
    q_0 = rec_0.Q.sampled(ts)
    excess = q_ab - q_0
    worst = float(np.max(excess))
    bad = np.flatnonzero(excess > 1e-9)
    if bad.size == 0:
        return ComparisonVerdict(True, ts.size, worst, None)
    i = int(bad[0])
    t = float(ts[i])
    detail = (
        f"queue domination violated at t={t!r}: "
        f"Q={q_ab[i]:.0f} > Q_0={q_0[i]:.0f}\n"
        f"config hash={config.hash()} seed={seed} replication={replication}\n"
        f"n={config.n} servers={config.servers} lambda_n={config.lambda_n!r} "
        f"mu_n={config.mu_n!r}\n"
        f"violations at {bad.size} of {ts.size} event times, max excess {worst:.0f}"
    )
    return ComparisonVerdict(False, ts.size, worst, (t, float(q_ab[i]), float(q_0[i])), detail)


# ---------------------------------------------------------------------------
# two-sample KS


def ks_two_sample(a, b) -> float:
    """Classical two-sample Kolmogorov-Smirnov statistic, exact.

    Both empirical cdfs are evaluated at every pooled sample point; ties
    across and within samples are handled by right-continuous counting.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate((a, b))
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------------------
# the n-sweep


@dataclass(frozen=True)
class ConvergenceReport:
    """Everything one n-sweep measured, with seeds for reproducibility.

    `gaps[name][n]` holds the per-replication values; `summaries` their
    medians and interquartile ranges; `ks[n][t*]` the two-sample KS
    statistic of the simulated marginal Xt^n(t*) against `replications`
    samples of the limit marginal.  Verdicts compare the median (or KS)
    at the largest n against the smallest n.
    """

    n_values: tuple[int, ...]
    replications: int
    seed: int
    checkpoints: tuple[float, ...]
    config: dict
    limit_case: str
    gaps: dict
    summaries: dict
    ks: dict
    verdicts: dict
    excluded: dict

    def as_dict(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "replications": self.replications,
            "seed": self.seed,
            "checkpoints": list(self.checkpoints),
            "config": self.config,
            "limit_case": self.limit_case,
            "summaries": {
                name: {str(n): dict(s) for n, s in per_n.items()}
                for name, per_n in self.summaries.items()
            },
            "ks": {
                str(n): {f"{t:g}": v for t, v in per_t.items()}
                for n, per_t in self.ks.items()
            },
            "verdicts": dict(self.verdicts),
            "excluded": {str(n): v for n, v in self.excluded.items()},
        }

    def to_json(self, path, meta: dict | None = None) -> None:
        doc = self.as_dict()
        if meta is not None:
            doc["meta"] = dict(meta)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path, meta: str | None = None) -> None:
        """Flat view: one row per (n, statistic, replication).

        KS statistics are aggregates over replications, so their rows
        leave the replication column empty.  `meta` adds a leading
        comment line.
        """
        with open(path, "w") as fh:
            if meta:
                fh.write(meta if meta.endswith("\n") else meta + "\n")
            fh.write("n,statistic,replication,value\n")
            for n in self.n_values:
                for name in GAP_NAMES:
                    for r, v in enumerate(self.gaps[name][n]):
                        fh.write(f"{n},{name},{r},{float(v)!r}\n")
                for t, v in self.ks[n].items():
                    fh.write(f"{n},ks@{t:g},,{float(v)!r}\n")


def _trend(value_smallest: float, value_largest: float) -> str:
    if math.isclose(value_smallest, value_largest, rel_tol=1e-9, abs_tol=1e-12):
        return "flat"
    return "decreasing" if value_largest < value_smallest else "increasing"


def _replication_job(args):
    config, seed, rep, grid_points, checkpoints = args
    record = simulate(config, seed, rep)
    T = config.horizon
    bundle = scale(record, grid=uniform_grid(T, T / grid_points))
    c = coupling_gap(bundle)
    l = little_gap(bundle)
    g = neg_part_sup(bundle)
    marg = np.atleast_1d(bundle.X.sampled(np.asarray(checkpoints, dtype=float)))
    return c.value, l.value, l.excluded, g.value, marg


def _limit_marginals(config: SystemConfig, checkpoints, reps: int, seed: int,
                     tol: float):
    """Equal-count samples of the limit marginals at the checkpoints."""
    T = config.horizon
    h = T / 1024.0
    grid = uniform_grid(T, h)
    idx = []
    for t in checkpoints:
        j = int(round(t / h))
        if j >= grid.size or abs(grid[j] - t) > 1e-9 * max(1.0, T):
            raise ValueError(f"checkpoint {t} does not lie on the limit grid (step {h})")
        idx.append(j)
    f = config.patience.limit_function() if (config.abandon and config.patience) else None
    ca2 = config.arrival.scv()
    if config.alpha == 1.0:
        table = compute_renewal_function(config.service, horizon=T, step=h)
        X = sample_case_ii_paths(config.xi, config.beta, config.mu, ca2, f, table,
                                 grid, seed=seed, reps=reps, tol=tol)
        case = "ii"
    else:
        X = sample_case_i_paths(config.xi, config.beta, config.mu, ca2, f,
                                grid, seed=seed, reps=reps)
        case = "i"
    return X[:, idx], case


def convergence_sweep(config: SystemConfig, n_values, replications: int,
                      checkpoints=None, seed: int = 0, grid_points: int = 256,
                      workers: int = 1, limit_tol: float = 1e-10) -> ConvergenceReport:
    """Run the n-sweep that measures every vanishing statistic.

    For each n the base configuration is rebuilt (servers, rates and the
    initial state all rescale), `replications` independent replications
    are simulated, and the three gap statistics plus the marginals
    Xt^n(t*) are collected.  The limit marginals come from the matching
    limit equation: the reflected one below alpha = 1, the renewal-noise
    one at alpha = 1.  Checkpoints default to {T/4, T/2, T}; early times
    are dominated by the initial condition.

    Replications are independent jobs (set `workers` > 1 to fan them out
    over processes); aggregation is deterministic in replication order.
    """
    n_values = tuple(int(n) for n in n_values)
    if not n_values or min(n_values) < 1:
        raise ValueError("n values must be positive integers")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    T = config.horizon
    if checkpoints is None:
        checkpoints = (T / 4.0, T / 2.0, T)
    checkpoints = tuple(float(t) for t in checkpoints)
    for t in checkpoints:
        if not 0.0 < t <= T + 1e-9:
            raise ValueError(f"checkpoint {t} outside (0, horizon]")

    # Rebuilding at each n revalidates the regime pairing up front.
    unique_n = sorted(set(n_values))
    configs = {n: dataclasses.replace(config, n=n) for n in unique_n}

    lim_marg, case = _limit_marginals(config, checkpoints, replications, seed, limit_tol)

    jobs = [(configs[n], seed, r, grid_points, checkpoints)
            for n in unique_n for r in range(replications)]
    if workers > 1:
        chunk = max(1, len(jobs) // (4 * workers))
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_replication_job, jobs, chunksize=chunk))
    else:
        out = [_replication_job(j) for j in jobs]

    gaps = {name: {} for name in GAP_NAMES}
    excluded = {}
    ks = {}
    pos = 0
    for n in unique_n:
        rows = out[pos:pos + replications]
        pos += replications
        gaps["coupling_gap"][n] = np.array([r[0] for r in rows])
        gaps["little_gap"][n] = np.array([r[1] for r in rows])
        excluded[n] = int(sum(r[2] for r in rows))
        gaps["neg_part_sup"][n] = np.array([r[3] for r in rows])
        marg = np.vstack([r[4] for r in rows])
        ks[n] = {t: ks_two_sample(marg[:, k], lim_marg[:, k])
                 for k, t in enumerate(checkpoints)}

    summaries = {
        name: {
            n: {
                "median": float(np.median(vals)),
                "iqr": float(np.percentile(vals, 75) - np.percentile(vals, 25)),
            }
            for n, vals in per_n.items()
        }
        for name, per_n in gaps.items()
    }

    n_lo, n_hi = min(n_values), max(n_values)
    verdicts = {}
    for name in GAP_NAMES:
        verdicts[name] = _trend(summaries[name][n_lo]["median"],
                                summaries[name][n_hi]["median"])
    for t in checkpoints:
        verdicts[f"ks@{t:g}"] = _trend(ks[n_lo][t], ks[n_hi][t])

    try:
        cfg_doc = config.to_dict()
    except (TypeError, ValueError):
        cfg_doc = {"repr": repr(config)}

    return ConvergenceReport(
        n_values=n_values, replications=replications, seed=seed,
        checkpoints=checkpoints, config=cfg_doc, limit_case=case,
        gaps=gaps, summaries=summaries, ks=ks, verdicts=verdicts,
        excluded=excluded,
    )

"""Event-simulator checks: hand oracles, identities, and coupling contracts."""

import math

import numpy as np
import pytest

from httq.distributions import ArrivalSpec, DistributionSpec
from httq.patience import PatienceSpec
from httq.simulator import (
    OUTCOME_ABANDONED,
    OUTCOME_IN_SERVICE,
    OUTCOME_SERVED,
    OUTCOME_WAITING,
    KIND_START,
    SimRecord,
    SystemConfig,
    offered_waits,
    simulate,
    virtual_wait,
    virtual_wait_path,
)

from oracles import lindley_waits, mmn_abandonment_ctmc


def dd1_config(service_len: float, horizon: float, patience: PatienceSpec | None = None,
               abandon: bool = False) -> SystemConfig:
    # single deterministic server fed at unit rate: lambda_n = mu (1 + beta) = 1;
    # xi = -1 empties the system at t = 0 so hand oracles start clean
    mu = 1.0 / service_len
    return SystemConfig(
        n=1, alpha=1.0, mu=mu, beta=service_len - 1.0,
        arrival=ArrivalSpec(DistributionSpec.deterministic(1.0)),
        service=DistributionSpec.deterministic(service_len),
        patience=patience, horizon=horizon, xi=-1.0, abandon=abandon,
    )


def mmn_config(n: int, theta: float = 1.0, beta: float = -1.0, horizon: float = 10.0,
               abandon: bool = True, xi: float = 0.0) -> SystemConfig:
    return SystemConfig(
        n=n, alpha=1.0, mu=1.0, beta=beta,
        arrival=ArrivalSpec.poisson(),
        service=DistributionSpec.exponential(1.0),
        patience=PatienceSpec.no_scaling(DistributionSpec.exponential(theta)),
        horizon=horizon, xi=xi, abandon=abandon,
    )


# ---------------------------------------------------------------------------
# trivial and deterministic oracles


def test_empty_system_stays_empty():
    cfg = SystemConfig(
        n=4, alpha=1.0, mu=1.0, beta=0.0,
        arrival=ArrivalSpec(DistributionSpec.deterministic(1.0)),
        service=DistributionSpec.exponential(1.0),
        patience=None, horizon=0.2, xi=-2.0, abandon=False,
    )
    assert cfg.initial_head_count() == 0
    rec = simulate(cfg, seed=1)
    assert rec.customers == 0
    assert rec.E(0.2) == 0 and rec.S(0.2) == 0 and rec.G(0.2) == 0
    assert rec.X.sup_norm() == 0.0


def test_dd1_underloaded_no_waits():
    rec = simulate(dd1_config(0.6, horizon=10.5), seed=3)
    waits, truncated = offered_waits(rec)
    assert truncated == 0
    np.testing.assert_allclose(waits, 0.0, atol=1e-9)
    served = np.isin(rec.outcomes, [OUTCOME_SERVED, OUTCOME_IN_SERVICE])
    assert np.all(served)
    assert rec.G(10.5) == 0


def test_dd1_overloaded_matches_lindley():
    rec = simulate(dd1_config(1.4, horizon=20.0), seed=3)
    waits, _ = offered_waits(rec)
    k = rec.customers
    oracle = lindley_waits(np.ones(k), np.full(k, 1.4))
    got = waits[~np.isnan(waits)]
    np.testing.assert_allclose(got, oracle[: got.size], atol=1e-9)
    np.testing.assert_allclose(got, 0.4 * np.arange(got.size), atol=1e-9)


def test_dd1_abandonment_hand_oracle():
    # unit arrivals, service 3.5, deterministic patience 1.2, one server
    cfg = dd1_config(3.5, horizon=10.5,
                     patience=PatienceSpec.no_scaling(DistributionSpec.deterministic(1.2)),
                     abandon=True)
    rec = simulate(cfg, seed=9)
    waits, truncated = offered_waits(rec)
    expected = [0.0, 2.5, 1.5, 0.5, 3.0, 2.0, 1.0, np.nan, np.nan, np.nan]
    np.testing.assert_allclose(waits, expected, atol=1e-9, equal_nan=True)
    assert truncated == 3
    out = rec.outcomes
    # customer 6 enters at t=8 (winning the exact tie against arrival 7)
    # and its 3.5 service runs past the horizon
    assert list(out) == [OUTCOME_SERVED, OUTCOME_ABANDONED, OUTCOME_ABANDONED,
                         OUTCOME_SERVED, OUTCOME_ABANDONED, OUTCOME_ABANDONED,
                         OUTCOME_IN_SERVICE, OUTCOME_ABANDONED, OUTCOME_ABANDONED,
                         OUTCOME_WAITING]
    # abandoning customers left exactly at their patience expiry
    ab = out == OUTCOME_ABANDONED
    np.testing.assert_allclose(
        rec.abandon_times[ab] - rec.arrival_times[ab], rec.patience_times[ab],
        atol=1e-12,
    )


def test_service_entry_wins_exact_tie():
    # service 1.0 at unit arrivals: completion k and arrival k+1 tie exactly;
    # with patience 2.0 the queue would abandon only if ties were mishandled
    cfg = dd1_config(1.0, horizon=50.0,
                     patience=PatienceSpec.no_scaling(DistributionSpec.deterministic(2.0)),
                     abandon=True)
    rec = simulate(cfg, seed=4)
    assert rec.G(50.0) == 0
    waits, _ = offered_waits(rec)
    np.testing.assert_allclose(waits[~np.isnan(waits)], 0.0, atol=1e-9)


# ---------------------------------------------------------------------------
# structural invariants on stochastic runs


def test_balance_and_counting_invariants():
    rec = simulate(mmn_config(25), seed=11)
    assert rec.balance_gap() == 0.0
    for path in (rec.E, rec.S, rec.G, rec.K):
        assert np.all(np.diff(path.values) > 0)
        assert np.all(path.values == np.round(path.values))
    # Q = (X - N)^+ pointwise
    q = rec.Q
    np.testing.assert_allclose(
        q.values, np.maximum(rec.X.values - rec.config.servers, 0.0), atol=0
    )
    # K entries and completions reconcile with S
    s0 = rec.n_initial_service
    comp_initial = np.count_nonzero(np.isfinite(rec.completion_times[:s0]))
    comp_entrants = np.count_nonzero(np.isfinite(rec.completion_times[s0:]))
    assert rec.S(rec.config.horizon) == comp_initial + comp_entrants
    assert rec.K(rec.config.horizon) >= comp_entrants


def test_abandoned_waited_exactly_patience():
    rec = simulate(mmn_config(100, beta=1.0), seed=5)
    ab = rec.outcomes == OUTCOME_ABANDONED
    assert np.count_nonzero(ab) > 10
    np.testing.assert_allclose(
        rec.abandon_times[ab] - rec.arrival_times[ab],
        rec.patience_times[ab], atol=1e-12,
    )


def test_fcfs_entry_order():
    rec = simulate(mmn_config(50, beta=-2.0), seed=7)
    mask = (rec.event_kinds == KIND_START) & (rec.event_ids >= rec.n_initial_service)
    entrant_ids = rec.event_ids[mask]
    assert np.all(np.diff(entrant_ids) > 0)
    assert np.all(np.diff(rec.event_times[mask]) >= 0)


def test_work_conservation():
    rec = simulate(mmn_config(10, beta=-1.0, horizon=30.0), seed=13)
    servers = rec.config.servers
    s0 = rec.n_initial_service
    waited = np.isfinite(rec.entry_times) & (np.arange(rec.customers) >= s0)
    checked = 0
    for cid in np.flatnonzero(waited):
        a, e = rec.arrival_times[cid], rec.entry_times[cid]
        if e - a > 1e-9:
            assert rec.X.min_value(a, e) >= servers
            checked += 1
    assert checked > 20


def test_determinism_and_replication_split():
    a = simulate(mmn_config(25), seed=21, replication=3)
    b = simulate(mmn_config(25), seed=21, replication=3)
    np.testing.assert_array_equal(a.event_times, b.event_times)
    np.testing.assert_array_equal(a.event_kinds, b.event_kinds)
    np.testing.assert_array_equal(a.arrival_times, b.arrival_times)
    c = simulate(mmn_config(25), seed=21, replication=4)
    assert c.event_times.shape != a.event_times.shape or \
        not np.array_equal(c.event_times, a.event_times)


def test_initial_split_and_infinite_patience():
    cfg = mmn_config(16, xi=2.0, beta=-2.0, horizon=30.0)
    assert cfg.initial_head_count() == 24
    rec = simulate(cfg, seed=2)
    assert rec.n_initial_service == 16
    assert rec.n_initial_queued == 8
    q_ids = slice(16, 24)
    assert np.all(np.isinf(rec.patience_times[q_ids]))
    assert np.all(rec.arrival_times[q_ids] == 0.0)
    # initial queued customers head the FCFS line
    entries = rec.entry_times[q_ids]
    assert np.all(np.isfinite(entries))
    later = rec.entry_times[24:]
    later = later[np.isfinite(later)]
    if later.size:
        assert np.max(entries) <= np.min(later) + 1e-12


def test_nds_regime_runs_and_balances():
    cfg = SystemConfig(
        n=100, alpha=0.5, mu=1.0, beta=0.0,
        arrival=ArrivalSpec.poisson(),
        service=DistributionSpec.exponential(1.0),
        patience=PatienceSpec.no_scaling(DistributionSpec.exponential(1.0)),
        horizon=5.0, xi=0.0, abandon=True,
    )
    assert cfg.servers == 10
    assert cfg.mu_n == pytest.approx(10.0)
    rec = simulate(cfg, seed=17)
    assert rec.balance_gap() == 0.0
    assert rec.E(5.0) > 300  # lambda_n = 100 on [0,5]


# ---------------------------------------------------------------------------
# CRN coupling and the no-abandonment benchmark


def test_benchmark_equals_abandonment_off():
    # passing a patience spec with abandon=False must not consume extra
    # randomness: the record must match the patience-free config exactly
    base = mmn_config(25, abandon=False)
    no_patience = SystemConfig(
        n=25, alpha=1.0, mu=1.0, beta=-1.0,
        arrival=ArrivalSpec.poisson(),
        service=DistributionSpec.exponential(1.0),
        patience=None, horizon=10.0, xi=0.0, abandon=False,
    )
    a = simulate(base, seed=31)
    b = simulate(no_patience, seed=31)
    np.testing.assert_array_equal(a.event_times, b.event_times)
    np.testing.assert_array_equal(a.event_kinds, b.event_kinds)
    assert a.G(10.0) == 0


def test_crn_queue_dominated_by_benchmark():
    for seed in range(4):
        on = simulate(mmn_config(25, theta=2.0), seed=seed)
        off = simulate(mmn_config(25, theta=2.0, abandon=False), seed=seed)
        ts = np.unique(np.concatenate([on.X.times, off.X.times]))
        q_on = np.maximum(on.X.sampled(ts) - 25, 0)
        q_off = np.maximum(off.X.sampled(ts) - 25, 0)
        assert np.all(q_on <= q_off + 1e-9)


# ---------------------------------------------------------------------------
# CTMC oracle


def test_mm3m_abandonment_against_ctmc():
    cfg = SystemConfig(
        n=3, alpha=1.0, mu=1.0, beta=0.0,
        arrival=ArrivalSpec.poisson(),
        service=DistributionSpec.exponential(1.0),
        patience=PatienceSpec.no_scaling(DistributionSpec.exponential(0.5)),
        horizon=8.0, xi=-math.sqrt(3), abandon=True,
    )
    assert cfg.initial_head_count() == 0
    expected_g, p_final = mmn_abandonment_ctmc(3.0, 1.0, 3, 0.5, 8.0, max_states=80)
    reps = 3000
    gs = np.empty(reps)
    xs = np.empty(reps)
    for r in range(reps):
        rec = simulate(cfg, seed=101, replication=r)
        gs[r] = rec.G(8.0)
        xs[r] = rec.X(8.0)
    se_g = gs.std(ddof=1) / math.sqrt(reps)
    assert abs(gs.mean() - expected_g) <= 4 * se_g
    expected_x = float(np.arange(p_final.size) @ p_final)
    se_x = xs.std(ddof=1) / math.sqrt(reps)
    assert abs(xs.mean() - expected_x) <= 4 * se_x


# ---------------------------------------------------------------------------
# waiting-time replays


def test_virtual_wait_free_server_zero():
    # interarrival 2.5, service 2.0: busy windows [2.5, 4.5], [5.0, 7.0], ...
    cfg = SystemConfig(
        n=1, alpha=1.0, mu=0.5, beta=0.4 / 0.5 - 1.0,
        arrival=ArrivalSpec(DistributionSpec.deterministic(1.0)),
        service=DistributionSpec.deterministic(2.0),
        patience=None, horizon=10.0, xi=-1.0, abandon=False,
    )
    assert cfg.lambda_n == pytest.approx(0.4)
    rec = simulate(cfg, seed=1)
    assert rec.E(2.6) == 1
    assert virtual_wait(rec, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert virtual_wait(rec, 2.6) == pytest.approx(4.5 - 2.6, abs=1e-9)
    assert virtual_wait(rec, 4.6) == pytest.approx(0.0, abs=1e-12)


def test_virtual_wait_truncation_flagged():
    rec = simulate(dd1_config(1.4, horizon=6.0), seed=2)
    assert virtual_wait(rec, 5.9) is None
    vals, truncated = virtual_wait_path(rec, np.linspace(0, 6, 13))
    assert truncated >= 1
    assert np.isnan(vals[-1])
    with pytest.raises(ValueError, match="within"):
        virtual_wait_path(rec, np.array([7.0]))


def test_virtual_wait_little_law_mm1():
    cfg = SystemConfig(
        n=1, alpha=1.0, mu=1.0, beta=-0.2,
        arrival=ArrivalSpec.poisson(),
        service=DistributionSpec.exponential(1.0),
        patience=None, horizon=20000.0, xi=0.0, abandon=False,
    )
    rec = simulate(cfg, seed=40)
    grid = np.linspace(100.0, 19900.0, 4000)
    vals, truncated = virtual_wait_path(rec, grid)
    ok = ~np.isnan(vals)
    assert truncated < 20
    mean_wait = vals[ok].mean()
    mean_q = rec.Q.integral(100.0, 19900.0) / 19800.0
    lam = cfg.lambda_n
    # lambda E[V] = E[(X-1)^+] = rho^2/(1-rho) = 3.2 at rho = 0.8
    assert abs(lam * mean_wait - mean_q) <= 0.10 * mean_q
    assert abs(mean_q - 3.2) <= 0.25 * 3.2


# ---------------------------------------------------------------------------
# serialization and validation


def test_npz_round_trip(tmp_path):
    rec = simulate(mmn_config(10, horizon=5.0), seed=3)
    f = tmp_path / "rec.npz"
    rec.to_npz(f)
    back = SimRecord.from_npz(f)
    np.testing.assert_array_equal(back.event_times, rec.event_times)
    np.testing.assert_array_equal(back.outcomes, rec.outcomes)
    np.testing.assert_array_equal(back.X.values, rec.X.values)
    assert back.config == rec.config
    csv = tmp_path / "events.csv"
    rec.events_to_csv(csv)
    lines = csv.read_text().splitlines()
    assert lines[1] == "time,kind,customer"
    assert len(lines) == 2 + rec.event_times.size


def test_config_validation():
    with pytest.raises(ValueError, match="exponential service"):
        SystemConfig(n=4, alpha=0.5, mu=1.0, beta=0.0,
                     arrival=ArrivalSpec.poisson(),
                     service=DistributionSpec.deterministic(1.0),
                     patience=None, horizon=1.0, abandon=False)
    with pytest.raises(ValueError, match="service rate"):
        SystemConfig(n=4, alpha=0.5, mu=1.0, beta=0.0,
                     arrival=ArrivalSpec.poisson(),
                     service=DistributionSpec.exponential(2.0),
                     patience=None, horizon=1.0, abandon=False)
    with pytest.raises(ValueError, match="service mean"):
        SystemConfig(n=4, alpha=1.0, mu=2.0, beta=0.0,
                     arrival=ArrivalSpec.poisson(),
                     service=DistributionSpec.exponential(1.0),
                     patience=None, horizon=1.0, abandon=False)
    with pytest.raises(ValueError, match="patience"):
        SystemConfig(n=4, alpha=1.0, mu=1.0, beta=0.0,
                     arrival=ArrivalSpec.poisson(),
                     service=DistributionSpec.exponential(1.0),
                     patience=None, horizon=1.0, abandon=True)
    with pytest.raises(ValueError, match="negative"):
        SystemConfig(n=4, alpha=1.0, mu=1.0, beta=0.0,
                     arrival=ArrivalSpec.poisson(),
                     service=DistributionSpec.exponential(1.0),
                     patience=None, horizon=1.0, xi=-5.0, abandon=False)
    cfg = mmn_config(4)
    d = cfg.to_dict()
    assert SystemConfig.from_dict(d) == cfg
    with pytest.raises(ValueError, match="unknown config keys"):
        SystemConfig.from_dict({**d, "extra": 1})
    assert len(cfg.hash()) == 12

"""Event-driven simulation of the n-th G/GI/N+GI many-server system.

The simulator is event-exact: no time discretization anywhere.  A binary
heap orders events by (time, priority, sequence) with priorities

    0 service completion, 2 arrival, 3 patience expiry

and events closer than the 1e-12 tie window are drained together and
replayed in priority order, so a customer whose patience expires at the
same instant a server frees up still enters service.  Service starts are
not scheduled; they happen inline when a server and a waiting customer
meet, which also makes the system work-conserving by construction.

Per-customer service requirements and patience times are drawn at arrival
from dedicated streams, so runs that differ only in the abandonment flag
consume identical randomness customer by customer (common random numbers).
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass
from hashlib import sha256

import numpy as np

from .distributions import ArrivalSpec, DistributionSpec
from .paths import CadlagPath, counting_path, step_path
from .patience import PatienceSpec
from .renewal import equilibrium_distribution
from .streams import BlockSampler, make_rng

TIE_WINDOW = 1e-12

KIND_COMPLETION = 0
KIND_START = 1
KIND_ARRIVAL = 2
KIND_ABANDONMENT = 3
KIND_NAMES = {0: "service-end", 1: "service-start", 2: "arrival", 3: "abandonment"}

OUTCOME_SERVED = 0
OUTCOME_ABANDONED = 1
OUTCOME_WAITING = 2
OUTCOME_IN_SERVICE = 3
OUTCOME_NAMES = {0: "served", 1: "abandoned", 2: "waiting", 3: "in-service"}

# internal customer states
_WAITING = 0
_IN_SERVICE = 1
_SERVED = 2
_ABANDONED = 3


@dataclass(frozen=True)
class SystemConfig:
    """One fully specified n-th system.

    ``alpha`` selects the regime: N_n = ceil(n^alpha) servers, each working
    at rate mu_n = n^(1-alpha) * mu.  Below alpha = 1 the service law must
    be exponential(mu) (it is sped up internally); at alpha = 1 any service
    law with mean 1/mu is accepted.  The initial head count is
    X(0) = N_n + ceil(sqrt(n) * xi); initial queued customers never abandon.
    """

    n: int
    alpha: float
    mu: float
    beta: float
    arrival: ArrivalSpec
    service: DistributionSpec
    patience: PatienceSpec | None
    horizon: float
    xi: float = 0.0
    abandon: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        self.arrival.rate_for(self.n, self.mu, self.beta)
        if self.abandon and self.patience is None:
            raise ValueError("abandon=True requires a patience spec")
        if self.alpha < 1.0:
            if self.service.family != "exponential":
                raise ValueError(
                    "alpha < 1 requires exponential service "
                    f"(got {self.service.family})"
                )
            if abs(self.service["rate"] - self.mu) > 1e-9 * self.mu:
                raise ValueError(
                    f"alpha < 1 requires service rate mu={self.mu}, "
                    f"got {self.service['rate']}"
                )
        else:
            m = self.service.mean()
            if abs(m - 1.0 / self.mu) > 1e-8 * max(1.0, 1.0 / self.mu):
                raise ValueError(
                    f"alpha = 1 requires service mean 1/mu = {1.0 / self.mu}, "
                    f"got {m}"
                )
        if self.initial_head_count() < 0:
            raise ValueError(
                f"xi={self.xi} makes the initial head count negative at n={self.n}"
            )

    @property
    def servers(self) -> int:
        return math.ceil(self.n ** self.alpha - 1e-9)

    @property
    def mu_n(self) -> float:
        return self.n ** (1.0 - self.alpha) * self.mu

    @property
    def lambda_n(self) -> float:
        return self.arrival.rate_for(self.n, self.mu, self.beta)

    def effective_service(self) -> DistributionSpec:
        """Per-server service law actually simulated."""
        if self.alpha < 1.0:
            return DistributionSpec.exponential(self.mu_n)
        return self.service

    def initial_head_count(self) -> int:
        return self.servers + math.ceil(math.sqrt(self.n) * self.xi - 1e-12)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "mu": self.mu,
            "beta": self.beta,
            "arrival": self.arrival.to_dict(),
            "service": self.service.to_dict(),
            "patience": None if self.patience is None else self.patience.to_dict(),
            "horizon": self.horizon,
            "xi": self.xi,
            "abandon": self.abandon,
        }

    @staticmethod
    def from_dict(d: dict) -> "SystemConfig":
        known = {"n", "alpha", "mu", "beta", "arrival", "service", "patience",
                 "horizon", "xi", "abandon"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        missing = sorted(known - set(d))
        if missing:
            raise ValueError(f"missing config keys: {missing}")
        pat = d["patience"]
        return SystemConfig(
            n=int(d["n"]),
            alpha=float(d["alpha"]),
            mu=float(d["mu"]),
            beta=float(d["beta"]),
            arrival=ArrivalSpec.from_dict(d["arrival"]),
            service=DistributionSpec.from_dict(d["service"]),
            patience=None if pat is None else PatienceSpec.from_dict(pat),
            horizon=float(d["horizon"]),
            xi=float(d["xi"]),
            abandon=bool(d["abandon"]),
        )

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return sha256(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class SimRecord:
    """Complete output of one replication.

    Customer ids are assigned in FCFS position order: initial in-service
    customers first, then initial queued, then arrivals in arrival order.
    Per-customer times are NaN where the corresponding event never happened
    within the horizon.
    """

    config: SystemConfig
    seed: int
    replication: int
    n_initial_service: int
    n_initial_queued: int
    event_times: np.ndarray
    event_kinds: np.ndarray
    event_ids: np.ndarray
    arrival_times: np.ndarray
    patience_times: np.ndarray
    service_times: np.ndarray
    entry_times: np.ndarray
    completion_times: np.ndarray
    abandon_times: np.ndarray
    outcomes: np.ndarray
    X: CadlagPath
    E: CadlagPath
    S: CadlagPath
    G: CadlagPath
    K: CadlagPath

    @property
    def customers(self) -> int:
        return self.arrival_times.size

    @property
    def Q(self) -> CadlagPath:
        servers = self.config.servers
        return self.X.map_values(lambda x: np.maximum(x - servers, 0.0))

    def balance_gap(self) -> float:
        """max over X breakpoints of |X - X(0) - E + S + G| (0 when consistent)."""
        t = self.X.times
        x0 = self.X.values[0]
        recon = x0 + self.E.sampled(t) - self.S.sampled(t) - self.G.sampled(t)
        return float(np.max(np.abs(self.X.values - recon)))

    def to_npz(self, path) -> None:
        np.savez_compressed(
            path,
            config=json.dumps(self.config.to_dict()),
            seed=self.seed,
            replication=self.replication,
            n_initial_service=self.n_initial_service,
            n_initial_queued=self.n_initial_queued,
            event_times=self.event_times,
            event_kinds=self.event_kinds,
            event_ids=self.event_ids,
            arrival_times=self.arrival_times,
            patience_times=self.patience_times,
            service_times=self.service_times,
            entry_times=self.entry_times,
            completion_times=self.completion_times,
            abandon_times=self.abandon_times,
            outcomes=self.outcomes,
        )

    @staticmethod
    def from_npz(path) -> "SimRecord":
        with np.load(path, allow_pickle=False) as z:
            config = SystemConfig.from_dict(json.loads(str(z["config"])))
            return _assemble_record(
                config=config,
                seed=int(z["seed"]),
                replication=int(z["replication"]),
                s0=int(z["n_initial_service"]),
                q0=int(z["n_initial_queued"]),
                event_times=z["event_times"],
                event_kinds=z["event_kinds"],
                event_ids=z["event_ids"],
                arrival_times=z["arrival_times"],
                patience_times=z["patience_times"],
                service_times=z["service_times"],
                entry_times=z["entry_times"],
                completion_times=z["completion_times"],
                abandon_times=z["abandon_times"],
                outcomes=z["outcomes"],
            )

    def events_to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# config={self.config.hash()} seed={self.seed} "
                     f"replication={self.replication}\n")
            fh.write("time,kind,customer\n")
            for t, k, c in zip(self.event_times, self.event_kinds, self.event_ids):
                fh.write(f"{t:.12g},{KIND_NAMES[int(k)]},{int(c)}\n")


def _assemble_record(config, seed, replication, s0, q0, event_times, event_kinds,
                     event_ids, arrival_times, patience_times, service_times,
                     entry_times, completion_times, abandon_times, outcomes) -> SimRecord:
    """Rebuild the path fields from the event log (shared by simulate/from_npz)."""
    T = config.horizon
    x0 = s0 + q0
    is_arrival = event_kinds == KIND_ARRIVAL
    is_completion = event_kinds == KIND_COMPLETION
    is_abandon = event_kinds == KIND_ABANDONMENT
    is_entry = (event_kinds == KIND_START) & (event_ids >= s0)
    E = counting_path(event_times[is_arrival], horizon=T)
    S = counting_path(event_times[is_completion], horizon=T)
    G = counting_path(event_times[is_abandon], horizon=T)
    K = counting_path(event_times[is_entry], horizon=T)
    delta = np.where(is_arrival, 1, 0) - np.where(is_completion | is_abandon, 1, 0)
    moves = delta != 0
    tx = np.concatenate([[0.0], event_times[moves]])
    vx = x0 + np.concatenate([[0], np.cumsum(delta[moves])])
    keep = np.concatenate([np.diff(tx) > 0, [True]])
    X = step_path(tx[keep], vx[keep].astype(float), horizon=T)
    return SimRecord(
        config=config, seed=seed, replication=replication,
        n_initial_service=s0, n_initial_queued=q0,
        event_times=event_times, event_kinds=event_kinds, event_ids=event_ids,
        arrival_times=arrival_times, patience_times=patience_times,
        service_times=service_times, entry_times=entry_times,
        completion_times=completion_times, abandon_times=abandon_times,
        outcomes=outcomes, X=X, E=E, S=S, G=G, K=K,
    )


def simulate(config: SystemConfig, seed: int, replication: int = 0) -> SimRecord:
    """Run one replication on [0, horizon]; same arguments, same record."""
    T = config.horizon
    n_servers = config.servers
    x0 = config.initial_head_count()
    s0 = min(x0, n_servers)
    q0 = x0 - s0

    rng_initial = make_rng(seed, replication, "initial")
    eff_service = config.effective_service()
    arrivals = BlockSampler(make_rng(seed, replication, "arrivals"),
                            config.arrival.sampler(config.n, config.mu, config.beta))
    services = BlockSampler(make_rng(seed, replication, "services"),
                            lambda rng, size: eff_service.sample(rng, size))
    patience_draw = None
    if config.abandon:
        patience_draw = BlockSampler(make_rng(seed, replication, "patience"),
                                     config.patience.sampler_n(config.n))

    # per-customer storage (ids: 0..s0-1 initial in service, s0..s0+q0-1
    # initial queued, then arrivals)
    arr_t = [0.0] * x0
    pat_t = [math.inf] * x0
    svc_t: list[float] = [math.nan] * s0
    ent_t = [0.0] * s0 + [math.nan] * q0
    comp_t = [math.nan] * x0
    abn_t = [math.nan] * x0
    status = [_IN_SERVICE] * s0 + [_WAITING] * q0

    if s0 > 0:
        if config.alpha == 1.0:
            remaining = equilibrium_distribution(config.service).sample(rng_initial, s0)
        else:
            remaining = rng_initial.exponential(1.0 / config.mu_n, s0)
    else:
        remaining = np.empty(0)
    if q0 > 0:
        svc_t.extend(eff_service.sample(rng_initial, q0))

    heap: list[tuple[float, int, int, int]] = []
    seq = 0
    for cid in range(s0):
        heap.append((float(remaining[cid]), KIND_COMPLETION, seq, cid))
        seq += 1
    heapq.heapify(heap)
    first = arrivals.next()
    if first <= T:
        heapq.heappush(heap, (first, KIND_ARRIVAL, seq, -1))
        seq += 1

    queue: deque[int] = deque(range(s0, s0 + q0))
    free = n_servers - s0

    ev_t: list[float] = []
    ev_k: list[int] = []
    ev_c: list[int] = []
    last_log = 0.0

    def log(t: float, kind: int, cid: int) -> None:
        # tie-window batches replay in priority order, which can step back
        # in time by <= 1e-12; clamp so the logged clock never decreases
        nonlocal last_log
        if t < last_log:
            t = last_log
        else:
            last_log = t
        ev_t.append(t)
        ev_k.append(kind)
        ev_c.append(cid)

    def dump_tail() -> str:
        tail = [
            f"{t:.15g} {KIND_NAMES[k]} customer {c}"
            for t, k, c in zip(ev_t[-20:], ev_k[-20:], ev_c[-20:])
        ]
        return "\n".join(tail)

    push = heapq.heappush
    pop = heapq.heappop

    def start_service(t: float, cid: int) -> None:
        nonlocal free, seq
        free -= 1
        status[cid] = _IN_SERVICE
        ent_t[cid] = t
        push(heap, (t + svc_t[cid], KIND_COMPLETION, seq, cid))
        seq += 1
        log(t, KIND_START, cid)

    while heap:
        t0 = heap[0][0]
        if t0 > T:
            break
        batch = [pop(heap)]
        while heap and heap[0][0] <= t0 + TIE_WINDOW:
            batch.append(pop(heap))
        if len(batch) > 1:
            batch.sort(key=lambda e: (e[1], e[0], e[2]))
        for t, kind, _, cid in batch:
            if kind == KIND_ARRIVAL:
                cid = len(arr_t)
                arr_t.append(t)
                svc_t.append(services.next())
                gamma = patience_draw.next() if patience_draw is not None else math.inf
                pat_t.append(gamma)
                comp_t.append(math.nan)
                abn_t.append(math.nan)
                ent_t.append(math.nan)
                status.append(_WAITING)
                log(t, KIND_ARRIVAL, cid)
                nxt = t + arrivals.next()
                if nxt <= T:
                    push(heap, (nxt, KIND_ARRIVAL, seq, -1))
                    seq += 1
                while queue and status[queue[0]] != _WAITING:
                    queue.popleft()
                if free > 0 and not queue:
                    start_service(t, cid)
                else:
                    queue.append(cid)
                    if gamma < math.inf:
                        push(heap, (t + gamma, KIND_ABANDONMENT, seq, cid))
                        seq += 1
            elif kind == KIND_COMPLETION:
                if status[cid] != _IN_SERVICE:
                    raise RuntimeError(
                        f"event-queue corruption: completion at t={t:.15g} for "
                        f"customer {cid} in state {status[cid]}; last events:\n"
                        + dump_tail()
                    )
                status[cid] = _SERVED
                comp_t[cid] = t
                free += 1
                log(t, KIND_COMPLETION, cid)
                while queue and status[queue[0]] != _WAITING:
                    queue.popleft()
                if queue:
                    start_service(t, queue.popleft())
            else:  # patience expiry; ignored unless the customer still waits
                if status[cid] != _WAITING:
                    continue
                status[cid] = _ABANDONED
                abn_t[cid] = t
                log(t, KIND_ABANDONMENT, cid)

    outcomes = np.full(len(arr_t), OUTCOME_WAITING, dtype=np.int8)
    st = np.asarray(status, dtype=np.int8)
    outcomes[st == _SERVED] = OUTCOME_SERVED
    outcomes[st == _ABANDONED] = OUTCOME_ABANDONED
    outcomes[st == _IN_SERVICE] = OUTCOME_IN_SERVICE

    return _assemble_record(
        config=config, seed=seed, replication=replication, s0=s0, q0=q0,
        event_times=np.asarray(ev_t), event_kinds=np.asarray(ev_k, dtype=np.int8),
        event_ids=np.asarray(ev_c, dtype=np.int64),
        arrival_times=np.asarray(arr_t), patience_times=np.asarray(pat_t),
        service_times=np.asarray(svc_t), entry_times=np.asarray(ent_t),
        completion_times=np.asarray(comp_t), abandon_times=np.asarray(abn_t),
        outcomes=outcomes,
    )


# ---------------------------------------------------------------------------
# waiting-time replays


def _entry_arrays(record: SimRecord) -> tuple[np.ndarray, np.ndarray]:
    """(ids, entry times) of queue members who entered service, FCFS order."""
    s0 = record.n_initial_service
    mask = (record.event_kinds == KIND_START) & (record.event_ids >= s0)
    return record.event_ids[mask], record.event_times[mask]


def _next_idle_times(record: SimRecord) -> tuple[np.ndarray, np.ndarray]:
    """For each X breakpoint, the first time >= it at which X < N_n."""
    tx = record.X.times
    below = record.X.values < record.config.servers
    cand = np.where(below, tx, np.inf)
    nxt = np.minimum.accumulate(cand[::-1])[::-1]
    return tx, nxt


def virtual_wait(record: SimRecord, t: float) -> float | None:
    """Wait of a hypothetical infinitely patient arrival at time t.

    The hypothetical customer never occupies a server; it would enter
    service at the earlier of (a) the first epoch >= t with an idle server
    and (b) the first recorded service entry of a customer who arrived
    after t (whose slot the hypothetical would have taken under FCFS).
    Returns None when the horizon ends before either happens.
    """
    vals = virtual_wait_path(record, np.asarray([float(t)]))[0]
    return None if math.isnan(vals[0]) else float(vals[0])


def virtual_wait_path(record: SimRecord, grid) -> tuple[np.ndarray, int]:
    """Vectorized virtual waits on a grid; NaN marks truncated queries.

    Returns (values, truncated_count).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < 0 or grid.max() > record.config.horizon):
        raise ValueError("grid must lie within [0, horizon]")
    tx, nxt = _next_idle_times(record)
    idx = np.searchsorted(tx, grid, side="right") - 1
    idle_at = nxt[np.maximum(idx, 0)]

    ids, entries = _entry_arrays(record)
    ent_pad = np.append(entries, np.inf)
    pos = np.searchsorted(record.arrival_times[ids], grid, side="right")
    slot_at = ent_pad[pos]

    # idle_at below grid time means X < N_n on the segment containing t:
    # the hypothetical customer enters immediately
    enter = np.maximum(np.minimum(idle_at, slot_at), grid)
    waits = enter - grid
    truncated = ~np.isfinite(enter)
    waits[truncated] = np.nan
    return waits, int(np.count_nonzero(truncated))


def offered_waits(record: SimRecord) -> tuple[np.ndarray, int]:
    """Offered wait per queue-eligible customer (initial queued + arrivals).

    Served customers: recorded wait.  Abandoned customers: the wait they
    would have faced had they stayed, replayed against the others' recorded
    behavior: the earlier of the next idle-server epoch and the recorded
    entry of the next customer behind them.  NaN marks horizon truncation;
    the truncated count is returned alongside.
    """
    s0 = record.n_initial_service
    cids = np.arange(s0, record.customers)
    waits = record.entry_times[cids] - record.arrival_times[cids]

    ids, entries = _entry_arrays(record)
    tx, nxt = _next_idle_times(record)

    abandoned = np.flatnonzero(record.outcomes[cids] == OUTCOME_ABANDONED)
    if abandoned.size:
        ab_ids = cids[abandoned]
        a = record.arrival_times[ab_ids]
        ent_pad = np.append(entries, np.inf)
        slot = ent_pad[np.searchsorted(ids, ab_ids, side="right")]
        idle = nxt[np.maximum(np.searchsorted(tx, a, side="right") - 1, 0)]
        enter = np.minimum(slot, idle)
        waits[abandoned] = np.where(np.isfinite(enter), enter - a, np.nan)
    return waits, int(np.count_nonzero(np.isnan(waits)))

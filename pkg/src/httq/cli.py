"""Command-line experiment runner.

Six subcommands mirror the library layers:

    httq simulate exp.json            event replications + scaled paths
    httq limit limit.json             limit-equation solves from sampled noise
    httq renewal --service exp:rate=1 --T 10
    httq sweep sweep.json --check     n-sweep with trend/KS thresholds
    httq compare cmp.json --check     CRN queue-domination check
    httq maps maps.json               one regulator-mapping solve

Experiment files are JSON objects; unknown keys anywhere are errors, and
a "command" key, when present, must match the subcommand.  Artifacts go
to <out>/<12-hex hash of the resolved spec>/, every file starts with a
(version, spec-hash, seed) header, and a schema.json documents the CSV
columns, so a rerun of the same resolved spec is byte-identical and
diff-able.  Exit codes: 0 success, 2 validation failure, 3 threshold
failure under --check.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import DistributionSpec
from .limits import sample_brownian, sample_noise, solve_limit_case_i, solve_limit_case_ii
from .maps import MappingProblem
from .paths import CadlagPath, uniform_grid
from .patience import PatienceSpec
from .renewal import compute_renewal_function
from .scaling import scale
from .simulator import KIND_NAMES, OUTCOME_ABANDONED, OUTCOME_IN_SERVICE, \
    OUTCOME_SERVED, OUTCOME_WAITING, SystemConfig, simulate
from .streams import make_rng
from .validation import GAP_NAMES, compare_abandonment, convergence_sweep

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_THRESHOLD = 3


class CliError(Exception):
    """Invalid experiment spec or flags; maps to exit code 2."""


# ---------------------------------------------------------------------------
# spec plumbing


def _load_doc(path: str) -> dict:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise CliError(f"experiment file not found: {path}")
    except json.JSONDecodeError as err:
        raise CliError(f"experiment file {path} is not valid JSON: {err}")
    if not isinstance(doc, dict):
        raise CliError(f"experiment file {path} must hold a JSON object")
    return doc


def _require_keys(doc: dict, allowed, where: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise CliError(f"unknown keys in {where}: {', '.join(unknown)}")


def _need(doc: dict, key: str, where: str):
    if key not in doc or doc[key] is None:
        raise CliError(f"{where} is missing required key {key!r}")
    return doc[key]


def _check_command(doc: dict, command: str) -> None:
    if "command" in doc and doc["command"] != command:
        raise CliError(
            f"experiment file says command={doc['command']!r}, invoked as {command!r}"
        )


def _spec_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _meta(spec_hash: str, seed: int) -> dict:
    return {"version": __version__, "spec_hash": spec_hash, "seed": seed}


def _meta_line(meta: dict) -> str:
    return f"httq v{meta['version']} spec={meta['spec_hash']} seed={meta['seed']}"


def _outdir(args, spec_hash: str) -> Path:
    d = Path(args.out) / spec_hash
    d.mkdir(parents=True, exist_ok=True)
    return d


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("HTTQ_WORKERS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"HTTQ_WORKERS must be an integer, got {env!r}")
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# artifact writers


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, meta: dict, columns, rows) -> None:
    with open(path, "w") as fh:
        fh.write("# " + _meta_line(meta) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _write_json(path: Path, meta: dict, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump({"meta": meta, **payload}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_schema(outdir: Path, meta: dict, files: dict) -> None:
    _write_json(outdir / "schema.json", meta, {"files": files})


# ---------------------------------------------------------------------------
# flag-form distribution specs, e.g. exp:rate=1, erlang:shape=2,rate=2


_DIST_ALIASES = {"exp": "exponential", "det": "deterministic", "logn": "lognormal"}


def _parse_dist_flag(text: str) -> DistributionSpec:
    family, _, params = text.partition(":")
    family = _DIST_ALIASES.get(family, family)
    kv: dict = {"family": family}
    if params:
        for part in params.split(","):
            key, eq, val = part.partition("=")
            if not eq:
                raise CliError(f"bad distribution parameter {part!r} in {text!r}")
            try:
                kv[key] = float(val)
            except ValueError:
                raise CliError(f"distribution parameter {key} must be a number, got {val!r}")
    if "shape" in kv:
        kv["shape"] = int(kv["shape"])
    try:
        return DistributionSpec.from_dict(kv)
    except ValueError as err:
        raise CliError(str(err))


def _limit_f_from(doc_patience) -> object:
    if doc_patience is None:
        return None
    return PatienceSpec.from_dict(doc_patience).limit_function()


# ---------------------------------------------------------------------------
# simulate


def _simulate_job(args):
    config, seed, rep = args
    return simulate(config, seed, rep)


def _cmd_simulate(args) -> int:
    doc = _load_doc(args.spec)
    _check_command(doc, "simulate")
    _require_keys(doc, {"command", "config", "replications", "seed", "grid_step"},
                  "simulate spec")
    config = SystemConfig.from_dict(_need(doc, "config", "simulate spec"))
    reps = int(doc.get("replications", 1))
    if reps < 1:
        raise CliError("replications must be >= 1")
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    grid_step = args.grid_step if args.grid_step is not None else doc.get("grid_step")
    T = config.horizon
    if grid_step is None:
        grid_step = T / 200.0
    grid = uniform_grid(T, float(grid_step))

    resolved = {"command": "simulate", "config": config.to_dict(),
                "replications": reps, "seed": seed, "grid_step": float(grid_step)}
    h = _spec_hash(resolved)
    meta = _meta(h, seed)
    outdir = _outdir(args, h)

    jobs = [(config, seed, r) for r in range(reps)]
    workers = _workers(args)
    if workers > 1 and reps > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_simulate_job, jobs))
    else:
        records = [_simulate_job(j) for j in jobs]

    per_rep = []
    for r, record in enumerate(records):
        bundle = scale(record, grid=grid)
        _write_csv(
            outdir / f"events_r{r}.csv", meta, ("time", "kind", "customer"),
            ((t, KIND_NAMES[int(k)], int(c)) for t, k, c in
             zip(record.event_times, record.event_kinds, record.event_ids)),
        )
        _write_csv(
            outdir / f"scaled_r{r}.csv", meta,
            ("t", "X", "Q", "E", "S", "G", "G_hat", "omega"),
            zip(grid, bundle.X.sampled(grid), bundle.Q.sampled(grid),
                bundle.E.sampled(grid), bundle.S.sampled(grid),
                bundle.G.sampled(grid), bundle.G_hat.sampled(grid), bundle.omega),
        )
        out = record.outcomes
        per_rep.append({
            "replication": r,
            "customers": int(record.customers),
            "served": int(np.count_nonzero(out == OUTCOME_SERVED)),
            "abandoned": int(np.count_nonzero(out == OUTCOME_ABANDONED)),
            "waiting_at_horizon": int(np.count_nonzero(out == OUTCOME_WAITING)),
            "in_service_at_horizon": int(np.count_nonzero(out == OUTCOME_IN_SERVICE)),
            "truncated_virtual_waits": int(bundle.omega_truncated),
            "balance_gap": float(record.balance_gap()),
            "final_head_count": int(record.X(T)),
        })
    _write_json(outdir / "summary.json", meta,
                {"spec": resolved, "per_replication": per_rep})
    _write_schema(outdir, meta, {
        "events_r<k>.csv": {
            "time": "event epoch",
            "kind": "arrival | service-start | service-end | abandonment",
            "customer": "FCFS customer id",
        },
        "scaled_r<k>.csv": {
            "t": "grid time",
            "X": "(head count - servers)/sqrt(n)",
            "Q": "positive part of X",
            "E": "centered scaled arrivals",
            "S": "centered scaled service completions",
            "G": "abandonments/sqrt(n)",
            "G_hat": "G minus the abandonment compensator",
            "omega": "sqrt(n) * virtual wait (nan = ran past horizon)",
        },
    })
    print(f"simulate: {reps} replication(s), artifacts in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# limit


def _cmd_limit(args) -> int:
    doc = _load_doc(args.spec)
    _check_command(doc, "limit")
    _require_keys(doc, {"command", "case", "xi", "beta", "mu", "ca2", "patience",
                        "service", "horizon", "grid_step", "reps", "seed", "tol"},
                  "limit spec")
    case = _need(doc, "case", "limit spec")
    if case not in ("i", "ii"):
        raise CliError(f"case must be 'i' or 'ii', got {case!r}")
    xi = float(_need(doc, "xi", "limit spec"))
    beta = float(_need(doc, "beta", "limit spec"))
    mu = float(_need(doc, "mu", "limit spec"))
    ca2 = float(doc.get("ca2", 1.0))
    T = float(_need(doc, "horizon", "limit spec"))
    reps = int(doc.get("reps", 1))
    if reps < 1:
        raise CliError("reps must be >= 1")
    tol = float(doc.get("tol", 1e-10))
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    grid_step = args.grid_step if args.grid_step is not None else doc.get("grid_step")
    if grid_step is None:
        grid_step = T / 512.0
    grid = uniform_grid(T, float(grid_step))

    service = doc.get("service")
    if case == "ii":
        service_spec = DistributionSpec.from_dict(
            _need(doc, "service", "limit spec (case 'ii')"))
        table = compute_renewal_function(service_spec, T, step=float(grid_step))
    else:
        if service is not None:
            raise CliError("case 'i' does not use a service renewal table")
        service_spec = table = None
    f = _limit_f_from(doc.get("patience"))

    resolved = {"command": "limit", "case": case, "xi": xi, "beta": beta, "mu": mu,
                "ca2": ca2, "patience": doc.get("patience"),
                "service": None if service_spec is None else service_spec.to_dict(),
                "horizon": T, "grid_step": float(grid_step), "reps": reps,
                "seed": seed, "tol": tol}
    h = _spec_hash(resolved)
    meta = _meta(h, seed)
    outdir = _outdir(args, h)

    paths, summary = [], []
    for r in range(reps):
        noise = sample_noise(case, mu, ca2, grid, seed, replication=r,
                             M=table, H=service_spec)
        if case == "i":
            sol = solve_limit_case_i(xi, noise.E, noise.S, beta, mu, f, grid,
                                     inputs=noise)
        else:
            sol = solve_limit_case_ii(xi, noise.E, noise.S, beta, mu, f, table,
                                      grid, tol=tol, inputs=noise)
        paths.append(sol.x.sampled(grid))
        summary.append({"replication": r, "residual": float(sol.residual),
                        "jitter": float(noise.jitter)})
    _write_csv(outdir / "limit.csv", meta,
               ("t", *(f"x_r{r}" for r in range(reps))),
               zip(grid, *paths))
    _write_json(outdir / "limit_summary.json", meta,
                {"spec": resolved, "per_replication": summary})
    _write_schema(outdir, meta, {
        "limit.csv": {
            "t": "grid time",
            "x_r<k>": "solved limit path for replication k",
        },
    })
    print(f"limit case ({case}): {reps} solve(s), artifacts in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# renewal


def _cmd_renewal(args) -> int:
    if args.spec is not None and args.service is not None:
        raise CliError("give either an experiment file or --service/--T, not both")
    if args.spec is not None:
        doc = _load_doc(args.spec)
        _check_command(doc, "renewal")
        _require_keys(doc, {"command", "service", "horizon", "step", "seed"},
                      "renewal spec")
        service = DistributionSpec.from_dict(_need(doc, "service", "renewal spec"))
        T = float(_need(doc, "horizon", "renewal spec"))
        step = doc.get("step")
        seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    elif args.service is not None:
        if args.T is None:
            raise CliError("--service needs --T as well")
        service = _parse_dist_flag(args.service)
        T = float(args.T)
        step = args.grid_step
        seed = args.seed if args.seed is not None else 0
    else:
        raise CliError("renewal needs an experiment file or --service/--T")

    table = compute_renewal_function(service, T, step=None if step is None else float(step))
    resolved = {"command": "renewal", "service": service.to_dict(), "horizon": T,
                "step": table.step, "seed": seed}
    h = _spec_hash(resolved)
    meta = _meta(h, seed)
    outdir = _outdir(args, h)

    _write_csv(outdir / "renewal.csv", meta, ("t", "M"),
               zip(table.times, table.values))
    _write_json(outdir / "summary.json", meta, {
        "spec": resolved,
        "rate": float(table.rate()),
        "method": table.method,
        "step": float(table.step),
        "points": int(table.times.size),
        "M_at_horizon": float(table.values[-1]),
    })
    _write_schema(outdir, meta, {
        "renewal.csv": {"t": "lattice time", "M": "expected renewal count by t"},
    })
    print(f"renewal: M computed on [0, {T}] with step {table.step}, artifacts in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _eval_thresholds(report, thr: dict) -> list[str]:
    _require_keys(thr, {"decreasing", "ks_max", "ratio_max"}, "thresholds")
    failures = []
    for name in thr.get("decreasing", []):
        verdict = report.verdicts.get(name)
        if verdict is None:
            raise CliError(f"thresholds reference unknown statistic {name!r}; "
                           f"known: {sorted(report.verdicts)}")
        if verdict != "decreasing":
            failures.append(f"{name}: verdict {verdict!r}, required decreasing")
    for item in thr.get("ks_max", []):
        _require_keys(item, {"n", "checkpoint", "max"}, "ks_max entry")
        n, t, mx = int(item["n"]), float(item["checkpoint"]), float(item["max"])
        if n not in report.ks:
            raise CliError(f"ks_max references n={n} not in the sweep {list(report.ks)}")
        match = [v for tk, v in report.ks[n].items() if math.isclose(tk, t)]
        if not match:
            raise CliError(f"ks_max references checkpoint {t} not in {list(report.ks[n])}")
        if match[0] > mx:
            failures.append(f"ks@{t:g} at n={n}: {match[0]:.4f} > {mx}")
    for item in thr.get("ratio_max", []):
        _require_keys(item, {"statistic", "max"}, "ratio_max entry")
        name, mx = item["statistic"], float(item["max"])
        if name not in report.summaries:
            raise CliError(f"ratio_max references unknown statistic {name!r}")
        n_lo, n_hi = min(report.n_values), max(report.n_values)
        lo = report.summaries[name][n_lo]["median"]
        hi = report.summaries[name][n_hi]["median"]
        if hi > mx * lo:
            failures.append(
                f"{name}: median {hi:.4g} at n={n_hi} exceeds {mx} x {lo:.4g} at n={n_lo}")
    return failures


def _cmd_sweep(args) -> int:
    doc = _load_doc(args.spec)
    _check_command(doc, "sweep")
    _require_keys(doc, {"command", "config", "n_values", "replications", "seed",
                        "checkpoints", "grid_points", "thresholds"}, "sweep spec")
    config = SystemConfig.from_dict(_need(doc, "config", "sweep spec"))
    n_values = [int(n) for n in _need(doc, "n_values", "sweep spec")]
    reps = int(_need(doc, "replications", "sweep spec"))
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    checkpoints = doc.get("checkpoints")
    grid_points = int(doc.get("grid_points", 256))
    if args.grid_step is not None:
        gp = round(config.horizon / args.grid_step)
        if abs(gp * args.grid_step - config.horizon) > 1e-9 * max(1.0, config.horizon):
            raise CliError("--grid-step must divide the horizon")
        grid_points = gp
    thresholds = doc.get("thresholds", {})
    if not isinstance(thresholds, dict):
        raise CliError("thresholds must be an object")

    resolved = {"command": "sweep", "config": config.to_dict(), "n_values": n_values,
                "replications": reps, "seed": seed, "checkpoints": checkpoints,
                "grid_points": grid_points, "thresholds": thresholds}
    h = _spec_hash(resolved)
    meta = _meta(h, seed)
    outdir = _outdir(args, h)

    report = convergence_sweep(config, n_values, reps, checkpoints=checkpoints,
                               seed=seed, grid_points=grid_points,
                               workers=_workers(args))
    report.to_json(outdir / "report.json", meta=meta)
    report.to_csv(outdir / "report.csv", meta="# " + _meta_line(meta))
    _write_schema(outdir, meta, {
        "report.csv": {
            "n": "system size",
            "statistic": "coupling_gap | little_gap | neg_part_sup | ks@<t>",
            "replication": "replication id (empty for KS aggregates)",
            "value": "statistic value",
        },
    })
    for name, verdict in sorted(report.verdicts.items()):
        print(f"sweep: {name}: {verdict}")
    failures = _eval_thresholds(report, thresholds)
    if args.check:
        if failures:
            for f in failures:
                print(f"check failed: {f}", file=sys.stderr)
            print(f"artifacts in {outdir}")
            return EXIT_THRESHOLD
        print(f"check passed ({_threshold_count(thresholds)} threshold(s)), "
              f"artifacts in {outdir}")
        return EXIT_OK
    print(f"artifacts in {outdir}")
    return EXIT_OK


def _threshold_count(thr: dict) -> int:
    return sum(len(v) for v in thr.values())


# ---------------------------------------------------------------------------
# compare


def _cmd_compare(args) -> int:
    doc = _load_doc(args.spec)
    _check_command(doc, "compare")
    _require_keys(doc, {"command", "config", "seeds", "replications", "seed"},
                  "compare spec")
    config = SystemConfig.from_dict(_need(doc, "config", "compare spec"))
    base_seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    n_seeds = int(doc.get("seeds", 1))
    reps = int(doc.get("replications", 1))
    if n_seeds < 1 or reps < 1:
        raise CliError("seeds and replications must be >= 1")

    resolved = {"command": "compare", "config": config.to_dict(), "seed": base_seed,
                "seeds": n_seeds, "replications": reps}
    h = _spec_hash(resolved)
    meta = _meta(h, base_seed)
    outdir = _outdir(args, h)

    verdicts = []
    for s in range(base_seed, base_seed + n_seeds):
        for r in range(reps):
            v = compare_abandonment(config, seed=s, replication=r)
            entry = {"seed": s, "replication": r, "holds": v.holds,
                     "max_queue_excess": float(v.max_queue_excess),
                     "n_checked": int(v.n_checked)}
            if not v.holds:
                entry["first_violation"] = list(v.first_violation)
                entry["detail"] = v.detail
            verdicts.append(entry)
    all_hold = all(v["holds"] for v in verdicts)
    _write_json(outdir / "compare.json", meta,
                {"spec": resolved, "all_hold": all_hold, "verdicts": verdicts})
    print(f"compare: {len(verdicts)} CRN run(s), "
          f"{'no violations' if all_hold else 'VIOLATIONS FOUND'}, artifacts in {outdir}")
    if not all_hold:
        for v in verdicts:
            if not v["holds"]:
                print(v["detail"], file=sys.stderr)
        if args.check:
            return EXIT_THRESHOLD
    return EXIT_OK


# ---------------------------------------------------------------------------
# maps


_MAP_NAMES = ("phi_n_g", "skorokhod_g", "phi_M", "phi_Mg")


def _path_from_doc(y_doc, grid: np.ndarray, horizon: float, seed: int) -> CadlagPath:
    if not isinstance(y_doc, dict):
        raise CliError("y must be an object")
    if "brownian" in y_doc:
        _require_keys(y_doc, {"brownian"}, "y")
        b = y_doc["brownian"]
        _require_keys(b, {"variance_rate"}, "y.brownian")
        return sample_brownian(float(_need(b, "variance_rate", "y.brownian")),
                               grid, make_rng(seed, purpose="scratch"))
    _require_keys(y_doc, {"times", "values", "kind"}, "y")
    return CadlagPath(np.asarray(_need(y_doc, "times", "y"), dtype=float),
                      np.asarray(_need(y_doc, "values", "y"), dtype=float),
                      y_doc.get("kind", "linear"), horizon)


def _g_from_doc(g_doc):
    if g_doc is None:
        return None
    if not isinstance(g_doc, dict):
        raise CliError("g must be null or an object")
    _require_keys(g_doc, {"slope"}, "g")
    slope = float(_need(g_doc, "slope", "g"))

    def g(x, _s=slope):
        return _s * np.asarray(x, dtype=float)

    return g


def _cmd_maps(args) -> int:
    doc = _load_doc(args.spec)
    _check_command(doc, "maps")
    _require_keys(doc, {"command", "map", "y", "g", "mu_n", "service", "horizon",
                        "grid_step", "tol", "g_sign", "initial_guess", "seed"},
                  "maps spec")
    variant = _need(doc, "map", "maps spec")
    if variant not in _MAP_NAMES:
        raise CliError(f"unknown map {variant!r}; known: {', '.join(_MAP_NAMES)}")
    T = float(_need(doc, "horizon", "maps spec"))
    grid_step = args.grid_step if args.grid_step is not None else doc.get("grid_step")
    if grid_step is None:
        grid_step = T / 512.0
    grid = uniform_grid(T, float(grid_step))
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))

    if variant == "phi_n_g" and doc.get("mu_n") is None:
        raise CliError("map phi_n_g needs mu_n")
    if variant != "phi_n_g" and doc.get("mu_n") is not None:
        raise CliError(f"map {variant} does not use mu_n")
    needs_table = variant in ("phi_M", "phi_Mg")
    if needs_table and doc.get("service") is None:
        raise CliError(f"map {variant} needs a service distribution for the renewal table")
    if not needs_table and doc.get("service") is not None:
        raise CliError(f"map {variant} does not use a service renewal table")

    table = None
    service_spec = None
    if needs_table:
        service_spec = DistributionSpec.from_dict(doc["service"])
        table = compute_renewal_function(service_spec, T, step=float(grid_step))
    g = _g_from_doc(doc.get("g"))

    resolved = {"command": "maps", "map": variant, "y": doc.get("y"),
                "g": doc.get("g"), "mu_n": doc.get("mu_n"),
                "service": None if service_spec is None else service_spec.to_dict(),
                "horizon": T, "grid_step": float(grid_step),
                "tol": float(doc.get("tol", 1e-10)),
                "g_sign": float(doc.get("g_sign", 1.0)),
                "initial_guess": doc.get("initial_guess", "y"), "seed": seed}
    h = _spec_hash(resolved)
    meta = _meta(h, seed)
    outdir = _outdir(args, h)

    y = _path_from_doc(_need(doc, "y", "maps spec"), grid, T, seed)
    problem = MappingProblem(
        variant=variant, y=y, grid=grid, g=g,
        mu_n=None if doc.get("mu_n") is None else float(doc["mu_n"]),
        M=table, g_sign=resolved["g_sign"], tol=resolved["tol"],
        initial_guess=resolved["initial_guess"],
    )
    sol = problem.solve()
    sol.to_csv(outdir / "solution.csv", header=_meta_line(meta))
    _write_json(outdir / "solution_summary.json", meta, {
        "spec": resolved,
        "variant": sol.variant,
        "residual": float(sol.residual),
        "iterations": None if sol.iterations is None else int(sol.iterations),
        "diagnostics": {k: float(v) for k, v in sol.diagnostics.items()
                        if np.isscalar(v)},
    })
    _write_schema(outdir, meta, {
        "solution.csv": {
            "t": "grid time",
            "x": "constrained path",
            "ell": "regulator (only for maps that produce one)",
        },
    })
    print(f"maps: {variant} solved, residual {sol.residual:.3e}, artifacts in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="httq",
        description="Many-server queues with abandonment: simulation, scalings, "
                    "limit processes, and convergence experiments.",
    )
    parser.add_argument("--version", action="version", version=f"httq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, spec_required: bool = True):
        p = sub.add_parser(name, help=help_text)
        if spec_required:
            p.add_argument("spec", help="experiment JSON file")
        else:
            p.add_argument("spec", nargs="?", default=None,
                           help="experiment JSON file (or use flags)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the spec seed")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: HTTQ_WORKERS or all cores)")
        p.add_argument("--out", default="runs", help="output root (default: runs)")
        p.add_argument("--check", action="store_true",
                       help="exit 3 when thresholds or domination checks fail")
        p.add_argument("--grid-step", type=float, default=None, dest="grid_step",
                       help="override the sampling/solver grid step")
        return p

    add("simulate", "run event-exact replications and emit scaled paths")
    add("limit", "solve the limit equation on sampled noise")
    renewal = add("renewal", "tabulate a renewal function", spec_required=False)
    renewal.add_argument("--service", default=None,
                         help="service law, e.g. exp:rate=1 or erlang:shape=2,rate=2")
    renewal.add_argument("--T", type=float, default=None, help="horizon")
    add("sweep", "n-sweep of gap statistics and KS marginals")
    add("compare", "CRN comparison against the no-abandonment benchmark")
    add("maps", "solve one regulator mapping")
    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "limit": _cmd_limit,
    "renewal": _cmd_renewal,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "maps": _cmd_maps,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

"""Experiment harness: config, CLI, CSV persistence and the two studies.

Subcommands: ``simulate`` writes an observation series; ``pmcmc`` runs one
single-level chain and writes its trace; ``mlpmcmc`` runs the multilevel
estimator and writes per-level traces plus the combined estimate;
``rate-study`` sweeps an epsilon grid for both methods, persists every
replicate estimate, and fits log-cost against log-MSE slopes per
parameter; ``validate`` runs the oracle and property battery. Every run
writes a metadata record (config echo, seed, version, wall time) so it can
be reproduced bit-for-bit. Floats are serialised with shortest
round-trip precision, so re-reading a CSV recovers the doubles exactly.

Exit codes: 0 success, 1 usage error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import NumericsError
from .filters import check_h_weight, h_weight, particle_filter
from .kalman import kalman_oracle
from .mcmc import DEFAULT_STEP_SIZES, ProposalSpec, estimate_single, run_single_level
from .mlmc import cost_units, level_cost_units, make_level_plan, mlmc_estimate
from .model import (
    MODEL_REGISTRY,
    ModelSpec,
    ObservationSeries,
    PARAMETER_NAMES,
    Parameter,
    build_model,
    disable_interaction,
    natural_parameter,
    simulate_data,
)
from .rng import stream, subseed

__all__ = [
    "ExperimentConfig",
    "RateRow",
    "RateTable",
    "fit_rate",
    "cli_run",
    "main",
    "write_csv",
    "read_csv",
]

OUTPUT_ROOT_ENV = "MVPMCMC_OUT"

TRACE_HEADER = ["iter", "theta", "log_sigma", "log_tau", "log_like", "accepted"]
OBS_HEADER = ["k", "y"]
RATE_HEADER = ["method", "parameter", "epsilon", "cost_units", "mse", "slope"]
RUNS_HEADER = ["method", "parameter", "epsilon", "replicate", "estimate", "cost_units"]
REFERENCE_HEADER = ["parameter", "ref_mean"]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """All knobs of the harness; every field doubles as a CLI flag."""

    model: str = "kuramoto"
    theta_true: float = 0.0
    sigma_true: float = 0.2
    tau_true: float = 1.0
    T: int = 100
    seed: int = 0
    data_level: int = 10
    data_N: int = 1000
    level: int = 3
    N: int = 50
    M: int = 0              # 0 means "use T"
    iters: int = 5000
    burn_in: int = 0
    step_sizes: tuple = tuple(DEFAULT_STEP_SIZES)
    epsilon: float = 0.1
    epsilon_grid: tuple = (0.2, 0.1, 0.06)
    l_star: int = 2
    c_I: float = 8.0
    c_N: float = 0.7
    c_I_single: float = 8.0
    c_N_single: float = 0.35
    replicates: int = 20
    I_min: int = 1
    ref_extra_levels: int = 2
    ref_factor: int = 10
    ref_N: int = 80
    fit_only: bool = False
    workers: int = 1
    out_dir: str = ""

    def __post_init__(self):
        if self.model not in MODEL_REGISTRY:
            raise ValueError(f"unknown model {self.model!r}")
        if self.T < 1 or self.iters < 0 or self.replicates < 1:
            raise ValueError("counts must be positive")
        grid = tuple(float(e) for e in self.epsilon_grid)
        if any(e2 >= e1 for e1, e2 in zip(grid, grid[1:])):
            raise ValueError("epsilon grid must be strictly decreasing")
        object.__setattr__(self, "epsilon_grid", grid)
        object.__setattr__(self, "step_sizes", tuple(float(s) for s in self.step_sizes))

    @property
    def m_particles(self) -> int:
        return self.M if self.M > 0 else self.T

    @property
    def truth(self) -> Parameter:
        return natural_parameter(self.theta_true, self.sigma_true, self.tau_true)

    def build_model(self) -> ModelSpec:
        return build_model(self.model)

    def proposal(self) -> ProposalSpec:
        return ProposalSpec(np.asarray(self.step_sizes))

    def output_dir(self) -> Path:
        root = self.out_dir or os.environ.get(OUTPUT_ROOT_ENV, "out")
        p = Path(root)
        p.mkdir(parents=True, exist_ok=True)
        return p

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["step_sizes"] = list(self.step_sizes)
        d["epsilon_grid"] = list(self.epsilon_grid)
        return d


_LIST_KEYS = {"step_sizes", "epsilon_grid"}
_BOOL_KEYS = {"fit_only"}


def _parse_scalar(key: str, raw: str):
    field_types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    if key not in field_types:
        raise ValueError(f"unknown config key {key!r}")
    if key in _LIST_KEYS:
        return tuple(float(part) for part in raw.replace(",", " ").split())
    if key in _BOOL_KEYS:
        return raw.strip().lower() in {"1", "true", "yes", "on"}
    default = getattr(ExperimentConfig(), key)
    if isinstance(default, bool):
        return raw.strip().lower() in {"1", "true", "yes", "on"}
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw.strip()


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build a config from defaults, an optional key=value file, and overrides."""
    values: dict = {}
    if path:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            values[key] = _parse_scalar(key, raw)
    if overrides:
        values.update(overrides)
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# CSV and metadata persistence
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: Path, required: Optional[Sequence[str]] = None):
    """Read a harness CSV into a list of per-row dicts of strings."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if required:
        for col in required:
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(dict(zip(header, parts)))
    return rows


def _write_metadata(path: Path, command: str, cfg: ExperimentConfig, wall_time: float, extra=None):
    record = {
        "command": command,
        "version": f"mvpmcmc {__version__}",
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "wall_time_s": wall_time,
    }
    if extra:
        record.update(extra)
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------

def fit_rate(points) -> float:
    """Least-squares slope of log(cost) against log(MSE)."""
    pts = [(float(c), float(m)) for c, m in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit a rate")
    if any(c <= 0 or m <= 0 for c, m in pts):
        raise ValueError("costs and MSEs must be positive")
    x = np.log([m for _, m in pts])
    y = np.log([c for c, _ in pts])
    vx = x - x.mean()
    denom = float(np.dot(vx, vx))
    if denom == 0.0:
        raise ValueError("degenerate fit: all MSEs identical")
    return float(np.dot(vx, y - y.mean()) / denom)


@dataclass(frozen=True)
class RateRow:
    parameter: str
    slope_single: float
    slope_multilevel: float


@dataclass(frozen=True)
class RateTable:
    rows: tuple

    def slope(self, parameter: str, method: str) -> float:
        for row in self.rows:
            if row.parameter == parameter:
                return row.slope_single if method == "single" else row.slope_multilevel
        raise KeyError(parameter)


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

def _projections():
    """Coordinate-projection functionals, one per parameter."""
    return [
        (name, (lambda theta, x, i=i: float(theta[i])))
        for i, name in enumerate(PARAMETER_NAMES)
    ]


def _obs_path(cfg: ExperimentConfig) -> Path:
    return cfg.output_dir() / "observations.csv"


def _ensure_observations(cfg: ExperimentConfig) -> ObservationSeries:
    """Load cached observations, generating and persisting them if absent."""
    path = _obs_path(cfg)
    if path.exists():
        rows = read_csv(path, required=OBS_HEADER)
        if len(rows) != cfg.T:
            raise ValueError(
                f"{path} holds {len(rows)} observations but the config says T={cfg.T}; "
                "remove the file or point out_dir elsewhere"
            )
        return ObservationSeries(np.array([float(r["y"]) for r in rows]))
    obs = simulate_data(
        cfg.build_model(), cfg.truth, cfg.T, cfg.data_level, cfg.data_N, seed=cfg.seed
    )
    write_csv(path, OBS_HEADER, [(k + 1, y) for k, y in enumerate(obs.y)])
    return obs


def _trace_rows(trace):
    rows = []
    for j, state in enumerate(trace.states):
        th = state.param.theta
        rows.append((j, th[0], th[1], th[2], state.log_likelihood, int(trace.accepted[j])))
    return rows


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    obs = simulate_data(
        cfg.build_model(), cfg.truth, cfg.T, cfg.data_level, cfg.data_N, seed=cfg.seed
    )
    out = cfg.output_dir()
    write_csv(out / "observations.csv", OBS_HEADER, [(k + 1, y) for k, y in enumerate(obs.y)])
    _write_metadata(
        out / "simulate_meta.json",
        "simulate",
        cfg,
        time.perf_counter() - t0,
        {"data_discretisation": {"level": cfg.data_level, "N": cfg.data_N}},
    )
    print(f"wrote {out / 'observations.csv'} ({obs.T} rows)")
    return 0


def cmd_pmcmc(cfg: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    model = cfg.build_model()
    obs = _ensure_observations(cfg)
    trace = run_single_level(
        model, obs, cfg.level, cfg.N, cfg.m_particles, cfg.iters,
        cfg.proposal(), stream(cfg.seed, 10),
    )
    out = cfg.output_dir()
    write_csv(out / "trace.csv", TRACE_HEADER, _trace_rows(trace))
    _write_metadata(
        out / "pmcmc_meta.json", "pmcmc", cfg, time.perf_counter() - t0,
        {"acceptance_rate": trace.acceptance_count / max(1, cfg.iters)},
    )
    print(
        f"wrote {out / 'trace.csv'} ({len(trace)} rows), "
        f"acceptance {trace.acceptance_count}/{cfg.iters}"
    )
    return 0


def cmd_mlpmcmc(cfg: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    model = cfg.build_model()
    obs = _ensure_observations(cfg)
    plan = make_level_plan(cfg.epsilon, cfg.l_star, cfg.c_I, cfg.c_N, cfg.m_particles, cfg.I_min)
    names_phis = _projections()
    result = mlmc_estimate(
        model, obs, plan, [phi for _, phi in names_phis], cfg.proposal(),
        subseed(cfg.seed, 20), keep_traces=True,
    )
    out = cfg.output_dir()
    level_rows = []
    for i, entry in enumerate(plan.entries):
        contrib = result.per_level_contributions[i]
        level_rows.append(
            (entry.level, entry.N, entry.I, entry.M,
             level_cost_units(entry.level, entry.N, entry.I, entry.M),
             contrib[0], contrib[1], contrib[2])
        )
        write_csv(out / f"trace_l{entry.level}.csv", TRACE_HEADER, _trace_rows(result.traces[i]))
    write_csv(
        out / "mlmc_levels.csv",
        ["level", "N", "I", "M", "cost_units", "contrib_theta", "contrib_log_sigma", "contrib_log_tau"],
        level_rows,
    )
    write_csv(
        out / "mlmc_estimate.csv",
        ["parameter", "estimate"],
        [(name, est) for (name, _), est in zip(names_phis, result.estimates)],
    )
    _write_metadata(
        out / "mlpmcmc_meta.json", "mlpmcmc", cfg, time.perf_counter() - t0,
        {"plan": {"l_star": plan.l_star, "L": plan.L, "clamped": plan.clamped},
         "cost_units": result.total_cost_units},
    )
    print(f"wrote multilevel outputs to {out} (levels {plan.levels})")
    return 0


# --- rate study -------------------------------------------------------------

def _single_level_budget(cfg: ExperimentConfig, epsilon: float):
    """Comparator schedule: one chain at L(eps) with N, I ~ eps^-2."""
    L = max(1, math.ceil(math.log2(1.0 / epsilon)))
    N = max(2, math.ceil(cfg.c_N_single * epsilon ** -2.0))
    I = max(cfg.I_min, math.ceil(cfg.c_I_single * epsilon ** -2.0))
    return L, N, I


def _run_single_task(args):
    (model_name, truth_vals, y, level, N, I, M, step_sizes, seed) = args
    model = build_model(model_name)
    obs = ObservationSeries(np.asarray(y))
    trace = run_single_level(
        model, obs, level, N, M, I, ProposalSpec(np.asarray(step_sizes)), stream(seed, 0)
    )
    return [estimate_single(trace, phi) for _, phi in _projections()]


def _run_multilevel_task(args):
    (model_name, truth_vals, y, plan_args, step_sizes, seed) = args
    model = build_model(model_name)
    obs = ObservationSeries(np.asarray(y))
    plan = make_level_plan(*plan_args)
    result = mlmc_estimate(
        model, obs, plan, [phi for _, phi in _projections()],
        ProposalSpec(np.asarray(step_sizes)), seed,
    )
    return list(result.estimates)


def _reference_posterior(cfg: ExperimentConfig, obs: ObservationSeries, out: Path) -> dict:
    """High-accuracy posterior means against which replicate MSEs are scored.

    One long single-level chain, two levels finer than the sweep's finest,
    with iterations scaled up from the largest base budget in the sweep.
    Cached on disk; the cache is keyed by the protocol parameters.
    """
    finest = min(cfg.epsilon_grid)
    L_max = max(1, math.ceil(math.log2(1.0 / finest)))
    plan_fine = make_level_plan(finest, cfg.l_star, cfg.c_I, cfg.c_N, cfg.m_particles, cfg.I_min)
    L_ref = L_max + cfg.ref_extra_levels
    I_ref = cfg.ref_factor * plan_fine.entry(cfg.l_star).I
    protocol = {
        "model": cfg.model, "T": cfg.T, "seed": cfg.seed, "L_ref": L_ref,
        "I_ref": I_ref, "N_ref": cfg.ref_N, "M": cfg.m_particles,
        "step_sizes": list(cfg.step_sizes),
    }
    ref_csv = out / "reference.csv"
    ref_meta = out / "reference_meta.json"
    if ref_csv.exists() and ref_meta.exists():
        meta = json.loads(ref_meta.read_text())
        if meta.get("protocol") == protocol:
            rows = read_csv(ref_csv, required=REFERENCE_HEADER)
            return {r["parameter"]: float(r["ref_mean"]) for r in rows}

    t0 = time.perf_counter()
    model = cfg.build_model()
    trace = run_single_level(
        model, obs, L_ref, cfg.ref_N, cfg.m_particles, I_ref,
        cfg.proposal(), stream(subseed(cfg.seed, 99), 0),
    )
    burn = I_ref // 10
    thetas = trace.thetas()[burn:]
    means = {name: float(thetas[:, i].mean()) for i, name in enumerate(PARAMETER_NAMES)}
    write_csv(ref_csv, REFERENCE_HEADER, [(k, v) for k, v in means.items()])
    ref_meta.write_text(json.dumps(
        {"protocol": protocol, "burn_in": burn, "wall_time_s": time.perf_counter() - t0},
        indent=2, sort_keys=True) + "\n")
    return means


def rate_table_from_files(runs_csv: Path, reference_csv: Path):
    """Recompute MSEs and slopes purely from the persisted per-run CSVs."""
    runs = read_csv(runs_csv, required=RUNS_HEADER)
    ref_rows = read_csv(reference_csv, required=REFERENCE_HEADER)
    ref = {r["parameter"]: float(r["ref_mean"]) for r in ref_rows}

    grouped: dict = {}
    for r in runs:
        key = (r["method"], r["parameter"], float(r["epsilon"]))
        grouped.setdefault(key, {"cost": float(r["cost_units"]), "est": []})
        grouped[key]["est"].append(float(r["estimate"]))

    mses = {
        key: (g["cost"], float(np.mean([(e - ref[key[1]]) ** 2 for e in g["est"]])))
        for key, g in grouped.items()
    }
    slopes = {}
    for method in ("single", "multilevel"):
        for parameter in PARAMETER_NAMES:
            pts = [v for (m, p, _), v in sorted(mses.items()) if m == method and p == parameter]
            slopes[(method, parameter)] = fit_rate(pts)

    rate_rows = []
    for (method, parameter, eps), (cost, mse) in sorted(mses.items()):
        rate_rows.append((method, parameter, eps, cost, mse, slopes[(method, parameter)]))
    table = RateTable(rows=tuple(
        RateRow(p, slopes[("single", p)], slopes[("multilevel", p)]) for p in PARAMETER_NAMES
    ))
    return table, rate_rows


def cmd_rate_study(cfg: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    out = cfg.output_dir()
    runs_csv = out / "runs.csv"
    rate_csv = out / "rate.csv"

    if not cfg.fit_only:
        obs = _ensure_observations(cfg)
        _reference_posterior(cfg, obs, out)
        truth_vals = tuple(cfg.truth.theta)

        tasks = []
        for ei, eps in enumerate(cfg.epsilon_grid):
            plan = make_level_plan(eps, cfg.l_star, cfg.c_I, cfg.c_N, cfg.m_particles, cfg.I_min)
            ml_cost = cost_units(plan)
            L, N_s, I_s = _single_level_budget(cfg, eps)
            sl_cost = level_cost_units(L, N_s, I_s, cfg.m_particles)
            for r in range(cfg.replicates):
                tasks.append((
                    "multilevel", ei, eps, r, ml_cost,
                    (cfg.model, truth_vals, obs.y,
                     (eps, cfg.l_star, cfg.c_I, cfg.c_N, cfg.m_particles, cfg.I_min),
                     cfg.step_sizes, subseed(cfg.seed, 1, ei, r)),
                ))
                tasks.append((
                    "single", ei, eps, r, sl_cost,
                    (cfg.model, truth_vals, obs.y, L, N_s, I_s, cfg.m_particles,
                     cfg.step_sizes, subseed(cfg.seed, 2, ei, r)),
                ))

        packed = [(t[0], t[5]) for t in tasks]
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(_dispatch_task, packed, chunksize=1))
        else:
            results = [_dispatch_task(p) for p in packed]

        rows = []
        for task, estimates in zip(tasks, results):
            method, _, eps, r, cost, _ = task
            for name, est in zip(PARAMETER_NAMES, estimates):
                rows.append((method, name, eps, r, est, cost))
        rows.sort(key=lambda row: (row[0], row[1], -row[2], row[3]))
        write_csv(runs_csv, RUNS_HEADER, rows)

    if not runs_csv.exists():
        raise ValueError("no persisted runs to fit; run without fit_only first")
    table, rate_rows = rate_table_from_files(runs_csv, out / "reference.csv")
    write_csv(rate_csv, RATE_HEADER, rate_rows)
    _write_metadata(out / "rate_study_meta.json", "rate-study", cfg, time.perf_counter() - t0)

    print(f"{'parameter':>10} {'single':>8} {'multilevel':>11}")
    for row in table.rows:
        print(f"{row.parameter:>10} {row.slope_single:8.2f} {row.slope_multilevel:11.2f}")
    return 0


def _dispatch_task(packed):
    method, args = packed
    if method == "multilevel":
        return _run_multilevel_task(args)
    return _run_single_task(args)


# --- validate ----------------------------------------------------------------

def cmd_validate(cfg: ExperimentConfig) -> int:
    """Quick oracle and property battery; exits 2 on any failure."""
    failures = 0

    def report(name, ok, detail=""):
        nonlocal failures
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}")

    model = disable_interaction(build_model(cfg.model))
    truth = cfg.truth
    obs = simulate_data(model, truth, T=5, level=6, N=64, seed=cfg.seed)
    exact = kalman_oracle(model, obs, truth, level=4)
    est = particle_filter(model, truth, obs, level=4, N=16, M=2000, rng=stream(cfg.seed, 41))
    rel = abs(est.log_likelihood - exact) / abs(exact)
    report("kalman_oracle_match", rel < 0.05, f"rel err {rel:.4f}")

    rng = stream(cfg.seed, 42)
    full = build_model(cfg.model)
    xs = rng.normal(size=(2000, 1))
    xs2 = rng.normal(size=(2000, 1))
    ys = rng.normal(size=2000)
    h = h_weight(full, truth, xs, xs2, ys)
    h_swap = h_weight(full, truth, xs2, xs, ys)
    chk = check_h_weight(full, truth, xs, xs2, ys)
    g = np.exp(full.obs_logdensity(truth, xs, ys))
    report("h_weight_symmetry", bool(np.max(np.abs(h - h_swap)) < 1e-15))
    report("check_h_weight_range", bool(np.all((chk > 0) & (chk < 2))))
    report("check_identity", bool(np.max(np.abs(chk * h - g)) < 1e-12))

    f1 = particle_filter(full, truth, obs, level=2, N=20, M=20, rng=stream(cfg.seed, 43))
    f2 = particle_filter(full, truth, obs, level=2, N=20, M=20, rng=stream(cfg.seed, 43))
    report("filter_determinism", f1.log_likelihood == f2.log_likelihood)

    prng = stream(cfg.seed, 44)
    finite = all(
        math.isfinite(full.prior_logdensity(Parameter(prng.normal(size=3))))
        for _ in range(1000)
    )
    report("prior_logdensity_finite", finite)

    return 0 if failures == 0 else 2


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{message}\n{self.format_usage()}")


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", default=None, help="key = value config file")
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in _BOOL_KEYS:
            parser.add_argument(f"--{f.name}", action="store_true", default=None)
        else:
            parser.add_argument(f"--{f.name}", default=None)


_COMMANDS = {
    "simulate": cmd_simulate,
    "pmcmc": cmd_pmcmc,
    "mlpmcmc": cmd_mlpmcmc,
    "rate-study": cmd_rate_study,
    "validate": cmd_validate,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="mvpmcmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in _COMMANDS:
        _add_config_flags(sub.add_parser(name))
    return parser


def cli_run(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point returning the process exit code."""
    try:
        ns = _build_parser().parse_args(argv)
        overrides = {}
        for f in dataclasses.fields(ExperimentConfig):
            raw = getattr(ns, f.name, None)
            if raw is None:
                continue
            overrides[f.name] = raw if not isinstance(raw, str) else _parse_scalar(f.name, raw)
        cfg = load_config(ns.config, overrides)
        return _COMMANDS[ns.command](cfg)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_run(sys.argv[1:]))


if __name__ == "__main__":
    main()

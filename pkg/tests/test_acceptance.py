"""Acceptance battery: one test per release criterion, each printing a
PASS/FAIL line. Criteria 4-5 are minutes-long statistical checks (marked
slow); criterion 6 is the desk-scale rate study (marked nightly, about an
hour and a half of compute on one core).

Run everything with:  pytest tests/test_acceptance.py -v -s
Skip the long ones:   pytest tests/test_acceptance.py -m "not slow and not nightly"
"""

import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mvpmcmc import (
    ProposalSpec,
    approximate_coupled_laws,
    check_h_weight,
    delta_particle_filter,
    disable_interaction,
    estimate_single,
    h_weight,
    kalman_oracle,
    kuramoto_model,
    mlmc_estimate,
    natural_parameter,
    particle_filter,
    run_single_level,
    simulate_data,
    stream,
)
from mvpmcmc.mlmc import LevelEntry, LevelPlan, cost_units, level_cost_units
from mvpmcmc.harness import read_csv

TRUTH = natural_parameter(0.0, 0.2, 1.0)
STEPS = ProposalSpec(np.array([0.08, 0.15, 0.07]))
NIGHTLY_OUT = Path(__file__).resolve().parent.parent / "out" / "rate_study"


def _report(criterion: str, ok: bool, detail: str) -> bool:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return ok


def test_criterion_1_oracle_equivalence():
    """Filter likelihood matches the exact Kalman value on the linear reduction."""
    model = disable_interaction(kuramoto_model())
    obs = simulate_data(model, TRUTH, T=10, level=8, N=50, seed=101)
    exact = kalman_oracle(model, obs, TRUTH, level=6)
    estimates = [
        particle_filter(model, TRUTH, obs, level=6, N=16, M=10_000, rng=stream(s, 1)).log_likelihood
        for s in range(5)
    ]
    rel_err = abs(np.mean(estimates) - exact) / abs(exact)
    ok = rel_err < 0.02
    assert _report(
        "criterion 1 (oracle equivalence)", ok,
        f"rel err {rel_err:.5f} vs 2% at M=10^4, level 6, 5 seeds"
    )


def test_criterion_2_strong_coupling_rate():
    """Fine/coarse terminal mean-square gap decays at least like Delta^0.8."""
    levels = [3, 4, 5, 6, 7]
    msd = []
    for level in levels:
        vals = []
        for s in range(20):
            grid = approximate_coupled_laws(
                kuramoto_model(), TRUTH, level, N=100, T=5, rng=stream(s, level)
            )
            gap = grid.fine.laws[-1][-1].particles - grid.coarse.laws[-1][-1].particles
            vals.append(np.mean(np.sum(gap**2, axis=-1)))
        msd.append(np.mean(vals))
    slope = float(np.polyfit(levels, np.log2(msd), 1)[0])
    ok = slope <= -0.8
    assert _report(
        "criterion 2 (strong coupling rate)", ok,
        f"log2 slope {slope:.2f} over levels 3-7, 20 seeds (gate -0.8)"
    )


def test_criterion_3_weight_properties(obs10):
    """Randomised weight identities plus filter pmf normalisation, no failures."""
    model = kuramoto_model()
    rng = stream(303, 0)
    n = 100_000
    x = rng.normal(size=(n, 1))
    x2 = rng.normal(size=(n, 1))
    y = rng.normal(size=n)
    h = h_weight(model, TRUTH, x, x2, y)
    h_swapped = h_weight(model, TRUTH, x2, x, y)
    chk = check_h_weight(model, TRUTH, x, x2, y)
    g = np.exp(model.obs_logdensity(TRUTH, x, y))

    sym_fail = int(np.sum(np.abs(h - h_swapped) >= 1e-15))
    range_fail = int(np.sum((chk <= 0) | (chk >= 2)))
    ident_fail = int(np.sum(np.abs(chk * h - g) >= 1e-12))

    pmf_fail = 0
    for make in (
        lambda: particle_filter(model, TRUTH, obs10, 2, 12, 64, stream(304, 0), keep_history=True),
        lambda: delta_particle_filter(model, TRUTH, obs10, 2, 12, 64, stream(305, 0), keep_history=True),
    ):
        out = make()
        for w in out.diagnostics.step_weights:
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                pmf_fail += 1

    failures = sym_fail + range_fail + ident_fail + pmf_fail
    ok = failures == 0
    assert _report(
        "criterion 3 (weight properties)", ok,
        f"{n} random checks: sym {sym_fail}, range {range_fail}, identity {ident_fail}, "
        f"pmf {pmf_fail} failures"
    )


@pytest.mark.slow
def test_criterion_4_telescoping_consistency(model, obs10):
    """Multilevel and matched-budget single-level estimates agree within noise."""
    plan = LevelPlan(
        l_star=2, L=4,
        entries=(LevelEntry(2, 32, 250, 10), LevelEntry(3, 23, 160, 10), LevelEntry(4, 16, 100, 10)),
        epsilon=0.1,
    )
    budget = cost_units(plan)
    per_iter = level_cost_units(4, 32, 1, 10)
    I_single = max(1, round(budget / per_iter))

    phi = lambda th, x: float(th[0])
    ml, sl = [], []
    for r in range(30):
        res = mlmc_estimate(model, obs10, plan, [phi], STEPS, seed=4000 + r)
        ml.append(res.estimates[0])
        trace = run_single_level(model, obs10, 4, 32, 10, I_single, STEPS, stream(4500 + r, 0))
        sl.append(estimate_single(trace, phi))
    ml, sl = np.array(ml), np.array(sl)
    diff = ml.mean() - sl.mean()
    se = math.sqrt(ml.var(ddof=1) / 30 + sl.var(ddof=1) / 30)
    ok = abs(diff) <= 3 * se
    assert _report(
        "criterion 4 (telescoping consistency)", ok,
        f"mean gap {diff:+.4f} vs 3*SE {3*se:.4f} over 30 pairs "
        f"(matched budget: {I_single} single-level iterations)"
    )


@pytest.mark.slow
def test_criterion_5_posterior_recovery():
    """The 95% interval for the drift parameter covers the truth in >= 17/20 runs."""
    model = kuramoto_model()
    covered = 0
    widths = []
    for run in range(20):
        obs = simulate_data(model, TRUTH, T=50, level=8, N=300, seed=5000 + run)
        trace = run_single_level(model, obs, level=2, N=30, M=50, I=5000,
                                 proposal=STEPS, rng=stream(6000 + run, 0))
        draws = trace.thetas()[1000:, 0]
        lo, hi = np.percentile(draws, [2.5, 97.5])
        covered += lo <= 0.0 <= hi
        widths.append(hi - lo)
    ok = covered >= 17
    assert _report(
        "criterion 5 (posterior recovery)", ok,
        f"{covered}/20 intervals cover 0 (gate 17), median width {np.median(widths):.3f}"
    )


@pytest.mark.nightly
def test_criterion_6_rate_study_desk_scale():
    """Desk-scale sweep: single-level slope <= -3.0, multilevel gentler by >= 0.3."""
    NIGHTLY_OUT.mkdir(parents=True, exist_ok=True)
    env = dict(os.environ, MVPMCMC_OUT=str(NIGHTLY_OUT))
    args = [
        sys.executable, "-m", "mvpmcmc.harness", "rate-study",
        "--T", "25", "--seed", "0", "--data_level", "8", "--data_N", "300",
        "--epsilon_grid", "0.2,0.1,0.06", "--l_star", "2",
        "--c_I", "8", "--c_N", "0.7", "--c_I_single", "10", "--c_N_single", "0.4",
        "--I_min", "500", "--step_sizes", "0.3,0.5,0.18",
        "--replicates", "20",
        "--ref_extra_levels", "2", "--ref_factor", "10", "--ref_N", "80",
    ]
    proc = subprocess.run(args, capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr

    # Companion chain outputs at the same configuration so the plotting
    # package has trace-schema CSVs to render alongside the rate table.
    shared = ["--T", "25", "--seed", "0", "--data_level", "8", "--data_N", "300",
              "--step_sizes", "0.3,0.5,0.18"]
    for extra in (
        ["pmcmc", *shared, "--level", "3", "--N", "35", "--iters", "5000"],
        ["mlpmcmc", *shared, "--epsilon", "0.1", "--l_star", "2", "--c_I", "8", "--c_N", "0.7",
         "--I_min", "500"],
    ):
        side = subprocess.run(
            [sys.executable, "-m", "mvpmcmc.harness", *extra],
            capture_output=True, text=True, env=env,
        )
        assert side.returncode == 0, side.stderr

    rate = read_csv(NIGHTLY_OUT / "rate.csv",
                    required=["method", "parameter", "epsilon", "cost_units", "mse", "slope"])
    slopes = {(r["method"], r["parameter"]): float(r["slope"]) for r in rate}
    lines = []
    ok = True
    for parameter in ("theta", "log_sigma", "log_tau"):
        single = slopes[("single", parameter)]
        multi = slopes[("multilevel", parameter)]
        good = single <= -3.0 and multi >= single + 0.3
        ok = ok and good
        lines.append(f"{parameter}: single {single:.2f}, multilevel {multi:.2f}")
    assert _report("criterion 6 (rate-study sanity)", ok, "; ".join(lines))


def test_criterion_7_determinism(tmp_path):
    """Re-running every subcommand with the same config+seed reproduces the CSVs."""
    fast = ["--T", "8", "--seed", "3", "--data_level", "5", "--data_N", "50"]
    commands = [
        ("simulate", [*fast], ["observations.csv"]),
        ("pmcmc", [*fast, "--level", "1", "--N", "8", "--M", "8", "--iters", "15"],
         ["observations.csv", "trace.csv"]),
        ("mlpmcmc", [*fast, "--epsilon", "0.45", "--c_I", "3", "--c_N", "0.6", "--l_star", "1"],
         ["mlmc_levels.csv", "mlmc_estimate.csv", "trace_l1.csv", "trace_l2.csv"]),
        ("rate-study",
         [*fast, "--epsilon_grid", "0.45,0.4,0.35", "--l_star", "1",
          "--c_I", "2", "--c_N", "0.5", "--c_I_single", "2", "--c_N_single", "0.5",
          "--replicates", "2", "--ref_extra_levels", "1", "--ref_factor", "2", "--ref_N", "10"],
         ["runs.csv", "rate.csv", "reference.csv"]),
    ]
    mismatches = []
    for name, args, outputs in commands:
        dirs = []
        for rep in ("a", "b"):
            out = tmp_path / f"{name}-{rep}"
            env = dict(os.environ, MVPMCMC_OUT=str(out))
            proc = subprocess.run(
                [sys.executable, "-m", "mvpmcmc.harness", name, *args],
                capture_output=True, text=True, env=env,
            )
            assert proc.returncode == 0, f"{name}: {proc.stderr}"
            dirs.append(out)
        for fname in outputs:
            if (dirs[0] / fname).read_bytes() != (dirs[1] / fname).read_bytes():
                mismatches.append(f"{name}/{fname}")
    ok = not mismatches
    assert _report(
        "criterion 7 (determinism)", ok,
        "all CSV bodies bit-identical" if ok else f"mismatches: {mismatches}"
    )

"""Multilevel combination of the single-level and bi-level chains.

One base chain at a coarse level estimates the bulk of the posterior
expectation; independent bi-level chains at each finer level estimate the
telescoping corrections, and the final estimator is their sum. Level
schedules follow the epsilon-indexed rates I_l ~ eps^-2 * Delta_l^(6/7)
and N_l ~ eps^-2 * Delta_l^(1/2) with L ~ log2(1/eps), which balance the
discretisation bias, cloud bias and chain variance against a total work
budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .mcmc import (
    ChainTrace,
    ProposalSpec,
    estimate_bilevel_difference,
    estimate_single,
    run_bilevel,
    run_single_level,
)
from .model import ModelSpec, ObservationSeries
from .rng import stream

__all__ = [
    "LevelEntry",
    "LevelPlan",
    "MlmcResult",
    "make_level_plan",
    "mlmc_estimate",
    "cost_units",
    "level_cost_units",
]


@dataclass(frozen=True)
class LevelEntry:
    """Per-level budget: particles N, iterations I, filter particles M."""

    level: int
    N: int
    I: int
    M: int

    def __post_init__(self):
        if min(self.N, self.I, self.M) < 1 or self.level < 0:
            raise ValueError("level entries require level >= 0 and N, I, M >= 1")


@dataclass(frozen=True)
class LevelPlan:
    """Budgets for the base level l_star and the increment levels up to L."""

    l_star: int
    L: int
    entries: tuple
    epsilon: float
    clamped: bool = False

    def __post_init__(self):
        levels = [e.level for e in self.entries]
        if levels != list(range(self.l_star, self.L + 1)):
            raise ValueError("entries must cover l_star..L in order")
        if self.L <= self.l_star:
            raise ValueError("L must exceed l_star")

    def entry(self, level: int) -> LevelEntry:
        return self.entries[level - self.l_star]

    @property
    def levels(self) -> tuple:
        return tuple(e.level for e in self.entries)


@dataclass(frozen=True)
class MlmcResult:
    """Combined estimates with per-level bookkeeping.

    ``per_level_contributions[0]`` is the base-chain estimate per
    functional and row i > 0 the increment from level l_star + i; the
    estimate is their column sum, so the telescoping identity holds by
    construction.
    """

    estimates: np.ndarray                 # (n_functionals,)
    per_level_contributions: np.ndarray   # (n_levels, n_functionals)
    levels: tuple
    total_cost_units: float
    wall_time: float
    traces: Optional[tuple] = None        # per-level ChainTrace when requested


def make_level_plan(
    epsilon: float, l_star: int, c_I: float, c_N: float, M: int, I_min: int = 1
) -> LevelPlan:
    """Level schedule for a target accuracy epsilon in (0, 1).

    L = ceil(log2(1/epsilon)), clamped up to l_star + 1 when the target is
    too loose to need a finer level (the plan records the clamp);
    I_l = ceil(c_I eps^-2 Delta_l^(6/7)) and N_l = ceil(c_N eps^-2
    Delta_l^(1/2)) both decrease in l; every budget is at least 1.
    ``I_min`` floors the chain lengths: a constant lower-order term that
    absorbs the burn-in transient of prior-initialised chains without
    changing the schedule's growth rates.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if c_I <= 0 or c_N <= 0 or M < 1 or l_star < 0 or I_min < 1:
        raise ValueError("require positive constants, M >= 1, I_min >= 1 and l_star >= 0")
    L = math.ceil(math.log2(1.0 / epsilon))
    clamped = L <= l_star
    if clamped:
        L = l_star + 1
    inv_eps2 = epsilon ** -2.0
    entries = []
    for level in range(l_star, L + 1):
        delta = 2.0 ** (-level)
        entries.append(
            LevelEntry(
                level=level,
                N=max(1, math.ceil(c_N * inv_eps2 * delta ** 0.5)),
                I=max(I_min, math.ceil(c_I * inv_eps2 * delta ** (6.0 / 7.0))),
                M=M,
            )
        )
    return LevelPlan(
        l_star=l_star, L=L, entries=tuple(entries), epsilon=epsilon, clamped=clamped
    )


def level_cost_units(level: int, N: int, I: int, M: int) -> float:
    """Work units of one chain: I * Delta_l^-1 * (M N + N^2)."""
    return float(I) * 2.0 ** level * (float(M) * N + float(N) ** 2)


def cost_units(plan: LevelPlan) -> float:
    """Deterministic work count of a plan, summed over its levels."""
    return sum(level_cost_units(e.level, e.N, e.I, e.M) for e in plan.entries)


def mlmc_estimate(
    model: ModelSpec,
    obs: ObservationSeries,
    plan: LevelPlan,
    functionals: Sequence[Callable[[np.ndarray, np.ndarray], float]],
    proposal: ProposalSpec,
    seed: int,
    level_seeds: Optional[Mapping[int, int]] = None,
    keep_traces: bool = False,
) -> MlmcResult:
    """Run the base chain and the per-level increment chains, then combine.

    Every level owns an isolated stream keyed by (seed, level), so levels
    can run in any order (or concurrently) without affecting each other;
    ``level_seeds`` overrides the seed of individual levels, leaving the
    rest bit-identical. Chain failures propagate annotated with the level.
    """
    t0 = time.perf_counter()
    n_phi = len(functionals)
    contributions = np.empty((len(plan.entries), n_phi))
    traces = []

    def rng_for(level: int):
        s = seed if level_seeds is None else level_seeds.get(level, seed)
        return stream(s, level)

    base = plan.entry(plan.l_star)
    try:
        base_trace = run_single_level(
            model, obs, plan.l_star, base.N, base.M, base.I, proposal, rng_for(plan.l_star)
        )
    except Exception as exc:
        raise type(exc)(f"level {plan.l_star} (base): {exc}") from exc
    for j, phi in enumerate(functionals):
        contributions[0, j] = estimate_single(base_trace, phi)
    if keep_traces:
        traces.append(base_trace)

    for i, level in enumerate(range(plan.l_star + 1, plan.L + 1), start=1):
        e = plan.entry(level)
        try:
            trace = run_bilevel(model, obs, level, e.N, e.M, e.I, proposal, rng_for(level))
        except Exception as exc:
            raise type(exc)(f"level {level} (increment): {exc}") from exc
        for j, phi in enumerate(functionals):
            contributions[i, j] = estimate_bilevel_difference(trace, phi)
        if keep_traces:
            traces.append(trace)

    return MlmcResult(
        estimates=contributions.sum(axis=0),
        per_level_contributions=contributions,
        levels=plan.levels,
        total_cost_units=cost_units(plan),
        wall_time=time.perf_counter() - t0,
        traces=tuple(traces) if keep_traces else None,
    )

"""Particle approximation of the mean-field SDE laws on the Euler grid.

The marginal law of the signal enters its own drift, so simulating the
discretised dynamics requires an approximation of that law at every grid
time. This module propagates an N-particle cloud whose empirical measure
stands in for the law: each particle's mean-field term is the average
interaction against the whole cloud (a direct O(N^2) sum), and the cloud
is advanced by Euler steps of size 2^-level. A coupled variant advances
clouds at two consecutive levels from shared Brownian increments, the
coarse step consuming the sum of two nested fine increments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericsError
from .rng import gaussian_increments

__all__ = [
    "EmpiricalLaw",
    "LawGrid",
    "CoupledLawGrid",
    "mean_field",
    "euler_step",
    "approximate_laws",
    "approximate_coupled_laws",
]


@dataclass(frozen=True)
class EmpiricalLaw:
    """Unweighted particle cloud standing in for the signal law at one grid time."""

    particles: np.ndarray  # (N, d)

    def __post_init__(self):
        p = np.asarray(self.particles, dtype=float)
        if p.ndim != 2 or p.shape[0] == 0:
            raise ValueError("particles must be a nonempty (N, d) array")
        object.__setattr__(self, "particles", p)

    @property
    def n(self) -> int:
        return self.particles.shape[0]


@dataclass(frozen=True)
class LawGrid:
    """Empirical laws at every Euler grid time, grouped by unit interval.

    ``laws[t-1][k-1]`` is the cloud at time t-1 + k*2^-level, i.e. the
    outputs of the propagation over interval t; ``initial`` is the cloud at
    time 0 (all particles at the start point). All clouds share one N.
    """

    level: int
    initial: EmpiricalLaw
    laws: tuple

    @property
    def n_intervals(self) -> int:
        return len(self.laws)

    @property
    def steps_per_interval(self) -> int:
        return 2 ** self.level

    def interval_inputs(self, t: int) -> Sequence[EmpiricalLaw]:
        """Laws read by the transition kernel over unit interval t (1-based).

        Step k of the kernel reads the law at time t-1 + (k-1)*2^-level, so
        the slice starts at the previous interval's terminal cloud and
        excludes the current interval's terminal one.
        """
        if not 1 <= t <= self.n_intervals:
            raise ValueError(f"interval {t} outside 1..{self.n_intervals}")
        head = self.initial if t == 1 else self.laws[t - 2][-1]
        return (head,) + tuple(self.laws[t - 1][:-1])


@dataclass(frozen=True)
class CoupledLawGrid:
    """Law grids at levels l and l-1 built from shared Brownian increments."""

    fine: LawGrid
    coarse: LawGrid

    def __post_init__(self):
        if self.fine.level != self.coarse.level + 1:
            raise ValueError("fine grid must be exactly one level above the coarse grid")
        if self.fine.initial.n != self.coarse.initial.n:
            raise ValueError("fine and coarse grids must share the particle count")


def mean_field(model, param, x: np.ndarray, law: EmpiricalLaw):
    """Average interaction of state x against the cloud: (1/N) sum_j xi(x, X_j).

    ``x`` may be a single (d,) state or a block (..., d); the result drops
    the state axis. Permutation-invariant in the cloud by construction.
    """
    if law.n == 0:
        raise ValueError("empty law")
    x = np.asarray(x, dtype=float)
    vals = model.interaction(param, x[..., None, :], law.particles)
    return np.add.reduce(vals, axis=-1) / vals.shape[-1]


def _euler_core(model, param, x, xbar, dt, dw):
    # Single shared arithmetic path so every propagator is bit-consistent.
    sig = model.diffusion(param, x)
    if x.shape[-1] == 1:
        noise = sig[..., 0] * dw
    else:
        noise = np.einsum("...ij,...j->...i", sig, dw)
    return x + model.drift(param, x, xbar) * dt + noise


def euler_step(model, param, x: np.ndarray, law: EmpiricalLaw, dt: float, dw: np.ndarray):
    """One Euler step of the discretised dynamics with the law plugged in.

    Computes x + drift(x, xbar) dt + diffusion(x) dw where xbar is the
    mean-field term against ``law``. Drawing dw from N(0, dt I) makes this
    one application of the grid transition kernel.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = _euler_core(model, param, np.asarray(x, dtype=float), mean_field(model, param, x, law), dt, dw)
    if not np.all(np.isfinite(out)):
        raise NumericsError("euler step produced a non-finite state")
    return out


def _advance_cloud(model, param, cloud: np.ndarray, increments: np.ndarray, dt: float) -> np.ndarray:
    """Propagate a cloud through one unit interval; returns (steps, N, d) states."""
    steps = increments.shape[0]
    n = cloud.shape[0]
    out = np.empty((steps,) + cloud.shape)
    for k in range(steps):
        pair = model.interaction(param, cloud[:, None, :], cloud[None, :, :])
        cloud = _euler_core(model, param, cloud, np.add.reduce(pair, axis=-1) / n, dt, increments[k])
        out[k] = cloud
    return out


def _check_interval(states: np.ndarray, t: int, dt: float):
    if np.all(np.isfinite(states)):
        return
    bad = np.where(~np.isfinite(states).all(axis=(1, 2)))[0][0]
    raise NumericsError(
        f"law propagation produced non-finite particles at grid time {t - 1 + (bad + 1) * dt:g}"
    )


def approximate_laws(model, param, level: int, N: int, T: int, rng: np.random.Generator) -> LawGrid:
    """Empirical laws at every grid time over T unit intervals.

    Each interval starts from the previous interval's terminal cloud (all
    particles at the start point for the first one). Cost is
    O(2^level * N^2) interaction evaluations per unit interval.
    """
    if level < 0 or N < 1 or T < 1:
        raise ValueError("require level >= 0, N >= 1, T >= 1")
    steps = 2 ** level
    dt = 2.0 ** (-level)
    d = model.dim
    cloud = np.tile(model.x0, (N, 1))
    initial = EmpiricalLaw(cloud.copy())

    intervals = []
    for t in range(1, T + 1):
        block = gaussian_increments(rng, steps, N, d, dt)
        states = _advance_cloud(model, param, cloud, block, dt)
        _check_interval(states, t, dt)
        intervals.append(tuple(EmpiricalLaw(states[k]) for k in range(steps)))
        cloud = states[-1]
    return LawGrid(level=level, initial=initial, laws=tuple(intervals))


def approximate_coupled_laws(
    model, param, level: int, N: int, T: int, rng: np.random.Generator
) -> CoupledLawGrid:
    """Law grids at levels `level` and `level - 1` under a synchronous coupling.

    Fine increments are drawn exactly as in :func:`approximate_laws`; each
    coarse step consumes the sum of its two nested fine increments, so the
    fine grid is bit-identical to a plain run driven by the same stream.
    Both clouds share the particle count and the start point.
    """
    if level < 1:
        raise ValueError("coupled propagation requires level >= 1")
    if N < 1 or T < 1:
        raise ValueError("require N >= 1, T >= 1")
    steps = 2 ** level
    dt_f = 2.0 ** (-level)
    dt_c = 2.0 * dt_f
    d = model.dim
    fine_cloud = np.tile(model.x0, (N, 1))
    coarse_cloud = fine_cloud.copy()
    fine_initial = EmpiricalLaw(fine_cloud.copy())
    coarse_initial = EmpiricalLaw(coarse_cloud.copy())

    fine_intervals, coarse_intervals = [], []
    for t in range(1, T + 1):
        block = gaussian_increments(rng, steps, N, d, dt_f)
        fine_states = _advance_cloud(model, param, fine_cloud, block, dt_f)
        _check_interval(fine_states, t, dt_f)
        coarse_block = block[0::2] + block[1::2]
        coarse_states = _advance_cloud(model, param, coarse_cloud, coarse_block, dt_c)
        _check_interval(coarse_states, t, dt_c)
        fine_intervals.append(tuple(EmpiricalLaw(fine_states[k]) for k in range(steps)))
        coarse_intervals.append(tuple(EmpiricalLaw(coarse_states[k]) for k in range(steps // 2)))
        fine_cloud = fine_states[-1]
        coarse_cloud = coarse_states[-1]

    return CoupledLawGrid(
        fine=LawGrid(level=level, initial=fine_initial, laws=tuple(fine_intervals)),
        coarse=LawGrid(level=level - 1, initial=coarse_initial, laws=tuple(coarse_intervals)),
    )

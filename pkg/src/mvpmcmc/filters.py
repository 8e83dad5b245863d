"""Unit-interval path kernels and the particle filters built on them.

A path segment collects the fine-grid states of the signal across one unit
interval between observations. Segments are simulated by chaining Euler
steps against a *frozen* law grid (the clouds are plugged in, never
updated here). The single-level filter propagates M trajectories, weights
them by the observation density, resamples multinomially at every
observation time and accumulates the marginal likelihood estimate in log
space. The coupled filter propagates fine/coarse trajectory pairs from
shared increments and weights each pair by the average of the two
observation densities; the ratio of the individual density to that average
is the change-of-measure weight used later to recover the level-specific
posteriors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NumericsError
from .law_approx import (
    EmpiricalLaw,
    _euler_core,
    approximate_coupled_laws,
    approximate_laws,
    mean_field,
)
from .model import ModelSpec, ObservationSeries, Parameter
from .rng import gaussian_increments

__all__ = [
    "PathSegment",
    "CoupledPathSegment",
    "FilterOutput",
    "FilterDiagnostics",
    "sample_segment",
    "sample_coupled_segment",
    "h_weight",
    "check_h_weight",
    "particle_filter",
    "delta_particle_filter",
    "coupled_path_log_check_weights",
]

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class PathSegment:
    """Fine-grid states over one unit interval: 2^level states of dimension d."""

    level: int
    states: np.ndarray  # (2^level, d)

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        if s.ndim != 2 or s.shape[0] != 2 ** self.level:
            raise ValueError(f"expected (2^{self.level}, d) states, got shape {s.shape}")
        object.__setattr__(self, "states", s)

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class CoupledPathSegment:
    """Synchronously coupled segments at consecutive levels."""

    fine: PathSegment
    coarse: PathSegment

    def __post_init__(self):
        if self.fine.level != self.coarse.level + 1:
            raise ValueError("fine segment must be one level above the coarse segment")


@dataclass(frozen=True)
class FilterDiagnostics:
    """Per-step internals kept for auditing: weights, ancestry and raw paths."""

    step_weights: tuple          # T arrays of shape (M,), each a pmf
    ancestors: tuple             # T-1 arrays of shape (M,)
    final_index: int
    history: tuple               # T arrays: (M, steps, d), or pairs for the coupled filter


@dataclass(frozen=True)
class FilterOutput:
    """Likelihood estimate plus one trajectory drawn from the terminal weights.

    ``step_log_means`` holds the per-observation log average weights whose
    sum reproduces ``log_likelihood``. The coupled filter additionally
    stores the log change-of-measure products of the returned trajectory
    (fine and coarse orientations).
    """

    log_likelihood: float
    path: tuple
    step_log_means: np.ndarray
    log_weight_fine: Optional[float] = None
    log_weight_coarse: Optional[float] = None
    diagnostics: Optional[FilterDiagnostics] = None

    def __post_init__(self):
        if not math.isfinite(self.log_likelihood):
            raise ValueError("log-likelihood must be finite")


def _propagate_segment(model, param, x, laws, dt, increments):
    """Chain Euler steps from x through the frozen per-step laws.

    ``x`` is (..., d), ``increments`` is (steps, ..., d); returns the
    (steps, ..., d) array of visited states.
    """
    steps = increments.shape[0]
    out = np.empty((steps,) + x.shape)
    for k in range(steps):
        xbar = mean_field(model, param, x, laws[k])
        x = _euler_core(model, param, x, xbar, dt, increments[k])
        out[k] = x
    return out


def sample_segment(
    model: ModelSpec,
    param: Parameter,
    x_prev: np.ndarray,
    laws: Sequence[EmpiricalLaw],
    rng: np.random.Generator,
    level: Optional[int] = None,
) -> PathSegment:
    """Simulate one unit-interval segment from x_prev against frozen laws.

    ``laws`` must hold the 2^level clouds read by the steps of the interval
    (starting with the cloud at the interval's left endpoint).
    """
    steps = len(laws)
    if level is None:
        level = int(round(math.log2(steps)))
    if steps != 2 ** level:
        raise ValueError(f"expected 2^{level} laws, got {steps}")
    dt = 1.0 / steps
    x = np.asarray(x_prev, dtype=float)
    block = gaussian_increments(rng, steps, 1, x.shape[-1], dt)[:, 0, :]
    states = _propagate_segment(model, param, x, laws, dt, block)
    if not np.all(np.isfinite(states)):
        raise NumericsError("segment propagation produced a non-finite state")
    return PathSegment(level=level, states=states)


def sample_coupled_segment(
    model: ModelSpec,
    param: Parameter,
    x_prev_fine: np.ndarray,
    x_prev_coarse: np.ndarray,
    laws_fine: Sequence[EmpiricalLaw],
    laws_coarse: Sequence[EmpiricalLaw],
    rng: np.random.Generator,
) -> CoupledPathSegment:
    """Simulate a synchronously coupled pair of segments at levels l and l-1.

    The fine chain consumes increments drawn exactly as in
    :func:`sample_segment`; the coarse chain consumes their pairwise sums,
    so the fine marginal is bit-identical to a plain segment driven by the
    same stream.
    """
    steps = len(laws_fine)
    level = int(round(math.log2(steps)))
    if steps != 2 ** level or level < 1:
        raise ValueError("need 2^l fine laws with l >= 1")
    if len(laws_coarse) != steps // 2:
        raise ValueError("coarse slice must hold half as many laws as the fine slice")
    dt_f = 1.0 / steps
    xf = np.asarray(x_prev_fine, dtype=float)
    xc = np.asarray(x_prev_coarse, dtype=float)
    block = gaussian_increments(rng, steps, 1, xf.shape[-1], dt_f)[:, 0, :]
    fine_states = _propagate_segment(model, param, xf, laws_fine, dt_f, block)
    coarse_states = _propagate_segment(
        model, param, xc, laws_coarse, 2.0 * dt_f, block[0::2] + block[1::2]
    )
    if not (np.all(np.isfinite(fine_states)) and np.all(np.isfinite(coarse_states))):
        raise NumericsError("coupled segment propagation produced a non-finite state")
    return CoupledPathSegment(
        fine=PathSegment(level=level, states=fine_states),
        coarse=PathSegment(level=level - 1, states=coarse_states),
    )


def _log_h(model, param, x, x_other, y):
    """log of the averaged observation density 0.5 (G(x, y) + G(x', y))."""
    return np.logaddexp(
        model.obs_logdensity(param, x, y), model.obs_logdensity(param, x_other, y)
    ) - _LOG2


def h_weight(model: ModelSpec, param: Parameter, x, x_other, y):
    """Average of the observation densities at two states, 0.5 (G(x,y) + G(x',y)).

    Evaluated in log space for stability; symmetric in (x, x') and equal to
    G(x, y) when the states coincide. Broadcasts over leading axes.
    """
    return np.exp(_log_h(model, param, x, x_other, y))


def check_h_weight(model: ModelSpec, param: Parameter, x, x_other, y):
    """Change-of-measure ratio G(x, y) / h_weight(x, x', y), valued in (0, 2)."""
    return np.exp(model.obs_logdensity(param, x, y) - _log_h(model, param, x, x_other, y))


def _logsumexp(logw: np.ndarray) -> float:
    peak = logw.max()
    if not np.isfinite(peak):
        return float(peak)
    return float(peak + math.log(np.exp(logw - peak).sum()))


def _terminal_logsumexp(logw: np.ndarray, t: int) -> float:
    total = _logsumexp(logw)
    if not math.isfinite(total):
        raise NumericsError(f"all particle weights vanished at observation {t}")
    return total


def particle_filter(
    model: ModelSpec,
    param: Parameter,
    obs: ObservationSeries,
    level: int,
    N: int,
    M: int,
    rng: np.random.Generator,
    keep_history: bool = False,
) -> FilterOutput:
    """Estimate the marginal likelihood and draw one signal trajectory.

    A fresh law grid with N particles is generated first; M trajectories
    are then propagated through it, resampled multinomially on the
    normalised observation weights at every unit time, and one trajectory
    is drawn from the terminal weights. The likelihood estimate is the
    product over observation times of the average unnormalised weight,
    accumulated in log space. Cost: O(2^level N^2 T) for the grid plus
    O(2^level N M T) for the trajectories.
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    law_rng, prop_rng, res_rng = rng.spawn(3)
    T = obs.T
    grid = approximate_laws(model, param, level, N, T, law_rng)
    steps = grid.steps_per_interval
    dt = 1.0 / steps
    d = model.dim

    positions = np.tile(model.x0, (M, 1))
    history = []
    ancestors = []
    step_weights = []
    step_log_means = np.empty(T)
    loglik = 0.0
    final_index = -1

    for t in range(1, T + 1):
        laws = grid.interval_inputs(t)
        block = gaussian_increments(prop_rng, steps, M, d, dt)
        seg_states = _propagate_segment(model, param, positions, laws, dt, block)
        if not np.all(np.isfinite(seg_states)):
            raise NumericsError(f"trajectory propagation blew up in unit interval {t}")
        x_t = seg_states[-1]
        logg = np.asarray(model.obs_logdensity(param, x_t, obs.y[t - 1]), dtype=float)
        total = _terminal_logsumexp(logg, t)
        step_log_means[t - 1] = total - math.log(M)
        loglik += step_log_means[t - 1]
        weights = np.exp(logg - total)
        history.append(seg_states.transpose(1, 0, 2))
        step_weights.append(weights)
        if t < T:
            anc = res_rng.choice(M, size=M, p=weights)
            ancestors.append(anc)
            positions = x_t[anc]
        else:
            final_index = int(res_rng.choice(M, p=weights))

    path = _replay_path(history, ancestors, final_index, level)
    diag = None
    if keep_history:
        diag = FilterDiagnostics(
            step_weights=tuple(step_weights),
            ancestors=tuple(ancestors),
            final_index=final_index,
            history=tuple(history),
        )
    return FilterOutput(
        log_likelihood=loglik,
        path=tuple(path),
        step_log_means=step_log_means,
        diagnostics=diag,
    )


def _replay_path(history, ancestors, final_index, level):
    """Trace the selected trajectory back through the ancestor indices."""
    T = len(history)
    segments = [None] * T
    idx = final_index
    for t in range(T, 0, -1):
        segments[t - 1] = PathSegment(level=level, states=history[t - 1][idx])
        if t > 1:
            idx = int(ancestors[t - 2][idx])
    return segments


def delta_particle_filter(
    model: ModelSpec,
    param: Parameter,
    obs: ObservationSeries,
    level: int,
    N: int,
    M: int,
    rng: np.random.Generator,
    keep_history: bool = False,
) -> FilterOutput:
    """Coupled-pair filter returning the averaged-weight likelihood estimate.

    Pairs of fine/coarse trajectories share Brownian increments and a
    coupled law grid; resampling weights are the averaged observation
    densities of the two terminal states, and both members of a pair are
    resampled with the same ancestor index. The returned trajectory also
    carries the log products of the change-of-measure ratios in both
    orientations, which downstream estimators reweight by.
    """
    if level < 1:
        raise ValueError("coupled filter requires level >= 1")
    if M < 2:
        raise ValueError("M must be at least 2")
    law_rng, prop_rng, res_rng = rng.spawn(3)
    T = obs.T
    coupled = approximate_coupled_laws(model, param, level, N, T, law_rng)
    steps = 2 ** level
    dt_f = 1.0 / steps
    d = model.dim

    pos_f = np.tile(model.x0, (M, 1))
    pos_c = pos_f.copy()
    history = []
    ancestors = []
    step_weights = []
    step_log_means = np.empty(T)
    loglik = 0.0
    final_index = -1

    for t in range(1, T + 1):
        laws_f = coupled.fine.interval_inputs(t)
        laws_c = coupled.coarse.interval_inputs(t)
        block = gaussian_increments(prop_rng, steps, M, d, dt_f)
        seg_f = _propagate_segment(model, param, pos_f, laws_f, dt_f, block)
        seg_c = _propagate_segment(
            model, param, pos_c, laws_c, 2.0 * dt_f, block[0::2] + block[1::2]
        )
        if not (np.all(np.isfinite(seg_f)) and np.all(np.isfinite(seg_c))):
            raise NumericsError(f"coupled trajectories blew up in unit interval {t}")
        x_f, x_c = seg_f[-1], seg_c[-1]
        logh = np.asarray(_log_h(model, param, x_f, x_c, obs.y[t - 1]), dtype=float)
        total = _terminal_logsumexp(logh, t)
        step_log_means[t - 1] = total - math.log(M)
        loglik += step_log_means[t - 1]
        weights = np.exp(logh - total)
        history.append((seg_f.transpose(1, 0, 2), seg_c.transpose(1, 0, 2)))
        step_weights.append(weights)
        if t < T:
            anc = res_rng.choice(M, size=M, p=weights)
            ancestors.append(anc)
            pos_f = x_f[anc]
            pos_c = x_c[anc]
        else:
            final_index = int(res_rng.choice(M, p=weights))

    fine_segs = _replay_path([h[0] for h in history], ancestors, final_index, level)
    coarse_segs = _replay_path([h[1] for h in history], ancestors, final_index, level - 1)
    path = tuple(
        CoupledPathSegment(fine=f, coarse=c) for f, c in zip(fine_segs, coarse_segs)
    )
    log_wf, log_wc = coupled_path_log_check_weights(model, param, path, obs)

    diag = None
    if keep_history:
        diag = FilterDiagnostics(
            step_weights=tuple(step_weights),
            ancestors=tuple(ancestors),
            final_index=final_index,
            history=tuple(history),
        )
    return FilterOutput(
        log_likelihood=loglik,
        path=path,
        step_log_means=step_log_means,
        log_weight_fine=log_wf,
        log_weight_coarse=log_wc,
        diagnostics=diag,
    )


def coupled_path_log_check_weights(
    model: ModelSpec, param: Parameter, path: Sequence[CoupledPathSegment], obs: ObservationSeries
) -> tuple[float, float]:
    """Log products of the change-of-measure ratios along a coupled path.

    Returns (fine, coarse) orientations: sum over unit times of
    log G(x_t, y_t) - log h and log G(x~_t, y_t) - log h respectively.
    """
    log_wf = 0.0
    log_wc = 0.0
    for t, seg in enumerate(path, start=1):
        xf = seg.fine.terminal
        xc = seg.coarse.terminal
        logh = float(_log_h(model, param, xf, xc, obs.y[t - 1]))
        log_wf += float(model.obs_logdensity(param, xf, obs.y[t - 1])) - logh
        log_wc += float(model.obs_logdensity(param, xc, obs.y[t - 1])) - logh
    return log_wf, log_wc

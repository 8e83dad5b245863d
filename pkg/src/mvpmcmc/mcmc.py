"""Pseudo-marginal Metropolis kernels, chain drivers and trace estimators.

The single-level kernel proposes a parameter by symmetric Gaussian random
walk, reruns the particle filter at the proposal and accepts on the usual
likelihood-times-prior ratio (the proposal density cancels). The bi-level
kernel is identical except the coupled filter supplies the likelihood
estimate and coupled paths. Plain chain averages estimate expectations at
one level; the bi-level trace is turned into a difference of two
self-normalised weighted averages, one per orientation of the
change-of-measure weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericsError
from .filters import (
    CoupledPathSegment,
    FilterOutput,
    delta_particle_filter,
    particle_filter,
)
from .model import ModelSpec, ObservationSeries, Parameter

__all__ = [
    "ChainState",
    "ProposalSpec",
    "ChainTrace",
    "pmmh_step",
    "bilevel_pmmh_step",
    "run_single_level",
    "run_bilevel",
    "estimate_single",
    "estimate_bilevel_difference",
    "unit_coordinates",
    "DEFAULT_STEP_SIZES",
]

logger = logging.getLogger(__name__)

# Random-walk scales per coordinate (theta, log_sigma, log_tau), tuned on the
# bundled oscillator models to land in the 20-40% acceptance band.
DEFAULT_STEP_SIZES = np.array([0.08, 0.15, 0.07])


@dataclass(frozen=True)
class ProposalSpec:
    """Diagonal Gaussian random-walk scales, one per parameter coordinate."""

    step_sizes: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.step_sizes, dtype=float))
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ValueError("step sizes must be positive and finite")
        object.__setattr__(self, "step_sizes", s)


@dataclass(frozen=True)
class ChainState:
    """One MCMC state: parameter, likelihood estimate and sampled path.

    ``x_fine`` holds the unit-time signal coordinates of the stored path
    (the quantities estimators evaluate functionals on); coupled states
    additionally carry the coarse coordinates and the log change-of-measure
    products of their path.
    """

    param: Parameter
    log_likelihood: float
    path: tuple
    x_fine: np.ndarray                      # (T, d)
    x_coarse: Optional[np.ndarray] = None   # (T, d) for coupled states
    log_weight_fine: Optional[float] = None
    log_weight_coarse: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.log_likelihood):
            raise ValueError("log-likelihood must be finite")


@dataclass(frozen=True)
class ChainTrace:
    """I+1 chain states plus the per-iteration acceptance flags."""

    states: tuple
    accepted: np.ndarray  # (I+1,) bool; entry 0 is always False

    def __post_init__(self):
        acc = np.asarray(self.accepted, dtype=bool)
        if acc.shape[0] != len(self.states):
            raise ValueError("one acceptance flag per state is required")
        object.__setattr__(self, "accepted", acc)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def acceptance_count(self) -> int:
        return int(self.accepted.sum())

    def thetas(self) -> np.ndarray:
        return np.stack([s.param.theta for s in self.states])

    def log_likelihoods(self) -> np.ndarray:
        return np.array([s.log_likelihood for s in self.states])


def unit_coordinates(path: Sequence) -> np.ndarray:
    """Unit-time signal states x_{1:T} of a stored path, shape (T, d)."""
    first = path[0]
    if isinstance(first, CoupledPathSegment):
        return np.stack([seg.fine.terminal for seg in path])
    return np.stack([seg.terminal for seg in path])


def _coarse_coordinates(path: Sequence) -> np.ndarray:
    return np.stack([seg.coarse.terminal for seg in path])


def _state_from_filter(param: Parameter, out: FilterOutput, coupled: bool) -> ChainState:
    if coupled:
        return ChainState(
            param=param,
            log_likelihood=out.log_likelihood,
            path=out.path,
            x_fine=unit_coordinates(out.path),
            x_coarse=_coarse_coordinates(out.path),
            log_weight_fine=out.log_weight_fine,
            log_weight_coarse=out.log_weight_coarse,
        )
    return ChainState(
        param=param,
        log_likelihood=out.log_likelihood,
        path=out.path,
        x_fine=unit_coordinates(out.path),
    )


def _metropolis_step(state, model, obs, level, N, M, proposal, rng, run_filter, coupled):
    theta_prop = state.param.theta + proposal.step_sizes * rng.standard_normal(
        state.param.dim
    )
    try:
        param_prop = Parameter(theta_prop)
        out = run_filter(model, param_prop, obs, level, N, M, rng)
    except NumericsError as exc:
        # A numerically failing proposal indicates effectively zero
        # likelihood; rejecting keeps the chain on the valid region.
        logger.warning("filter failed at proposal, rejecting: %s", exc)
        return state
    log_ratio = (
        out.log_likelihood
        + model.prior_logdensity(param_prop)
        - state.log_likelihood
        - model.prior_logdensity(state.param)
    )
    if math.log(rng.uniform()) < log_ratio:
        return _state_from_filter(param_prop, out, coupled)
    return state


def pmmh_step(
    state: ChainState,
    model: ModelSpec,
    obs: ObservationSeries,
    level: int,
    N: int,
    M: int,
    proposal: ProposalSpec,
    rng: np.random.Generator,
) -> ChainState:
    """One pseudo-marginal Metropolis move at a single level.

    Returns the freshly constructed state on acceptance and the input
    object unchanged on rejection, so callers can detect acceptance by
    identity.
    """
    return _metropolis_step(
        state, model, obs, level, N, M, proposal, rng, particle_filter, coupled=False
    )


def bilevel_pmmh_step(
    state: ChainState,
    model: ModelSpec,
    obs: ObservationSeries,
    level: int,
    N: int,
    M: int,
    proposal: ProposalSpec,
    rng: np.random.Generator,
) -> ChainState:
    """One pseudo-marginal move with the coupled filter (level >= 1)."""
    if level < 1:
        raise ValueError("bi-level kernel requires level >= 1")
    return _metropolis_step(
        state, model, obs, level, N, M, proposal, rng, delta_particle_filter, coupled=True
    )


def _run_chain(model, obs, level, N, M, I, proposal, rng, run_filter, step, coupled):
    if I < 0:
        raise ValueError("iteration count must be nonnegative")
    theta0 = model.prior_sample(rng)
    out = run_filter(model, theta0, obs, level, N, M, rng)
    state = _state_from_filter(theta0, out, coupled)
    states = [state]
    accepted = np.zeros(I + 1, dtype=bool)
    for j in range(1, I + 1):
        new = step(state, model, obs, level, N, M, proposal, rng)
        accepted[j] = new is not state
        state = new
        states.append(state)
    return ChainTrace(states=tuple(states), accepted=accepted)


def run_single_level(
    model: ModelSpec,
    obs: ObservationSeries,
    level: int,
    N: int,
    M: int,
    I: int,
    proposal: ProposalSpec,
    rng: np.random.Generator,
) -> ChainTrace:
    """Initialise from the prior and apply the single-level kernel I times."""
    return _run_chain(
        model, obs, level, N, M, I, proposal, rng, particle_filter, pmmh_step, coupled=False
    )


def run_bilevel(
    model: ModelSpec,
    obs: ObservationSeries,
    level: int,
    N: int,
    M: int,
    I: int,
    proposal: ProposalSpec,
    rng: np.random.Generator,
) -> ChainTrace:
    """Initialise from the prior and apply the bi-level kernel I times."""
    if level < 1:
        raise ValueError("bi-level chain requires level >= 1")
    return _run_chain(
        model,
        obs,
        level,
        N,
        M,
        I,
        proposal,
        rng,
        delta_particle_filter,
        bilevel_pmmh_step,
        coupled=True,
    )


def estimate_single(trace: ChainTrace, phi: Callable[[np.ndarray, np.ndarray], float]) -> float:
    """Plain chain average of phi(theta(j), x_{1:T}(j)) over all I+1 states.

    No burn-in is discarded; callers wanting one should slice the trace.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    total = 0.0
    for s in trace.states:
        total += phi(s.param.theta, s.x_fine)
    return total / len(trace)


def estimate_bilevel_difference(
    trace: ChainTrace, phi: Callable[[np.ndarray, np.ndarray], float]
) -> float:
    """Difference of the two self-normalised reweighted chain averages.

    The fine term weights phi evaluated on the fine coordinates by the
    change-of-measure products in the fine orientation; the coarse term
    mirrors it. Weight products are carried in log space and the common
    maximum is cancelled before exponentiating.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    states = trace.states
    if states[0].x_coarse is None or states[0].log_weight_fine is None:
        raise ValueError("trace does not carry coupled paths and weights")
    log_wf = np.array([s.log_weight_fine for s in states])
    log_wc = np.array([s.log_weight_coarse for s in states])
    phi_f = np.array([phi(s.param.theta, s.x_fine) for s in states])
    phi_c = np.array([phi(s.param.theta, s.x_coarse) for s in states])

    def normalised(logw, vals):
        w = np.exp(logw - logw.max())
        total = w.sum()
        if total <= 0 or not np.isfinite(total):
            raise NumericsError("change-of-measure weights summed to zero")
        return float(np.dot(vals, w) / total)

    return normalised(log_wf, phi_f) - normalised(log_wc, phi_c)

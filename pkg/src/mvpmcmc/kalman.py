"""Exact likelihood oracle for linear-Gaussian reductions of a model.

When the interaction is switched off, the drift is affine in the state and
the diffusion is constant, the Euler grid induces an exact linear-Gaussian
transition over each unit interval, so the marginal likelihood of the
observations has a closed form via the Kalman recursion. The oracle probes
a ModelSpec numerically for these properties (and for a Gaussian
observation density), rejects anything nonlinear, and then runs the scalar
recursion. Used to validate the particle filter; scalar state only.
"""

from __future__ import annotations

import math

import numpy as np

from .model import ModelSpec, ObservationSeries, Parameter

__all__ = ["kalman_oracle"]

_PROBE_STATES = np.array([-2.7, -1.3, -0.4, 0.0, 0.6, 1.1, 2.3, 3.8])
_TOL = 1e-8


def _probe_linear_structure(model: ModelSpec, param: Parameter):
    """Extract (alpha, beta, sigma) with drift = alpha x + beta; reject otherwise."""
    if model.dim != 1:
        raise ValueError("oracle supports scalar-state models only")
    xs = _PROBE_STATES[:, None]
    pairs_a = xs[:4]
    pairs_b = xs[4:]
    inter = np.asarray(model.interaction(param, pairs_a, pairs_b))
    if np.max(np.abs(inter)) > _TOL:
        raise ValueError("interaction is not disabled; model is not linear-Gaussian")

    zero_bar = np.zeros(xs.shape[0])
    a_vals = np.asarray(model.drift(param, xs, zero_bar))[..., 0]
    alpha = (a_vals[1] - a_vals[0]) / (xs[1, 0] - xs[0, 0])
    beta = a_vals[0] - alpha * xs[0, 0]
    resid = np.max(np.abs(a_vals - (alpha * xs[:, 0] + beta)))
    scale = 1.0 + np.max(np.abs(a_vals))
    if resid > _TOL * scale:
        raise ValueError("drift is not affine in the state")

    sig = np.asarray(model.diffusion(param, xs))[..., 0, 0]
    if np.max(np.abs(sig - sig[0])) > _TOL * (1.0 + abs(sig[0])):
        raise ValueError("diffusion is not constant in the state")
    return float(alpha), float(beta), float(sig[0])


def _probe_gaussian_obs(model: ModelSpec, param: Parameter):
    """Extract (c, m0, r2) with y | x ~ N(c x + m0, r2); reject otherwise."""
    ys = np.array([0.0, 1.0, 2.0])
    mus = []
    r2_ref = None
    for x in _PROBE_STATES:
        f = np.array([float(model.obs_logdensity(param, np.array([x]), y)) for y in ys])
        second_diff = f[0] - 2.0 * f[1] + f[2]
        if second_diff >= 0:
            raise ValueError("observation log-density is not concave-quadratic in y")
        r2 = -1.0 / second_diff
        mu = 1.0 + r2 * (f[2] - f[0]) / 2.0
        norm = f[0] + (ys[0] - mu) ** 2 / (2.0 * r2)
        if abs(norm + 0.5 * math.log(2.0 * math.pi * r2)) > 1e-6:
            raise ValueError("observation density is not a normalised Gaussian in y")
        if r2_ref is None:
            r2_ref = r2
        elif abs(r2 - r2_ref) > 1e-6 * (1.0 + r2_ref):
            raise ValueError("observation variance depends on the state")
        mus.append(mu)
    mus = np.array(mus)
    c = (mus[1] - mus[0]) / (_PROBE_STATES[1] - _PROBE_STATES[0])
    m0 = mus[0] - c * _PROBE_STATES[0]
    resid = np.max(np.abs(mus - (c * _PROBE_STATES + m0)))
    if resid > 1e-6 * (1.0 + np.max(np.abs(mus))):
        raise ValueError("observation mean is not affine in the state")
    return float(c), float(m0), float(r2_ref)


def kalman_oracle(model: ModelSpec, obs, param: Parameter, level: int) -> float:
    """Exact marginal log-likelihood of the Euler-grid model at one level.

    The unit-interval transition implied by 2^level Euler steps of an
    affine-drift, constant-diffusion scalar model is itself linear-Gaussian
    with coefficients accumulated over the steps, after which the standard
    Kalman recursion gives the likelihood exactly. ``obs`` may be an
    ObservationSeries or a plain array; an empty array yields 0.0.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    y = obs.y if isinstance(obs, ObservationSeries) else np.atleast_1d(np.asarray(obs, dtype=float))
    if y.size == 0:
        return 0.0

    alpha, beta, sigma = _probe_linear_structure(model, param)
    c, m0, r2 = _probe_gaussian_obs(model, param)

    steps = 2 ** level
    dt = 2.0 ** (-level)
    g = 1.0 + alpha * dt
    # Unit-time transition x' = A x + b + N(0, q) accumulated over the grid.
    powers = g ** np.arange(steps)
    A = g ** steps
    b = beta * dt * powers.sum()
    q = sigma ** 2 * dt * (powers ** 2).sum()

    m = float(model.x0[0])
    P = 0.0
    loglik = 0.0
    for yi in y:
        m_pred = A * m + b
        P_pred = A * A * P + q
        mean_y = c * m_pred + m0
        S = c * c * P_pred + r2
        loglik += -0.5 * math.log(2.0 * math.pi * S) - 0.5 * (yi - mean_y) ** 2 / S
        K = c * P_pred / S
        m = m_pred + K * (yi - mean_y)
        P = (1.0 - K * c) * P_pred
    return loglik

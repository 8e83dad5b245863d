"""Model interface and the two bundled mean-field oscillator models.

A model bundles the coefficients of a mean-field SDE

    dX_t = a(theta, X_t, xbar_t) dt + sigma(theta, X_t) dW_t,
    xbar_t = integral of xi(theta, X_t, x) against the law of X_t,

together with a Gaussian-type observation density, a prior over the
static parameters and a fixed start point. Observations arrive at unit
times and are conditionally independent given the signal.

All coefficient callables must accept numpy arrays with a trailing state
axis and broadcast: ``drift(param, x, xbar)`` maps ``(..., d)`` states and
``(...,)`` mean-field values to ``(..., d)``; ``interaction(param, x, y)``
maps two broadcastable ``(..., d)`` blocks to ``(...,)``;
``diffusion(param, x)`` maps ``(..., d)`` to ``(..., d, d)``;
``obs_logdensity(param, x, y)`` maps ``(..., d)`` states and one
observation to ``(...,)``. The simulation layer relies on this to
vectorise over particle clouds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericsError
from .rng import gaussian_increments, stream

__all__ = [
    "Parameter",
    "ModelSpec",
    "ObservationSeries",
    "natural_parameter",
    "kuramoto_model",
    "modified_kuramoto_model",
    "disable_interaction",
    "build_model",
    "MODEL_REGISTRY",
    "simulate_data",
    "TRUE_THETA",
    "TRUE_SIGMA",
    "TRUE_TAU",
    "PARAMETER_NAMES",
]

# Data-generating values used by the bundled experiments.
TRUE_THETA = 0.0
TRUE_SIGMA = 0.2
TRUE_TAU = 1.0

# Coordinate order of the bundled parameter vector.
PARAMETER_NAMES = ("theta", "log_sigma", "log_tau")


@dataclass(frozen=True)
class Parameter:
    """Static parameter vector in its natural (unconstrained) coordinates.

    For the bundled models the coordinates are (theta, log sigma, log tau),
    so the positivity of sigma and tau holds by construction. Entries must
    be finite.
    """

    theta: np.ndarray

    def __post_init__(self):
        vec = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"parameter vector has non-finite entries: {vec}")
        object.__setattr__(self, "theta", vec)

    @property
    def dim(self) -> int:
        return self.theta.shape[0]


def natural_parameter(theta: float, sigma: float, tau: float) -> Parameter:
    """Build a bundled-model Parameter from (theta, sigma, tau) values."""
    if sigma <= 0 or tau <= 0:
        raise ValueError("sigma and tau must be positive")
    return Parameter(np.array([theta, math.log(sigma), math.log(tau)]))


@dataclass(frozen=True)
class ModelSpec:
    """Immutable bundle of model coefficients, observation law and prior.

    Instances are safe to share across threads; every operation that
    consumes a ModelSpec is pure given an explicit generator.
    """

    dim: int
    drift: Callable[[Parameter, np.ndarray, np.ndarray], np.ndarray]
    interaction: Callable[[Parameter, np.ndarray, np.ndarray], np.ndarray]
    diffusion: Callable[[Parameter, np.ndarray], np.ndarray]
    obs_logdensity: Callable[[Parameter, np.ndarray, float], np.ndarray]
    prior_logdensity: Callable[[Parameter], float]
    prior_sample: Callable[[np.random.Generator], Parameter]
    x0: np.ndarray
    interaction_bound: float = math.inf
    name: str = "custom"

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.shape != (self.dim,):
            raise ValueError(f"x0 must have shape ({self.dim},), got {x0.shape}")
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class ObservationSeries:
    """Unit-time observations y_1, ..., y_T (scalar-valued for the bundled models)."""

    y: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if y.size == 0:
            raise ValueError("observation series must be nonempty")
        if not np.all(np.isfinite(y)):
            raise ValueError("observation series has non-finite entries")
        object.__setattr__(self, "y", y)

    @property
    def T(self) -> int:
        return self.y.shape[0]


_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _gaussian_prior(
    means: np.ndarray, sds: np.ndarray
) -> tuple[Callable[[Parameter], float], Callable[[np.random.Generator], Parameter]]:
    """Independent Gaussian prior over the natural coordinates."""

    def logdensity(param: Parameter) -> float:
        z = (param.theta - means) / sds
        return float(-0.5 * np.sum(z * z) - np.sum(np.log(sds)) - z.size * _LOG_SQRT_2PI)

    def sample(rng: np.random.Generator) -> Parameter:
        return Parameter(means + sds * rng.standard_normal(means.shape[0]))

    return logdensity, sample


def _gaussian_obs_logdensity(param: Parameter, x: np.ndarray, y: float) -> np.ndarray:
    """log N(y; x, tau^2) with tau read from the parameter vector."""
    log_tau = param.theta[2]
    z = (y - np.asarray(x)[..., 0]) * math.exp(-log_tau)
    return -0.5 * z * z - log_tau - _LOG_SQRT_2PI


def _oscillator_model(
    diffusion: Callable[[Parameter, np.ndarray], np.ndarray],
    name: str,
    x0: float,
    prior_means: Sequence[float],
    prior_sds: Sequence[float],
) -> ModelSpec:
    means = np.asarray(prior_means, dtype=float)
    sds = np.asarray(prior_sds, dtype=float)
    if means.shape != (3,) or sds.shape != (3,) or np.any(sds <= 0):
        raise ValueError("prior must give a mean and a positive sd per coordinate")
    prior_logdensity, prior_sample = _gaussian_prior(means, sds)

    def drift(param: Parameter, x: np.ndarray, xbar: np.ndarray) -> np.ndarray:
        return (param.theta[0] + np.asarray(xbar))[..., None]

    def interaction(param: Parameter, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sin(np.asarray(x)[..., 0] - np.asarray(y)[..., 0])

    return ModelSpec(
        dim=1,
        drift=drift,
        interaction=interaction,
        diffusion=diffusion,
        obs_logdensity=_gaussian_obs_logdensity,
        prior_logdensity=prior_logdensity,
        prior_sample=prior_sample,
        x0=np.array([x0]),
        interaction_bound=1.0,
        name=name,
    )


def kuramoto_model(
    sigma_fixed: bool = False,
    x0: float = 1.0,
    prior_means: Sequence[float] = (0.0, 0.0, 0.0),
    prior_sds: Sequence[float] = (1.0, 1.0, 1.0),
) -> ModelSpec:
    """Mean-field oscillator with sine coupling and constant diffusion.

    Drift is theta plus the mean-field term, the pairwise coupling is
    sin(x - y), and the diffusion coefficient is the constant sigma. With
    ``sigma_fixed`` the diffusion is pinned to the data-generating value
    instead of being read from the parameter vector, which removes the
    dynamics' dependence on the log-sigma coordinate.
    """

    if sigma_fixed:

        def diffusion(param: Parameter, x: np.ndarray) -> np.ndarray:
            x = np.asarray(x)
            return np.broadcast_to(TRUE_SIGMA, x.shape[:-1] + (1, 1))

    else:

        def diffusion(param: Parameter, x: np.ndarray) -> np.ndarray:
            x = np.asarray(x)
            return np.broadcast_to(math.exp(param.theta[1]), x.shape[:-1] + (1, 1))

    return _oscillator_model(diffusion, "kuramoto", x0, prior_means, prior_sds)


def modified_kuramoto_model(
    x0: float = 1.0,
    prior_means: Sequence[float] = (0.0, 0.0, 0.0),
    prior_sds: Sequence[float] = (1.0, 1.0, 1.0),
) -> ModelSpec:
    """Oscillator variant whose diffusion sigma / (1 + x^2) decays with |x|."""

    def diffusion(param: Parameter, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        s = math.exp(param.theta[1]) / (1.0 + x[..., 0] ** 2)
        return s[..., None, None]

    return _oscillator_model(diffusion, "modified_kuramoto", x0, prior_means, prior_sds)


def disable_interaction(model: ModelSpec) -> ModelSpec:
    """Copy of the model with the pairwise coupling switched off.

    The resulting drift no longer sees the law, which reduces the bundled
    models to ordinary linear-Gaussian dynamics (handy for oracle checks).
    """
    import dataclasses

    def no_interaction(param: Parameter, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        shape = np.broadcast_shapes(np.asarray(x).shape[:-1], np.asarray(y).shape[:-1])
        return np.zeros(shape)

    return dataclasses.replace(model, interaction=no_interaction, interaction_bound=0.0)


MODEL_REGISTRY = {
    "kuramoto": kuramoto_model,
    "modified_kuramoto": modified_kuramoto_model,
}


def build_model(name: str, **kwargs) -> ModelSpec:
    """Construct a bundled model by its registry name."""
    try:
        factory = MODEL_REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; available: {sorted(MODEL_REGISTRY)}"
        ) from None
    return factory(**kwargs)


def simulate_data(
    model: ModelSpec,
    truth: Parameter,
    T: int,
    level: int = 10,
    N: int = 1000,
    seed: int = 0,
    return_latents: bool = False,
):
    """Simulate unit-time observations from one signal trajectory.

    Evolves an N-particle cloud of the discretised mean-field dynamics at
    the given level and drives one tracked path off that cloud; at each
    unit time an observation y_k ~ N(x_k, tau^2) is drawn with tau read
    from the bundled parameterisation (theta[2] = log tau). The defaults
    (level 10, N=1000) act as the ground-truth discretisation for data
    generation; callers should record their choice alongside the data.
    Deterministic given the seed: the signal and the observation noise use
    separate keyed streams, so the path does not depend on tau.

    Returns an ObservationSeries, or (ObservationSeries, latents) with the
    (T, d) unit-time signal states when ``return_latents`` is set.
    """
    if T < 1:
        raise ValueError("T must be a positive integer")
    if level < 0 or N < 1:
        raise ValueError("level must be >= 0 and N >= 1")

    path_rng = stream(seed, 0)
    obs_rng = stream(seed, 1)

    steps = 2 ** level
    dt = 2.0 ** (-level)
    d = model.dim
    cloud = np.tile(model.x0, (N, 1))
    x = model.x0.copy()
    latents = np.empty((T, d))

    for t in range(1, T + 1):
        dw_cloud = gaussian_increments(path_rng, steps, N, d, dt)
        dw_path = gaussian_increments(path_rng, steps, 1, d, dt)
        for k in range(steps):
            xbar_cloud = model.interaction(truth, cloud[:, None, :], cloud[None, :, :]).mean(axis=-1)
            xbar_path = model.interaction(truth, x[None, :], cloud).mean()
            sig_cloud = model.diffusion(truth, cloud)
            sig_path = model.diffusion(truth, x)
            cloud = (
                cloud
                + model.drift(truth, cloud, xbar_cloud) * dt
                + np.einsum("...ij,...j->...i", sig_cloud, dw_cloud[k])
            )
            x = x + model.drift(truth, x, xbar_path) * dt + sig_path @ dw_path[k, 0]
        if not (np.all(np.isfinite(cloud)) and np.all(np.isfinite(x))):
            raise NumericsError(f"simulated state blew up in unit interval {t}")
        latents[t - 1] = x

    tau = math.exp(truth.theta[2])
    y = latents[:, 0] + tau * obs_rng.standard_normal(T)
    obs = ObservationSeries(y)
    if return_latents:
        return obs, latents
    return obs

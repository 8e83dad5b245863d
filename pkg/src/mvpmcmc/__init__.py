"""Bayesian static-parameter estimation for partially observed mean-field SDEs.

Layers, bottom to top: ``model`` defines the SDE/observation/prior bundle
and the two oscillator models; ``law_approx`` propagates the interacting
particle clouds that stand in for the signal law; ``filters`` holds the
path kernels and the single-level and coupled particle filters; ``mcmc``
wraps them into pseudo-marginal Metropolis chains and trace estimators;
``mlmc`` combines a base chain with per-level correction chains;
``harness`` is the CLI and experiment layer; ``kalman`` is the exact
oracle for linear-Gaussian reductions.
"""

__version__ = "0.1.0"

from .errors import NumericsError
from .law_approx import (
    CoupledLawGrid,
    EmpiricalLaw,
    LawGrid,
    approximate_coupled_laws,
    approximate_laws,
    euler_step,
    mean_field,
)
from .filters import (
    CoupledPathSegment,
    FilterOutput,
    PathSegment,
    check_h_weight,
    delta_particle_filter,
    h_weight,
    particle_filter,
    sample_coupled_segment,
    sample_segment,
)
from .kalman import kalman_oracle
from .mcmc import (
    ChainState,
    ChainTrace,
    ProposalSpec,
    bilevel_pmmh_step,
    estimate_bilevel_difference,
    estimate_single,
    pmmh_step,
    run_bilevel,
    run_single_level,
)
from .mlmc import LevelPlan, MlmcResult, cost_units, make_level_plan, mlmc_estimate
from .model import (
    ModelSpec,
    ObservationSeries,
    Parameter,
    build_model,
    disable_interaction,
    kuramoto_model,
    modified_kuramoto_model,
    natural_parameter,
    simulate_data,
)
from .rng import stream, subseed

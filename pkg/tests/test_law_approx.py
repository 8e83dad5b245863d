import dataclasses
import math

import numpy as np
import pytest

from mvpmcmc import (
    EmpiricalLaw,
    NumericsError,
    approximate_coupled_laws,
    approximate_laws,
    euler_step,
    mean_field,
    natural_parameter,
    stream,
)
from mvpmcmc.law_approx import _advance_cloud
from mvpmcmc.rng import gaussian_increments


def _constant_motion_model(model, drift_value):
    """Interaction-free copy with constant drift and zero diffusion."""

    def drift(p, x, xbar):
        return np.full_like(np.asarray(x), drift_value)

    def diffusion(p, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (1, 1))

    def interaction(p, x, y):
        return np.zeros(np.broadcast_shapes(np.asarray(x).shape[:-1], np.asarray(y).shape[:-1]))

    return dataclasses.replace(model, drift=drift, diffusion=diffusion, interaction=interaction)


def test_mean_field_single_particle_at_same_point(model, truth):
    x = np.array([0.9])
    law = EmpiricalLaw(x[None, :])
    assert mean_field(model, truth, x, law) == 0.0


def test_mean_field_symmetric_pair_cancels(model, truth):
    x = np.array([0.3])
    law = EmpiricalLaw(np.array([[0.3 + np.pi / 2], [0.3 - np.pi / 2]]))
    assert mean_field(model, truth, x, law) == pytest.approx(0.0, abs=1e-15)


def test_mean_field_quarter_turn(model, truth):
    law = EmpiricalLaw(np.array([[-np.pi / 2]]))
    assert mean_field(model, truth, np.array([0.0]), law) == pytest.approx(1.0)


def test_empty_law_rejected():
    with pytest.raises(ValueError):
        EmpiricalLaw(np.empty((0, 1)))


def test_mean_field_permutation_invariance(model, truth):
    rng = stream(7, 0)
    particles = rng.normal(size=(64, 1))
    x = np.array([0.2])
    base = mean_field(model, truth, x, EmpiricalLaw(particles))
    perm = mean_field(model, truth, x, EmpiricalLaw(particles[rng.permutation(64)]))
    assert perm == pytest.approx(base, abs=1e-12)


def test_euler_step_zero_noise_zero_drift_is_identity(model):
    p = natural_parameter(0.0, 0.2, 1.0)
    x = np.array([1.7])
    out = euler_step(model, p, x, EmpiricalLaw(x[None, :]), dt=0.25, dw=np.zeros(1))
    assert np.array_equal(out, x)


def test_euler_step_constant_drift(model):
    p = natural_parameter(1.0, 0.2, 1.0)
    x = np.array([2.0])
    out = euler_step(model, p, x, EmpiricalLaw(x[None, :]), dt=0.5, dw=np.zeros(1))
    assert out[0] == pytest.approx(2.5, abs=1e-15)


def test_euler_step_rejects_nonpositive_dt(model, truth):
    x = np.array([0.0])
    with pytest.raises(ValueError):
        euler_step(model, truth, x, EmpiricalLaw(x[None, :]), dt=0.0, dw=np.zeros(1))


def test_euler_step_flags_blowup(model, truth):
    bad = dataclasses.replace(model, drift=lambda p, x, xb: np.full_like(np.asarray(x), np.inf))
    x = np.array([0.0])
    with pytest.raises(NumericsError):
        euler_step(bad, truth, x, EmpiricalLaw(x[None, :]), dt=0.5, dw=np.zeros(1))


def test_euler_step_gaussian_moments(model, truth):
    # One step from x has mean x + drift*dt and variance sigma(x)^2 dt.
    x0, dt, n = 0.4, 0.25, 100_000
    law = EmpiricalLaw(np.array([[x0 - np.pi / 2]]))  # mean-field sin(pi/2) = 1
    drift = 0.0 + 1.0
    sigma = 0.2
    rng = stream(8, 0)
    xs = np.full((n, 1), x0)
    dw = rng.standard_normal((n, 1)) * math.sqrt(dt)
    out = euler_step(model, truth, xs, law, dt=dt, dw=dw)[:, 0]
    mean_exact = x0 + drift * dt
    var_exact = sigma**2 * dt
    se_mean = math.sqrt(var_exact / n)
    se_var = var_exact * math.sqrt(2.0 / (n - 1))
    assert abs(out.mean() - mean_exact) < 3 * se_mean
    assert abs(out.var(ddof=1) - var_exact) < 3 * se_var


def test_approximate_laws_level0_one_law_per_interval(model, truth):
    grid = approximate_laws(model, truth, level=0, N=5, T=4, rng=stream(9, 0))
    assert grid.n_intervals == 4
    assert all(len(interval) == 1 for interval in grid.laws)


def test_approximate_laws_shapes_and_counts(model, truth):
    grid = approximate_laws(model, truth, level=3, N=7, T=3, rng=stream(10, 0))
    assert all(len(interval) == 8 for interval in grid.laws)
    all_laws = [grid.initial] + [law for interval in grid.laws for law in interval]
    assert {law.n for law in all_laws} == {7}
    inputs = grid.interval_inputs(2)
    assert len(inputs) == 8
    assert inputs[0] is grid.laws[0][-1]
    assert grid.interval_inputs(1)[0] is grid.initial


def test_approximate_laws_deterministic(model, truth):
    a = approximate_laws(model, truth, level=2, N=6, T=3, rng=stream(11, 0))
    b = approximate_laws(model, truth, level=2, N=6, T=3, rng=stream(11, 0))
    for ia, ib in zip(a.laws, b.laws):
        for la, lb in zip(ia, ib):
            assert np.array_equal(la.particles, lb.particles)


def test_single_particle_cloud_is_scaled_brownian_motion(model, truth):
    # With one particle and zero angular drift the self-interaction vanishes,
    # so the terminal state is x0 + sigma * W_T with variance sigma^2 T.
    T, sigma, reps = 3, 0.2, 10_000
    rng = stream(12, 0)
    terminals = np.empty(reps)
    for r in range(reps):
        grid = approximate_laws(model, truth, level=2, N=1, T=T, rng=rng)
        terminals[r] = grid.laws[-1][-1].particles[0, 0]
    var_exact = sigma**2 * T
    assert abs(terminals.var(ddof=1) - var_exact) / var_exact < 0.05
    assert terminals.mean() == pytest.approx(1.0, abs=4 * math.sqrt(var_exact / reps))


def test_coupled_rejects_level_zero(model, truth):
    with pytest.raises(ValueError):
        approximate_coupled_laws(model, truth, level=0, N=4, T=2, rng=stream(13, 0))


def test_coupled_exact_for_constant_drift_zero_diffusion(model, truth):
    frozen = _constant_motion_model(model, drift_value=1.0)
    grid = approximate_coupled_laws(frozen, truth, level=4, N=5, T=3, rng=stream(14, 0))
    fine_T = grid.fine.laws[-1][-1].particles
    coarse_T = grid.coarse.laws[-1][-1].particles
    assert np.array_equal(fine_T, coarse_T)


def test_coupled_consumes_pairwise_summed_increments(model, truth):
    # Rebuild both clouds from an identical stream and the declared coupling
    # (coarse increment = sum of its two nested fine increments).
    level, N, T = 3, 6, 2
    grid = approximate_coupled_laws(model, truth, level, N, T, rng=stream(15, 0))
    rng = stream(15, 0)
    steps, dt = 2**level, 2.0**-level
    fine = np.tile(model.x0, (N, 1))
    coarse = fine.copy()
    for t in range(T):
        block = gaussian_increments(rng, steps, N, 1, dt)
        fine_states = _advance_cloud(model, truth, fine, block, dt)
        coarse_states = _advance_cloud(model, truth, coarse, block[0::2] + block[1::2], 2 * dt)
        assert np.array_equal(grid.fine.laws[t][-1].particles, fine_states[-1])
        assert np.array_equal(grid.coarse.laws[t][-1].particles, coarse_states[-1])
        fine, coarse = fine_states[-1], coarse_states[-1]


def test_coupled_fine_marginal_bit_identical(model, truth):
    plain = approximate_laws(model, truth, level=3, N=8, T=3, rng=stream(16, 0))
    coupled = approximate_coupled_laws(model, truth, level=3, N=8, T=3, rng=stream(16, 0))
    for ip, ic in zip(plain.laws, coupled.fine.laws):
        for lp, lc in zip(ip, ic):
            assert np.array_equal(lp.particles, lc.particles)


@pytest.mark.slow
def test_coupled_strong_error_decay(model, truth):
    # Mean-square fine/coarse terminal gap should drop at least like Delta^0.8.
    levels = [3, 4, 5, 6]
    msd = []
    for level in levels:
        vals = []
        for s in range(5):
            grid = approximate_coupled_laws(model, truth, level, N=100, T=5, rng=stream(s, level))
            gap = grid.fine.laws[-1][-1].particles - grid.coarse.laws[-1][-1].particles
            vals.append(np.mean(np.sum(gap**2, axis=-1)))
        msd.append(np.mean(vals))
    slope = np.polyfit(levels, np.log2(msd), 1)[0]
    assert slope <= -0.8


def test_blowup_names_grid_time(model):
    spiky = natural_parameter(0.0, 0.2, 1.0)
    exploding = dataclasses.replace(
        model, drift=lambda p, x, xb: np.full_like(np.asarray(x), np.nan)
    )
    with pytest.raises(NumericsError, match="grid time"):
        approximate_laws(exploding, spiky, level=1, N=3, T=2, rng=stream(17, 0))

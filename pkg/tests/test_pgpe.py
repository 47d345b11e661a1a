from __future__ import annotations

import numpy as np
import pytest

from tdca_lab.pgpe import (
    PgpeConfig,
    PgpeState,
    estimate_gradient,
    evolve,
    initial_state,
    sample_population,
    shape_fitness,
    step,
)


def make_state(dim: int = 3, sigma: float = 0.5, population: int = 8) -> PgpeState:
    return PgpeState(
        center=np.zeros(dim),
        sigma=np.full(dim, sigma),
        lr_center=0.1,
        lr_sigma=0.05,
        population_size=population,
    )


def test_state_rejects_nonpositive_sigma():
    with pytest.raises(ValueError, match="sigma"):
        PgpeState(
            center=np.zeros(2),
            sigma=np.array([0.1, 0.0]),
            lr_center=0.1,
            lr_sigma=0.0,
            population_size=4,
        )


def test_state_rejects_odd_population():
    with pytest.raises(ValueError, match="population"):
        PgpeState(
            center=np.zeros(2),
            sigma=np.full(2, 0.1),
            lr_center=0.1,
            lr_sigma=0.0,
            population_size=5,
        )


def test_sample_population_mirror_identity_and_determinism():
    state = make_state(dim=4, population=10)
    state.center = np.array([1.0, -2.0, 0.5, 3.0])
    pairs = sample_population(state, rng_seed=123)
    assert len(pairs) == 5
    for p in pairs:
        assert np.array_equal(p.plus + p.minus, 2.0 * state.center)
    again = sample_population(state, rng_seed=123)
    for a, b in zip(pairs, again):
        assert np.array_equal(a.epsilon, b.epsilon)


def test_shape_fitness_cases():
    assert np.array_equal(shape_fitness([1.0, 1.0, 1.0]), np.zeros(3))
    assert shape_fitness([0.0, 2.0]) == pytest.approx([-1.0, 1.0])
    shaped = shape_fitness(np.random.default_rng(0).normal(size=33))
    assert shaped.mean() == pytest.approx(0.0, abs=1e-12)
    assert shaped.std() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        shape_fitness([])


def test_shape_fitness_affine_invariance():
    rng = np.random.default_rng(4)
    raw = rng.normal(size=16)
    assert shape_fitness(3.5 * raw + 11.0) == pytest.approx(shape_fitness(raw))


def test_estimate_gradient_hand_case():
    # 1-D, single pair, sigma=1, eps=1, F+=1, F-=0 -> grad_center = 0.5
    state = make_state(dim=1, sigma=1.0, population=2)
    pairs = sample_population(state, rng_seed=0)
    pairs[0].epsilon = np.array([1.0])
    pairs[0].fitness_plus = 1.0
    pairs[0].fitness_minus = 0.0
    grad_center, _ = estimate_gradient(pairs, state.sigma)
    assert grad_center == pytest.approx([0.5])


def test_estimate_gradient_constant_fitness_cancels():
    state = make_state(dim=3, population=12)
    pairs = sample_population(state, rng_seed=7)
    for p in pairs:
        p.fitness_plus = 4.2
        p.fitness_minus = 4.2
    grad_center, _ = estimate_gradient(pairs, state.sigma)
    assert np.array_equal(grad_center, np.zeros(3))


def test_estimate_gradient_even_symmetric_fitness_is_exactly_zero():
    # F depends only on |s - center|, so mirrored fitnesses are equal
    state = make_state(dim=4, sigma=0.3, population=16)
    pairs = sample_population(state, rng_seed=3)
    for p in pairs:
        f = float(np.sum((p.plus - state.center) ** 2))
        p.fitness_plus = f
        p.fitness_minus = float(np.sum((p.minus - state.center) ** 2))
        assert p.fitness_plus == p.fitness_minus
    grad_center, _ = estimate_gradient(pairs, state.sigma)
    assert np.array_equal(grad_center, np.zeros(4))


def test_estimate_gradient_rejects_nonfinite():
    state = make_state(dim=2, population=4)
    pairs = sample_population(state, rng_seed=1)
    pairs[0].fitness_plus = np.nan
    pairs[0].fitness_minus = 0.0
    pairs[1].fitness_plus = 0.0
    pairs[1].fitness_minus = 0.0
    with pytest.raises(ValueError, match="finite"):
        estimate_gradient(pairs, state.sigma)


def test_linear_fitness_estimator_consistency():
    # Monte-Carlo oracle: for F(s) = a.s the expected center-gradient is exactly a
    dim = 8
    a = np.array([1.0, -2.0, 0.5, 3.0, -1.5, 0.25, 2.0, -0.75])
    cosines = []
    for seed in range(20):
        state = PgpeState(
            center=np.zeros(dim),
            sigma=np.full(dim, 0.2),
            lr_center=0.1,
            lr_sigma=0.0,
            population_size=512,
        )
        pairs = sample_population(state, rng_seed=seed)
        raw = []
        for p in pairs:
            raw.append(float(a @ p.plus))
            raw.append(float(a @ p.minus))
        shaped = shape_fitness(raw)
        for i, p in enumerate(pairs):
            p.fitness_plus = shaped[2 * i]
            p.fitness_minus = shaped[2 * i + 1]
        grad_center, _ = estimate_gradient(pairs, state.sigma)
        cosines.append(grad_center @ a / (np.linalg.norm(grad_center) * np.linalg.norm(a)))
    assert np.mean(cosines) > 0.9


def test_step_zero_gradient_only_increments_generation():
    state = make_state(dim=3)
    new = step(state, np.zeros(3), np.zeros(3))
    assert np.array_equal(new.center, state.center)
    assert np.array_equal(new.sigma, state.sigma)
    assert new.generation == state.generation + 1


def test_step_center_arithmetic():
    state = make_state(dim=2)
    state.lr_center = 1.0
    new = step(state, np.array([1.0, 0.0]), np.zeros(2))
    assert np.array_equal(new.center, [1.0, 0.0])


def test_step_sigma_clamped():
    state = make_state(dim=2, sigma=0.001)
    state.lr_sigma = 1.0
    new = step(state, np.zeros(2), np.array([-1.0, 100.0]))
    assert new.sigma[0] == pytest.approx(1e-4)
    assert new.sigma[1] == pytest.approx(10.0)


def test_evolve_quadratic_reaches_optimum():
    target = np.array([3.0, -2.0])

    def objective(s, seed):
        return -float(np.sum((s - target) ** 2))

    cfg = PgpeConfig(population_size=64, generations=200)
    result = evolve(objective, dim=2, config=cfg, master_seed=0)
    assert np.linalg.norm(result.best_center - target) < 0.1
    assert np.linalg.norm(result.final_center - target) < 0.1
    assert len(result.history) == 200


def test_evolve_constant_objective_keeps_center():
    cfg = PgpeConfig(population_size=8, generations=5)
    result = evolve(lambda s, seed: 1.0, dim=3, config=cfg, master_seed=1)
    assert np.array_equal(result.final_center, np.zeros(3))


def test_evolve_zero_generations_returns_initial_center():
    cfg = PgpeConfig(population_size=8, generations=0)
    start = np.array([1.0, 2.0])
    result = evolve(lambda s, seed: 0.0, dim=2, config=cfg, master_seed=0, init_center=start)
    assert np.array_equal(result.final_center, start)
    assert result.history == []


def test_evolve_deterministic_history():
    def objective(s, seed):
        return -float(np.sum(s**2)) + 0.01 * (seed % 7)

    cfg = PgpeConfig(population_size=16, generations=10)
    r1 = evolve(objective, dim=4, config=cfg, master_seed=5)
    r2 = evolve(objective, dim=4, config=cfg, master_seed=5)
    assert [s.__dict__ for s in r1.history] == [s.__dict__ for s in r2.history]
    assert np.array_equal(r1.final_center, r2.final_center)


def test_evolve_thread_count_does_not_change_result():
    def objective(s, seed):
        return -float(np.sum((s - 1.0) ** 2))

    cfg1 = PgpeConfig(population_size=16, generations=8, threads=1)
    cfg2 = PgpeConfig(population_size=16, generations=8, threads=4)
    r1 = evolve(objective, dim=3, config=cfg1, master_seed=2)
    r2 = evolve(objective, dim=3, config=cfg2, master_seed=2)
    assert np.array_equal(r1.final_center, r2.final_center)


def test_evolve_aborts_on_nonfinite_objective():
    def objective(s, seed):
        return float("nan")

    cfg = PgpeConfig(population_size=4, generations=1)
    with pytest.raises(RuntimeError, match="non-finite"):
        evolve(objective, dim=2, config=cfg, master_seed=0)


def test_shaping_makes_center_step_invariant_to_affine_fitness_rescale():
    def base(s, seed):
        return -float(np.sum((s - 2.0) ** 2))

    def rescaled(s, seed):
        return 10.0 * base(s, seed) + 3.0

    cfg = PgpeConfig(population_size=32, generations=5)
    r1 = evolve(base, dim=2, config=cfg, master_seed=9)
    r2 = evolve(rescaled, dim=2, config=cfg, master_seed=9)
    assert np.allclose(r1.final_center, r2.final_center, atol=1e-12)

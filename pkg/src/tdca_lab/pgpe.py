"""Policy Gradients with Parameter-based Exploration.

Black-box maximizer over flat real vectors. Candidates are drawn in
mirrored pairs `center +/- sigma * eps`, fitnesses are z-score shaped, and
the search distribution follows the estimated fitness gradient:

    grad_center_j = mean_pairs[ eps_j * (F+ - F-) / 2 ] / sigma_j
    grad_sigma_j  = mean_pairs[ (eps_j^2 - 1) * ((F+ + F-) / 2 - baseline) ] / sigma_j

with the baseline taken as the mean fitness of the generation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

SIGMA_MIN = 1e-4
SIGMA_MAX = 10.0


@dataclass
class PgpeConfig:
    population_size: int = 64
    generations: int = 100
    lr_center: float = 0.01
    lr_sigma: float = 0.0
    sigma_init: float = 0.1
    common_seed_per_generation: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        if self.population_size < 2 or self.population_size % 2 != 0:
            raise ValueError("population_size must be even and >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.lr_center < 0 or self.lr_sigma < 0:
            raise ValueError("learning rates must be >= 0")
        if self.sigma_init <= 0:
            raise ValueError("sigma_init must be > 0")


@dataclass
class PgpeState:
    center: np.ndarray
    sigma: np.ndarray
    lr_center: float
    lr_sigma: float
    population_size: int
    generation: int = 0

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.center.shape != self.sigma.shape:
            raise ValueError("center and sigma must have the same shape")
        if not np.all(self.sigma > 0):
            raise ValueError("sigma must be positive in every dimension")
        if self.population_size < 2 or self.population_size % 2 != 0:
            raise ValueError("population_size must be even and >= 2")


@dataclass
class SamplePair:
    """A mirrored candidate pair: plus = center + sigma*eps, minus = center - sigma*eps."""

    epsilon: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    fitness_plus: float = np.nan
    fitness_minus: float = np.nan


@dataclass
class FitnessReport:
    raw: np.ndarray
    shaped: np.ndarray
    best_fitness: float
    mean_fitness: float


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    sigma_mean: float


@dataclass
class EvolveResult:
    best_center: np.ndarray
    best_fitness: float
    final_center: np.ndarray
    final_sigma: np.ndarray
    history: list[GenerationStats] = field(default_factory=list)


def initial_state(dim: int, config: PgpeConfig, center: np.ndarray | None = None) -> PgpeState:
    if center is None:
        center = np.zeros(dim)
    center = np.asarray(center, dtype=np.float64)
    if center.shape != (dim,):
        raise ValueError(f"center must have shape ({dim},)")
    return PgpeState(
        center=center.copy(),
        sigma=np.full(dim, config.sigma_init),
        lr_center=config.lr_center,
        lr_sigma=config.lr_sigma,
        population_size=config.population_size,
    )


def sample_population(state: PgpeState, rng_seed: int) -> list[SamplePair]:
    """Draw population_size/2 mirrored pairs; deterministic under the seed."""
    rng = np.random.default_rng(rng_seed)
    n_pairs = state.population_size // 2
    eps = rng.standard_normal(size=(n_pairs, state.center.size))
    pairs = []
    for i in range(n_pairs):
        offset = state.sigma * eps[i]
        pairs.append(
            SamplePair(epsilon=eps[i], plus=state.center + offset, minus=state.center - offset)
        )
    return pairs


def shape_fitness(raw: list[float] | np.ndarray) -> np.ndarray:
    """Z-score normalization; a constant list maps to all zeros."""
    values = np.asarray(raw, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot shape an empty fitness list")
    std = values.std()
    if std == 0.0:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def make_fitness_report(raw: list[float] | np.ndarray) -> FitnessReport:
    values = np.asarray(raw, dtype=np.float64)
    return FitnessReport(
        raw=values,
        shaped=shape_fitness(values),
        best_fitness=float(values.max()),
        mean_fitness=float(values.mean()),
    )


def estimate_gradient(
    pairs: list[SamplePair], sigma: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient estimates from mirrored pairs whose fitness slots are filled."""
    if len(pairs) == 0:
        raise ValueError("need at least one sample pair")
    eps = np.stack([p.epsilon for p in pairs])
    f_plus = np.array([p.fitness_plus for p in pairs])
    f_minus = np.array([p.fitness_minus for p in pairs])
    if not (np.all(np.isfinite(f_plus)) and np.all(np.isfinite(f_minus))):
        raise ValueError("non-finite fitness in sample pairs")
    diff = (f_plus - f_minus) / 2.0
    grad_center = (eps * diff[:, None]).mean(axis=0) / sigma
    avg = (f_plus + f_minus) / 2.0
    baseline = avg.mean()
    grad_sigma = ((eps**2 - 1.0) * (avg - baseline)[:, None]).mean(axis=0) / sigma
    return grad_center, grad_sigma


def step(state: PgpeState, grad_center: np.ndarray, grad_sigma: np.ndarray) -> PgpeState:
    """Ascent step on center and sigma; sigma is clamped to [1e-4, 10]."""
    new_center = state.center + state.lr_center * grad_center
    new_sigma = np.clip(state.sigma + state.lr_sigma * grad_sigma, SIGMA_MIN, SIGMA_MAX)
    return replace(state, center=new_center, sigma=new_sigma, generation=state.generation + 1)


def evaluation_seed(master_seed: int, generation: int, candidate_index: int) -> int:
    """Stable per-evaluation seed; index 0 is reused generation-wide under common seeding."""
    ss = np.random.SeedSequence([master_seed & 0xFFFFFFFF, generation, candidate_index])
    return int(ss.generate_state(1)[0])


def sampling_seed(master_seed: int, generation: int) -> int:
    """Seed for drawing a generation's perturbations, distinct from evaluation seeds."""
    ss = np.random.SeedSequence([master_seed & 0xFFFFFFFF, generation])
    return int(ss.generate_state(1)[0])


def evolve(
    objective,
    dim: int,
    config: PgpeConfig,
    master_seed: int = 0,
    init_center: np.ndarray | None = None,
    on_generation=None,
) -> EvolveResult:
    """Run sample -> evaluate -> shape -> estimate -> step for the configured generations.

    `objective(candidate, seed)` must be deterministic given its arguments and
    return a finite float (higher is better). Candidate evaluations within a
    generation are independent and run on `config.threads` workers; results
    are reduced in sample order, so the outcome is thread-count independent.
    """
    state = initial_state(dim, config, center=init_center)
    history: list[GenerationStats] = []
    best_candidate = state.center.copy()
    best_fitness = -np.inf

    for gen in range(config.generations):
        pairs = sample_population(state, sampling_seed(master_seed, gen))

        candidates = []
        for i, pair in enumerate(pairs):
            if config.common_seed_per_generation:
                seed_plus = seed_minus = evaluation_seed(master_seed, gen, 0)
            else:
                seed_plus = evaluation_seed(master_seed, gen, 2 * i)
                seed_minus = evaluation_seed(master_seed, gen, 2 * i + 1)
            candidates.append((pair.plus, seed_plus))
            candidates.append((pair.minus, seed_minus))

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                raw = list(pool.map(lambda cs: objective(cs[0], cs[1]), candidates))
        else:
            raw = [objective(c, s) for c, s in candidates]
        raw = np.asarray(raw, dtype=np.float64)
        if not np.all(np.isfinite(raw)):
            bad = int(np.flatnonzero(~np.isfinite(raw))[0])
            raise RuntimeError(
                f"objective returned non-finite fitness {raw[bad]} "
                f"(generation {gen}, candidate {bad})"
            )

        report = make_fitness_report(raw)
        best_idx = int(np.argmax(raw))
        if raw[best_idx] > best_fitness:
            best_fitness = float(raw[best_idx])
            best_candidate = candidates[best_idx][0].copy()

        for i, pair in enumerate(pairs):
            pair.fitness_plus = float(report.shaped[2 * i])
            pair.fitness_minus = float(report.shaped[2 * i + 1])
        grad_center, grad_sigma = estimate_gradient(pairs, state.sigma)
        state = step(state, grad_center, grad_sigma)

        stats = GenerationStats(
            generation=gen,
            best_fitness=report.best_fitness,
            mean_fitness=report.mean_fitness,
            sigma_mean=float(state.sigma.mean()),
        )
        history.append(stats)
        if on_generation is not None:
            on_generation(stats)

    return EvolveResult(
        best_center=best_candidate,
        best_fitness=best_fitness,
        final_center=state.center,
        final_sigma=state.sigma,
        history=history,
    )

"""Genetic search over piecewise-constant readout envelopes, maximizing
simulated combined fidelity at fixed measurement time under photon-number
constraints.

Fitness is Monte Carlo and therefore noisy; every individual in a
generation is evaluated with the same shot streams (common random numbers)
so within-generation comparisons are low-variance, and the final winner is
re-evaluated at 4x shots to de-bias the returned fitness.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cavity import EXCITED, GROUND, ReadoutPulse, StatePath, simulate_field
from .protocols import ReadoutSetup, derive_seed, run_fidelity


@dataclass(frozen=True)
class GaConfig:
    """Genetic-algorithm knobs.  The envelope is encoded as `segments`
    piecewise-constant complex amplitudes over the pulse duration."""

    population: int = 24
    generations: int = 30
    mutation_rate: float = 0.3
    mutation_scale: float = 0.15
    crossover_rate: float = 0.7
    elitism: int = 2
    segments: int = 8
    shots_per_eval: int = 2000
    constraint_max_photons: float = 50.0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 <= self.elitism <= self.population:
            raise ValueError("elitism must lie in [0, population]")
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("mutation_rate", "crossover_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mutation_scale < 0:
            raise ValueError("mutation_scale must be >= 0")
        if self.shots_per_eval < 2:
            raise ValueError("shots_per_eval must be >= 2")
        if not self.constraint_max_photons > 0:
            raise ValueError("constraint_max_photons must be strictly positive")


@dataclass(frozen=True, eq=False)
class GaResult:
    best_envelope: ReadoutPulse
    best_fitness: float
    history: list  # per generation: dict(generation, best, mean, best_running)
    evaluations: int
    early_stop: bool = False


def _genome_pulse(genome: np.ndarray, setup: ReadoutSetup) -> ReadoutPulse:
    return ReadoutPulse.from_segments(setup.pulse.drive_freq, genome,
                                      setup.pulse.duration,
                                      setup.pulse.sample_dt)


def _max_photons(pulse: ReadoutPulse, setup: ReadoutSetup) -> float:
    worst = 0.0
    for s in (GROUND, EXCITED):
        traj = simulate_field(pulse, StatePath(s), setup.device, setup.derived,
                              ground_shift_sign=setup.ground_shift_sign)
        worst = max(worst, traj.max_photons)
    return worst


def _evaluate(genome: np.ndarray, config: GaConfig, setup: ReadoutSetup,
              eval_seed: int, n_shots: int):
    """Penalized fitness: combined fidelity, minus the photon-constraint
    violation ratio excess when the envelope overdrives the cavity."""
    pulse = _genome_pulse(genome, setup)
    trial = replace(setup, pulse=pulse)
    fidelity = run_fidelity(trial, n_shots, eval_seed).report.fidelity
    ratio = _max_photons(pulse, setup) / config.constraint_max_photons
    feasible = ratio <= 1.0
    fitness = fidelity if feasible else fidelity - (ratio - 1.0)
    return fitness, feasible


def optimize_pulse(config: GaConfig, setup: ReadoutSetup, seed: int) -> GaResult:
    """Tournament-selection GA over complex segment amplitudes.

    Generation g evaluates all individuals with the shot streams of one
    derived seed (common random numbers).  Elites are copied unchanged, so
    the running best never decreases; the best feasible individual ever
    seen is re-evaluated at 4x shots_per_eval and returned.
    """
    ops_rng = np.random.default_rng(derive_seed(seed, "ga-ops"))
    n_seg = config.segments
    flat = np.full(n_seg, complex(setup.drive_amplitude))
    population = [flat.copy()]
    for _ in range(config.population - 1):
        amp = np.exp(0.25 * ops_rng.standard_normal(n_seg))
        phase = 0.2 * ops_rng.standard_normal(n_seg)
        population.append(flat * amp * np.exp(1j * phase))

    def eval_generation(genomes, gen_index):
        gen_seed = derive_seed(seed, f"ga-gen-{gen_index}")
        if setup.threads > 1:
            with ThreadPoolExecutor(max_workers=setup.threads) as pool:
                out = list(pool.map(
                    lambda g: _evaluate(g, config, setup, gen_seed,
                                        config.shots_per_eval), genomes))
        else:
            out = [_evaluate(g, config, setup, gen_seed, config.shots_per_eval)
                   for g in genomes]
        return out

    history = []
    evaluations = 0
    best_running = -math.inf
    best_genome = None
    best_feasible_fitness = -math.inf
    early_stop = False

    for gen in range(config.generations):
        results = eval_generation(population, gen)
        evaluations += len(population)
        fitnesses = np.array([r[0] for r in results])
        order = np.argsort(-fitnesses, kind="stable")
        gen_best = float(fitnesses[order[0]])
        for idx in order:
            if results[idx][1]:
                if fitnesses[idx] > best_feasible_fitness:
                    best_feasible_fitness = float(fitnesses[idx])
                    best_genome = population[idx].copy()
                break
        best_running = max(best_running, gen_best)
        top = population[order[0]]
        history.append({"generation": gen, "best": gen_best,
                        "mean": float(fitnesses.mean()),
                        "best_running": best_running,
                        "best_genome": [[float(a.real), float(a.imag)]
                                        for a in top]})

        if gen == config.generations - 1:
            break
        diversity = any(not np.array_equal(g, population[0]) for g in population[1:])
        if not diversity and config.mutation_rate == 0.0:
            early_stop = True
            break

        elites = [population[i].copy() for i in order[:config.elitism]]
        offspring = list(elites)
        while len(offspring) < config.population:
            parents = []
            for _ in range(2):
                a, b = ops_rng.integers(0, config.population, size=2)
                parents.append(population[a if fitnesses[a] >= fitnesses[b] else b])
            child = parents[0].copy()
            if ops_rng.random() < config.crossover_rate:
                take = ops_rng.random(n_seg) < 0.5
                child[take] = parents[1][take]
            mutate = ops_rng.random(n_seg) < config.mutation_rate
            if mutate.any():
                k = int(mutate.sum())
                amp = np.exp(config.mutation_scale * ops_rng.standard_normal(k))
                phase = config.mutation_scale * ops_rng.standard_normal(k)
                child[mutate] *= amp * np.exp(1j * phase)
            offspring.append(child)
        population = offspring

    if best_genome is None:
        # nothing feasible ever appeared: shrink the flat baseline under
        # the photon ceiling and return that
        scale = math.sqrt(config.constraint_max_photons
                          / _max_photons(_genome_pulse(flat, setup), setup))
        best_genome = flat * (0.999 * scale)
    final_seed = derive_seed(seed, "ga-final")
    best_fitness, _ = _evaluate(best_genome, config, setup, final_seed,
                                4 * config.shots_per_eval)
    evaluations += 1
    return GaResult(best_envelope=_genome_pulse(best_genome, setup),
                    best_fitness=best_fitness, history=history,
                    evaluations=evaluations, early_stop=early_stop)

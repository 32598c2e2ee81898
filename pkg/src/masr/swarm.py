"""Annealed particle swarm over the movable-antenna placement.

With the beamformer and the reflection phases frozen, the only coupling
between element positions and the robust rate is through the field
responses, so the fitness is the closed-form worst-case rate re-evaluated
at each particle's placement (radii recomputed from the rebuilt channels)
minus a penalty per spacing-violating element pair.  Acceptance of the
iteration's best candidate follows a Metropolis rule with a linearly
decaying temperature; a monotone best-ever record is what the outer loop
consumes, so exploration can never regress the overall objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import MovementRegion, SystemGeometry, build_channels_batch
from .rates import CSR, PSR, ScenarioConfig
from .uncertainty import (
    batch_cascaded_amplitude,
    batch_combined_amplitude_min,
    batch_direct_amplitude_min,
)


class SpacingInfeasibleError(RuntimeError):
    """No spacing-feasible placement was found even after a penalty retry."""


@dataclass
class Particle:
    """One swarm member: placement, velocity, and its personal best."""

    position: np.ndarray  # (K, 3)
    velocity: np.ndarray  # (K, 3)
    best_position: np.ndarray
    best_fitness: float


@dataclass(frozen=True)
class SwarmConfig:
    """Swarm size, schedule, and step/penalty factors."""

    n_particles: int = 150
    n_iterations: int = 150
    inertia: float = 1.2
    c1: float = 1.4
    c2: float = 1.4
    penalty: float = 50.0
    t0: float = 1.0

    def __post_init__(self):
        if self.n_particles < 1 or self.n_iterations < 1:
            raise ValueError("need at least one particle and one iteration")
        if self.inertia <= 0 or self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("inertia and step factors must be positive")
        if self.penalty <= 0:
            raise ValueError("penalty must be positive (at least the peak rate)")
        if self.t0 <= 0:
            raise ValueError("initial temperature must be positive")


def violation_set_size(positions: np.ndarray, min_spacing: float) -> int:
    """Number of element pairs closer than the minimum spacing."""
    p = np.asarray(positions, float)
    if p.shape[0] < 2:
        return 0
    diff = p[:, None, :] - p[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    iu = np.triu_indices(p.shape[0], k=1)
    return int(np.count_nonzero(dist[iu] < min_spacing))


def batch_violations(positions: np.ndarray, min_spacing: float) -> np.ndarray:
    """Pair-violation counts for a stack of placements, (S, K, 3) -> (S,)."""
    p = np.asarray(positions, float)
    if p.shape[1] < 2:
        return np.zeros(p.shape[0], dtype=int)
    diff = p[:, :, None, :] - p[:, None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    iu = np.triu_indices(p.shape[1], k=1)
    return np.count_nonzero(dist[:, iu[0], iu[1]] < min_spacing, axis=1)


def make_batch_fitness(
    w: np.ndarray,
    psi: np.ndarray,
    geometry: SystemGeometry,
    scenario: ScenarioConfig,
    g_bs: float,
    g_u: float,
    penalty: float,
    min_spacing: float,
) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized fitness over placements with (w, psi) frozen.

    Rebuilds every user's channels at each placement, recomputes the error
    radii from the rebuilt norms, evaluates the scenario's worst-case rate
    (minimum across users), and subtracts penalty * violating pairs.
    """
    sig2 = scenario.noise_power

    def evaluate(positions: np.ndarray) -> np.ndarray:
        P = np.asarray(positions, float)
        if P.ndim == 2:
            P = P[None]
        rates = None
        for user in range(geometry.n_users):
            h_u, H_bs = build_channels_batch(geometry, P, user=user)
            xi_u = g_u * np.linalg.norm(h_u, axis=1)
            xi_bs = g_bs * np.linalg.norm(H_bs, axis=(1, 2))
            if scenario.scenario == PSR:
                dmin = batch_direct_amplitude_min(h_u, w, xi_u)
                cmax = batch_cascaded_amplitude(H_bs, psi, w, xi_bs, sense="max")
                r = np.log2(1.0 + dmin**2 / (cmax**2 + sig2))
            else:
                plus = batch_combined_amplitude_min(h_u, H_bs, psi, w, xi_u, xi_bs, +1)
                minus = batch_combined_amplitude_min(h_u, H_bs, psi, w, xi_u, xi_bs, -1)
                r = 0.5 * np.log2(1.0 + plus**2 / sig2) + 0.5 * np.log2(1.0 + minus**2 / sig2)
            rates = r if rates is None else np.minimum(rates, r)
        return rates - penalty * batch_violations(P, min_spacing)

    return evaluate


def fitness(
    w: np.ndarray,
    psi: np.ndarray,
    positions: np.ndarray,
    geometry: SystemGeometry,
    scenario: ScenarioConfig,
    g_bs: float,
    g_u: float,
    penalty: float,
    min_spacing: float,
) -> float:
    """Penalized worst-case rate of one placement (see make_batch_fitness)."""
    fn = make_batch_fitness(w, psi, geometry, scenario, g_bs, g_u, penalty, min_spacing)
    return float(fn(positions)[0])


def update_velocity_position(
    particle: Particle,
    p_best_global: np.ndarray,
    config: SwarmConfig,
    region: MovementRegion,
    rng: np.random.Generator,
) -> Particle:
    """Inertia + cognitive + social step, then componentwise clamping.

    r2 and r3 are scalar draws per update; the position is clamped to the
    region bounds while the velocity is left untouched.
    """
    r2 = rng.uniform()
    r3 = rng.uniform()
    particle.velocity = (
        config.inertia * particle.velocity
        + config.c1 * r2 * (particle.best_position - particle.position)
        + config.c2 * r3 * (p_best_global - particle.position)
    )
    particle.position = region.clamp(particle.position + particle.velocity)
    return particle


def temperature_step(T: float, q: int, Q: int) -> float:
    """Linear cooling: T' = ((Q - q) / Q) * T."""
    return (Q - q) / Q * T


def sa_accept(f_incumbent: float, f_candidate: float, T: float, rng: np.random.Generator) -> bool:
    """Greedy accept, else Metropolis with probability exp(dF / T)."""
    if f_candidate >= f_incumbent:
        return True
    if T <= 0:
        return False
    eps = math.exp((f_candidate - f_incumbent) / T)
    return bool(rng.uniform() < eps)


@dataclass(eq=False)
class SwarmResult:
    positions: np.ndarray
    fitness: float
    record_trace: list[float]
    incumbent_trace: list[float]
    accepted_worse: int
    diversity_jumps: int
    evaluations: int
    status: str


def sa_pso(
    w: Optional[np.ndarray],
    psi: Optional[np.ndarray],
    p_init: np.ndarray,
    config: SwarmConfig,
    rng: np.random.Generator,
    *,
    geometry: Optional[SystemGeometry] = None,
    scenario: Optional[ScenarioConfig] = None,
    g_bs: float = 0.0,
    g_u: float = 0.0,
    min_spacing: float = 0.0,
    region: Optional[MovementRegion] = None,
    annealing: bool = True,
    record_filter: Optional[Callable[[np.ndarray], bool]] = None,
    fitness_factory: Optional[Callable[[float], Callable[[np.ndarray], np.ndarray]]] = None,
) -> SwarmResult:
    """Run the annealed swarm and return the monotone best-ever placement.

    The incumbent placement seeds one particle; the rest start uniformly
    inside the region with velocities in +-10% of each side length.  Per
    iteration every particle moves and is re-scored, the iteration's best
    candidate challenges the global incumbent under the acceptance rule
    (greedy when annealing is off), and on an accepted-worse event the
    incumbent instead jumps to a uniformly drawn member of the sorted top
    half.  The best-ever record only admits placements passing
    record_filter; the returned placement always has zero spacing
    violations (one doubled-penalty retry, then an error).
    """
    if region is None:
        if geometry is None:
            raise ValueError("need a region (directly or via geometry)")
        region = geometry.region

    if fitness_factory is None:
        if geometry is None or scenario is None or w is None or psi is None:
            raise ValueError("need w, psi, geometry, and scenario without a fitness_factory")

        def fitness_factory(pen: float) -> Callable[[np.ndarray], np.ndarray]:
            return make_batch_fitness(w, psi, geometry, scenario, g_bs, g_u, pen, min_spacing)

    result = _sa_pso_once(p_init, config, rng, region, min_spacing, annealing,
                          record_filter, fitness_factory(config.penalty))
    if violation_set_size(result.positions, min_spacing) == 0:
        return result
    retry_cfg = SwarmConfig(
        n_particles=config.n_particles, n_iterations=config.n_iterations,
        inertia=config.inertia, c1=config.c1, c2=config.c2,
        penalty=2.0 * config.penalty, t0=config.t0,
    )
    result = _sa_pso_once(p_init, retry_cfg, rng, region, min_spacing, annealing,
                          record_filter, fitness_factory(retry_cfg.penalty))
    if violation_set_size(result.positions, min_spacing) == 0:
        result.status = "retry-" + result.status
        return result
    raise SpacingInfeasibleError("no spacing-feasible placement found after penalty retry")


def _sa_pso_once(
    p_init: np.ndarray,
    config: SwarmConfig,
    rng: np.random.Generator,
    region: MovementRegion,
    min_spacing: float,
    annealing: bool,
    record_filter: Optional[Callable[[np.ndarray], bool]],
    batch_fitness: Callable[[np.ndarray], np.ndarray],
) -> SwarmResult:
    S, Q = config.n_particles, config.n_iterations
    K = p_init.shape[0]
    streams = rng.spawn(S)

    sides = region.sides  # (3,)
    positions = np.empty((S, K, 3))
    positions[0] = region.clamp(np.asarray(p_init, float))
    for s in range(1, S):
        positions[s] = region.lower + streams[s].uniform(size=(K, 3)) * sides
    velocities = np.empty((S, K, 3))
    for s in range(S):
        velocities[s] = streams[s].uniform(-0.1, 0.1, size=(K, 3)) * sides

    fit = np.asarray(batch_fitness(positions), float)
    evaluations = S
    particles = [
        Particle(position=positions[s].copy(), velocity=velocities[s].copy(),
                 best_position=positions[s].copy(), best_fitness=float(fit[s]))
        for s in range(S)
    ]

    g_idx = int(np.argmax(fit))
    g_pos = positions[g_idx].copy()
    g_fit = float(fit[g_idx])

    def admissible(pos):
        return record_filter is None or record_filter(pos)

    rec_pos: Optional[np.ndarray] = None
    rec_fit = -np.inf
    order = np.argsort(-fit, kind="stable")
    for s in order:
        if fit[s] > rec_fit and admissible(positions[s]):
            rec_pos, rec_fit = positions[s].copy(), float(fit[s])
            break

    record_trace: list[float] = []
    incumbent_trace: list[float] = []
    accepted_worse = 0
    diversity_jumps = 0
    T = config.t0

    for q in range(Q):
        for s, part in enumerate(particles):
            update_velocity_position(part, g_pos, config, region, streams[s])
            positions[s] = part.position
        fit = np.asarray(batch_fitness(positions), float)
        evaluations += S
        for s, part in enumerate(particles):
            if fit[s] > part.best_fitness:
                part.best_fitness = float(fit[s])
                part.best_position = positions[s].copy()

        order = np.argsort(-fit, kind="stable")
        cand_idx = int(order[0])
        cand_fit = float(fit[cand_idx])
        if cand_fit >= g_fit:
            g_pos, g_fit = positions[cand_idx].copy(), cand_fit
        elif annealing and sa_accept(g_fit, cand_fit, T, rng):
            accepted_worse += 1
            pick = int(order[rng.integers(0, max(1, S // 2))])
            g_pos, g_fit = positions[pick].copy(), float(fit[pick])
            diversity_jumps += 1

        for s in order:
            if fit[s] <= rec_fit:
                break
            if admissible(positions[s]):
                rec_pos, rec_fit = positions[s].copy(), float(fit[s])
                break

        record_trace.append(rec_fit)
        incumbent_trace.append(g_fit)
        T = temperature_step(T, q, Q)

    if rec_pos is None:
        return SwarmResult(
            positions=region.clamp(np.asarray(p_init, float)), fitness=-np.inf,
            record_trace=record_trace, incumbent_trace=incumbent_trace,
            accepted_worse=accepted_worse, diversity_jumps=diversity_jumps,
            evaluations=evaluations, status="no-admissible-placement",
        )
    return SwarmResult(
        positions=rec_pos, fitness=rec_fit, record_trace=record_trace,
        incumbent_trace=incumbent_trace, accepted_worse=accepted_worse,
        diversity_jumps=diversity_jumps, evaluations=evaluations, status="ok",
    )

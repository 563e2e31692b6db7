"""Approximate global minimisation of the discrete interaction energy.

Two routes to (near-)stationary configurations:

* multi-start projected gradient descent with Armijo backtracking, the
  workhorse for finding candidate minimisers;
* the explicit-Euler particle flow of the aggregation dynamics
  (velocity of particle i is minus the field gradient there), with
  adaptive time-step halving whenever a step would increase the energy.

Both use the mass-preconditioned descent direction v_i = -g_i / w_i,
i.e. the physical velocity field; for equal weights this is plain
steepest descent rescaled by N. The reported gradient norm is the
largest per-particle velocity magnitude, so stopping thresholds do not
depend on the particle count.

Global optimality is never claimed: certification is the arbiter of
minimiser quality.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .energy import (
    ParticleConfiguration,
    _energy_raw,
    _gradient_raw,
    discrete_energy,
    max_pairwise_distance,
)
from .errors import FlowStepUnderflowError, InitialisationError
from .potential import PotentialProfile

__all__ = [
    "Backtracking",
    "FixedStep",
    "MinimiseOptions",
    "MinimisationResult",
    "FlowResult",
    "minimise_discrete",
    "flow_simulate",
]

THREADS_ENV = "INTERACTION_MINIMISER_THREADS"
_MIN_STEP = 1e-14


@dataclass(frozen=True)
class Backtracking:
    c: float = 1e-4
    shrink: float = 0.5
    initial: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.c < 1.0):
            raise ValueError("Armijo constant c must lie in (0, 1)")
        if not (0.0 < self.shrink < 1.0):
            raise ValueError("shrink factor must lie in (0, 1)")


@dataclass(frozen=True)
class FixedStep:
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("fixed step must be positive")


@dataclass(frozen=True)
class MinimiseOptions:
    n: int = 64
    restarts: int = 8
    max_iters: int = 2000
    grad_tol: float = 1e-8
    step_rule: Backtracking | FixedStep = field(default_factory=Backtracking)
    ball_radius: Optional[float] = None
    recentre: bool = True
    seed: int = 0
    init_radius: Optional[float] = None  # default max(4 * monotone radius, 4)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two particles")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")


@dataclass(frozen=True)
class MinimisationResult:
    config: ParticleConfiguration
    energy: float
    grad_norm: float
    converged: bool
    iterations: int
    energy_trace: np.ndarray  # accepted-step energies, non-increasing
    diameter: float
    restarts_summary: list  # final energy per restart
    trace: np.ndarray = field(default=None, repr=False)  # (iter, energy, grad_norm, step)


@dataclass(frozen=True)
class FlowResult:
    trajectory: np.ndarray  # (k, n, d) accepted states including the start
    times: np.ndarray
    result: MinimisationResult
    com_drift: float
    rejected_steps: int


def _velocity(x, weights, profile):
    g = _gradient_raw(x, weights, profile)
    v = -g / weights[:, None]
    gnorm = float(np.sqrt(np.einsum("ij,ij->i", v, v)).max())
    return g, v, gnorm


def _energy_of(x, weights, profile):
    return _energy_raw(x, weights, profile, False)


def _project_ball(x, radius):
    norms = np.sqrt(np.sum(x * x, axis=1))
    over = norms > radius
    if np.any(over):
        x = x.copy()
        x[over] *= (radius / norms[over])[:, None]
    return x


def _recentre(x, weights):
    return x - np.average(x, axis=0, weights=weights)


def _sample_ball(rng, n, d, radius):
    g = rng.standard_normal((n, d))
    norms = np.sqrt(np.sum(g * g, axis=1))
    norms[norms == 0.0] = 1.0
    r = radius * rng.random(n) ** (1.0 / d)
    return g / norms[:, None] * r[:, None]


def _initial_positions(rng, profile, opts: MinimiseOptions):
    radius = opts.init_radius
    if radius is None:
        radius = max(4.0 * (profile.monotone_radius or 0.0), 4.0)
    d = profile.dimension
    weights = np.full(opts.n, 1.0 / opts.n)
    for _ in range(100):
        x = _sample_ball(rng, opts.n, d, radius)
        if opts.ball_radius is not None:
            x = _project_ball(x, opts.ball_radius)
        if math.isfinite(_energy_of(x, weights, profile)):
            return x, weights
    raise InitialisationError(
        "could not draw a starting configuration with finite energy"
    )


def _descend(profile, x, weights, opts: MinimiseOptions):
    """Single descent run; returns (x, trace_rows, converged, iterations)."""
    rule = opts.step_rule
    e = _energy_of(x, weights, profile)
    rows = []
    converged = False
    t = rule.initial if isinstance(rule, Backtracking) else rule.h
    it = 0
    for it in range(1, opts.max_iters + 1):
        g, v, gnorm = _velocity(x, weights, profile)
        if gnorm <= opts.grad_tol:
            converged = True
            break
        if isinstance(rule, FixedStep):
            cand = x + rule.h * v
            if opts.ball_radius is not None:
                cand = _project_ball(cand, opts.ball_radius)
            e_new = _energy_of(cand, weights, profile)
            accepted, t = True, rule.h
        else:
            t = min(rule.initial, t / rule.shrink)  # warm start, mild regrowth
            accepted = False
            while t >= _MIN_STEP:
                cand = x + t * v
                if opts.ball_radius is not None:
                    cand = _project_ball(cand, opts.ball_radius)
                gain = float(np.sum(g * (cand - x)))
                e_new = _energy_of(cand, weights, profile)
                if gain < 0 and e_new <= e + rule.c * gain:
                    accepted = True
                    break
                t *= rule.shrink
            if not accepted:
                break  # stationary to floating-point resolution
        x = cand
        if opts.recentre and opts.ball_radius is None:
            x = _recentre(x, weights)
        e = e_new
        rows.append((it, e, gnorm, t))
    else:
        it = opts.max_iters
    if not converged:
        _, _, gnorm = _velocity(x, weights, profile)
        converged = gnorm <= opts.grad_tol
    return x, rows, converged, it


def _run_restart(profile, opts: MinimiseOptions, seed_seq):
    rng = np.random.default_rng(seed_seq)
    x, weights = _initial_positions(rng, profile, opts)
    x, rows, converged, iters = _descend(profile, x, weights, opts)
    config = ParticleConfiguration(x, weights)
    e = discrete_energy(config, profile)
    _, _, gnorm = _velocity(x, weights, profile)
    return config, e, gnorm, converged, iters, rows


def _thread_count(restarts: int) -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        k = int(raw)
    except ValueError:
        k = 1
    return max(1, min(k, restarts))


def minimise_discrete(
    profile: PotentialProfile, options: MinimiseOptions | None = None
) -> MinimisationResult:
    """Best-of-restarts descent on the diagonal-off energy.

    Each restart draws N independent uniform points in a ball (its own
    seeded stream), descends, and the lowest-energy run wins. Identical
    (options, seed) give bit-identical results at a fixed thread count.
    """
    opts = options or MinimiseOptions()
    seeds = np.random.SeedSequence(opts.seed).spawn(opts.restarts)
    workers = _thread_count(opts.restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda s: _run_restart(profile, opts, s), seeds))
    else:
        runs = [_run_restart(profile, opts, s) for s in seeds]
    energies = [r[1] for r in runs]
    best = int(np.argmin(energies))
    config, e, gnorm, converged, iters, rows = runs[best]
    trace = np.asarray(rows, dtype=float) if rows else np.empty((0, 4))
    return MinimisationResult(
        config=config,
        energy=e,
        grad_norm=gnorm,
        converged=converged,
        iterations=iters,
        energy_trace=trace[:, 1] if trace.size else np.empty(0),
        diameter=max_pairwise_distance(config.positions),
        restarts_summary=[float(v) for v in energies],
        trace=trace,
    )


def flow_simulate(
    profile: PotentialProfile,
    config0: ParticleConfiguration,
    dt: float,
    t_final: float,
    max_steps: int = 10**6,
) -> FlowResult:
    """Explicit Euler on the particle velocity field with energy-decrease
    step control: a step that would increase the energy is rejected and
    the time step halved (aborting below 1e-15)."""
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and t_final must be positive")
    x = config0.positions.copy()
    weights = config0.weights.copy()
    e = _energy_of(x, weights, profile)
    if not math.isfinite(e):
        raise InitialisationError("initial configuration has non-finite energy")
    com0 = np.average(x, axis=0, weights=weights)
    traj = [x.copy()]
    times = [0.0]
    rows = []
    com_drift = 0.0
    rejected = 0
    t = 0.0
    step = 0
    gnorm = math.inf
    while t < t_final - 1e-15 and step < max_steps:
        _, v, gnorm = _velocity(x, weights, profile)
        cand = x + dt * v
        e_new = _energy_of(cand, weights, profile)
        if e_new > e:
            dt *= 0.5
            rejected += 1
            if dt < 1e-15:
                raise FlowStepUnderflowError(
                    f"time step underflow at t={t:.6g} (energy {e:.6g})"
                )
            continue
        x, e = cand, e_new
        t += dt
        step += 1
        com = np.average(x, axis=0, weights=weights)
        com_drift = max(com_drift, float(np.linalg.norm(com - com0)))
        traj.append(x.copy())
        times.append(t)
        rows.append((step, e, gnorm, dt))
    config = ParticleConfiguration(x, weights)
    trace = np.asarray(rows, dtype=float) if rows else np.empty((0, 4))
    result = MinimisationResult(
        config=config,
        energy=e,
        grad_norm=gnorm,
        converged=gnorm <= 1e-8,
        iterations=step,
        energy_trace=trace[:, 1] if trace.size else np.empty(0),
        diameter=max_pairwise_distance(config.positions),
        restarts_summary=[e],
        trace=trace,
    )
    return FlowResult(
        trajectory=np.asarray(traj),
        times=np.asarray(times),
        result=result,
        com_drift=com_drift,
        rejected_steps=rejected,
    )

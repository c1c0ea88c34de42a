"""Population-based optimisers that emit :class:`RunTrace` records.

* :func:`ga_run`  -- steady-state GA: size-``n_t`` tournaments, blend
  crossover with per-coordinate ``alpha ~ U(-d, 1+d)``, Gaussian mutation with
  sd ``m_d * width``, saturation at the box, replace-worst-if-not-worse.
* :func:`pso_run` -- synchronous global-best PSO with norm-clamped velocity.
* :func:`sga_run` -- the simplified GA: random parents, absorbing boundary,
  unconditional replacement of a random member.
* :func:`ra_run`  -- pure random search replacing a random member.

Uniform draws per step, with f0 as objective (one draw per evaluation):

=======  =========================  ============================================
alg      initialisation             per new point
=======  =========================  ============================================
GA       (dim + 1) N                2 n_t + 2 dim + 1  (+1 if mutation_probability < 1)
PSO      (2 dim + 1) N              3
SGA      (dim + 1) N                2 dim + 4
RA       (dim + 1) N                dim + 2
=======  =========================  ============================================

Each Gaussian consumes exactly one uniform.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from .errors import InvalidParameter
from .objectives import Objective, SearchDomain
from .rng import RngEngine


@dataclass(frozen=True)
class Individual:
    position: np.ndarray
    fitness: float
    index: int = -1


@dataclass
class Snapshot:
    evaluations_used: int
    positions: np.ndarray
    fitnesses: np.ndarray

    @property
    def individuals(self) -> list[Individual]:
        return [Individual(self.positions[i].copy(), float(self.fitnesses[i]), i)
                for i in range(len(self.fitnesses))]

    def best(self) -> Individual:
        return best_of(self)


@dataclass
class RunTrace:
    algorithm: str
    config: dict
    objective: dict
    seed: Optional[int] = None
    master_seed: Optional[int] = None
    run_index: Optional[int] = None
    snapshots: list = field(default_factory=list)
    final_best: Optional[Individual] = None

    @property
    def evaluations(self) -> int:
        return self.snapshots[-1].evaluations_used if self.snapshots else 0

    def header(self) -> dict:
        return {
            "type": "header",
            "algorithm": self.algorithm,
            "config": self.config,
            "objective": self.objective,
            "master_seed": self.master_seed,
            "run_index": self.run_index,
            "seed": self.seed,
        }


def best_of(snapshot: Snapshot) -> Individual:
    """Minimal-fitness individual; ties go to the lowest index."""
    fit = np.asarray(snapshot.fitnesses)
    if fit.size == 0:
        raise InvalidParameter("cannot take the best of an empty snapshot")
    i = int(np.argmin(fit))
    return Individual(np.asarray(snapshot.positions)[i].copy(), float(fit[i]), i)


# ---------------------------------------------------------------------------
# configurations

@dataclass(frozen=True)
class GaConfig:
    N: int
    n_t: int = 2
    d: float = 0.25
    mutation_rate: float = 0.01
    mutation_probability: float = 1.0
    budget: int = 300_000

    def validate(self) -> None:
        if self.N < 2:
            raise InvalidParameter("GA population size must be >= 2")
        if self.n_t < 1:
            raise InvalidParameter("tournament size must be >= 1")
        if self.d < 0 or self.mutation_rate < 0:
            raise InvalidParameter("d and mutation_rate must be >= 0")
        if not 0 <= self.mutation_probability <= 1:
            raise InvalidParameter("mutation_probability must lie in [0, 1]")
        if self.budget < self.N:
            raise InvalidParameter(f"budget {self.budget} is smaller than N={self.N}")


@dataclass(frozen=True)
class PsoConfig:
    N: int
    c0: float = 1.0
    c1: float = 2.0
    c2: float = 2.0
    v_init_max: float = 0.1
    v_clamp: float = 0.2
    budget: int = 300_000
    boundary: str = "saturate"

    def validate(self) -> None:
        if self.N < 1:
            raise InvalidParameter("PSO swarm size must be >= 1")
        if self.v_clamp <= 0:
            raise InvalidParameter("v_clamp must be > 0")
        if self.v_init_max < 0:
            raise InvalidParameter("v_init_max must be >= 0")
        if self.boundary not in ("saturate", "none"):
            raise InvalidParameter("boundary must be 'saturate' or 'none'")
        if self.budget < self.N:
            raise InvalidParameter(f"budget {self.budget} is smaller than N={self.N}")


@dataclass(frozen=True)
class SimplifiedGaConfig:
    N: int
    d: float = 0.25
    sigma: float = 0.01
    steps: int = 299_900

    def validate(self) -> None:
        if self.N < 2:
            raise InvalidParameter("simplified GA population size must be >= 2")
        if self.d < 0 or self.sigma < 0:
            raise InvalidParameter("d and sigma must be >= 0")
        if self.steps < 0:
            raise InvalidParameter("steps must be >= 0")

    @property
    def budget(self) -> int:
        return self.N + self.steps


@dataclass(frozen=True)
class RaConfig:
    N: int
    budget: int = 300_000

    def validate(self) -> None:
        if self.N < 1:
            raise InvalidParameter("population size must be >= 1")
        if self.budget < self.N:
            raise InvalidParameter(f"budget {self.budget} is smaller than N={self.N}")


CONFIG_TYPES = {"ga": GaConfig, "pso": PsoConfig, "sga": SimplifiedGaConfig, "ra": RaConfig}


# ---------------------------------------------------------------------------
# driver

def default_snapshot_every(budget: int) -> int:
    return max(1, math.ceil(budget / 100))


def _resolve(objective: Objective, domain: Optional[SearchDomain]) -> SearchDomain:
    if domain is None:
        return objective.domain
    if domain.dim != objective.dim:
        raise InvalidParameter(
            f"domain dimension {domain.dim} differs from objective dimension {objective.dim}")
    return domain


def _drive(name, config, objective, domain, engine, budget, init, advance, population,
           snapshot_every, sink, keep_snapshots) -> RunTrace:
    """Run ``advance`` between snapshot marks, emitting snapshots as it goes."""
    trace = RunTrace(name, asdict(config), Objective(objective.kind, domain).to_dict())
    every = default_snapshot_every(budget) if snapshot_every is None else int(snapshot_every)
    if every < 1:
        raise InvalidParameter("snapshot_every must be >= 1")

    def emit(evals):
        pos, fit = population()
        snap = Snapshot(evals, pos.copy(), fit.copy())
        if sink is not None:
            sink(snap)
        if keep_snapshots or evals == budget or not trace.snapshots:
            trace.snapshots.append(snap)

    evals = init()
    emit(evals)
    while evals < budget:
        target = min(budget, (evals // every + 1) * every)
        evals = int(advance(evals, target))
        emit(evals)
    trace.final_best = best_of(trace.snapshots[-1])
    return trace


def ga_run(config: GaConfig, objective: Objective, domain: Optional[SearchDomain],
           engine: RngEngine, *, snapshot_every: Optional[int] = None,
           sink: Optional[Callable[[Snapshot], None]] = None,
           keep_snapshots: bool = True) -> RunTrace:
    config.validate()
    dom = _resolve(objective, domain)
    lo, hi, width = dom.lo, dom.hi, dom.width
    pop = np.empty((config.N, dom.dim))
    fit = np.empty(config.N)
    kind = objective.code

    def init():
        engine._call(K.init_population, kind, lo, width, pop, fit)
        return config.N

    def advance(evals, target):
        return engine._call(K.ga_advance, kind, lo, hi, width, pop, fit, config.n_t,
                            float(config.d), float(config.mutation_rate),
                            float(config.mutation_probability), evals, target)

    return _drive("ga", config, objective, dom, engine, config.budget, init, advance,
                  lambda: (pop, fit), snapshot_every, sink, keep_snapshots)


def pso_run(config: PsoConfig, objective: Objective, domain: Optional[SearchDomain],
            engine: RngEngine, *, snapshot_every: Optional[int] = None,
            sink: Optional[Callable[[Snapshot], None]] = None,
            keep_snapshots: bool = True) -> RunTrace:
    """Velocity constants are fractions of each coordinate's width."""
    config.validate()
    dom = _resolve(objective, domain)
    lo, hi, width = dom.lo, dom.hi, dom.width
    n, dim = config.N, dom.dim
    pos = np.empty((n, dim))
    vel = np.empty((n, dim))
    fit = np.empty(n)
    pb = np.empty((n, dim))
    pbf = np.empty(n)
    gb = np.empty(dim)
    gbf = np.empty(1)
    cursor = np.zeros(1, dtype=np.int64)
    kind = objective.code
    saturate = config.boundary == "saturate"

    def init():
        engine._call(K.pso_init, kind, lo, width, float(config.v_init_max),
                     pos, vel, fit, pb, pbf, gb, gbf)
        return n

    def advance(evals, target):
        return engine._call(K.pso_advance, kind, lo, hi, width, pos, vel, fit, pb, pbf,
                            gb, gbf, cursor, float(config.c0), float(config.c1),
                            float(config.c2), float(config.v_clamp), saturate, evals, target)

    return _drive("pso", config, objective, dom, engine, config.budget, init, advance,
                  lambda: (pos, fit), snapshot_every, sink, keep_snapshots)


def sga_run(config: SimplifiedGaConfig, objective: Objective, domain: Optional[SearchDomain],
            engine: RngEngine, *, snapshot_every: Optional[int] = None,
            sink: Optional[Callable[[Snapshot], None]] = None,
            keep_snapshots: bool = True) -> RunTrace:
    """Mutation sd is ``sigma * width`` per coordinate; children are clipped."""
    config.validate()
    dom = _resolve(objective, domain)
    lo, hi, width = dom.lo, dom.hi, dom.width
    pop = np.empty((config.N, dom.dim))
    fit = np.empty(config.N)
    kind = objective.code

    def init():
        engine._call(K.init_population, kind, lo, width, pop, fit)
        return config.N

    def advance(evals, target):
        return engine._call(K.sga_advance, kind, lo, hi, width, pop, fit,
                            float(config.d), float(config.sigma), evals, target)

    return _drive("sga", config, objective, dom, engine, config.budget, init, advance,
                  lambda: (pop, fit), snapshot_every, sink, keep_snapshots)


def ra_run(config: RaConfig, objective: Objective, domain: Optional[SearchDomain],
           engine: RngEngine, *, snapshot_every: Optional[int] = None,
           sink: Optional[Callable[[Snapshot], None]] = None,
           keep_snapshots: bool = True) -> RunTrace:
    config.validate()
    dom = _resolve(objective, domain)
    lo, width = dom.lo, dom.width
    pop = np.empty((config.N, dom.dim))
    fit = np.empty(config.N)
    kind = objective.code

    def init():
        engine._call(K.init_population, kind, lo, width, pop, fit)
        return config.N

    def advance(evals, target):
        return engine._call(K.ra_advance, kind, lo, width, pop, fit, evals, target)

    return _drive("ra", config, objective, dom, engine, config.budget, init, advance,
                  lambda: (pop, fit), snapshot_every, sink, keep_snapshots)


RUNNERS = {"ga": ga_run, "pso": pso_run, "sga": sga_run, "ra": ra_run}


def simplified_ga_step(x, d: float, sigma: float, engine: RngEngine) -> np.ndarray:
    """One step of the simplified GA on a population of scalars in [0, 1].

    Draw order: parent ``j``, parent ``k``, ``alpha``, ``Z``, slot ``i``.
    Returns a new array; the input is left untouched.
    """
    arr = np.array(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidParameter("population must be a vector with at least 2 members")
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise InvalidParameter("population values must lie in [0, 1]")
    if d < 0 or sigma < 0:
        raise InvalidParameter("d and sigma must be >= 0")
    engine._call(K.sga_step, arr, float(d), float(sigma))
    return arr

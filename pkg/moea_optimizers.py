"""
NSGA-II, SPEA-II and MOEA/D over binary structure genomes.

All three share the reproduction step of ``evolution_core.reproduce`` and
stop once the evaluator has spent ``fe_budget`` novel function evaluations
(or after ``generation_cap`` generations, whichever comes first).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from data_generator import make_rng
from evolution_core import (
    ArchiveEntry,
    Genome,
    GoalPoint,
    ParetoArchive,
    StructureEvaluator,
    point_dominates,
    random_genome,
    reproduce,
)
from narx_model import Dataset, ModelSet

logger = logging.getLogger(__name__)

ALGORITHM_DEFAULTS = {
    "nsga2": (0.9, 0.006),
    "spea2": (0.7, 0.008),
    "moead": (0.8, 0.008),
}

ZERO_WEIGHT_FLOOR = 1e-6


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    algorithm: Literal["nsga2", "spea2", "moead"] = "nsga2"
    ps: int = 50
    fe_budget: int = Field(25000, ge=1)
    p_c: Optional[float] = Field(None, ge=0.0, le=1.0)
    p_m: Optional[float] = Field(None, ge=0.0, le=1.0)
    crossover: Literal["uniform", "single_point"] = "uniform"
    # MOEA/D external archive only; NSGA-II and SPEA2 archives hold at most ps members
    archive_size: int = Field(50, ge=1)
    spea2_k: int = Field(10, ge=1)
    moead_T: Optional[int] = None
    moead_nr: int = 2
    moead_aggregation: Literal["tchebycheff", "weighted_sum"] = "tchebycheff"
    cts_tie: Literal["larger", "smaller"] = "larger"
    free_run: bool = True
    generation_cap: Optional[int] = Field(None, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _fill_defaults(self):
        if self.ps < 4 or self.ps % 2:
            raise ValueError(f"ps must be even and >= 4, got {self.ps}")
        default_pc, default_pm = ALGORITHM_DEFAULTS[self.algorithm]
        if self.p_c is None:
            self.p_c = default_pc
        if self.p_m is None:
            self.p_m = default_pm
        if self.moead_T is None:
            self.moead_T = max(3, round(0.1 * self.ps))
        if not 1 <= self.moead_nr < self.moead_T < self.ps:
            raise ValueError(
                f"need 1 <= moead_nr < moead_T < ps, got nr={self.moead_nr}, T={self.moead_T}, ps={self.ps}"
            )
        if self.generation_cap is None:
            self.generation_cap = max(1, math.ceil(10 * self.fe_budget / self.ps))
        return self


@dataclass
class RankedMember:
    entry: ArchiveEntry
    rank: int
    crowding: float


@dataclass
class RankedPopulation:
    members: List[RankedMember] = field(default_factory=list)

    def front(self, rank: int = 1) -> List[ArchiveEntry]:
        return [m.entry for m in self.members if m.rank == rank]


@dataclass
class GenerationStats:
    """Snapshot handed to ``on_generation`` callbacks"""

    generation: int
    evaluations: int
    front: List[ArchiveEntry]
    elite: ParetoArchive


GenerationCallback = Callable[[GenerationStats], None]


def non_dominated_sort(points: Sequence[Sequence[float]]) -> List[List[int]]:
    """Fast non-dominated sort; returns fronts as ascending index lists"""
    n = len(points)
    dominated_by_me: List[List[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if point_dominates(points[i], points[j]):
                dominated_by_me[i].append(j)
                domination_count[j] += 1
            elif point_dominates(points[j], points[i]):
                dominated_by_me[j].append(i)
                domination_count[i] += 1

    fronts = []
    current = [i for i in range(n) if domination_count[i] == 0]
    while current:
        fronts.append(sorted(current))
        following = []
        for i in current:
            for j in dominated_by_me[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    following.append(j)
        current = following
    return fronts


def crowding_distance(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Normalised neighbour gaps summed over objectives; extremes are infinite"""
    values = np.asarray(points, dtype=float)
    n = len(values)
    distance = np.zeros(n)
    if n <= 2:
        distance[:] = np.inf
        return distance

    for p in range(values.shape[1]):
        order = np.argsort(values[:, p], kind="stable")
        column = values[order, p]
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        span = column[-1] - column[0]
        if span <= 0:
            continue
        distance[order[1:-1]] += (column[2:] - column[:-2]) / span
    return distance


def rank_population(entries: Sequence[ArchiveEntry]) -> RankedPopulation:
    points = [e.objectives.point for e in entries]
    members: List[Optional[RankedMember]] = [None] * len(entries)
    for rank, front in enumerate(non_dominated_sort(points), start=1):
        crowding = crowding_distance([points[i] for i in front])
        for i, distance in zip(front, crowding):
            members[i] = RankedMember(entries[i], rank, float(distance))
    return RankedPopulation(members)


def _distinct(entries: Sequence[ArchiveEntry]) -> List[ArchiveEntry]:
    seen = set()
    unique = []
    for entry in entries:
        if entry.genome not in seen:
            seen.add(entry.genome)
            unique.append(entry)
    return unique


def _initial_population(
    evaluator: StructureEvaluator,
    size: int,
    rng: np.random.Generator,
) -> List[ArchiveEntry]:
    """Distinct sparse random genomes; duplicates allowed only when the space runs out"""
    n = evaluator.model_set.size
    genomes: List[Genome] = []
    seen = set()
    attempts = 0
    while len(genomes) < size:
        genome = random_genome(n, evaluator.goal.xi_lim, rng)
        attempts += 1
        if genome in seen and attempts < 100 * size:
            continue
        seen.add(genome)
        genomes.append(genome)
    return [evaluator.entry(g) for g in genomes]


def _elite_update(elite: ParetoArchive, entries: Sequence[ArchiveEntry]):
    for entry in entries:
        elite.insert(entry)


def _budget_left(evaluator: StructureEvaluator, cfg: RunConfig, generation: int) -> bool:
    if evaluator.evaluations >= cfg.fe_budget:
        return False
    if generation >= cfg.generation_cap:
        logger.warning(
            f"{cfg.algorithm}: generation cap {cfg.generation_cap} reached after "
            f"{evaluator.evaluations}/{cfg.fe_budget} evaluations"
        )
        return False
    return True


def _finish(archive: ParetoArchive, evaluator: StructureEvaluator, generation: int, cfg: RunConfig) -> ParetoArchive:
    archive.evaluations = evaluator.evaluations
    archive.generations = generation
    logger.info(
        f"{cfg.algorithm} run (seed {cfg.seed}) finished: {generation} generations, "
        f"{evaluator.evaluations} evaluations, {evaluator.hits} cache hits, archive size {len(archive)}"
    )
    return archive


def _crowded_tournament(population: RankedPopulation, cfg: RunConfig, rng: np.random.Generator) -> ArchiveEntry:
    i, j = rng.integers(len(population.members), size=2)
    a, b = population.members[i], population.members[j]
    if a.rank != b.rank:
        return a.entry if a.rank < b.rank else b.entry
    if a.crowding == b.crowding:
        return a.entry
    if cfg.cts_tie == "larger":
        return a.entry if a.crowding > b.crowding else b.entry
    return a.entry if a.crowding < b.crowding else b.entry


def _survive(union: List[ArchiveEntry], size: int) -> List[ArchiveEntry]:
    """Fill by whole fronts; the splitting front is cut by descending crowding"""
    ranked = rank_population(union)
    survivors: List[ArchiveEntry] = []
    by_rank = {}
    for index, member in enumerate(ranked.members):
        by_rank.setdefault(member.rank, []).append((index, member))
    for rank in sorted(by_rank):
        members = by_rank[rank]
        if len(survivors) + len(members) <= size:
            survivors.extend(m.entry for _, m in members)
            continue
        members = sorted(members, key=lambda im: (-im[1].crowding, im[0]))
        survivors.extend(m.entry for _, m in members[: size - len(survivors)])
        break
    return survivors


def _log_generation(cfg: RunConfig, generation: int, evaluations: int, front: Sequence[ArchiveEntry]):
    if front and logger.isEnabledFor(logging.DEBUG):
        best_j1 = min(e.objectives.j1 for e in front)
        best_j2 = min(e.objectives.j2 for e in front)
        logger.debug(
            f"{cfg.algorithm} gen {generation}: {evaluations} FEs, front size {len(front)}, "
            f"best J1 {best_j1:.4g}, best J2 {best_j2:.4g}"
        )


def run_nsga2(
    cfg: RunConfig,
    model_set: ModelSet,
    data: Dataset,
    goal: GoalPoint,
    on_generation: Optional[GenerationCallback] = None,
) -> ParetoArchive:
    if cfg.cts_tie == "smaller":
        logger.warning("crowded tournament configured to prefer the smaller crowding distance")

    rng = make_rng(cfg.seed)
    evaluator = StructureEvaluator(model_set, data, goal, cfg.free_run)
    elite = ParetoArchive()

    population = _survive(_initial_population(evaluator, cfg.ps, rng), cfg.ps)
    _elite_update(elite, population)
    generation = 0

    while _budget_left(evaluator, cfg, generation):
        ranked = rank_population(population)
        offspring = []
        while len(offspring) < cfg.ps:
            p = _crowded_tournament(ranked, cfg, rng)
            q = _crowded_tournament(ranked, cfg, rng)
            for child in reproduce(p.genome, q.genome, cfg.p_c, cfg.p_m, cfg.crossover, rng):
                offspring.append(evaluator.entry(child))
        _elite_update(elite, offspring)
        population = _survive(_distinct(population + offspring), cfg.ps)
        generation += 1

        front = rank_population(population).front(1)
        _log_generation(cfg, generation, evaluator.evaluations, front)
        if on_generation is not None:
            on_generation(GenerationStats(generation, evaluator.evaluations, front, elite))

    archive = ParetoArchive.from_entries(rank_population(population).front(1), cfg.ps)
    return _finish(archive, evaluator, generation, cfg)


def _knn_distances(points: np.ndarray) -> np.ndarray:
    """Row i holds the sorted distances from point i to every other point"""
    diff = points[:, None, :] - points[None, :, :]
    distances = np.sqrt(np.sum(diff ** 2, axis=-1))
    np.fill_diagonal(distances, np.inf)
    return np.sort(distances, axis=1)[:, :-1] if len(points) > 1 else np.zeros((len(points), 0))


def spea2_fitness(
    points: Sequence[Sequence[float]],
    archive_points: Sequence[Sequence[float]] = (),
    k: int = 10,
) -> np.ndarray:
    """Strength-based raw fitness plus k-th neighbour density over population + archive.

    Returns one value per member of the union, population first. Members
    with fitness below 1 are non-dominated.
    """
    union = [tuple(p) for p in points] + [tuple(p) for p in archive_points]
    n = len(union)
    if n == 0:
        return np.zeros(0)

    values = np.asarray(union, dtype=float)
    no_worse = (values[:, None, :] <= values[None, :, :]).all(axis=-1)
    better = (values[:, None, :] < values[None, :, :]).any(axis=-1)
    dominates_matrix = no_worse & better

    strength = dominates_matrix.sum(axis=1)
    raw = np.array([strength[dominates_matrix[:, i]].sum() for i in range(n)], dtype=float)

    neighbours = _knn_distances(values)
    if neighbours.shape[1] == 0:
        sigma = np.zeros(n)
    else:
        sigma = neighbours[:, min(k, neighbours.shape[1]) - 1]
    return raw + 1.0 / (sigma + 2.0)


def spea2_truncate(points: Sequence[Sequence[float]], capacity: int) -> List[int]:
    """Indices kept after repeatedly dropping the most crowded member.

    The most crowded member has the lexicographically smallest vector of
    sorted neighbour distances; equal vectors drop the lowest index.
    """
    keep = list(range(len(points)))
    values = np.asarray(points, dtype=float)
    while len(keep) > capacity:
        neighbours = _knn_distances(values[keep])
        victim = min(range(len(keep)), key=lambda i: (tuple(neighbours[i]), i))
        del keep[victim]
    return keep


def _spea2_environment(
    union: List[ArchiveEntry],
    fitness: np.ndarray,
    capacity: int,
) -> Tuple[List[ArchiveEntry], np.ndarray]:
    non_dominated = [i for i in range(len(union)) if fitness[i] < 1.0]
    if len(non_dominated) > capacity:
        kept = spea2_truncate([union[i].objectives.point for i in non_dominated], capacity)
        chosen = [non_dominated[i] for i in kept]
    else:
        dominated = sorted((i for i in range(len(union)) if fitness[i] >= 1.0), key=lambda i: (fitness[i], i))
        chosen = non_dominated + dominated[: capacity - len(non_dominated)]
    return [union[i] for i in chosen], fitness[chosen]


def run_spea2(
    cfg: RunConfig,
    model_set: ModelSet,
    data: Dataset,
    goal: GoalPoint,
    on_generation: Optional[GenerationCallback] = None,
) -> ParetoArchive:
    rng = make_rng(cfg.seed)
    evaluator = StructureEvaluator(model_set, data, goal, cfg.free_run)
    elite = ParetoArchive()

    population = _initial_population(evaluator, cfg.ps, rng)
    _elite_update(elite, population)
    archive: List[ArchiveEntry] = []
    generation = 0

    while True:
        union = _distinct(population + archive)
        fitness = spea2_fitness([e.objectives.point for e in union], k=cfg.spea2_k)
        archive, archive_fitness = _spea2_environment(union, fitness, cfg.ps)

        front = [e for e, f in zip(archive, archive_fitness) if f < 1.0]
        if generation:
            _log_generation(cfg, generation, evaluator.evaluations, front)
            if on_generation is not None:
                on_generation(GenerationStats(generation, evaluator.evaluations, front, elite))
        if not _budget_left(evaluator, cfg, generation):
            break

        population = []
        while len(population) < cfg.ps:
            parents = []
            for _ in range(2):
                i, j = rng.integers(len(archive), size=2)
                parents.append(archive[i] if archive_fitness[i] <= archive_fitness[j] else archive[j])
            for child in reproduce(parents[0].genome, parents[1].genome, cfg.p_c, cfg.p_m, cfg.crossover, rng):
                population.append(evaluator.entry(child))
        _elite_update(elite, population)
        generation += 1

    result = ParetoArchive.from_entries(front, cfg.ps)
    return _finish(result, evaluator, generation, cfg)


def generate_weight_vectors(ps: int) -> List[Tuple[float, float]]:
    """Evenly spaced two-objective weights (i/(ps-1), 1 - i/(ps-1))"""
    if ps < 2:
        raise ValueError("need at least two weight vectors")
    return [(i / (ps - 1), 1.0 - i / (ps - 1)) for i in range(ps)]


def tchebycheff(j: Sequence[float], weights: Sequence[float], ideal: Sequence[float]) -> float:
    return max(max(w, ZERO_WEIGHT_FLOOR) * abs(v - z) for v, w, z in zip(j, weights, ideal))


def weighted_sum(j: Sequence[float], weights: Sequence[float], ideal: Sequence[float] = None) -> float:
    return float(sum(w * v for v, w in zip(j, weights)))


AGGREGATIONS = {
    "tchebycheff": tchebycheff,
    "weighted_sum": weighted_sum,
}


def neighbourhoods(weights: Sequence[Sequence[float]], size: int) -> List[List[int]]:
    """Indices of the ``size`` nearest weight vectors (Euclidean), nearest first"""
    w = np.asarray(weights, dtype=float)
    distances = np.sqrt(((w[:, None, :] - w[None, :, :]) ** 2).sum(axis=-1))
    return [list(np.argsort(row, kind="stable")[:size]) for row in distances]


def _crowding_truncate(entries: List[ArchiveEntry], capacity: int) -> List[ArchiveEntry]:
    entries = list(entries)
    while len(entries) > capacity:
        crowding = crowding_distance([e.objectives.point for e in entries])
        del entries[int(np.argmin(crowding))]
    return entries


def replace_neighbours(
    population: List[ArchiveEntry],
    entry: ArchiveEntry,
    neighbours: Sequence[int],
    weights: Sequence[Sequence[float]],
    ideal: Sequence[float],
    aggregate: Callable,
    limit: int,
    rng: np.random.Generator,
) -> int:
    """Put ``entry`` in place of at most ``limit`` neighbours it aggregates better than"""
    replaced = 0
    point = entry.objectives.point
    for j in rng.permutation(neighbours):
        if replaced >= limit:
            break
        if aggregate(point, weights[j], ideal) < aggregate(population[j].objectives.point, weights[j], ideal):
            population[j] = entry
            replaced += 1
    return replaced


def run_moead(
    cfg: RunConfig,
    model_set: ModelSet,
    data: Dataset,
    goal: GoalPoint,
    on_generation: Optional[GenerationCallback] = None,
) -> ParetoArchive:
    rng = make_rng(cfg.seed)
    evaluator = StructureEvaluator(model_set, data, goal, cfg.free_run)
    aggregate = AGGREGATIONS[cfg.moead_aggregation]

    weights = generate_weight_vectors(cfg.ps)
    neighbourhood = neighbourhoods(weights, cfg.moead_T)

    population = _initial_population(evaluator, cfg.ps, rng)
    ideal = [min(e.objectives.point[p] for e in population) for p in range(2)]

    external = ParetoArchive(cfg.archive_size)
    for entry in population:
        external.insert(entry)
    external.replace_entries(_crowding_truncate(external.entries, cfg.archive_size))
    generation = 0

    while _budget_left(evaluator, cfg, generation):
        for i in rng.permutation(cfg.ps):
            if evaluator.evaluations >= cfg.fe_budget:
                break
            a, b = rng.choice(neighbourhood[i], size=2, replace=False)
            child, _ = reproduce(population[a].genome, population[b].genome, cfg.p_c, cfg.p_m, cfg.crossover, rng)
            entry = evaluator.entry(child)
            point = entry.objectives.point
            ideal = [min(z, v) for z, v in zip(ideal, point)]

            replace_neighbours(population, entry, neighbourhood[i], weights, ideal, aggregate, cfg.moead_nr, rng)

            if external.insert(entry) and len(external) > cfg.archive_size:
                external.replace_entries(_crowding_truncate(external.entries, cfg.archive_size))
        generation += 1

        _log_generation(cfg, generation, evaluator.evaluations, external.entries)
        if on_generation is not None:
            on_generation(GenerationStats(generation, evaluator.evaluations, list(external.entries), external))

    return _finish(external, evaluator, generation, cfg)


OPTIMIZERS = {
    "nsga2": run_nsga2,
    "spea2": run_spea2,
    "moead": run_moead,
}


def run_optimizer(
    cfg: RunConfig,
    model_set: ModelSet,
    data: Dataset,
    goal: GoalPoint,
    on_generation: Optional[GenerationCallback] = None,
) -> ParetoArchive:
    logger.info(
        f"starting {cfg.algorithm}: ps={cfg.ps}, fe_budget={cfg.fe_budget}, p_c={cfg.p_c}, p_m={cfg.p_m}, "
        f"crossover={cfg.crossover}, seed={cfg.seed}"
    )
    return OPTIMIZERS[cfg.algorithm](cfg, model_set, data, goal, on_generation)

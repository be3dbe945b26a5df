import math

import numpy as np
import pytest
from pydantic import ValidationError

from evolution_core import ArchiveEntry, Genome, ObjectiveVector, dominates, point_dominates
from moea_optimizers import (
    RunConfig,
    crowding_distance,
    generate_weight_vectors,
    neighbourhoods,
    non_dominated_sort,
    replace_neighbours,
    run_optimizer,
    spea2_fitness,
    spea2_truncate,
    tchebycheff,
    weighted_sum,
)
from narx_model import Dataset


def _small_run(algorithm: str, **overrides) -> RunConfig:
    fields = dict(algorithm=algorithm, ps=8, fe_budget=80, archive_size=10, seed=11)
    fields.update(overrides)
    return RunConfig(**fields)


class TestRunConfig:
    @pytest.mark.parametrize("algorithm,p_c,p_m", [("nsga2", 0.9, 0.006), ("spea2", 0.7, 0.008), ("moead", 0.8, 0.008)])
    def test_algorithm_defaults(self, algorithm, p_c, p_m):
        cfg = RunConfig(algorithm=algorithm)
        assert (cfg.p_c, cfg.p_m) == (p_c, p_m)
        assert cfg.moead_T == 5
        assert cfg.generation_cap == 5000

    def test_explicit_rates_win(self):
        cfg = RunConfig(algorithm="spea2", p_c=0.2, p_m=0.01)
        assert (cfg.p_c, cfg.p_m) == (0.2, 0.01)

    def test_small_population_neighbourhood_floor(self):
        assert RunConfig(ps=8).moead_T == 3

    @pytest.mark.parametrize("fields", [{"ps": 7}, {"ps": 2}, {"moead_nr": 5, "moead_T": 5}, {"p_c": 1.5}, {"bogus": 1}])
    def test_invalid(self, fields):
        with pytest.raises(ValidationError):
            RunConfig(**fields)


class TestRanking:
    def test_non_dominated_sort(self):
        points = [(1, 5), (2, 2), (3, 3), (5, 1), (4, 4)]
        assert non_dominated_sort(points) == [[0, 1, 3], [2], [4]]

    def test_every_point_in_exactly_one_front(self, rng):
        points = [tuple(p) for p in rng.integers(0, 6, size=(100, 2)).astype(float)]
        fronts = non_dominated_sort(points)
        flat = sorted(i for front in fronts for i in front)
        assert flat == list(range(100))
        for a in fronts[0]:
            for b in fronts[0]:
                assert not point_dominates(points[a], points[b])

    def test_matches_layer_peeling(self, rng):
        for _ in range(50):
            points = [tuple(p) for p in rng.integers(0, 5, size=(20, 2))]
            remaining = set(range(len(points)))
            expected = []
            while remaining:
                layer = sorted(i for i in remaining if not any(point_dominates(points[j], points[i]) for j in remaining))
                expected.append(layer)
                remaining -= set(layer)
            assert non_dominated_sort(points) == expected

    def test_crowding_distance(self):
        distance = crowding_distance([(1, 3), (2, 2), (3, 1)])
        assert math.isinf(distance[0]) and math.isinf(distance[2])
        assert distance[1] == pytest.approx(2.0)

    def test_crowding_small_sets_are_infinite(self):
        assert np.all(np.isinf(crowding_distance([(1, 2), (2, 1)])))


class TestSpea2Helpers:
    def test_fitness_two_points(self):
        fitness = spea2_fitness([(1, 1), (2, 2)], k=1)
        density = 1.0 / (math.sqrt(2) + 2.0)
        assert fitness[0] == pytest.approx(density)
        assert fitness[1] == pytest.approx(1.0 + density)

    def test_non_dominated_below_one(self, rng):
        points = [tuple(p) for p in rng.uniform(0, 10, size=(40, 2))]
        fitness = spea2_fitness(points, k=10)
        first = set(non_dominated_sort(points)[0])
        for i, value in enumerate(fitness):
            assert (value < 1.0) == (i in first)

    def test_archive_points_appended(self):
        fitness = spea2_fitness([(2, 2)], archive_points=[(1, 1)], k=1)
        assert len(fitness) == 2
        assert fitness[0] > 1.0 > fitness[1]

    def test_truncate_drops_most_crowded(self):
        assert spea2_truncate([(0, 0), (1, 1), (1.1, 1.1), (3, 3)], 3) == [0, 2, 3]

    def test_truncate_noop_under_capacity(self):
        assert spea2_truncate([(0, 1), (1, 0)], 5) == [0, 1]

    def test_truncate_removes_interior_of_even_spread(self):
        assert spea2_truncate([(0, 3), (1, 2), (2, 1), (3, 0)], 3) == [0, 2, 3]

    def test_identical_points_are_all_non_dominated(self):
        fitness = spea2_fitness([(1.0, 2.0)] * 4)
        assert np.all(fitness < 1.0)


class TestMoeadHelpers:
    def test_weight_vectors(self):
        weights = generate_weight_vectors(5)
        assert weights[0] == (0.0, 1.0)
        assert weights[-1] == (1.0, 0.0)
        assert all(sum(w) == pytest.approx(1.0) for w in weights)

    def test_neighbourhood_nearest_first(self):
        hoods = neighbourhoods(generate_weight_vectors(5), 3)
        assert hoods[0] == [0, 1, 2]
        assert hoods[2][0] == 2
        assert sorted(hoods[2]) == [1, 2, 3]

    def test_tchebycheff(self):
        assert tchebycheff((3, 4), (0.5, 0.5), (1, 1)) == pytest.approx(1.5)

    def test_tchebycheff_zero_weight_floor(self):
        assert tchebycheff((5, 1), (0.0, 1.0), (0, 1)) == pytest.approx(5e-6)

    def test_weighted_sum(self):
        assert weighted_sum((3, 4), (0.25, 0.75)) == pytest.approx(3.75)

    def _incumbents(self, n=15):
        return [ArchiveEntry(Genome.from_indices([i], n), ObjectiveVector(10, 50.0)) for i in range(5)]

    @pytest.mark.parametrize("limit", [1, 2])
    def test_replacement_limit(self, rng, limit):
        population = self._incumbents()
        better = ArchiveEntry(Genome.from_indices([0, 1], 15), ObjectiveVector(1, 1.0))
        replaced = replace_neighbours(population, better, [0, 1, 2, 3, 4], generate_weight_vectors(5), (1, 1.0), tchebycheff, limit, rng)
        assert replaced == limit
        assert sum(e is better for e in population) == limit

    def test_worse_offspring_replaces_nothing(self, rng):
        population = self._incumbents()
        worse = ArchiveEntry(Genome.from_indices([0, 1, 2], 15), ObjectiveVector(20, 90.0))
        assert replace_neighbours(population, worse, [0, 1, 2, 3, 4], generate_weight_vectors(5), (1, 1.0), tchebycheff, 2, rng) == 0
        assert all(e.objectives.xi == 10 for e in population)


@pytest.mark.parametrize("algorithm", ["nsga2", "spea2", "moead"])
class TestOptimizerRuns:
    def test_archive_is_a_front(self, algorithm, small_model_set, s6_noisy, goal):
        cfg = _small_run(algorithm)
        archive = run_optimizer(cfg, small_model_set, s6_noisy, goal)
        assert len(archive) >= 1
        for a in archive:
            assert a.genome.cardinality >= 1
            for b in archive:
                assert not dominates(a.objectives, b.objectives)

    def test_budget_accounting(self, algorithm, small_model_set, s6_noisy, goal):
        cfg = _small_run(algorithm)
        archive = run_optimizer(cfg, small_model_set, s6_noisy, goal)
        assert archive.evaluations <= cfg.fe_budget + cfg.ps
        assert archive.evaluations >= cfg.fe_budget or archive.generations == cfg.generation_cap
        assert archive.generations >= 1

    def test_same_seed_same_archive(self, algorithm, small_model_set, s6_noisy, goal):
        cfg = _small_run(algorithm)
        first = run_optimizer(cfg, small_model_set, s6_noisy, goal)
        second = run_optimizer(cfg, small_model_set, s6_noisy, goal)
        assert [e.to_dict() for e in first.sorted_entries()] == [e.to_dict() for e in second.sorted_entries()]
        assert first.evaluations == second.evaluations

    def test_generation_callback(self, algorithm, small_model_set, s6_noisy, goal):
        seen = []
        cfg = _small_run(algorithm, crossover="single_point")
        archive = run_optimizer(cfg, small_model_set, s6_noisy, goal, on_generation=seen.append)
        assert [s.generation for s in seen] == list(range(1, archive.generations + 1))
        evaluations = [s.evaluations for s in seen]
        assert evaluations == sorted(evaluations)

    def test_generation_cap_stops_run(self, algorithm, small_model_set, s6_noisy, goal):
        cfg = _small_run(algorithm, fe_budget=10_000, generation_cap=2)
        archive = run_optimizer(cfg, small_model_set, s6_noisy, goal)
        assert archive.generations == 2

    def test_budget_equal_to_population(self, algorithm, small_model_set, s6_noisy, goal):
        archive = run_optimizer(_small_run(algorithm, fe_budget=8), small_model_set, s6_noisy, goal)
        assert (archive.evaluations, archive.generations) == (8, 0)
        assert len(archive) >= 1

    @pytest.mark.parametrize("fe_budget", [8, 200])
    def test_constant_output_front_is_single_size(self, algorithm, fe_budget, small_model_set, goal):
        flat = Dataset(np.linspace(-1, 1, 200), np.full(200, 3.0), 140, "flat")
        archive = run_optimizer(_small_run(algorithm, fe_budget=fe_budget), small_model_set, flat, goal)
        sizes = {e.objectives.xi for e in archive}
        assert len(sizes) == 1
        if fe_budget == 200:
            assert sizes == {1}

    def test_archive_bounded_by_population(self, algorithm, small_model_set, s6_noisy, goal):
        cfg = _small_run(algorithm, archive_size=50)
        archive = run_optimizer(cfg, small_model_set, s6_noisy, goal)
        limit = cfg.archive_size if algorithm == "moead" else cfg.ps
        assert len(archive) <= limit

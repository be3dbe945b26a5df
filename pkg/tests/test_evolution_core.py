import numpy as np
import pytest

from data_generator import system_spec
from evolution_core import (
    ArchiveEntry,
    Genome,
    GoalPoint,
    ObjectiveVector,
    ParetoArchive,
    StructureEvaluator,
    archive_insert,
    decode,
    dominates,
    evaluate,
    flip_bit_mutation,
    goal_penalty,
    non_dominated_filter,
    point_dominates,
    random_genome,
    reproduce,
    single_point_crossover,
    uniform_crossover,
)
from exceptions import ArgumentError
from narx_model import NMSE_SENTINEL, Dataset, ModelSet, Term, generate_model_set


def _entry(bits: str, xi: int, nmse: float, penalty: float = 0.0) -> ArchiveEntry:
    return ArchiveEntry(Genome.from_string(bits), ObjectiveVector(xi, nmse, penalty))


def _random_genome(rng, n):
    return Genome.from_array(rng.integers(0, 2, size=n))


class TestGoalPenalty:
    @pytest.mark.parametrize(
        "xi,error,penalty,j1,j2",
        [
            (5, 10.0, 0.0, 5.0, 10.0),
            (25, 10.0, 50.0, 75.0, 60.0),
            (25, 40.0, 150.0, 175.0, 190.0),
        ],
    )
    def test_examples(self, goal, xi, error, penalty, j1, j2):
        objectives = ObjectiveVector.penalized(xi, error, goal)
        assert goal_penalty(xi, error, goal) == pytest.approx(penalty)
        assert objectives.point == pytest.approx((j1, j2))

    def test_on_the_goal_boundary(self, goal):
        assert goal_penalty(20, 30.0, goal) == 0.0

    def test_penalty_non_negative_and_zero_inside(self, goal, rng):
        for _ in range(100):
            xi = int(rng.integers(1, 60))
            error = float(rng.uniform(0, 120))
            penalty = goal_penalty(xi, error, goal)
            assert penalty >= 0
            if xi <= goal.xi_lim and error <= goal.nmse_lim:
                assert penalty == 0

    def test_invalid_goal(self):
        with pytest.raises(ArgumentError):
            GoalPoint(0, 30.0)
        with pytest.raises(ArgumentError):
            GoalPoint(20, 0.0)


class TestDominance:
    def test_examples(self):
        assert point_dominates((1, 1), (2, 2))
        assert not point_dominates((1, 2), (2, 1))
        assert not point_dominates((2, 1), (1, 2))
        assert not point_dominates((1, 1), (1, 1))
        assert point_dominates((1, 2), (1, 3))

    def test_irreflexive_antisymmetric_transitive(self, rng):
        points = [tuple(rng.integers(0, 4, size=2).astype(float)) for _ in range(100)]
        for a in points:
            assert not point_dominates(a, a)
        for a in points[:30]:
            for b in points[:30]:
                assert not (point_dominates(a, b) and point_dominates(b, a))
                for c in points[:30]:
                    if point_dominates(a, b) and point_dominates(b, c):
                        assert point_dominates(a, c)

    def test_objective_vectors_use_penalised_point(self, goal):
        inside = ObjectiveVector.penalized(5, 10.0, goal)
        outside = ObjectiveVector.penalized(25, 5.0, goal)
        assert dominates(inside, outside)


class TestGenome:
    def test_string_round_trip(self):
        genome = Genome.from_string("10110")
        assert str(genome) == "10110"
        assert genome.cardinality == 3
        assert genome.indices() == [0, 2, 3]

    def test_rejects_non_binary(self):
        with pytest.raises(ArgumentError):
            Genome.from_string("1021")

    def test_decode_selects_flagged_terms(self):
        model_set = ModelSet.from_terms(
            Term.parse(t) for t in ["y(k-1)", "u(k-2)", "y(k-3)", "y(k-2)*u(k-2)", "u(k-3)^3"]
        )
        terms = decode(Genome.from_string("10110"), model_set)
        assert [str(t) for t in terms] == ["y(k-1)", "y(k-3)", "y(k-2)*u(k-2)"]

    def test_decode_length_mismatch(self, small_model_set):
        with pytest.raises(ArgumentError):
            decode(Genome.from_string("101"), small_model_set)

    def test_random_genome_cardinality(self, rng):
        for _ in range(100):
            genome = random_genome(165, 10, rng)
            assert genome.length == 165
            assert 1 <= genome.cardinality <= 10


class TestCrossover:
    def test_uniform_without_crossover_copies(self, rng):
        p, q = Genome.from_string("1100110"), Genome.from_string("0011001")
        assert uniform_crossover(p, q, 0.0, rng) == (p, q)

    def test_uniform_identical_parents(self, rng):
        p = Genome.from_string("1011001")
        a, b = uniform_crossover(p, p, 1.0, rng)
        assert a == p and b == p

    def test_uniform_preserves_locus_multiset(self, rng):
        for _ in range(100):
            p, q = _random_genome(rng, 40), _random_genome(rng, 40)
            a, b = uniform_crossover(p, q, 1.0, rng)
            np.testing.assert_array_equal(
                a.as_array().astype(int) + b.as_array().astype(int),
                p.as_array().astype(int) + q.as_array().astype(int),
            )
            assert np.all((a.as_array() == p.as_array()) | (a.as_array() == q.as_array()))

    def test_single_point_last_cut_swaps_last_bit(self, rng):
        p, q = Genome.from_string("11111"), Genome.from_string("00000")
        a, b = single_point_crossover(p, q, 1.0, rng, cut=4)
        assert str(a) == "11110"
        assert str(b) == "00001"

    def test_single_point_without_crossover_copies(self, rng):
        p, q = Genome.from_string("11111"), Genome.from_string("00000")
        assert single_point_crossover(p, q, 0.0, rng) == (p, q)

    def test_single_point_children_are_prefix_suffix(self, rng):
        for _ in range(100):
            p, q = _random_genome(rng, 30), _random_genome(rng, 30)
            a, b = single_point_crossover(p, q, 1.0, rng)
            cuts = [c for c in range(1, 30) if a.bits == p.bits[:c] + q.bits[c:] and b.bits == q.bits[:c] + p.bits[c:]]
            assert cuts

    def test_single_point_bad_cut(self, rng):
        with pytest.raises(ArgumentError):
            single_point_crossover(Genome.from_string("1100"), Genome.from_string("0011"), 1.0, rng, cut=4)

    def test_length_mismatch(self, rng):
        with pytest.raises(ArgumentError):
            uniform_crossover(Genome.from_string("11"), Genome.from_string("110"), 1.0, rng)


class TestMutation:
    def test_zero_rate_is_identity(self, rng):
        genome = Genome.from_string("0100110")
        assert flip_bit_mutation(genome, 0.0, rng) == genome

    def test_full_rate_complements(self, rng):
        genome = Genome.from_string("0100110")
        assert str(flip_bit_mutation(genome, 1.0, rng)) == "1011001"

    def test_complement_of_all_ones_is_repaired(self, rng):
        mutated = flip_bit_mutation(Genome.from_string("1111"), 1.0, rng)
        assert mutated.cardinality == 1

    def test_flip_count_within_three_sigma(self, rng):
        n, p_m, trials = 165, 0.05, 200
        genome = Genome.from_array(np.ones(n))
        flips = sum(n - flip_bit_mutation(genome, p_m, rng).cardinality for _ in range(trials))
        expected = n * p_m * trials
        sigma = np.sqrt(n * p_m * (1 - p_m) * trials)
        assert abs(flips - expected) <= 3 * sigma

    def test_reproduce_never_returns_empty(self, rng):
        for _ in range(100):
            p, q = random_genome(15, 3, rng), random_genome(15, 3, rng)
            for child in reproduce(p, q, 0.9, 0.2, "uniform", rng):
                assert child.cardinality >= 1


class TestArchive:
    def test_dominated_entry_rejected(self):
        archive = ParetoArchive()
        assert archive.insert(_entry("100", 1, 1.0))
        assert not archive.insert(_entry("010", 2, 2.0))
        assert len(archive) == 1

    def test_dominating_entry_evicts(self):
        archive = ParetoArchive()
        archive.insert(_entry("100", 2, 2.0))
        archive.insert(_entry("010", 3, 1.0))
        archive.insert(_entry("001", 1, 1.0))
        assert [str(e.genome) for e in archive] == ["001"]
        assert Genome.from_string("100") not in archive

    def test_equal_points_distinct_genomes_both_kept(self):
        archive = ParetoArchive()
        archive.insert(_entry("100", 1, 1.0))
        archive.insert(_entry("010", 1, 1.0))
        assert len(archive) == 2

    def test_reinsert_is_idempotent(self):
        archive = ParetoArchive()
        entry = _entry("110", 2, 1.0)
        archive_insert(archive, entry)
        before = list(archive)
        assert not archive.insert(entry)
        assert list(archive) == before

    def test_stream_matches_brute_force(self, rng):
        for _ in range(20):
            stream = []
            for i in range(100):
                bits = format(i, "07b")
                stream.append(_entry(bits, int(rng.integers(1, 10)), float(rng.integers(0, 10))))
            archive = ParetoArchive()
            for entry in stream:
                archive_insert(archive, entry)
            expected = {
                e.genome for e in stream if not any(point_dominates(o.objectives.point, e.objectives.point) for o in stream)
            }
            assert {e.genome for e in archive} == expected
            assert {e.genome for e in non_dominated_filter(stream)} == expected

    def test_mutually_non_dominated(self, rng):
        archive = ParetoArchive()
        for i in range(100):
            archive.insert(_entry(format(i, "07b"), int(rng.integers(1, 20)), float(rng.uniform(0, 50))))
        for a in archive:
            for b in archive:
                assert not dominates(a.objectives, b.objectives)

    def test_pooled_keeps_global_front(self):
        first = ParetoArchive.from_entries([_entry("100", 1, 5.0), _entry("110", 2, 3.0)])
        second = ParetoArchive.from_entries([_entry("111", 3, 1.0), _entry("011", 2, 4.0)])
        first.evaluations, second.evaluations = 10, 12
        pooled = ParetoArchive.pooled([first, second])
        assert sorted(str(e.genome) for e in pooled) == ["100", "110", "111"]
        assert pooled.evaluations == 22

    def test_entry_dict_round_trip(self):
        entry = _entry("1010", 2, 35.0, 50.0)
        assert ArchiveEntry.from_dict(entry.to_dict()) == entry


class TestEvaluation:
    def test_true_structure_on_clean_data(self, s6_clean, goal):
        model_set = generate_model_set(2, 2, 2)
        truth = system_spec("S6").true_structure()
        genome = Genome.from_indices([model_set.index_of(t) for t in truth], model_set.size)
        objectives = evaluate(genome, model_set, s6_clean, goal)
        assert objectives.xi == 4
        assert objectives.nmse < 1e-3
        assert objectives.penalty == 0.0

    def test_empty_genome(self, s6_clean, goal, small_model_set):
        with pytest.raises(ArgumentError):
            evaluate(Genome(bytes(small_model_set.size)), small_model_set, s6_clean, goal)

    def test_unstable_structure_gets_sentinel(self, goal):
        # the fitted growth rate carries the free run past the divergence bound
        n = 200
        y = 1.2 ** np.arange(n)
        data = Dataset(np.zeros(n), y, 140)
        model_set = ModelSet.from_terms([Term.parse("y(k-1)"), Term.parse("y(k-1)^3")])
        objectives = evaluate(Genome.from_string("10"), model_set, data, goal)
        assert objectives.nmse == NMSE_SENTINEL
        assert objectives.penalty > 0

    def test_evaluator_caches(self, s6_noisy, goal, small_model_set, rng):
        evaluator = StructureEvaluator(small_model_set, s6_noisy, goal)
        genome = random_genome(small_model_set.size, 4, rng)
        first = evaluator(genome)
        second = evaluator(genome)
        assert first == second
        assert evaluator.evaluations == 1
        assert evaluator.hits == 1
        assert evaluator.is_cached(genome)

    def test_evaluation_is_deterministic(self, s6_noisy, goal, small_model_set, rng):
        genome = random_genome(small_model_set.size, 5, rng)
        assert evaluate(genome, small_model_set, s6_noisy, goal) == evaluate(genome, small_model_set, s6_noisy, goal)

import numpy as np
import pytest

from decision_maker import PreferenceSpec, WeightVector, mmd_rank, mtd_rank, preference_weights
from evolution_core import ArchiveEntry, Genome, ObjectiveVector
from exceptions import ArgumentError


def _front(*points):
    return [ObjectiveVector(int(xi), float(e)) for xi, e in points]


def _random_front(rng, n=12):
    # strictly decreasing error along increasing size: mutually non-dominated
    sizes = sorted(rng.choice(np.arange(1, 40), size=n, replace=False))
    errors = sorted(rng.uniform(0.1, 60.0, size=n), reverse=True)
    return [
        ArchiveEntry(Genome.from_indices([i], 64), ObjectiveVector(int(x), float(e)))
        for i, (x, e) in enumerate(zip(sizes, errors))
    ]


class TestPreferenceWeights:
    def test_two_objective_example(self):
        weights = preference_weights(PreferenceSpec((1, 2), 5))
        assert weights.raw == pytest.approx((2.2361, 0.4472), abs=1e-4)
        assert weights.w == pytest.approx((0.8333, 0.1667), abs=1e-4)

    def test_reversed_ranks_mirror(self):
        weights = preference_weights(PreferenceSpec((2, 1), 5))
        assert weights.w == pytest.approx((0.1667, 0.8333), abs=1e-4)

    def test_unit_intensity_is_neutral(self):
        assert preference_weights(PreferenceSpec((1, 2), 1)).w == pytest.approx((0.5, 0.5))

    def test_three_objectives(self):
        weights = preference_weights(PreferenceSpec((1, 2, 3), 9))
        assert sum(weights.w) == pytest.approx(1.0)
        assert weights.w[0] > weights.w[1] > weights.w[2]

    @pytest.mark.parametrize("ranks,intensity", [((1, 1), 5), ((0, 1), 5), ((1, 2), 10), ((1, 2), 0.5)])
    def test_invalid_spec(self, ranks, intensity):
        with pytest.raises(ArgumentError):
            PreferenceSpec(ranks, intensity)

    def test_rank_count_mismatch(self):
        with pytest.raises(ArgumentError):
            preference_weights(PreferenceSpec((1, 2)), m=3)

    def test_weight_vector_must_sum_to_one(self):
        with pytest.raises(ArgumentError):
            WeightVector((0.7, 0.7))


class TestMMD:
    def test_knee_first(self):
        ranked = mmd_rank(_front((1, 10.0), (3, 2.0), (10, 1.0)))
        assert [r.objectives.xi for r in ranked.entries] == [3, 1, 10]
        assert ranked.entries[0].score == pytest.approx(2 / 9 + 1 / 9)

    def test_equal_distances_break_by_size(self):
        ranked = mmd_rank(_front((3, 1.0), (1, 3.0), (2, 2.0)))
        assert [r.score for r in ranked.entries] == pytest.approx([1.0, 1.0, 1.0])
        assert [r.objectives.xi for r in ranked.entries] == [1, 2, 3]

    def test_singleton(self):
        ranked = mmd_rank(_front((4, 2.5)))
        assert ranked.entries[0].score == 0.0

    def test_dominated_entries_dropped(self):
        ranked = mmd_rank(_front((1, 5.0), (2, 6.0), (3, 1.0)))
        assert sorted(r.objectives.xi for r in ranked.entries) == [1, 3]

    def test_empty(self):
        with pytest.raises(ArgumentError):
            mmd_rank([])

    def test_scores_bounded_and_sorted(self, rng):
        for _ in range(100):
            ranked = mmd_rank(_random_front(rng))
            scores = [r.score for r in ranked.entries]
            assert scores == sorted(scores)
            assert all(0.0 <= s <= 2.0 for s in scores)

    def test_frame(self):
        frame = mmd_rank(_front((1, 10.0), (3, 2.0))).to_frame()
        assert list(frame.columns) == ["rank", "xi", "nmse", "mmd_d", "bits"]
        assert frame["rank"].tolist() == [1, 2]

    def test_order_survives_affine_rescale(self):
        points = [(1, 40.0), (3, 15.0), (5, 2.0), (6, 1.9), (7, 1.8), (12, 1.7)]
        plain = mmd_rank(_front(*points))
        rescaled = mmd_rank(_front(*[(xi, 3 * e + 7) for xi, e in points]))
        assert [r.objectives.xi for r in rescaled.entries] == [r.objectives.xi for r in plain.entries]
        assert [r.score for r in rescaled.entries] == pytest.approx([r.score for r in plain.entries])

    @pytest.mark.parametrize(
        "extra",
        [
            [(1, 35.0), (2, 12.0), (3, 4.0), (4, 0.9), (9, 2e-4), (12, 2.16e-6)],
            [(4, 0.9), (20, 2.16e-6)],
        ],
    )
    def test_duffing_parsimony_order(self, extra):
        duffing = [(5, 1.98e-2), (6, 1.62e-2), (7, 3.97e-4)]
        order = [r.objectives.xi for r in mmd_rank(_front(*(duffing + extra))).entries]
        assert order.index(5) < order.index(6) < order.index(7)


class TestMTD:
    def test_middle_point_wins(self):
        weights = preference_weights(PreferenceSpec((1, 2), 1))
        ranked = mtd_rank(_front((1, 3.0), (2, 2.0), (3, 1.0)), weights)
        assert ranked.entries[0].objectives.xi == 2
        assert ranked.entries[0].score == pytest.approx(0.7071, abs=1e-4)
        assert [r.score for r in ranked.entries[1:]] == [0.0, 0.0]

    def test_preference_favours_small_models(self):
        front = _front((1, 30.0), (2, 20.0), (3, 10.0), (4, 5.0), (5, 1.0))
        size_first = mtd_rank(front, preference_weights(PreferenceSpec((1, 2), 9)))
        error_first = mtd_rank(front, preference_weights(PreferenceSpec((2, 1), 9)))
        assert size_first.entries[0].objectives.xi < error_first.entries[0].objectives.xi

    def test_needs_two_structures(self):
        with pytest.raises(ArgumentError):
            mtd_rank(_front((1, 1.0)), WeightVector((0.5, 0.5)))

    def test_weight_count_mismatch(self):
        with pytest.raises(ArgumentError):
            mtd_rank(_front((1, 3.0), (2, 1.0)), WeightVector((0.2, 0.3, 0.5)))

    def test_scores_in_unit_interval(self, rng):
        weights = preference_weights(PreferenceSpec((1, 2), 5))
        for _ in range(100):
            ranked = mtd_rank(_random_front(rng), weights)
            scores = [r.score for r in ranked.entries]
            assert scores == sorted(scores, reverse=True)
            assert all(0.0 <= s <= 1.0 for s in scores)

    def test_order_survives_monotone_transform(self):
        weights = preference_weights(PreferenceSpec((1, 2), 5))
        points = [(1, 40.0), (3, 15.0), (5, 2.0), (6, 1.9), (7, 1.8), (12, 1.7)]
        plain = mtd_rank(_front(*points), weights)
        cubed = mtd_rank(_front(*[(xi, e ** 3) for xi, e in points]), weights)
        assert [r.objectives.xi for r in cubed.entries] == [r.objectives.xi for r in plain.entries]
        assert [r.score for r in cubed.entries] == [r.score for r in plain.entries]

    def test_frame_column(self):
        weights = preference_weights(PreferenceSpec((1, 2), 5))
        frame = mtd_rank(_front((1, 3.0), (2, 1.0)), weights).to_frame()
        assert "mtd_r" in frame.columns

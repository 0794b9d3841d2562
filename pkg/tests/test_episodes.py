import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fsb.episodes import AccuracySummary, EpisodeSpec, sample_episode, summarize
from fsb.errors import ClassTooSmall, EmptyInput, NotEnoughClasses
from fsb.synthetic import make_gaussian_library


def small_library(classes=3, rows_per_class=20, seed=0):
    lib, _ = make_gaussian_library(
        classes=classes, rows_per_class=rows_per_class, member_dims=[8],
        separation=5.0, seed=seed,
    )
    return lib


class TestSampling:
    def test_structural_postconditions(self):
        lib = small_library(classes=3, rows_per_class=20)
        spec = EpisodeSpec(ways=2, shots=1, queries=15, episodes=1, base_seed=4)
        ep = sample_episode(lib, spec, 0)
        assert len(ep.class_ids) == 2
        assert ep.support_rows.shape == (2, 1)
        assert ep.query_rows.shape == (2, 15)
        assert not set(ep.flat_support()) & set(ep.flat_query())

    def test_class_too_small(self):
        lib = small_library(classes=3, rows_per_class=6)
        spec = EpisodeSpec(ways=2, shots=5, queries=15, episodes=1)
        with pytest.raises(ClassTooSmall) as err:
            sample_episode(lib, spec, 0)
        assert err.value.have == 6
        assert err.value.need == 20

    def test_not_enough_classes(self):
        lib = small_library(classes=3)
        with pytest.raises(NotEnoughClasses):
            sample_episode(lib, EpisodeSpec(ways=4, shots=1), 0)

    def test_determinism(self):
        lib = small_library(classes=6)
        spec = EpisodeSpec(ways=3, shots=2, queries=4, episodes=10, base_seed=77)
        a = sample_episode(lib, spec, 5)
        b = sample_episode(lib, spec, 5)
        assert a.class_ids == b.class_ids
        np.testing.assert_array_equal(a.support_rows, b.support_rows)
        np.testing.assert_array_equal(a.query_rows, b.query_rows)

    def test_sequence_independent_of_evaluation_order(self):
        lib = small_library(classes=6)
        spec = EpisodeSpec(ways=3, shots=2, queries=4, episodes=8, base_seed=1)
        forward = [sample_episode(lib, spec, i) for i in range(8)]
        backward = [sample_episode(lib, spec, i) for i in reversed(range(8))]
        for f, b in zip(forward, reversed(backward)):
            assert f.class_ids == b.class_ids
            np.testing.assert_array_equal(f.query_rows, b.query_rows)

    @given(
        ways=st.integers(2, 5),
        shots=st.integers(1, 3),
        queries=st.integers(1, 4),
        index=st.integers(0, 500),
        seed=st.integers(0, 2**64 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_episode_invariants(self, ways, shots, queries, index, seed):
        lib = small_library(classes=6, rows_per_class=10)
        spec = EpisodeSpec(
            ways=ways, shots=shots, queries=queries, episodes=1, base_seed=seed
        )
        ep = sample_episode(lib, spec, index)
        support = set(ep.flat_support())
        query = set(ep.flat_query())
        assert len(ep.class_ids) == len(set(ep.class_ids)) == ways
        assert not support & query
        assert len(support) == ways * shots
        assert len(query) == ways * queries
        for c, class_id in enumerate(ep.class_ids):
            rows = set(lib.class_index[class_id])
            assert set(ep.support_rows[c]) <= rows
            assert set(ep.query_rows[c]) <= rows

    def test_class_coverage_is_uniform(self):
        # chi-square sanity check on how often each class is selected
        lib, _ = make_gaussian_library(
            classes=10, rows_per_class=6, member_dims=[16], separation=5.0, seed=0
        )
        spec = EpisodeSpec(ways=3, shots=1, queries=2, episodes=2000, base_seed=13)
        counts = np.zeros(10)
        for i in range(spec.episodes):
            for class_id in sample_episode(lib, spec, i).class_ids:
                counts[class_id] += 1
        _, p = stats.chisquare(counts)
        assert p > 1e-3


class TestSummarize:
    def test_zero_variance(self):
        s = summarize([0.8, 0.8, 0.8])
        assert s.mean == pytest.approx(0.8)
        assert s.ci95 == 0.0

    def test_two_point_closed_form(self):
        s = summarize([0.0, 1.0])
        assert s.mean == 0.5
        expected = 1.96 * (1 / np.sqrt(2)) / np.sqrt(2)
        assert abs(s.ci95 - expected) < 1e-12

    def test_single_episode_has_no_interval(self):
        assert summarize([0.4]).ci95 == 0.0

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            summarize([])

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(0)
        accs = rng.binomial(15, 0.5, size=600) / 15
        s = summarize(accs)
        expected = 1.96 * np.std(accs, ddof=1) / np.sqrt(600)
        assert s.ci95 == pytest.approx(expected, rel=1e-12)
        assert s.mean == pytest.approx(accs.mean(), rel=1e-12)

    def test_summary_carries_per_episode_values(self):
        s = summarize([0.5, 1.0])
        assert isinstance(s, AccuracySummary)
        assert s.per_episode == (0.5, 1.0)


class TestSpecValidation:
    def test_rejects_one_way(self):
        with pytest.raises(ValueError):
            EpisodeSpec(ways=1, shots=1)

    def test_rejects_zero_counts(self):
        with pytest.raises(ValueError):
            EpisodeSpec(ways=2, shots=0)
        with pytest.raises(ValueError):
            EpisodeSpec(ways=2, shots=1, queries=0)
        with pytest.raises(ValueError):
            EpisodeSpec(ways=2, shots=1, episodes=0)

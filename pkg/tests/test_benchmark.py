import numpy as np

from fsb.benchmark import benchmark_report, benchmark_row, run_benchmark
from fsb.classifier import TrainConfig
from fsb.ensembles import MethodSpec
from fsb.episodes import EpisodeSpec
from fsb.reporting import emit

FAST = TrainConfig(learning_rate=1e-2, epochs=40, hidden_size=0, l2_lambda=0.1)


def test_worker_count_does_not_change_results(separable_lib):
    lib, _ = separable_lib
    spec = EpisodeSpec(ways=3, shots=1, queries=5, episodes=24, base_seed=5)
    serial = run_benchmark(lib, spec, MethodSpec("full_library"), FAST, workers=1)
    threaded = run_benchmark(lib, spec, MethodSpec("full_library"), FAST, workers=4)
    assert serial.per_episode == threaded.per_episode
    assert serial.mean == threaded.mean
    assert serial.ci95 == threaded.ci95


def test_row_carries_run_identity(separable_lib):
    lib, _ = separable_lib
    spec = EpisodeSpec(ways=3, shots=1, queries=5, episodes=4, base_seed=11)
    row = benchmark_row(lib, spec, MethodSpec("soft_ensemble"), FAST)
    assert row.dataset == "synthetic"
    assert row.method == "soft_ensemble"
    assert (row.ways, row.shots, row.episodes, row.seed) == (3, 1, 4, 11)
    assert 0.0 <= row.mean <= 1.0
    assert len(row.config_fingerprint) == 12


def test_report_is_reproducible(separable_lib):
    lib, _ = separable_lib
    spec = EpisodeSpec(ways=3, shots=1, queries=5, episodes=6, base_seed=2)
    a = emit(benchmark_report(lib, spec, MethodSpec("full_library"), FAST), "csv")
    b = emit(benchmark_report(lib, spec, MethodSpec("full_library"), FAST), "csv")
    assert a == b


def test_per_episode_accuracies_are_episode_ordered(separable_lib):
    lib, _ = separable_lib
    spec = EpisodeSpec(ways=3, shots=1, queries=5, episodes=10, base_seed=3)
    summary = run_benchmark(lib, spec, MethodSpec("full_library"), FAST, workers=3)
    from fsb.benchmark import run_episode

    expected = [
        run_episode(lib, spec, i, MethodSpec("full_library"), FAST) for i in range(10)
    ]
    assert list(summary.per_episode) == expected
    assert np.isclose(summary.mean, np.mean(expected))

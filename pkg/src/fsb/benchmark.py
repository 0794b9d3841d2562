"""Episodic benchmark runner.

Episode i is a pure function of (library, spec, i) and heads are trained
from seeds derived per episode, so evaluation parallelizes freely; results
are collected in episode order before summarizing, which makes the output
independent of worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .classifier import TrainConfig
from .ensembles import MethodSpec, evaluate_method
from .episodes import AccuracySummary, EpisodeSpec, sample_episode, summarize
from .feature_store import FeatureLibrary
from .reporting import BenchmarkReport, ReportRow, config_fingerprint


def run_episode(
    lib: FeatureLibrary,
    spec: EpisodeSpec,
    index: int,
    method: MethodSpec,
    config: TrainConfig,
) -> float:
    episode = sample_episode(lib, spec, index)
    return evaluate_method(lib, episode, method, config)


def run_benchmark(
    lib: FeatureLibrary,
    spec: EpisodeSpec,
    method: MethodSpec,
    config: TrainConfig,
    workers: int = 1,
) -> AccuracySummary:
    """Evaluate the method over all episodes of the spec."""
    indices = range(spec.episodes)
    if workers <= 1:
        accs = [run_episode(lib, spec, i, method, config) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            accs = list(
                pool.map(lambda i: run_episode(lib, spec, i, method, config), indices)
            )
    return summarize(accs)


def benchmark_row(
    lib: FeatureLibrary,
    spec: EpisodeSpec,
    method: MethodSpec,
    config: TrainConfig,
    workers: int = 1,
) -> ReportRow:
    summary = run_benchmark(lib, spec, method, config, workers=workers)
    return ReportRow(
        dataset=lib.dataset_name,
        method=method.label(),
        ways=spec.ways,
        shots=spec.shots,
        mean=summary.mean,
        ci95=summary.ci95,
        episodes=spec.episodes,
        seed=spec.base_seed,
        config_fingerprint=config_fingerprint(config, method),
    )


def benchmark_report(
    lib: FeatureLibrary,
    spec: EpisodeSpec,
    method: MethodSpec,
    config: TrainConfig,
    workers: int = 1,
) -> BenchmarkReport:
    return BenchmarkReport(rows=(benchmark_row(lib, spec, method, config, workers),))

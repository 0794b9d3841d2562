"""Command-line interface.

    fsb validate  <manifest>                 check a feature library on disk
    fsb sample    --manifest ... --dump ...  audit-dump sampled episodes
    fsb bench     --manifest ... --out ...   run the episodic benchmark
    fsb tune      --validation ... --out ... grid-search a tuned profile
    fsb analyze   correlation|jaccard|shares cross-dataset feature analyses
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .analysis import (
    ProbeConfig,
    correlation_experiment,
    cross_dataset_heatmaps,
)
from .benchmark import benchmark_report
from .classifier import TrainConfig
from .ensembles import MethodSpec
from .episodes import EpisodeSpec, sample_episode
from .errors import FsbError
from .feature_store import load_library
from .reporting import emit
from .tuning import (
    SearchGrid,
    TunedProfile,
    default_profile,
    known_methods,
    tune_profile,
)


def _parse_method(text: str) -> MethodSpec:
    if text.startswith("single:"):
        return MethodSpec("single", members=(text.split(":", 1)[1],))
    aliases = {
        "full_library": "full_library",
        "hard": "hard_ensemble",
        "soft": "soft_ensemble",
        "hard_ensemble": "hard_ensemble",
        "soft_ensemble": "soft_ensemble",
    }
    if text not in aliases:
        raise click.BadParameter(
            f"method must be full_library|hard|soft|single:<name>, got {text!r}"
        )
    return MethodSpec(aliases[text])


def _resolve_config(method: str, ways: int, profile_path, lr, epochs, hidden, l2) -> TrainConfig:
    """Explicit flags win; then a profile file; then published defaults."""
    base = None
    if profile_path is not None:
        base = TunedProfile.from_json(Path(profile_path).read_text()).config_for(ways)
    else:
        lookup = method.split(":", 1)[1] if method.startswith("single:") else method
        try:
            base = default_profile(lookup).config_for(ways)
        except (KeyError, FsbError):
            base = None
    if base is None:
        base = TrainConfig()
    return TrainConfig(
        learning_rate=lr if lr is not None else base.learning_rate,
        epochs=epochs if epochs is not None else base.epochs,
        hidden_size=hidden if hidden is not None else base.hidden_size,
        l2_lambda=l2 if l2 is not None else base.l2_lambda,
    )


@click.group()
def main():
    """Few-shot benchmark over libraries of frozen feature extractors."""


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
def validate(manifest):
    """Load MANIFEST, verify all invariants and print a summary."""
    try:
        lib, layout = load_library(manifest)
    except FsbError as err:
        click.echo(f"INVALID: {err}", err=True)
        sys.exit(1)
    click.echo(f"dataset:   {lib.dataset_name}")
    click.echo(f"rows:      {lib.rows}")
    click.echo(f"classes:   {len(lib.class_ids)}")
    click.echo(f"members:   {len(lib.members)}")
    for name, offset, length in layout.blocks:
        click.echo(f"  {name}: dim {length} at offset {offset}")
    click.echo(f"total_dim: {lib.total_dim}")
    click.echo("OK")


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--ways", default=5, show_default=True)
@click.option("--shots", default=1, show_default=True)
@click.option("--queries", default=15, show_default=True)
@click.option("--episodes", default=600, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--dump", required=True, type=click.Path(), help="episodes.jsonl output")
def sample(manifest, ways, shots, queries, episodes, seed, dump):
    """Write one JSON object per sampled episode for audit."""
    lib, _ = load_library(manifest)
    spec = EpisodeSpec(
        ways=ways, shots=shots, queries=queries, episodes=episodes, base_seed=seed
    )
    with open(dump, "w", encoding="utf-8") as f:
        for i in range(spec.episodes):
            ep = sample_episode(lib, spec, i)
            f.write(
                json.dumps(
                    {
                        "episode_index": ep.episode_index,
                        "key": ep.key,
                        "class_ids": list(ep.class_ids),
                        "support_rows": ep.support_rows.tolist(),
                        "query_rows": ep.query_rows.tolist(),
                    }
                )
                + "\n"
            )
    click.echo(f"wrote {spec.episodes} episodes to {dump}")


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--method", default="full_library", show_default=True,
              help="full_library|hard|soft|single:<member>")
@click.option("--ways", default=5, show_default=True)
@click.option("--shots", default=5, show_default=True)
@click.option("--queries", default=15, show_default=True)
@click.option("--episodes", default=600, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--profile", type=click.Path(exists=True), help="tuned profile JSON")
@click.option("--lr", type=float, help="override learning rate")
@click.option("--epochs", type=int, help="override epoch count")
@click.option("--hidden", type=int, help="override hidden size (0 = linear)")
@click.option("--l2", type=float, help="override penalty weight")
@click.option("--out", required=True, type=click.Path(), help="report CSV path")
@click.option("--markdown", type=click.Path(), help="also write a Markdown table")
def bench(manifest, method, ways, shots, queries, episodes, seed, workers,
          profile, lr, epochs, hidden, l2, out, markdown):
    """Run the episodic benchmark and write a report."""
    lib, _ = load_library(manifest)
    method_spec = _parse_method(method)
    config = _resolve_config(method, ways, profile, lr, epochs, hidden, l2)
    spec = EpisodeSpec(
        ways=ways, shots=shots, queries=queries, episodes=episodes, base_seed=seed
    )
    report = benchmark_report(lib, spec, method_spec, config, workers=workers)
    Path(out).write_text(emit(report, "csv"), encoding="utf-8")
    if markdown:
        Path(markdown).write_text(emit(report, "markdown"), encoding="utf-8")
    row = report.rows[0]
    click.echo(
        f"{row.dataset} {row.method} {row.ways}-way {row.shots}-shot: "
        f"{100 * row.mean:.1f} ± {100 * row.ci95:.1f}"
    )


@main.command()
@click.option("--validation", required=True, type=click.Path(exists=True),
              help="validation manifest; must not be a test dataset")
@click.option("--method", default="full_library", show_default=True)
@click.option("--ways", default="5,20,40", show_default=True)
@click.option("--episodes", default=600, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--test-datasets", default="", help="comma-separated test dataset names")
@click.option("--lr-grid", default=None, help="comma-separated learning rates")
@click.option("--epochs-grid", default=None, help="comma-separated epoch counts")
@click.option("--hidden-grid", default=None, help="comma-separated hidden sizes")
@click.option("--l2-grid", default=None, help="comma-separated penalty weights")
@click.option("--out", required=True, type=click.Path(), help="profile JSON path")
def tune(validation, method, ways, episodes, seed, workers, test_datasets,
         lr_grid, epochs_grid, hidden_grid, l2_grid, out):
    """Grid-search hyperparameters on the validation library."""
    lib, _ = load_library(validation)
    grid = SearchGrid(
        **{
            key: tuple(cast(v) for v in value.split(","))
            for key, cast, value in (
                ("learning_rates", float, lr_grid),
                ("epoch_counts", int, epochs_grid),
                ("hidden_sizes", int, hidden_grid),
                ("l2_lambdas", float, l2_grid),
            )
            if value is not None
        }
    )
    profile = tune_profile(
        lib,
        _parse_method(method),
        [int(w) for w in ways.split(",")],
        grid,
        episodes,
        seed,
        test_dataset_names=[s for s in test_datasets.split(",") if s],
        workers=workers,
    )
    Path(out).write_text(profile.to_json(), encoding="utf-8")
    click.echo(f"wrote tuned profile to {out}")


@main.group()
def analyze():
    """Feature-importance analyses; outputs CSV files with header rows."""


def _load_libraries(manifests):
    libs = []
    layout = None
    for m in manifests:
        lib, lay = load_library(m)
        libs.append(lib)
        layout = layout or lay
    return libs, layout


_PROBE = ProbeConfig()


@analyze.command()
@click.option("--manifests", required=True, multiple=True, type=click.Path(exists=True))
@click.option("--ways", default=40, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=_PROBE.epochs, show_default=True)
@click.option("--lr", default=_PROBE.learning_rate, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="output directory")
def correlation(manifests, ways, seed, epochs, lr, out):
    """One-shot vs full-data weight correlation per dataset."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    libs, _ = _load_libraries(manifests)
    lines = ["dataset,pearson_r"]
    for lib in libs:
        r = correlation_experiment(
            lib, ways, seed, config=ProbeConfig(learning_rate=lr, epochs=epochs)
        )
        lines.append(f"{lib.dataset_name},{r!r}")
        click.echo(f"{lib.dataset_name}: r = {r:.3f}")
    (out_dir / "correlation.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _heatmaps(manifests, ways, tasks, seed, epochs, lr):
    libs, layout = _load_libraries(manifests)
    config = ProbeConfig(learning_rate=lr, epochs=epochs)
    return cross_dataset_heatmaps(libs, layout, ways, tasks, seed, config), layout


@analyze.command()
@click.option("--manifests", required=True, multiple=True, type=click.Path(exists=True))
@click.option("--ways", default=40, show_default=True)
@click.option("--tasks", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=_PROBE.epochs, show_default=True)
@click.option("--lr", default=_PROBE.learning_rate, show_default=True)
@click.option("--out", required=True, type=click.Path())
def jaccard(manifests, ways, tasks, seed, epochs, lr, out):
    """Pairwise mean Jaccard overlap of top-20% feature sets."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (names, matrix, _), _ = _heatmaps(manifests, ways, tasks, seed, epochs, lr)
    lines = ["dataset," + ",".join(names)]
    for name, row in zip(names, matrix):
        lines.append(name + "," + ",".join(repr(float(v)) for v in row))
    (out_dir / "jaccard.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"wrote {out_dir / 'jaccard.csv'}")


@analyze.command()
@click.option("--manifests", required=True, multiple=True, type=click.Path(exists=True))
@click.option("--ways", default=40, show_default=True)
@click.option("--tasks", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=_PROBE.epochs, show_default=True)
@click.option("--lr", default=_PROBE.learning_rate, show_default=True)
@click.option("--out", required=True, type=click.Path())
def shares(manifests, ways, tasks, seed, epochs, lr, out):
    """Mean fraction of each extractor's features in the top 20%."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (names, _, per_dataset), layout = _heatmaps(manifests, ways, tasks, seed, epochs, lr)
    extractors = [b[0] for b in layout.blocks]
    lines = ["dataset," + ",".join(extractors)]
    for name in names:
        row = per_dataset[name]
        lines.append(name + "," + ",".join(repr(row[e]) for e in extractors))
    (out_dir / "shares.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"wrote {out_dir / 'shares.csv'}")


if __name__ == "__main__":
    main()

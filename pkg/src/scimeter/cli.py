"""Command-line pipeline: composable subcommands over one config file.

Every figure-adjacent output is a subcommand away: `scimeter all --config
run.cfg` chains synth/ingest through report; `sweep` and `exclude` reuse
the stored stage artifacts. Re-running a stage with unchanged inputs and
config is a no-op.
"""

from __future__ import annotations

import sys

import click

from . import pipeline
from .pipeline import PipelineConfig, StageError


def run(subcommand: str, config_path: str | None,
        overrides: dict | None = None) -> int:
    """Programmatic entry point; returns a process-style exit status."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    try:
        if config_path:
            cfg = PipelineConfig.from_file(config_path, overrides)
        else:
            cfg = PipelineConfig.from_values(overrides)
        outputs = pipeline.run_stage(subcommand, cfg)
    except (StageError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    for path in outputs:
        click.echo(path)
    return 0


_SHARED = [
    click.option("--config", "config_path", type=click.Path(exists=True),
                 default=None, help="flat key=value config file"),
    click.option("--corpus", "corpus_path", default=None,
                 help="corpus file (line-delimited records)"),
    click.option("--workdir", default=None, help="artifact directory"),
    click.option("--years", default=None, help="analysis years A..B"),
    click.option("--seed", type=int, default=None),
    click.option("--mode", type=click.Choice(["deterministic", "parallel"]),
                 default=None),
    click.option("--top-pct", "paper_top_pct", type=float, default=None,
                 help="paper tag threshold (default 0.05)"),
    click.option("--attribution", default=None,
                 type=click.Choice(["any", "first", "last", "corresponding",
                                    "unanimous"])),
    click.option("--exclude-country", "exclude_country", default=None),
    click.option("--variant", "variants", default=None,
                 type=click.Choice(["content", "context"]),
                 help="restrict prescience to one variant"),
    click.option("--preset", "synth_preset", default=None,
                 help="synthetic corpus preset (see `scimeter presets`)"),
    click.option("--schema", "schema_version", default=None,
                 type=click.Choice(["1", "openalex"])),
]


def _with_shared(fn):
    for opt in reversed(_SHARED):
        fn = opt(fn)
    return fn


def _invoke(subcommand: str, config_path: str | None, **overrides) -> None:
    if overrides.get("variants"):
        overrides["variants"] = (overrides["variants"],)
    sys.exit(run(subcommand, config_path, overrides))


@click.group()
def main() -> None:
    """Innovation measures for publication corpora."""


def _register(name: str, help_text: str) -> None:
    @main.command(name=name, help=help_text)
    @_with_shared
    def _cmd(config_path, **overrides):  # noqa: ANN001
        _invoke(name, config_path, **overrides)


_register("synth", "Generate a synthetic corpus from a preset.")
_register("ingest", "Parse and validate the corpus; write rejects.")
_register("hypergraph", "Build author-keyword hypergraphs per window.")
_register("walks", "Generate random-walk corpora over the hypergraphs.")
_register("embed", "Train per-year embedding spaces on the walks.")
_register("emergence", "Score, rank, and tag emerging areas and papers.")
_register("prescience", "Fit factor models and score 2-year prescience.")
_register("disruption", "Compute CD-index disruption scores.")
_register("report", "Aggregate tags into country share/rate series.")
_register("sweep", "Re-tag at 1/5/10% thresholds and emit series per pct.")
_register("exclude", "Retrain without one country and rescore everything.")
_register("all", "Run the full chain: synth/ingest through report.")


@main.command(name="presets")
def list_presets() -> None:
    """List bundled synthetic-corpus presets."""
    from .presets import PRESETS
    for name in sorted(PRESETS):
        click.echo(name)


if __name__ == "__main__":
    main()

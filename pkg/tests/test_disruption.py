import numpy as np
import pytest

from scimeter.disruption import (CitationGraph, DisruptionScore, cd_index,
                                 score_all, tag_disruptive)

from conftest import record_obj, write_jsonl
from scimeter import corpus as cm


def graph(year_of, edges):
    return CitationGraph(year_of, edges)


def test_cd_pure_disruption():
    years = {"focal": 2010, "r1": 2008, "c1": 2011, "c2": 2012, "c3": 2013}
    g = graph(years, [("focal", "r1"), ("c1", "focal"), ("c2", "focal"),
                      ("c3", "focal")])
    s = cd_index(g, "focal")
    assert (s.n_f, s.n_b, s.n_r) == (3, 0, 0)
    assert s.d_value == 1.0


def test_cd_pure_consolidation():
    years = {"focal": 2010, "r1": 2008, "c1": 2011, "c2": 2012}
    g = graph(years, [("focal", "r1"), ("c1", "focal"), ("c1", "r1"),
                      ("c2", "focal"), ("c2", "r1")])
    s = cd_index(g, "focal")
    assert (s.n_f, s.n_b, s.n_r) == (0, 2, 0)
    assert s.d_value == -1.0


def test_cd_hand_built_quarter():
    # brute-force enumerated 7-node case: n_f=2, n_b=1, n_r=1 -> D = 0.25
    years = {"focal": 2010, "r1": 2008, "r2": 2007,
             "a": 2011, "b": 2012, "c": 2013, "d": 2014}
    edges = [("focal", "r1"), ("focal", "r2"),
             ("a", "focal"), ("b", "focal"),            # citing focal only
             ("c", "focal"), ("c", "r1"),               # citing both
             ("d", "r2")]                               # citing refs only
    s = cd_index(graph(years, edges), "focal")
    assert (s.n_f, s.n_b, s.n_r) == (2, 1, 1)
    assert s.d_value == 0.25


def test_cd_undefined_cases():
    years = {"focal": 2010, "c1": 2011, "r1": 2009}
    assert cd_index(graph(years, [("c1", "focal")]), "focal") is None  # no refs
    assert cd_index(graph(years, [("focal", "r1")]), "focal") is None  # no citers


def test_cd_window_excludes_same_year_and_late():
    years = {"focal": 2010, "r1": 2008, "same": 2010, "late": 2016,
             "in": 2015}
    edges = [("focal", "r1"), ("same", "focal"), ("late", "focal"),
             ("in", "focal")]
    s = cd_index(graph(years, edges), "focal", window=5)
    assert (s.n_f, s.n_b, s.n_r) == (1, 0, 0)


def test_cd_window_monotonicity():
    years = {"focal": 2010, "r1": 2008}
    edges = [("focal", "r1")]
    for y in range(2011, 2020):
        years[f"c{y}"] = y
        edges.append((f"c{y}", "focal"))
        years[f"d{y}"] = y
        edges.append((f"d{y}", "r1"))
    g = graph(years, edges)
    last = (0, 0, 0)
    for w in range(1, 10):
        s = cd_index(g, "focal", window=w)
        counts = (s.n_f, s.n_b, s.n_r)
        assert all(c2 >= c1 for c1, c2 in zip(last, counts))
        last = counts


def test_self_citation_and_duplicates_dropped():
    years = {"focal": 2010, "r1": 2008, "c1": 2011}
    edges = [("focal", "r1"), ("focal", "focal"), ("c1", "focal"),
             ("c1", "focal")]
    g = graph(years, edges)
    assert g.references_of("focal") == ("r1",)
    s = cd_index(g, "focal")
    assert s.n_f == 1


def _random_graph(rng, n_nodes):
    years = {f"n{i}": int(rng.integers(2000, 2012)) for i in range(n_nodes)}
    ids = sorted(years)
    edges = []
    for citing in ids:
        k = int(rng.integers(0, 5))
        for cited in rng.choice(ids, size=min(k, n_nodes), replace=False):
            if cited != citing and years[cited] < years[citing]:
                edges.append((citing, str(cited)))
    return years, edges


def brute_force_cd(years, edges, focal, window=5):
    """Set-algebra oracle straight from the definitions."""
    refs = {b for a, b in set(edges) if a == focal and b != focal}
    if not refs:
        return None
    subsequent = {p for p in years
                  if years[focal] < years[p] <= years[focal] + window}
    edge_set = set(edges)
    cite_focal = {p for p in subsequent if (p, focal) in edge_set}
    if not cite_focal:
        return None
    cite_ref = {p for p in subsequent if p != focal
                and any((p, r) in edge_set for r in refs)}
    n_b = len(cite_focal & cite_ref)
    n_f = len(cite_focal - cite_ref)
    n_r = len(cite_ref - cite_focal)
    return (n_f, n_b, n_r, (n_f - n_b) / (n_f + n_b + n_r))


def test_random_graphs_match_oracle():
    rng = np.random.default_rng(8)
    for _ in range(100):
        years, edges = _random_graph(rng, int(rng.integers(5, 40)))
        g = graph(years, edges)
        for focal in years:
            want = brute_force_cd(years, edges, focal)
            got = cd_index(g, focal)
            if want is None:
                assert got is None
            else:
                assert (got.n_f, got.n_b, got.n_r) == want[:3]
                assert got.d_value == want[3]
                total = got.n_f + got.n_b + got.n_r
                assert -1.0 <= got.d_value <= 1.0
                # partition property
                subsequent_citers = {
                    p for p in years
                    if years[focal] < years[p] <= years[focal] + 5
                    and ((p, focal) in set(edges)
                         or any((p, r) in set(edges)
                                for r in g.references_of(focal)))
                    and p != focal}
                assert total == len(subsequent_citers)


def test_tag_disruptive_counts_and_dominance():
    scores = {f"p{i}": -1.0 + i / 40 for i in range(40)}
    tags = tag_disruptive(scores, 0.05)
    assert tags == {"p38", "p39"}  # 40 scored -> 2 tagged
    ties = dict.fromkeys(scores, -1.0)
    ties["hero"] = 1.0
    assert "hero" in tag_disruptive(ties, 0.025)
    # boundary ties are all included
    assert tag_disruptive(ties, 0.05) == set(ties)


def test_score_all_on_corpus(tmp_path):
    objs = [record_obj("r1", year=2008),
            record_obj("focal", year=2010, references=["r1"]),
            record_obj("c1", year=2012, references=["focal"]),
            record_obj("young", year=2020)]
    corpus = cm.ingest(write_jsonl(tmp_path / "c.jsonl", objs))
    scores = score_all(corpus)
    assert [s.paper_id for s in scores] == ["focal"]
    assert scores[0].d_value == 1.0


def test_planted_disruptive_recovered(prescience_battery):
    cfg, ws, truth = prescience_battery
    from scimeter.pipeline import read_csv
    from scimeter.ranking import tag_top_fraction
    rows = read_csv(str(ws.path("disruption", "scores.csv")))
    pool = {r["paper_id"]: float(r["d_value"]) for r in rows}
    planted = truth.ids("disruptive_paper") & set(pool)
    assert planted, "fixture must plant scoreable disruptive focals"
    assert all(pool[p] == 1.0 for p in planted)
    tags = tag_top_fraction(pool, 0.05, largest=True)
    assert len(tags & planted) / len(planted) >= 0.8

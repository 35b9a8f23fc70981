"""CD5 disruption index over citation graphs.

D = (n_f - n_b) / (n_f + n_b + n_r) over papers published within `window`
years after the focal paper (strictly after; same-year citers excluded):
n_f cite the focal paper and none of its references, n_b cite both, n_r
cite only references. Scores exist only for papers with at least one
reference and at least one in-window citer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Corpus
from .ranking import tag_top_fraction


@dataclass
class DisruptionScore:
    paper_id: str
    d_value: float
    n_f: int
    n_b: int
    n_r: int
    window_years: int = 5


class CitationGraph:
    """Directed citing -> cited edges among papers with known years.

    Deduplicates edges, drops self-citations, and ignores references to
    papers outside the corpus (no phantom nodes).
    """

    def __init__(self, year_of: dict[str, int],
                 edges: list[tuple[str, str]]):
        self.year_of = dict(year_of)
        self.cites: dict[str, tuple[str, ...]] = {}
        self.cited_by: dict[str, list[str]] = {}
        seen: set[tuple[str, str]] = set()
        for citing, cited in edges:
            if citing == cited:
                continue
            if citing not in self.year_of or cited not in self.year_of:
                continue
            if (citing, cited) in seen:
                continue
            seen.add((citing, cited))
            self.cited_by.setdefault(cited, []).append(citing)
        by_citer: dict[str, list[str]] = {}
        for citing, cited in seen:
            by_citer.setdefault(citing, []).append(cited)
        for citing, cited_list in by_citer.items():
            self.cites[citing] = tuple(sorted(cited_list))

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "CitationGraph":
        year_of = {rec.paper_id: rec.year for rec in corpus}
        edges = [(rec.paper_id, ref) for rec in corpus for ref in rec.references]
        return cls(year_of, edges)

    def references_of(self, paper_id: str) -> tuple[str, ...]:
        return self.cites.get(paper_id, ())

    def citers_of(self, paper_id: str) -> list[str]:
        return self.cited_by.get(paper_id, [])


def cd_index(g: CitationGraph, focal: str,
             window: int = 5) -> DisruptionScore | None:
    """CD index of `focal`, or None when undefined (no refs / no citers)."""
    if focal not in g.year_of:
        raise KeyError(f"unknown paper {focal!r}")
    refs = g.references_of(focal)
    if not refs:
        return None
    y0 = g.year_of[focal]
    lo, hi = y0 + 1, y0 + window

    def in_window(p: str) -> bool:
        return lo <= g.year_of[p] <= hi

    focal_citers = {p for p in g.citers_of(focal) if in_window(p)}
    if not focal_citers:
        return None
    ref_citers = {p for r in refs for p in g.citers_of(r)
                  if p != focal and in_window(p)}
    n_b = len(focal_citers & ref_citers)
    n_f = len(focal_citers) - n_b
    n_r = len(ref_citers - focal_citers)
    d = (n_f - n_b) / (n_f + n_b + n_r)
    return DisruptionScore(focal, d, n_f, n_b, n_r, window)


def score_all(corpus: Corpus, window: int = 5,
              years: tuple[int, int] | None = None) -> list[DisruptionScore]:
    """Scores for every defined focal paper, optionally limited to a year span."""
    g = CitationGraph.from_corpus(corpus)
    out = []
    for rec in corpus:
        if years is not None and not (years[0] <= rec.year <= years[1]):
            continue
        score = cd_index(g, rec.paper_id, window)
        if score is not None:
            out.append(score)
    return out


def tag_disruptive(scores: dict[str, float], pct: float = 0.05) -> set[str]:
    """Top pct by D within a field-year, ties inclusive."""
    return tag_top_fraction(scores, pct, largest=True)

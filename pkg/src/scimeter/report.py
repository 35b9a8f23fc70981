"""National indicators from tagged paper sets: shares, rates, intervals.

share(country) = tagged papers credited to the country / tagged papers with
any known country. rate(country) = tagged-and-credited / all credited papers
of that country-year. Under AnyAuthor attribution a multi-country paper
credits every country, so shares can sum past 1; Unanimous credits at most
one country per paper. Intervals are Wilson score at 95%.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

from .corpus import UNKNOWN, AttributionStrategy, Corpus, attribute_countries
from .ranking import tag_top_fraction

Z95 = 1.959963984540054  # two-sided 95% normal quantile

MEASURES = ("emergence", "content_prescience", "context_prescience",
            "disruption", "top_cited", "citations", "publications")


@dataclass
class ReportConfig:
    attribution: AttributionStrategy = AttributionStrategy.ANY_AUTHOR
    top_pct: float = 0.05
    exclude_country: str | None = None
    field_filter: tuple[str, ...] = ()
    country_groups: dict[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.top_pct <= 1.0:
            raise ValueError("top_pct must be in (0, 1]")


@dataclass
class SeriesRow:
    measure: str
    country: str
    year: int
    share: float | None
    rate: float | None
    count: int
    ci_low: float | None
    ci_high: float | None


def confidence_interval(successes: int, trials: int) -> tuple[float, float]:
    """Wilson score interval at 95%."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must be within [0, trials]")
    p = successes / trials
    z2 = Z95 * Z95
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = (Z95 / denom) * math.sqrt(p * (1 - p) / trials
                                     + z2 / (4 * trials * trials))
    # at the boundaries the interval endpoint is exactly the proportion
    low = 0.0 if successes == 0 else max(center - half, 0.0)
    high = 1.0 if successes == trials else min(center + half, 1.0)
    return low, high


def load_country_groups(path: str) -> dict[str, frozenset[str]]:
    """Parse `REGION: CC, CC, ...` lines into region membership sets."""
    groups: dict[str, frozenset[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            region, _, members = line.partition(":")
            codes = frozenset(c.strip().upper() for c in members.split(",")
                              if c.strip())
            if not region.strip() or not codes:
                raise ValueError(f"bad country-group line: {line!r}")
            groups[region.strip()] = codes
    return groups


def _countries_of(paper, cfg: ReportConfig) -> frozenset[str]:
    base = attribute_countries(paper, cfg.attribution)
    extra = {region for region, members in cfg.country_groups.items()
             if base & members}
    return base | frozenset(extra)


def country_shares(tags: set[str], view: Corpus,
                   cfg: ReportConfig) -> list[SeriesRow]:
    """Per country-year share of tagged papers.

    Denominator: tagged papers of the year credited to at least one known
    country. A pseudo-country row UNKNOWN reports the uncreditable fraction
    over all tagged papers of the year.
    """
    by_year: dict[int, list[frozenset[str]]] = {}
    for pid in sorted(tags):
        rec = view.get(pid)
        by_year.setdefault(rec.year, []).append(_countries_of(rec, cfg))
    rows: list[SeriesRow] = []
    for year in sorted(by_year):
        credit_sets = by_year[year]
        known_sets = [cs - {UNKNOWN} for cs in credit_sets]
        denom = sum(1 for cs in known_sets if cs)
        counts: dict[str, int] = {}
        for cs in known_sets:
            for c in cs:
                counts[c] = counts.get(c, 0) + 1
        for country in sorted(counts):
            n = counts[country]
            lo, hi = confidence_interval(n, denom)
            rows.append(SeriesRow("", country, year, n / denom, None, n,
                                  lo, hi))
        n_unknown = sum(1 for cs in known_sets if not cs)
        if n_unknown:
            lo, hi = confidence_interval(n_unknown, len(credit_sets))
            rows.append(SeriesRow("", UNKNOWN, year,
                                  n_unknown / len(credit_sets), None,
                                  n_unknown, lo, hi))
    return rows


def per_paper_rate(tags: set[str], view: Corpus,
                   cfg: ReportConfig) -> list[SeriesRow]:
    """Tagged fraction of each country-year's own credited papers."""
    denom: dict[tuple[str, int], int] = {}
    hits: dict[tuple[str, int], int] = {}
    for rec in view:
        credits = _countries_of(rec, cfg) - {UNKNOWN}
        for c in credits:
            key = (c, rec.year)
            denom[key] = denom.get(key, 0) + 1
            if rec.paper_id in tags:
                hits[key] = hits.get(key, 0) + 1
    rows = []
    for (country, year) in sorted(denom):
        n = denom[(country, year)]
        k = hits.get((country, year), 0)
        lo, hi = confidence_interval(k, n)
        rows.append(SeriesRow("", country, year, None, k / n, k, lo, hi))
    return rows


def build_series(measure: str, tags: set[str], view: Corpus,
                 cfg: ReportConfig) -> list[SeriesRow]:
    """Share rows and rate rows merged per (country, year) for one measure."""
    share_rows = {(r.country, r.year): r for r in country_shares(tags, view, cfg)}
    rate_rows = {(r.country, r.year): r for r in per_paper_rate(tags, view, cfg)}
    rows = []
    for key in sorted(set(share_rows) | set(rate_rows)):
        country, year = key
        s = share_rows.get(key)
        r = rate_rows.get(key)
        rows.append(SeriesRow(
            measure, country, year,
            s.share if s else None,
            r.rate if r else None,
            s.count if s else (r.count if r else 0),
            s.ci_low if s else (r.ci_low if r else None),
            s.ci_high if s else (r.ci_high if r else None)))
    return rows


def volume_series(measure: str, view: Corpus, cfg: ReportConfig,
                  weights: dict[str, int] | None = None) -> list[SeriesRow]:
    """Publication or citation-volume shares (no percentile tagging).

    weights maps paper_id -> weight (citation counts); None weights each
    paper 1 (publication share). Rates are per-paper weight means for
    weighted series and omitted for publications.
    """
    totals: dict[int, float] = {}
    by_cy: dict[tuple[str, int], float] = {}
    papers_cy: dict[tuple[str, int], int] = {}
    for rec in view:
        w = float(weights.get(rec.paper_id, 0)) if weights is not None else 1.0
        totals[rec.year] = totals.get(rec.year, 0.0) + w
        for c in _countries_of(rec, cfg) - {UNKNOWN}:
            key = (c, rec.year)
            by_cy[key] = by_cy.get(key, 0.0) + w
            papers_cy[key] = papers_cy.get(key, 0) + 1
    rows = []
    for (country, year) in sorted(by_cy):
        total = totals.get(year, 0.0)
        share = by_cy[(country, year)] / total if total > 0 else None
        rate = None
        if weights is not None and papers_cy[(country, year)] > 0:
            rate = by_cy[(country, year)] / papers_cy[(country, year)]
        rows.append(SeriesRow(measure, country, year, share, rate,
                              int(papers_cy[(country, year)]), None, None))
    return rows


def tag_per_field_year(scores: dict[tuple[str, int], dict[str, float]],
                       pct: float, largest: bool = True) -> set[str]:
    """Apply percentile tagging independently per (field, year) pool."""
    tags: set[str] = set()
    for key in sorted(scores):
        tags |= tag_top_fraction(scores[key], pct, largest=largest)
    return tags


def threshold_sweep(scores: dict[tuple[str, int], dict[str, float]],
                    measure: str, view: Corpus, cfg: ReportConfig,
                    pcts: tuple[float, ...] = (0.01, 0.05, 0.10),
                    largest: bool = True
                    ) -> dict[float, tuple[set[str], list[SeriesRow]]]:
    """Series per threshold; asserts tag-set nestedness across thresholds."""
    out: dict[float, tuple[set[str], list[SeriesRow]]] = {}
    previous: set[str] | None = None
    for pct in sorted(pcts):
        sweep_cfg = ReportConfig(cfg.attribution, pct, cfg.exclude_country,
                                 cfg.field_filter, cfg.country_groups)
        tags = tag_per_field_year(scores, pct, largest=largest)
        if previous is not None and not previous <= tags:
            raise AssertionError(
                f"tag sets not nested between thresholds at {pct}")
        previous = tags
        out[pct] = (tags, build_series(measure, tags, view, sweep_cfg))
    return out


@dataclass
class CurvePoint:
    percentile: float
    top_cited_fraction: float
    n: int


def prescience_citation_curve(scores: dict[str, float],
                              citation_counts: dict[str, int],
                              bins: int = 100,
                              top_frac: float = 0.10) -> list[CurvePoint]:
    """Fraction of globally top-cited papers per percentile bin of a score.

    Papers without a citation count are excluded. bins=1 collapses to the
    overall top-cited fraction.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    usable = sorted(pid for pid in scores if pid in citation_counts)
    if not usable:
        return []
    cited = {pid: citation_counts[pid] for pid in usable}
    top_set = tag_top_fraction(cited, top_frac, largest=True)
    ordered = sorted(usable, key=lambda pid: (scores[pid], pid))
    n = len(ordered)
    points = []
    for b in range(bins):
        lo = int(b * n / bins)
        hi = int((b + 1) * n / bins)
        if hi <= lo:
            continue
        chunk = ordered[lo:hi]
        frac = sum(1 for pid in chunk if pid in top_set) / len(chunk)
        points.append(CurvePoint(100.0 * (lo + hi) / (2 * n), frac,
                                 len(chunk)))
    return points


_CSV_HEADER = ["measure", "country", "year", "share", "rate", "count",
               "ci_low", "ci_high"]


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def export(rows: list[SeriesRow], path: str, fmt: str = "csv",
           config_hash: str = "") -> list[str]:
    """Write series rows; csv = one long-form table, plotdata = one file per
    (measure, stat) panel with x/y/band columns. Returns written paths."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if config_hash:
                fh.write(f"# config={config_hash}\n")
            writer = csv.writer(fh)
            writer.writerow(_CSV_HEADER)
            for r in rows:
                writer.writerow([r.measure, r.country, r.year, _fmt(r.share),
                                 _fmt(r.rate), r.count, _fmt(r.ci_low),
                                 _fmt(r.ci_high)])
        return [path]
    if fmt != "plotdata":
        raise ValueError(f"unknown export format {fmt!r}")
    os.makedirs(path, exist_ok=True)
    written = []
    measures = sorted({r.measure for r in rows})
    for measure in measures:
        for stat in ("share", "rate"):
            sub = [r for r in rows if r.measure == measure
                   and getattr(r, stat) is not None]
            if not sub:
                continue
            fpath = os.path.join(path, f"{measure}_{stat}.csv")
            with open(fpath, "w", newline="", encoding="utf-8") as fh:
                if config_hash:
                    fh.write(f"# config={config_hash}\n")
                writer = csv.writer(fh)
                writer.writerow(["country", "x", "y", "band_low", "band_high"])
                for r in sorted(sub, key=lambda r: (r.country, r.year)):
                    writer.writerow([r.country, r.year, _fmt(getattr(r, stat)),
                                     _fmt(r.ci_low), _fmt(r.ci_high)])
            written.append(fpath)
    return written


def read_series_csv(path: str) -> list[SeriesRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for rec in reader:
        rows.append(SeriesRow(
            rec["measure"], rec["country"], int(rec["year"]),
            float(rec["share"]) if rec["share"] else None,
            float(rec["rate"]) if rec["rate"] else None,
            int(rec["count"]),
            float(rec["ci_low"]) if rec["ci_low"] else None,
            float(rec["ci_high"]) if rec["ci_high"] else None))
    return rows


def exclusion_rerun(country: str, pipeline_config, measures=None):
    """Full-vs-excluded paired series; delegates to the pipeline engine.

    Models (embeddings and factor models) are retrained on papers without
    any author from `country`; every paper, including the excluded
    country's, is then rescored against the outside-world models.
    """
    from . import pipeline as _pipeline  # local import: pipeline imports report
    return _pipeline.run_exclusion(country, pipeline_config, measures)

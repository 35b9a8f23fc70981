"""Synthetic corpora with planted, recoverable signals.

The generative model is a mixture of keyword clusters with yearly drift:
papers sample keywords (and mirrored reference venues) mostly within their
cluster at a per-year purity, so rising purity plants embedding convergence
and scheduled cross-cluster mixing plants merge (prescient) or split
(declining) stories. Cluster paper volumes follow planted growth curves.
Citation wiring realizes clean disruptive (D=1) and consolidating patterns
against a reserved never-otherwise-cited reference pool. Every planted id
lands in a ground-truth file next to the corpus.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusterPlan:
    name: str
    field: str
    countries: dict[str, float]
    volume: dict[int, int]
    purity: dict[int, float]
    n_keywords: int = 20
    n_authors: int = 25
    n_venues: int = 4
    emergent_b: float | None = None  # planted growth rate, for ground truth


@dataclass
class PairPlan:
    first: str
    second: str
    cross_rate: dict[int, float]
    planted_year: int | None = None
    label: str = "prescient"  # "prescient", "declining", or "sibling"
    cross_purity: float | None = None  # default: the home cluster's purity


@dataclass
class SynthSpec:
    years: tuple[int, int]
    fields: tuple[str, ...]
    clusters: list[ClusterPlan]
    pairs: list[PairPlan] = field(default_factory=list)
    keywords_per_paper: tuple[int, int] = (3, 6)
    venues_per_paper: tuple[int, int] = (2, 4)
    authors_per_paper: tuple[int, int] = (1, 3)
    refs_per_paper: tuple[int, int] = (2, 5)
    review_rate: float = 0.0
    nonenglish_rate: float = 0.0
    multi_country_rate: float = 0.05
    intl_collab_rate: float = 0.05
    random_combo_rate: float = 0.0
    zero_keyword_rate: float = 0.0
    multi_field_rate: float = 0.0
    disruptive_fraction: float = 0.0
    consolidating_fraction: float = 0.0
    reserved_fraction: float = 0.10
    citation_base: float = 3.0
    prescient_citation_boost: int = 0
    seed: int = 0

    def validate(self) -> None:
        y0, y1 = self.years
        if y1 < y0:
            raise ValueError("years span is empty")
        all_years = range(y0, y1 + 1)
        names = [c.name for c in self.clusters]
        if len(set(names)) != len(names):
            raise ValueError("duplicate cluster names")
        for c in self.clusters:
            if c.field not in self.fields:
                raise ValueError(f"cluster {c.name}: field {c.field!r} "
                                 f"not in spec fields")
            if abs(sum(c.countries.values()) - 1.0) > 1e-9:
                raise ValueError(f"cluster {c.name}: country mixture must "
                                 f"sum to 1")
            for y in all_years:
                if y not in c.volume:
                    raise ValueError(f"cluster {c.name}: no volume for {y}")
                if y not in c.purity:
                    raise ValueError(f"cluster {c.name}: drift schedule "
                                     f"missing year {y}")
                if not 0.0 <= c.purity[y] <= 1.0:
                    raise ValueError(f"cluster {c.name}: purity outside "
                                     f"[0,1] at {y}")
        for p in self.pairs:
            if p.first not in names or p.second not in names:
                raise ValueError(f"pair ({p.first},{p.second}) references "
                                 f"unknown cluster")
            for y in all_years:
                if y not in p.cross_rate:
                    raise ValueError(f"pair ({p.first},{p.second}): "
                                     f"cross_rate missing year {y}")
                if not 0.0 <= p.cross_rate[y] <= 1.0:
                    raise ValueError("cross_rate outside [0,1]")
            if p.label not in ("prescient", "declining", "sibling"):
                raise ValueError(f"unknown pair label {p.label!r}")
            if p.label == "sibling" and p.planted_year is not None:
                raise ValueError("sibling pairs carry no planted year")
        for name in ("review_rate", "nonenglish_rate", "multi_country_rate",
                     "intl_collab_rate", "random_combo_rate",
                     "zero_keyword_rate", "multi_field_rate",
                     "disruptive_fraction", "consolidating_fraction",
                     "reserved_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0,1]")
        if self.disruptive_fraction + self.consolidating_fraction > 0.5:
            raise ValueError("citation planting fractions sum past 0.5; "
                             "not enough papers left for background")
        if self.random_combo_rate + self.zero_keyword_rate > 1.0:
            raise ValueError("random_combo_rate + zero_keyword_rate > 1")


def flat_schedule(years: tuple[int, int], value) -> dict[int, float]:
    return {y: value for y in range(years[0], years[1] + 1)}


def ramp_schedule(years: tuple[int, int], start_value: float,
                  end_value: float, ramp_from: int,
                  ramp_to: int) -> dict[int, float]:
    """Flat at start_value, linear ramp over [ramp_from, ramp_to], then flat."""
    out = {}
    for y in range(years[0], years[1] + 1):
        if y <= ramp_from:
            out[y] = start_value
        elif y >= ramp_to:
            out[y] = end_value
        else:
            frac = (y - ramp_from) / (ramp_to - ramp_from)
            out[y] = start_value + frac * (end_value - start_value)
    return out


def growth_volume(years: tuple[int, int], y0: int, a: float, b: float,
                  c: float, n_keywords: int, kw_per_paper: float,
                  purity: dict[int, float]) -> dict[int, int]:
    """Volumes that put each keyword's expected annual count on a*e^(bt)+c.

    Purity-compensated: count(kw, y) ~ volume * kw_per_paper * purity /
    n_keywords, so volume(y) = target(y) * n_keywords / (kw_per_paper *
    purity). Years before y0 sit at the curve's t=0 value.
    """
    out = {}
    for y in range(years[0], years[1] + 1):
        t = max(y - y0, 0)
        target = a * math.exp(b * t) + c
        out[y] = max(1, round(target * n_keywords / (kw_per_paper * purity[y])))
    return out


class GroundTruth:
    """Planted ids and parameters, one row per (measure, id)."""

    def __init__(self, rows: list[tuple[str, str, dict]] | None = None):
        self.rows = rows or []

    def add(self, measure: str, item_id: str, params: dict) -> None:
        self.rows.append((measure, item_id, params))

    def ids(self, measure: str) -> set[str]:
        return {i for m, i, _ in self.rows if m == measure}

    def params(self, measure: str) -> dict[str, dict]:
        return {i: p for m, i, p in self.rows if m == measure}

    def save(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["measure", "item_id", "params"])
            for measure, item_id, params in self.rows:
                writer.writerow([measure, item_id,
                                 json.dumps(params, sort_keys=True)])

    @classmethod
    def load(cls, path: str) -> "GroundTruth":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rows.append((rec["measure"], rec["item_id"],
                             json.loads(rec["params"])))
        return cls(rows)


class _Cluster:
    def __init__(self, plan: ClusterPlan, rng: np.random.Generator,
                 country_pool: list[str], multi_country_rate: float):
        self.plan = plan
        self.keywords = [f"{plan.name} kw{i:02d}"
                         for i in range(plan.n_keywords)]
        self.venues = [f"journal of {plan.name} {i}"
                       for i in range(plan.n_venues)]
        self.authors = []
        codes = sorted(plan.countries)
        probs = np.array([plan.countries[c] for c in codes])
        for i in range(plan.n_authors):
            country = codes[int(rng.choice(len(codes), p=probs))]
            countries = {country}
            if rng.random() < multi_country_rate and len(country_pool) > 1:
                other = country_pool[int(rng.integers(len(country_pool)))]
                countries.add(other)
            self.authors.append((f"au-{plan.name}-{i:03d}", sorted(countries)))


def _draw_distinct(rng: np.random.Generator, n: int, primary: list[str],
                   purity: float, global_pool: list[str],
                   secondary: list[str] | None = None) -> list[str]:
    """n distinct terms: secondary splits the draw for cross papers."""
    out: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < n and attempts < 20 * n + 20:
        attempts += 1
        if secondary is not None and len(out) % 2 == 1:
            pool = secondary
        else:
            pool = primary
        if rng.random() >= purity:
            pool = global_pool
        term = pool[int(rng.integers(len(pool)))]
        if term not in seen:
            seen.add(term)
            out.append(term)
    return out


def generate(spec: SynthSpec, out_dir: str,
             corpus_format: str = "native") -> tuple[str, str]:
    """Write corpus + ground-truth files; returns their paths."""
    spec.validate()
    if corpus_format not in ("native", "openalex"):
        raise ValueError(f"unknown corpus_format {corpus_format!r}")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    truth = GroundTruth()
    y_lo, y_hi = spec.years

    country_pool = sorted({c for cl in spec.clusters for c in cl.countries})
    clusters = {c.name: _Cluster(c, rng, country_pool,
                                 spec.multi_country_rate)
                for c in spec.clusters}
    global_keywords = [kw for name in clusters
                       for kw in clusters[name].keywords]
    global_venues = [v for name in clusters for v in clusters[name].venues]
    languages = ["zh", "de", "fr", "ja"]

    for plan in spec.clusters:
        if plan.emergent_b is not None:
            truth.add("emergent_cluster", plan.name, {
                "b": plan.emergent_b, "field": plan.field,
                "keywords": clusters[plan.name].keywords})

    # cross-paper quotas per (pair index, year), drawn against both clusters
    papers: list[dict] = []
    own_venue: dict[str, str] = {}
    by_cluster_year: dict[tuple[str, int], list[str]] = {}
    counter = 0

    for year in range(y_lo, y_hi + 1):
        quotas: dict[str, int] = {c.name: c.volume[year]
                                  for c in spec.clusters}
        cross_jobs: list[tuple[PairPlan, str]] = []
        for pair in spec.pairs:
            total = quotas[pair.first] + quotas[pair.second]
            n_cross = round(pair.cross_rate[year] * total)
            for i in range(n_cross):
                home = pair.first if i % 2 == 0 else pair.second
                if quotas[home] > 0:
                    quotas[home] -= 1
                    cross_jobs.append((pair, home))

        jobs: list[tuple[str, PairPlan | None]] = []
        for c in spec.clusters:
            jobs.extend((c.name, None) for _ in range(quotas[c.name]))
        jobs.extend((home, pair) for pair, home in cross_jobs)

        for home, pair in jobs:
            cl = clusters[home]
            purity = cl.plan.purity[year]
            pid = f"p{counter:07d}"
            counter += 1

            n_kw = int(rng.integers(spec.keywords_per_paper[0],
                                    spec.keywords_per_paper[1] + 1))
            n_ven = int(rng.integers(spec.venues_per_paper[0],
                                     spec.venues_per_paper[1] + 1))
            is_random_combo = False
            if pair is not None:
                other = clusters[pair.second if home == pair.first
                                 else pair.first]
                cpur = pair.cross_purity if pair.cross_purity is not None \
                    else purity
                keywords = _draw_distinct(rng, n_kw, cl.keywords, cpur,
                                          global_keywords, other.keywords)
                venues = _draw_distinct(rng, n_ven, cl.venues, cpur,
                                        global_venues, other.venues)
                if pair.planted_year == year:
                    truth.add(f"{pair.label}_paper", pid, {
                        "year": year, "pair": [pair.first, pair.second]})
                if cl.plan.emergent_b is not None:
                    truth.add("emergent_paper", pid,
                              {"year": year, "field": cl.plan.field,
                               "cluster": home})
            else:
                roll = rng.random()
                if roll < spec.random_combo_rate:
                    is_random_combo = True
                    keywords = _draw_distinct(rng, n_kw, global_keywords,
                                              1.0, global_keywords)
                    venues = _draw_distinct(rng, n_ven, global_venues, 1.0,
                                            global_venues)
                else:
                    keywords = _draw_distinct(rng, n_kw, cl.keywords, purity,
                                              global_keywords)
                    venues = _draw_distinct(rng, n_ven, cl.venues, purity,
                                            global_venues)
                if cl.plan.emergent_b is not None:
                    truth.add("emergent_paper", pid,
                              {"year": year, "field": cl.plan.field,
                               "cluster": home})
            if (pair is None and not is_random_combo
                    and rng.random() < spec.zero_keyword_rate):
                keywords = []

            n_auth = int(rng.integers(spec.authors_per_paper[0],
                                      spec.authors_per_paper[1] + 1))
            picks = rng.choice(len(cl.authors), size=min(n_auth,
                                                         len(cl.authors)),
                               replace=False)
            chosen = [cl.authors[int(i)] for i in sorted(picks)]
            if rng.random() < spec.intl_collab_rate:
                other_name = spec.clusters[int(rng.integers(
                    len(spec.clusters)))].name
                if other_name != home:
                    pool = clusters[other_name].authors
                    chosen.append(pool[int(rng.integers(len(pool)))])
            corresponding = int(rng.integers(len(chosen)))
            authors = [{"author_id": aid, "countries": countries,
                        "position": pos,
                        "is_corresponding": pos == corresponding}
                       for pos, (aid, countries) in enumerate(chosen)]

            fields = [cl.plan.field]
            if rng.random() < spec.multi_field_rate and len(spec.fields) > 1:
                extra = spec.fields[int(rng.integers(len(spec.fields)))]
                if extra not in fields:
                    fields.append(extra)

            language = "en"
            if rng.random() < spec.nonenglish_rate:
                language = languages[int(rng.integers(len(languages)))]

            papers.append({
                "paper_id": pid, "year": year, "keywords": keywords,
                "ref_venues": venues, "references": [], "authors": authors,
                "field": fields if len(fields) > 1 else fields[0],
                "is_review": bool(rng.random() < spec.review_rate),
                "language": language, "citation_count": 0,
            })
            own_venue[pid] = (cl.venues[int(rng.integers(len(cl.venues)))])
            by_cluster_year.setdefault((home, year), []).append(pid)

    _wire_citations(spec, rng, papers, by_cluster_year, truth)

    prescient_ids = truth.ids("prescient_paper")
    for p in papers:
        count = int(rng.poisson(spec.citation_base))
        if p["paper_id"] in prescient_ids:
            count += spec.prescient_citation_boost
        p["citation_count"] = count

    for country in country_pool:
        only_here = [c.name for c in spec.clusters
                     if set(c.countries) == {country}]
        if only_here:
            truth.add("national_vocab", country, {"clusters": only_here})

    corpus_path = os.path.join(out_dir, "corpus.jsonl")
    truth_path = os.path.join(out_dir, "ground_truth.csv")
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for p in papers:
            obj = p if corpus_format == "native" else _to_openalex(
                p, own_venue)
            fh.write(json.dumps(obj, sort_keys=True))
            fh.write("\n")
    truth.save(truth_path)
    return corpus_path, truth_path


def _wire_citations(spec: SynthSpec, rng: np.random.Generator,
                    papers: list[dict],
                    by_cluster_year: dict[tuple[str, int], list[str]],
                    truth: GroundTruth) -> None:
    y_lo, y_hi = spec.years
    index = {p["paper_id"]: p for p in papers}

    reserved: set[str] = set()
    reserve_pool: dict[str, list[str]] = {}
    if spec.disruptive_fraction or spec.consolidating_fraction:
        for (cname, year), pids in sorted(by_cluster_year.items()):
            n_res = math.ceil(spec.reserved_fraction * len(pids))
            chosen = pids[-n_res:] if n_res else []
            reserved.update(chosen)
            reserve_pool.setdefault(cname, []).extend(chosen)

    forced_refs: dict[str, list[str]] = {}
    forced_cites: dict[str, list[str]] = {}
    focal_ids: set[str] = set()

    def take_reserved(cname: str, before_year: int) -> str | None:
        pool = reserve_pool.get(cname, [])
        for i, p in enumerate(pool):
            if index[p]["year"] < before_year:
                return pool.pop(i)
        return None

    focal_plan: list[tuple[str, str, int, bool]] = []
    for (cname, year), pids in sorted(by_cluster_year.items()):
        if year <= y_lo or year > y_hi - 2:
            continue
        candidates = [p for p in pids if p not in reserved]
        n_dis = round(spec.disruptive_fraction * len(pids))
        n_con = round(spec.consolidating_fraction * len(pids))
        for j, pid in enumerate(candidates[:n_dis + n_con]):
            focal_plan.append((pid, cname, year, j < n_dis))
            focal_ids.add(pid)

    for pid, cname, year, disruptive in focal_plan:
        later = [p for y2 in range(year + 1, min(year + 4, y_hi) + 1)
                 for p in by_cluster_year.get((cname, y2), [])
                 if p not in reserved and p not in focal_ids]
        if len(later) < 4:
            focal_ids.discard(pid)
            continue
        first = take_reserved(cname, year)
        second = take_reserved(cname, year)
        if first is None or second is None:
            # a reserved paper backs exactly one focal; out of stock
            focal_ids.discard(pid)
            continue
        refs = [first, second]
        forced_refs[pid] = refs
        n_citers = min(4 + int(rng.integers(3)), len(later))
        cite_picks = rng.choice(len(later), size=n_citers, replace=False)
        for ci in sorted(int(i) for i in cite_picks):
            citer = later[ci]
            forced_cites.setdefault(citer, []).append(pid)
            if not disruptive:
                forced_cites[citer].append(refs[0])
        truth.add("disruptive_paper" if disruptive
                  else "consolidating_paper", pid, {"year": year})

    home_of = {p: cname for (cname, _y), pids in by_cluster_year.items()
               for p in pids}
    background_targets: dict[tuple[str, int], list[str]] = {
        key: [p for p in pids if p not in reserved]
        for key, pids in by_cluster_year.items()}
    own_cum: dict[tuple[str, int], list[str]] = {}
    any_cum: dict[int, list[str]] = {}
    names = sorted({cname for (cname, _y) in by_cluster_year})
    running_any: list[str] = []
    running_own: dict[str, list[str]] = {n: [] for n in names}
    for year in range(y_lo, y_hi + 1):
        any_cum[year] = list(running_any)
        for n in names:
            own_cum[(n, year)] = list(running_own[n])
        for n in names:
            pids = background_targets.get((n, year), [])
            running_own[n].extend(pids)
            running_any.extend(pids)

    for p in papers:
        pid = p["paper_id"]
        if pid in focal_ids:
            p["references"] = list(forced_refs[pid])
            continue
        year = p["year"]
        refs = list(forced_cites.get(pid, []))
        if year > y_lo:
            n_refs = int(rng.integers(spec.refs_per_paper[0],
                                      spec.refs_per_paper[1] + 1))
            own_earlier = own_cum[(home_of[pid], year)]
            any_earlier = any_cum[year]
            for _ in range(n_refs):
                pool = own_earlier if (own_earlier and rng.random() < 0.7) \
                    else any_earlier
                if not pool:
                    break
                cand = pool[int(rng.integers(len(pool)))]
                if cand != pid and cand not in refs:
                    refs.append(cand)
        p["references"] = refs


def _to_openalex(p: dict, own_venue: dict[str, str]) -> dict:
    fields = p["field"] if isinstance(p["field"], list) else [p["field"]]
    return {
        "id": f"https://openalex.org/W{p['paper_id'][1:]}",
        "publication_year": p["year"],
        "type": "review" if p["is_review"] else "article",
        "language": p["language"],
        "concepts": [{"display_name": kw, "level": 2}
                     for kw in p["keywords"]],
        "authorships": [{
            "author": {"id": f"https://openalex.org/A{a['author_id']}"},
            "countries": a["countries"],
            "is_corresponding": a["is_corresponding"],
        } for a in p["authors"]],
        "referenced_works": [f"https://openalex.org/W{r[1:]}"
                             for r in p["references"]],
        "cited_by_count": p["citation_count"],
        "primary_topic": {"field": {"display_name": fields[0]}},
        "primary_location": {"source": {
            "display_name": own_venue[p["paper_id"]]}},
    }


@dataclass
class DetectorEval:
    measure: str
    n_planted: int
    n_tagged: int
    true_positives: int
    precision: float
    recall: float
    auc: float | None = None


def evaluate_detectors(tags: dict[str, set[str]], truth: GroundTruth,
                       scores: dict[str, dict[str, float]] | None = None
                       ) -> list[DetectorEval]:
    """Precision/recall per measure against planted sets, plus rank AUC
    when per-paper scores are supplied (higher score = more confident)."""
    out = []
    for measure in sorted(tags):
        planted = truth.ids(measure)
        tagged = tags[measure]
        if not planted:
            raise ValueError(f"no planted ids for measure {measure!r}")
        tp = len(tagged & planted)
        precision = tp / len(tagged) if tagged else 0.0
        recall = tp / len(planted)
        auc = None
        if scores is not None and measure in scores:
            auc = rank_auc(scores[measure], planted)
        out.append(DetectorEval(measure, len(planted), len(tagged), tp,
                                precision, recall, auc))
    return out


def rank_auc(scores: dict[str, float], positives: set[str]) -> float | None:
    pos = sorted(v for k, v in scores.items() if k in positives)
    neg = sorted(v for k, v in scores.items() if k not in positives)
    if not pos or not neg:
        return None
    wins = 0.0
    import bisect
    for v in pos:
        lo = bisect.bisect_left(neg, v)
        hi = bisect.bisect_right(neg, v)
        wins += lo + 0.5 * (hi - lo)
    return wins / (len(pos) * len(neg))

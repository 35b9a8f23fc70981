"""Bundled corpus presets: deterministic SynthSpec factories.

Each preset regenerates byte-identically from its seed, so fixtures are
code, not committed data. `standard` carries every planted story the
acceptance battery needs; `mini` is the 1,000-record corpus used for
determinism and counting oracles; `stationary` has a static mixing
structure with a deterministic volume-growth spread; `scale`/`openalex`
cover the performance and format smoke runs.
"""

from __future__ import annotations

from .synthgen import (ClusterPlan, PairPlan, SynthSpec, flat_schedule,
                       growth_volume, ramp_schedule)

MINI_YEARS = (2010, 2019)
MINI_ANALYSIS_YEAR = 2016

EMERGENCE_YEARS = (2010, 2022)
EMERGENCE_ANALYSIS_YEAR = 2020
PRESCIENCE_YEARS = (2010, 2022)
PRESCIENCE_ANALYSIS_YEAR = 2018

_MIXES = [
    {"US": 0.8, "GB": 0.2},
    {"CN": 0.9, "JP": 0.1},
    {"DE": 0.6, "FR": 0.4},
    {"US": 0.5, "CN": 0.5},
    {"GB": 0.7, "IN": 0.3},
    {"JP": 0.8, "KR": 0.2},
]


def _mix(i: int) -> dict[str, float]:
    return dict(_MIXES[i % len(_MIXES)])


def mini_corpus_spec(seed: int = 101) -> SynthSpec:
    """Exactly 1,000 records: 2 fields x 5 clusters x 10 years x 10 papers.

    Carries reviews (12%) and non-English records for the filtering
    oracles, one merge pair for prescience, and a small disruptive
    planting so every pipeline stage has work to do.
    """
    years = MINI_YEARS
    clusters = []
    for fi, fname in enumerate(("bio", "comp")):
        for ci in range(5):
            clusters.append(ClusterPlan(
                name=f"{fname[0]}{ci}", field=fname, countries=_mix(fi * 5 + ci),
                volume=flat_schedule(years, 10),
                purity=flat_schedule(years, 0.85),
                n_keywords=12, n_authors=15, n_venues=3))
    pairs = [PairPlan("c0", "c1",
                      ramp_schedule(years, 0.05, 0.6, MINI_ANALYSIS_YEAR,
                                    MINI_ANALYSIS_YEAR + 2),
                      planted_year=MINI_ANALYSIS_YEAR)]
    return SynthSpec(
        years=years, fields=("bio", "comp"), clusters=clusters, pairs=pairs,
        review_rate=0.12, nonenglish_rate=0.08, multi_country_rate=0.06,
        intl_collab_rate=0.10, disruptive_fraction=0.04,
        consolidating_fraction=0.04, citation_base=4.0, seed=seed)


def emergence_battery_spec(seed: int = 7) -> SynthSpec:
    """Planted emerging areas in one large field.

    100 static background clusters; a family of 3 emergent clusters whose
    per-keyword annual counts follow 5.3*e^(0.5t)+2.0 from 2016, with
    sampling purity ramping 0.45 -> 0.95 early (2013-2018) so the family is
    both converging over the lookback spaces and the tightest neighborhood
    by the analysis window. Constant sibling mixing keeps the family
    adjacent in embedding space, so each planted central's 24 neighbors
    stay inside the 27-keyword family and the selected areas are pure. The
    family's 2020 paper volume (~180) sits just under the 5% tag budget
    (~230), which the paper-recall and precision targets both need.
    """
    years = EMERGENCE_YEARS
    t_em = EMERGENCE_ANALYSIS_YEAR
    clusters = []
    for ci in range(100):
        clusters.append(ClusterPlan(
            name=f"e{ci:02d}", field="eng", countries=_mix(ci),
            volume=flat_schedule(years, 45),
            purity=flat_schedule(years, 0.82),
            n_keywords=16, n_authors=20, n_venues=4))
    purity = ramp_schedule(years, 0.45, 0.95, t_em - 7, t_em - 2)
    for ci in range(3):
        clusters.append(ClusterPlan(
            name=f"em{ci}", field="eng", countries={"CN": 0.8, "US": 0.2},
            volume=growth_volume(years, t_em - 4, 5.3, 0.5, 2.0, 9,
                                 6.5, purity),
            purity=purity, n_keywords=9, n_authors=16, n_venues=3,
            emergent_b=0.5))
    sib = flat_schedule(years, 0.30)
    pairs = [PairPlan("em0", "em1", sib, label="sibling"),
             PairPlan("em1", "em2", sib, label="sibling"),
             PairPlan("em0", "em2", sib, label="sibling")]
    return SynthSpec(
        years=years, fields=("eng",), clusters=clusters, pairs=pairs,
        keywords_per_paper=(5, 8), intl_collab_rate=0.10,
        multi_country_rate=0.06, review_rate=0.05, zero_keyword_rate=0.01,
        citation_base=5.0, seed=seed)


def prescience_battery_spec(seed: int = 19) -> SynthSpec:
    """Planted prescience stories plus the robustness-battery scaffolding.

    24 static background clusters; a merge pair m1/m2 (cross papers rare
    through 2018, peaks merged 2019+; the 2018 cross papers are the planted
    prescient set) and a single-country XV merge pair nv1/nv2 for the
    exclusion remodeling. Random cross-cluster combos act as high-surprise,
    zero-prescience decoys; planted prescient papers get a citation boost
    for the citation-curve analog. Disruptive and consolidating citation
    patterns are planted for the tag machinery. Declining areas live in the
    separate `diverging` preset so their bottom-tail competition does not
    interact with the merge stories.
    """
    years = PRESCIENCE_YEARS
    t = PRESCIENCE_ANALYSIS_YEAR
    clusters = []
    for ci in range(24):
        clusters.append(ClusterPlan(
            name=f"b{ci:02d}", field="biomed", countries=_mix(ci + 2),
            volume=flat_schedule(years, 20),
            purity=flat_schedule(years, 0.90),
            n_keywords=18, n_authors=16, n_venues=4))
    for name, mix, vol in (("m1", {"US": 0.7, "GB": 0.3}, 80),
                           ("m2", {"DE": 0.6, "US": 0.4}, 80),
                           ("nv1", {"XV": 1.0}, 40),
                           ("nv2", {"XV": 1.0}, 40)):
        clusters.append(ClusterPlan(
            name=name, field="biomed", countries=mix,
            volume=flat_schedule(years, vol),
            purity=flat_schedule(years, 0.92),
            n_keywords=14, n_authors=16, n_venues=4))

    def merge_schedule():
        out = ramp_schedule(years, 0.01, 0.85, t, t + 1)
        out[t] = 0.15  # the planted prescient cohort
        return out

    pairs = [
        PairPlan("m1", "m2", merge_schedule(), planted_year=t,
                 label="prescient", cross_purity=0.99),
        PairPlan("nv1", "nv2", merge_schedule(), planted_year=t,
                 label="prescient", cross_purity=0.99),
    ]
    return SynthSpec(
        years=years, fields=("biomed",), clusters=clusters, pairs=pairs,
        keywords_per_paper=(4, 6), venues_per_paper=(2, 4),
        intl_collab_rate=0.15, multi_country_rate=0.06,
        random_combo_rate=0.03, zero_keyword_rate=0.01,
        disruptive_fraction=0.02, consolidating_fraction=0.02,
        citation_base=20.0, prescient_citation_boost=60, seed=seed)


def diverging_spec(seed: int = 29) -> SynthSpec:
    """Diverging clusters: d1 and d2 cross routinely through 2018, then
    stop entirely while each surges into a partnership with a cluster born
    in 2019 (d3/d4), actively pulling the pair's dimensions apart. The 2018
    cross papers are the planted declining set. A plain cessation of
    co-occurrence leaves the factor likelihood flat in the reallocation
    directions, so the newborn-partner pull is what makes the decline
    legible at this scale.
    """
    years = PRESCIENCE_YEARS
    t = PRESCIENCE_ANALYSIS_YEAR
    clusters = []
    for ci in range(20):
        clusters.append(ClusterPlan(
            name=f"b{ci:02d}", field="sci", countries=_mix(ci),
            volume=flat_schedule(years, 45),
            purity=flat_schedule(years, 0.90),
            n_keywords=16, n_authors=14, n_venues=4))
    surge = {y: (40 if y <= t else 200) for y in range(years[0], years[1] + 1)}
    for name, mix in (("d1", {"JP": 0.7, "KR": 0.3}),
                      ("d2", {"CN": 0.8, "JP": 0.2})):
        clusters.append(ClusterPlan(
            name=name, field="sci", countries=mix, volume=dict(surge),
            purity=flat_schedule(years, 0.92),
            n_keywords=14, n_authors=14, n_venues=4))
    born = {y: (0 if y <= t else 200) for y in range(years[0], years[1] + 1)}
    for name, mix in (("d3", {"US": 0.6, "IN": 0.4}),
                      ("d4", {"GB": 0.7, "FR": 0.3})):
        clusters.append(ClusterPlan(
            name=name, field="sci", countries=mix, volume=dict(born),
            purity=flat_schedule(years, 0.92),
            n_keywords=14, n_authors=14, n_venues=4))
    dec = ramp_schedule(years, 0.6, 0.0, t, t + 1)
    dec[t] = 0.5
    pairs = [
        PairPlan("d1", "d2", dec, planted_year=t, label="declining",
                 cross_purity=0.99),
        PairPlan("d1", "d3", ramp_schedule(years, 0.0, 0.95, t, t + 1),
                 label="sibling"),
        PairPlan("d2", "d4", ramp_schedule(years, 0.0, 0.95, t, t + 1),
                 label="sibling"),
    ]
    return SynthSpec(years=years, fields=("sci",), clusters=clusters,
                     pairs=pairs, keywords_per_paper=(5, 7),
                     venues_per_paper=(2, 4), intl_collab_rate=0.10,
                     multi_country_rate=0.05, citation_base=6.0, seed=seed)


STATIONARY_YEARS = (2010, 2021)
STATIONARY_ANALYSIS_YEAR = 2018


def stationary_spec(seed: int = 31) -> SynthSpec:
    """Static mixing structure (prescience should average ~0) with a
    deterministic volume-growth spread topped by one clear winner cluster,
    so the emerging set is structure-driven and stable when a ~10%-volume
    country (XC, spread over every cluster) is excluded from training.

    The winner carries 26 keywords so its areas stay inside the cluster and
    their centroid survives embedding retrains; the remaining clusters'
    growth rates sit well below it.
    """
    years = STATIONARY_YEARS
    clusters = []
    n = 23
    for ci in range(n):
        g = -0.08 + 0.20 * ci / (n - 1)  # fixed growth-rate spread
        base = 8 + (ci % 4)
        volume = {y: max(2, round(base * (2.718281828 ** (g * (y - years[0])))))
                  for y in range(years[0], years[1] + 1)}
        mix = dict(_mix(ci))
        mix = {c: p * 0.95 for c, p in mix.items()}
        mix["XC"] = 0.05
        clusters.append(ClusterPlan(
            name=f"s{ci:02d}", field="sci", countries=mix,
            volume=volume, purity=flat_schedule(years, 0.88),
            n_keywords=16, n_authors=14, n_venues=4))
    winner_vol = {y: min(60, max(2, round(1.7 * (2.718281828
                                                 ** (0.45 * (y - years[0]))))))
                  for y in range(years[0], years[1] + 1)}
    clusters.append(ClusterPlan(
        name="w00", field="sci",
        countries={"US": 0.55, "CN": 0.40, "XC": 0.05},
        volume=winner_vol, purity=flat_schedule(years, 0.88),
        n_keywords=26, n_authors=16, n_venues=4))
    return SynthSpec(years=years, fields=("sci",), clusters=clusters,
                     keywords_per_paper=(4, 6), intl_collab_rate=0.08,
                     citation_base=6.0, seed=seed)


def scale_spec(n_papers: int = 100_000, seed: int = 77) -> SynthSpec:
    """Performance corpus: volumes solve to ~n_papers over 10 years."""
    years = (2012, 2021)
    n_years = years[1] - years[0] + 1
    n_clusters = 200
    per = max(1, round(n_papers / (n_years * n_clusters)))
    clusters = [ClusterPlan(
        name=f"x{ci:03d}", field=("f1", "f2")[ci % 2], countries=_mix(ci),
        volume=flat_schedule(years, per),
        purity=flat_schedule(years, 0.85),
        n_keywords=24, n_authors=30, n_venues=4) for ci in range(n_clusters)]
    return SynthSpec(years=years, fields=("f1", "f2"), clusters=clusters,
                     keywords_per_paper=(4, 6), citation_base=3.0, seed=seed)


def openalex_sample_spec(n_papers: int = 50_000, seed: int = 55) -> SynthSpec:
    spec = scale_spec(n_papers, seed)
    spec.review_rate = 0.10
    spec.nonenglish_rate = 0.06
    spec.disruptive_fraction = 0.01
    return spec


def converging_demo_spec(seed: int = 13) -> SynthSpec:
    """One converging+growing cluster (b*=0.5) over a static field; the
    planted-parameter recovery example. Counts are sized so the cluster's
    aggregate annual frequency tracks the curve within estimator noise."""
    years = (2012, 2020)
    t = 2020
    clusters = []
    for ci in range(16):
        clusters.append(ClusterPlan(
            name=f"g{ci:02d}", field="demo", countries=_mix(ci),
            volume=flat_schedule(years, 20),
            purity=flat_schedule(years, 0.85),
            n_keywords=14, n_authors=12, n_venues=3))
    purity = ramp_schedule(years, 0.60, 0.95, t - 4, t)
    clusters.append(ClusterPlan(
        name="grow", field="demo", countries={"US": 1.0},
        volume=growth_volume(years, t - 4, 16.0, 0.5, 8.0, 12, 5.0, purity),
        purity=purity, n_keywords=12, n_authors=14, n_venues=3,
        emergent_b=0.5))
    return SynthSpec(years=years, fields=("demo",), clusters=clusters,
                     keywords_per_paper=(4, 6), seed=seed)


PRESETS = {
    "mini": mini_corpus_spec,
    "emergence-battery": emergence_battery_spec,
    "prescience-battery": prescience_battery_spec,
    "diverging": diverging_spec,
    "stationary": stationary_spec,
    "scale100k": scale_spec,
    "openalex50k": openalex_sample_spec,
    "converging-demo": converging_demo_spec,
}

"""Emerging-area detection: convergence, growth, prevalence, rank aggregation.

An area is a central keyword plus its 24 nearest keyword neighbors in one
year's embedding space. Areas are scored on four criteria: how fast member
pairs moved together over the last three years (convergence), the growth
rate b of an a*e^(b*t)+c fit to the central keyword's five annual counts,
the keyword's share of all keyword mentions in its field-year (prevalence),
and the R^2 of the exponential fit. Per-field rankings are averaged into a
final score; the top percentile forms the emerging set.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._accel.rng import SplitMix64
from .corpus import Corpus, PaperRecord
from .embedding import (EmbeddingSpace, UnrepresentableError, centroid,
                        cosine_distance, nearest_neighbors)
from .ranking import descending_ranks, tag_top_fraction


@dataclass(frozen=True)
class Area:
    central: str
    members: tuple[str, ...]  # central first, then neighbors in rank order
    field: str
    year: int
    short: bool = False  # space held fewer keywords than requested


@dataclass
class EmergenceScores:
    convergence: float
    growth_b: float
    prevalence: float
    fit_r2: float
    final_rank_score: float | None = None


@dataclass
class EmergingSet:
    year: int
    field: str
    areas: list[tuple[Area, EmergenceScores]]

    def centrals(self) -> list[str]:
        return [a.central for a, _ in self.areas]


@dataclass
class LiftResult:
    lift: float | None
    close_rate: float
    far_rate: float
    n_close: int
    n_far: int
    degenerate: bool = False


def area_of(s: EmbeddingSpace, central: str, field: str = "",
            neighbors: int = 24) -> Area:
    """Central keyword plus its `neighbors` nearest keyword neighbors."""
    nn = nearest_neighbors(s, central, neighbors, kind_filter="keyword")
    members = (central,) + tuple(t[2:] for t, _ in nn)
    return Area(central, members, field, s.year, short=len(nn) < neighbors)


def convergence_score(spaces: list[EmbeddingSpace], area: Area) -> float | None:
    """Negated mean pairwise distance velocity; positive = converging.

    `spaces` are consecutive years ascending, ending at the area's year.
    Pairs with a member missing from any year are skipped; fewer than two
    members present in any year makes the score undefined (None).
    """
    if len(spaces) < 2:
        raise ValueError("need at least two years of spaces")
    members = sorted(set(area.members))
    tokens = [f"K:{m}" for m in members]
    keep = [m for m, t in zip(members, tokens)
            if all(t in s.token_index for s in spaces)]
    if len(keep) < 2:
        return None
    # distance matrix per year over the surviving members
    dists = []
    for s in spaces:
        u = np.stack([s.vector(f"K:{m}").astype(np.float64) for m in keep])
        norms = np.linalg.norm(u, axis=1)
        if np.any(norms == 0):
            return None
        u /= norms[:, None]
        dists.append(1.0 - u @ u.T)
    total = 0.0
    n = 0
    iu = np.triu_indices(len(keep), k=1)
    for later, earlier in zip(dists[1:], dists[:-1]):
        delta = later[iu] - earlier[iu]
        total += float(delta.sum())
        n += delta.size
    if n == 0:
        return None
    return -total / n


def _exp_fit_ss(b: float, t: np.ndarray, y: np.ndarray):
    """Closed-form least squares of y ~ a*exp(b*t) + c for fixed b."""
    x = np.exp(b * t)
    n = float(len(y))
    sx = float(x.sum())
    sxx = float(x @ x)
    sy = float(y.sum())
    sxy = float(x @ y)
    det = sxx * n - sx * sx
    if det <= 1e-12 * max(sxx * n, 1.0):
        # columns collinear (b ~ 0): intercept-only fit
        c = sy / n
        resid = y - c
        return float(resid @ resid), np.array([0.0, c])
    a = (sxy * n - sx * sy) / det
    c = (sxx * sy - sx * sxy) / det
    resid = y - a * x - c
    return float(resid @ resid), np.array([a, c])


def frequency_growth(counts) -> tuple[float, float]:
    """Least-squares a*e^(b*t)+c over t = 0..len-1; returns (b, R^2).

    1-D search over b in [-2, 3]: coarse grid, then golden-section to 1e-4,
    with closed-form linear least squares for (a, c) at each b. A constant
    series (including all zeros) returns (0.0, 0.0): R^2 is undefined when
    the series has no variance.
    """
    y = np.asarray(counts, dtype=np.float64)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("need a 1-D series of at least 3 values")
    t = np.arange(y.size, dtype=np.float64)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 0.0, 0.0

    grid = np.linspace(-2.0, 3.0, 201)
    ss_grid = [_exp_fit_ss(b, t, y)[0] for b in grid]
    i = int(np.argmin(ss_grid))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b_hi = lo, hi
    c = b_hi - invphi * (b_hi - a)
    d = a + invphi * (b_hi - a)
    fc = _exp_fit_ss(c, t, y)[0]
    fd = _exp_fit_ss(d, t, y)[0]
    while b_hi - a > 1e-4:
        if fc < fd:
            b_hi, d, fd = d, c, fc
            c = b_hi - invphi * (b_hi - a)
            fc = _exp_fit_ss(c, t, y)[0]
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b_hi - a)
            fd = _exp_fit_ss(d, t, y)[0]
    b = (a + b_hi) / 2.0
    ss_res, _ = _exp_fit_ss(b, t, y)
    return float(b), 1.0 - ss_res / ss_tot


def field_year_keyword_stats(corpus: Corpus, field: str,
                             year: int) -> tuple[Counter, int]:
    """(keyword -> paper count, total keyword mentions) for one field-year."""
    counts: Counter = Counter()
    total = 0
    for rec in corpus.by_field.get(field, []):
        if rec.year != year:
            continue
        total += len(rec.keywords)
        counts.update(rec.keywords)
    return counts, total


def prevalence(kw: str, field: str, year: int, view: Corpus) -> float | None:
    """Share of the field-year's keyword mentions held by kw; None if the
    field-year has no keyword mentions at all."""
    counts, total = field_year_keyword_stats(view, field, year)
    if total == 0:
        return None
    return counts.get(kw, 0) / total


def score_candidates(corpus: Corpus, field: str, year: int,
                     spaces: list[EmbeddingSpace], neighbors: int = 24,
                     min_count: int = 1, growth_years: int = 5
                     ) -> list[tuple[Area, EmergenceScores]]:
    """Score every candidate central keyword of a field-year.

    Candidates are keywords with >= min_count papers in the field-year that
    are present in the target year's space. Candidates whose convergence or
    prevalence is undefined, or whose counts are all zero, are excluded.
    """
    space = spaces[-1]
    stats_by_year = {y: field_year_keyword_stats(corpus, field, y)
                     for y in range(year - growth_years + 1, year + 1)}
    counts_now, total_now = stats_by_year[year]
    if total_now == 0:
        return []
    out = []
    for kw in sorted(counts_now):
        if counts_now[kw] < min_count or f"K:{kw}" not in space.token_index:
            continue
        area = area_of(space, kw, field)
        conv = convergence_score(spaces, area)
        if conv is None:
            continue
        series = [stats_by_year[y][0].get(kw, 0)
                  for y in range(year - growth_years + 1, year + 1)]
        if not any(series):
            continue
        b, r2 = frequency_growth(series)
        prev = counts_now[kw] / total_now
        out.append((area, EmergenceScores(conv, b, prev, r2)))
    return out


def rank_areas(candidates: list[tuple[Area, EmergenceScores]]
               ) -> list[tuple[Area, EmergenceScores]]:
    """Average the four descending rank positions into final_rank_score.

    Rank 1 is best on each criterion; ties share the mean of their
    positions. Output ascends by final score, residual ties broken by the
    central keyword.
    """
    if not candidates:
        return []
    per_metric = [
        descending_ranks([s.convergence for _, s in candidates]),
        descending_ranks([s.growth_b for _, s in candidates]),
        descending_ranks([s.prevalence for _, s in candidates]),
        descending_ranks([s.fit_r2 for _, s in candidates]),
    ]
    for i, (_, scores) in enumerate(candidates):
        scores.final_rank_score = sum(m[i] for m in per_metric) / 4.0
    return sorted(candidates,
                  key=lambda pair: (pair[1].final_rank_score, pair[0].central))


def select_emerging(ranked: list[tuple[Area, EmergenceScores]], year: int,
                    field: str, top_pct: float = 0.01) -> EmergingSet:
    """Top ceil(top_pct * N) areas of one field's ranked candidates."""
    if not 0.0 < top_pct <= 1.0:
        raise ValueError("top_pct must be in (0, 1]")
    k = math.ceil(top_pct * len(ranked)) if ranked else 0
    return EmergingSet(year, field, list(ranked[:k]))


def paper_distance(p: PaperRecord, s: EmbeddingSpace,
                   emerging_sets: list[EmergingSet]) -> float | None:
    """Min cosine distance from p's keyword centroid to any emerging area's
    member centroid, over the emerging sets of p's fields. None when the
    paper is unrepresentable or no area exists for its fields."""
    areas = [a for es in emerging_sets if es.field in p.fields
             for a, _ in es.areas]
    if not areas or not p.keywords:
        return None
    try:
        pvec = centroid(s, p.keywords)
    except UnrepresentableError:
        return None
    if not np.any(pvec):
        return None
    best = None
    for area in areas:
        avec = centroid(s, area.members)
        if not np.any(avec):
            continue
        d = cosine_distance(pvec, avec)
        if best is None or d < best:
            best = d
    return best


def tag_emergent_papers(distances: dict[str, float],
                        top_pct: float = 0.05) -> set[str]:
    """Smallest-distance top_pct of one field-year, boundary ties included."""
    return tag_top_fraction(distances, top_pct, largest=False)


@dataclass
class AreaCredit:
    area: Area
    authors: list[tuple[str, float]]  # (author token, distance), ascending
    countries: Counter
    short: bool


def emergence_credit(area: Area, s: EmbeddingSpace, view: Corpus,
                     k: int = 10) -> AreaCredit:
    """Countries of the k authors nearest the area centroid whose window
    work includes the central keyword. Every country of a multi-affiliation
    author counts once."""
    papers = view.by_keyword.get(area.central, [])
    qualifying = sorted({a.author_id for rec in papers for a in rec.authors})
    center = centroid(s, area.members)
    scored = []
    for author_id in qualifying:
        token = f"A:{author_id}"
        idx = s.token_index.get(token)
        if idx is None:
            continue
        vec = s.matrix[idx].astype(np.float64)
        if not np.any(vec) or not np.any(center):
            continue
        scored.append((cosine_distance(center, vec), token))
    scored.sort()
    top = scored[:k]
    countries: Counter = Counter()
    for _, token in top:
        author_id = token[2:]
        cset: set[str] = set()
        for rec in view.by_author.get(author_id, []):
            for a in rec.authors:
                if a.author_id == author_id:
                    cset.update(a.known_countries())
        for c in sorted(cset):
            countries[c] += 1
    return AreaCredit(area, [(t, d) for d, t in top], countries,
                      short=len(top) < k)


def cooccurrence_lift(s: EmbeddingSpace, view_next: Corpus, threshold: float,
                      n_pairs: int = 20000, seed: int = 0) -> LiftResult:
    """Ratio of next-year co-occurrence rates for close vs distant keyword
    pairs at year t, over sampled pairs.

    When the threshold puts every sampled pair in the close bucket the lift
    is 1.0 by construction (flagged degenerate); any other empty bucket
    leaves the lift undefined (None).
    """
    kws = [t[2:] for t in s.tokens if t.startswith("K:")]
    if len(kws) < 2 or len(view_next) == 0:
        raise ValueError("need a space with >= 2 keywords and a nonempty view")
    papers_of = {kw: {r.paper_id for r in view_next.by_keyword.get(kw, [])}
                 for kw in kws}
    rng = SplitMix64(seed, 17)
    n_close = n_far = 0
    co_close = co_far = 0
    for _ in range(n_pairs):
        i = rng.next_below(len(kws))
        j = rng.next_below(len(kws))
        if i == j:
            continue
        a, b = kws[i], kws[j]
        d = cosine_distance(s.vector(f"K:{a}"), s.vector(f"K:{b}"))
        co = bool(papers_of[a] & papers_of[b])
        if d <= threshold:
            n_close += 1
            co_close += co
        else:
            n_far += 1
            co_far += co
    if n_close and n_far == 0:
        return LiftResult(1.0, co_close / n_close, float("nan"),
                          n_close, 0, degenerate=True)
    if n_close == 0 or n_far == 0:
        return LiftResult(None, float("nan"), float("nan"),
                          n_close, n_far, degenerate=True)
    close_rate = co_close / n_close
    far_rate = co_far / n_far
    lift = close_rate / far_rate if far_rate > 0 else None
    return LiftResult(lift, close_rate, far_rate, n_close, n_far)

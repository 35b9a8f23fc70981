"""Publication records: ingestion, validation, filtering, country attribution.

Records arrive as line-delimited JSON (one object per line). The native
schema mirrors PaperRecord field for field; schema_version="openalex" maps
OpenAlex-shaped works instead. Malformed lines are skipped and reported,
never fatal. A Corpus is immutable after ingestion; window views are fresh
Corpus snapshots.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

UNKNOWN = "UNKNOWN"

_WS = re.compile(r"\s+")


def normalize_term(s: str) -> str:
    """Lowercase, trim, collapse internal whitespace. No stemming."""
    return _WS.sub(" ", s.strip().lower())


class AttributionStrategy(Enum):
    ANY_AUTHOR = "any"
    FIRST_AUTHOR = "first"
    LAST_AUTHOR = "last"
    CORRESPONDING_AUTHOR = "corresponding"
    UNANIMOUS = "unanimous"

    @classmethod
    def parse(cls, s: str) -> "AttributionStrategy":
        for member in cls:
            if member.value == s.strip().lower():
                return member
        raise ValueError(f"unknown attribution strategy {s!r}")


@dataclass(frozen=True)
class AuthorRef:
    author_id: str
    countries: frozenset[str]
    position: int
    is_corresponding: bool = False

    def known_countries(self) -> frozenset[str]:
        return frozenset(c for c in self.countries if c != UNKNOWN)


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    year: int
    keywords: tuple[str, ...]
    ref_venues: tuple[str, ...]
    references: tuple[str, ...]
    authors: tuple[AuthorRef, ...]
    fields: tuple[str, ...]
    is_review: bool
    language: str
    citation_count: int | None = None

    @property
    def field(self) -> str:
        return self.fields[0] if self.fields else ""


@dataclass
class Rejection:
    line: int
    reason: str


class Taxonomy:
    """Field labels plus a keyword -> field fallback, loaded from a config file.

    File format: one `field: label` line per allowed label, and optional
    `map: keyword -> label` fallback lines.
    """

    def __init__(self, labels: Iterable[str], keyword_to_field: dict[str, str]):
        self.labels = set(labels)
        self.keyword_to_field = dict(keyword_to_field)

    @classmethod
    def load(cls, path: str) -> "Taxonomy":
        labels: list[str] = []
        mapping: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition(":")
                key = key.strip().lower()
                if key == "field":
                    labels.append(value.strip())
                elif key == "map":
                    kw, _, label = value.partition("->")
                    mapping[normalize_term(kw)] = label.strip()
                else:
                    raise ValueError(f"unrecognized taxonomy line: {line!r}")
        return cls(labels, mapping)

    def fallback_field(self, keywords: Iterable[str]) -> str | None:
        for kw in keywords:
            if kw in self.keyword_to_field:
                return self.keyword_to_field[kw]
        return None


class Corpus:
    """Indexed, immutable collection of PaperRecord."""

    def __init__(self, records: list[PaperRecord],
                 rejections: list[Rejection] | None = None):
        self.records = records
        self.rejections = rejections or []
        self._by_id: dict[str, PaperRecord] = {}
        self.by_year: dict[int, list[PaperRecord]] = {}
        self.by_field: dict[str, list[PaperRecord]] = {}
        self.by_keyword: dict[str, list[PaperRecord]] = {}
        self.by_author: dict[str, list[PaperRecord]] = {}
        for rec in records:
            self._by_id[rec.paper_id] = rec
            self.by_year.setdefault(rec.year, []).append(rec)
            for f in rec.fields:
                self.by_field.setdefault(f, []).append(rec)
            for kw in rec.keywords:
                self.by_keyword.setdefault(kw, []).append(rec)
            for a in rec.authors:
                self.by_author.setdefault(a.author_id, []).append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PaperRecord]:
        return iter(self.records)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self._by_id

    def get(self, paper_id: str) -> PaperRecord:
        return self._by_id[paper_id]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self._by_id == other._by_id

    def years(self) -> list[int]:
        return sorted(self.by_year)

    def fields(self) -> list[str]:
        return sorted(self.by_field)


def _as_str_list(value, what: str) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValueError(f"{what} must be a list of strings")
    return value


def _record_from_native(obj: dict, year_range: tuple[int, int],
                        taxonomy: Taxonomy | None) -> PaperRecord:
    paper_id = obj.get("paper_id")
    if not isinstance(paper_id, str) or not paper_id:
        raise ValueError("missing paper_id")
    year = obj.get("year")
    if not isinstance(year, int):
        raise ValueError("missing or non-integer year")
    if not (year_range[0] <= year <= year_range[1]):
        raise ValueError(f"year {year} outside corpus range {year_range}")

    seen: set[str] = set()
    keywords: list[str] = []
    for kw in _as_str_list(obj.get("keywords", []), "keywords"):
        norm = normalize_term(kw)
        if norm and norm not in seen:
            seen.add(norm)
            keywords.append(norm)

    venues = []
    vseen: set[str] = set()
    for v in _as_str_list(obj.get("ref_venues", []), "ref_venues"):
        norm = normalize_term(v)
        if norm and norm not in vseen:
            vseen.add(norm)
            venues.append(norm)

    references = tuple(r for r in _as_str_list(obj.get("references", []),
                                               "references") if r != paper_id)

    raw_authors = obj.get("authors")
    if not isinstance(raw_authors, list) or not raw_authors:
        raise ValueError("authors must be a nonempty list")
    authors = []
    positions: set[int] = set()
    for a in raw_authors:
        if not isinstance(a, dict):
            raise ValueError("author entries must be objects")
        aid = a.get("author_id")
        if not isinstance(aid, str) or not aid:
            raise ValueError("author missing author_id")
        pos = a.get("position")
        if not isinstance(pos, int) or pos in positions:
            raise ValueError("author positions must be unique integers")
        positions.add(pos)
        countries = frozenset(c.strip().upper() for c in
                              _as_str_list(a.get("countries", []), "countries")
                              if c.strip())
        authors.append(AuthorRef(aid, countries, pos,
                                 bool(a.get("is_corresponding", False))))
    authors.sort(key=lambda a: a.position)

    raw_field = obj.get("field")
    if isinstance(raw_field, str):
        fields = [raw_field] if raw_field else []
    elif isinstance(raw_field, list):
        fields = [f for f in raw_field if isinstance(f, str) and f]
    elif raw_field is None:
        fields = []
    else:
        raise ValueError("field must be a string or list of strings")
    if not fields and taxonomy is not None:
        fb = taxonomy.fallback_field(keywords)
        if fb:
            fields = [fb]
    if not fields:
        raise ValueError("missing field label")
    if taxonomy is not None:
        for f in fields:
            if f not in taxonomy.labels:
                raise ValueError(f"field {f!r} not in taxonomy")

    cc = obj.get("citation_count")
    if cc is not None and (not isinstance(cc, int) or cc < 0):
        raise ValueError("citation_count must be a nonnegative integer")

    return PaperRecord(
        paper_id=paper_id, year=year, keywords=tuple(keywords),
        ref_venues=tuple(venues), references=references,
        authors=tuple(authors), fields=tuple(fields),
        is_review=bool(obj.get("is_review", False)),
        language=str(obj.get("language", "")), citation_count=cc)


def _native_to_obj(rec: PaperRecord) -> dict:
    return {
        "paper_id": rec.paper_id,
        "year": rec.year,
        "keywords": list(rec.keywords),
        "ref_venues": list(rec.ref_venues),
        "references": list(rec.references),
        "authors": [{"author_id": a.author_id,
                     "countries": sorted(a.countries),
                     "position": a.position,
                     "is_corresponding": a.is_corresponding}
                    for a in rec.authors],
        "field": list(rec.fields) if len(rec.fields) > 1 else rec.field,
        "is_review": rec.is_review,
        "language": rec.language,
        "citation_count": rec.citation_count,
    }


def _openalex_to_native(obj: dict, venue_of: dict[str, str]) -> dict:
    """Map one OpenAlex-shaped work to the native schema.

    Referenced venues come from the venues of referenced works found in the
    same file (no venue data travels on the reference itself).
    """
    work_id = obj.get("id")
    authors = []
    for pos, auth in enumerate(obj.get("authorships", [])):
        countries = auth.get("countries")
        if not countries:
            countries = [inst.get("country_code", "") for inst in
                         auth.get("institutions", [])]
        authors.append({
            "author_id": (auth.get("author") or {}).get("id", ""),
            "countries": [c for c in countries if c],
            "position": pos,
            "is_corresponding": bool(auth.get("is_corresponding", False)),
        })
    concepts = [c.get("display_name", "") for c in obj.get("concepts", [])
                if c.get("level", 0) >= 2]
    refs = obj.get("referenced_works", []) or []
    ref_venues = sorted({venue_of[r] for r in refs if r in venue_of and venue_of[r]})
    field = None
    topic = obj.get("primary_topic") or {}
    if topic:
        field = ((topic.get("field") or {}).get("display_name"))
    return {
        "paper_id": work_id,
        "year": obj.get("publication_year"),
        "keywords": concepts,
        "ref_venues": ref_venues,
        "references": refs,
        "authors": authors,
        "field": field,
        "is_review": obj.get("type") == "review",
        "language": obj.get("language", ""),
        "citation_count": obj.get("cited_by_count"),
    }


def ingest(path: str, schema_version: str = "1",
           year_range: tuple[int, int] = (1800, 2100),
           taxonomy: Taxonomy | None = None) -> Corpus:
    """Parse a line-delimited record file into a Corpus.

    Malformed lines and duplicate paper ids are skipped and recorded on
    corpus.rejections. An unreadable file raises OSError.
    """
    if schema_version not in ("1", "openalex"):
        raise ValueError(f"unknown schema_version {schema_version!r}")

    venue_of: dict[str, str] = {}
    if schema_version == "openalex":
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError:
                    continue
                loc = (obj.get("primary_location") or {}).get("source") or {}
                name = loc.get("display_name", "")
                if obj.get("id") and name:
                    venue_of[obj["id"]] = name

    records: list[PaperRecord] = []
    rejections: list[Rejection] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
                if not isinstance(obj, dict):
                    raise ValueError("record is not an object")
                if schema_version == "openalex":
                    obj = _openalex_to_native(obj, venue_of)
                rec = _record_from_native(obj, year_range, taxonomy)
            except (ValueError, json.JSONDecodeError) as exc:
                rejections.append(Rejection(lineno, str(exc)))
                continue
            if rec.paper_id in seen_ids:
                rejections.append(Rejection(lineno,
                                            f"duplicate paper_id {rec.paper_id}"))
                continue
            seen_ids.add(rec.paper_id)
            records.append(rec)
    return Corpus(records, rejections)


def export(corpus: Corpus, path: str) -> None:
    """Write the corpus back out in the native line-delimited schema."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            fh.write(json.dumps(_native_to_obj(rec), sort_keys=True))
            fh.write("\n")


def write_rejections(corpus: Corpus, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line", "reason"])
        for rej in corpus.rejections:
            writer.writerow([rej.line, rej.reason])


def filter_articles(corpus: Corpus, allow_reviews: bool = False,
                    languages: frozenset[str] | set[str] = frozenset({"en"})) -> Corpus:
    """Drop reviews and out-of-language records. Idempotent."""
    langs = {lang.lower() for lang in languages}
    kept = [r for r in corpus.records
            if (allow_reviews or not r.is_review) and r.language.lower() in langs]
    return Corpus(kept)


def window(corpus: Corpus, end_year: int, span: int = 5) -> Corpus:
    """Snapshot of records with end_year - span < year <= end_year."""
    if span < 1:
        raise ValueError("span must be >= 1")
    kept = [r for r in corpus.records if end_year - span < r.year <= end_year]
    return Corpus(kept)


def attribute_countries(p: PaperRecord,
                        s: AttributionStrategy) -> frozenset[str]:
    """Country set credited to paper p under strategy s.

    Returns {UNKNOWN} only when no author on the byline has a known country.
    A single-author strategy whose selected author is unknown while some
    coauthor is known returns the empty set (unattributable under that
    strategy), which keeps every strategy's result inside the AnyAuthor set.
    """
    if not p.authors:
        raise ValueError(f"paper {p.paper_id} has no authors")
    known_any = frozenset().union(*(a.known_countries() for a in p.authors))

    if s is AttributionStrategy.ANY_AUTHOR:
        return known_any if known_any else frozenset({UNKNOWN})

    if s is AttributionStrategy.UNANIMOUS:
        common = p.authors[0].known_countries()
        for a in p.authors[1:]:
            common = common & a.known_countries()
        return common if len(common) == 1 else frozenset()

    if s is AttributionStrategy.FIRST_AUTHOR:
        selected: tuple[AuthorRef, ...] = (p.authors[0],)
    elif s is AttributionStrategy.LAST_AUTHOR:
        selected = (p.authors[-1],)
    else:  # CORRESPONDING_AUTHOR
        selected = tuple(a for a in p.authors if a.is_corresponding)
        if not selected:
            return frozenset()
    chosen = frozenset().union(*(a.known_countries() for a in selected))
    if chosen:
        return chosen
    return frozenset() if known_any else frozenset({UNKNOWN})

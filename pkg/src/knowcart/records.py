"""Bibliographic record ingest: CSV parsing, normalization, dedup, filtering, slicing.

The supported input is a Scopus-style CSV export (UTF-8, comma-delimited,
RFC-4180 quoting) with at least the columns ``Title`` and ``Year``; the
columns ``Authors``, ``Author Keywords``, ``Affiliations``, ``References``,
``Source title`` and ``DOI`` are used when present.
"""

from __future__ import annotations

import io
import json
import re
from csv import DictReader
from dataclasses import dataclass

YEAR_MIN = 1900
YEAR_MAX = 2100

REQUIRED_COLUMNS = ("Title", "Year")

_YEAR_RE = re.compile(r"(?<!\d)\d{4}(?!\d)")
_ALPHA_RE = re.compile(r"[a-z]+")
_ALNUM_RE = re.compile(r"[a-z0-9]+")


class ParseError(ValueError):
    """A structural problem with an export file (e.g. a missing column)."""


@dataclass(frozen=True)
class RowError:
    """One skipped input row with the 1-based line number and a reason."""

    line: int
    message: str


def normalize_keyword(raw: str) -> str:
    """Canonicalize a keyword: lowercase, collapse whitespace, trim.

    Punctuation (hyphens etc.) is preserved. An empty result means the
    input carried no keyword and should be dropped by the caller.
    """
    return " ".join(raw.split()).lower()


def normalize_title(raw: str) -> str:
    """Canonical title used for dedup keys and query matching."""
    return " ".join(raw.split()).lower()


def reference_key(raw_ref: str) -> str:
    """Derive a canonical matching key from a raw reference string.

    The key is ``surname|year|head`` where ``surname`` is the first
    alphabetic token before the first four-digit year, and ``head`` is the
    alphabetic content of the 40 raw characters following that year (a
    single closing parenthesis directly after the year is skipped first).
    Without a year the key degrades to the lowercased alphanumeric tokens
    of the whole string.
    """
    s = raw_ref.strip()
    m = _YEAR_RE.search(s)
    if m is None:
        return " ".join(_ALNUM_RE.findall(s.lower()))
    head_tokens = _ALPHA_RE.findall(s[: m.start()].lower())
    surname = head_tokens[0] if head_tokens else ""
    rest = s[m.end() :]
    if rest.startswith(")"):
        rest = rest[1:]
    tail = " ".join(_ALPHA_RE.findall(rest[:40].lower()))
    return f"{surname}|{m.group()}|{tail}"


@dataclass(frozen=True)
class BibRecord:
    """One parsed article."""

    id: str
    title: str
    authors: tuple[str, ...]
    affiliations: tuple[tuple[str, str], ...]  # (institution, country)
    year: int
    keywords: tuple[str, ...]
    references: tuple[str, ...]
    source: str
    doi: str | None = None

    @property
    def canonical_title(self) -> str:
        return normalize_title(self.title)

    def display_label(self) -> str:
        """Compact "first-author year. venue" string used as a node label."""
        author = self.authors[0].lower() if self.authors else "anon."
        if not author.endswith("."):
            author += "."
        venue = self.source.lower() if self.source else "unknown"
        return f"{author} {self.year}. {venue}"


@dataclass(frozen=True)
class Corpus:
    """Deduplicated, deterministically ordered collection of records."""

    records: tuple[BibRecord, ...]
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate record ids in corpus")
        if ids != sorted(ids):
            object.__setattr__(self, "records", tuple(sorted(self.records, key=lambda r: r.id)))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_id(self, record_id: str) -> BibRecord:
        for r in self.records:
            if r.id == record_id:
                return r
        raise KeyError(record_id)


@dataclass(frozen=True)
class TitleQuery:
    """Boolean title filter: every required term and at least one any-of term.

    Terms match whole words of the canonical title, case-insensitively.
    With ``stem_match`` a term additionally matches its plain plural
    ("risk" matches "risks" and "box" matches "boxes"). An empty
    ``any_of_terms`` set disables the any-of clause.
    """

    required_terms: frozenset[str]
    any_of_terms: frozenset[str] = frozenset()
    stem_match: bool = False

    def __post_init__(self):
        if not self.required_terms:
            raise ValueError("required_terms must be non-empty")
        object.__setattr__(self, "required_terms", frozenset(t.lower() for t in self.required_terms))
        object.__setattr__(self, "any_of_terms", frozenset(t.lower() for t in self.any_of_terms))

    def _term_matches(self, term: str, title: str) -> bool:
        suffix = r"(?:e?s)?" if self.stem_match else ""
        return re.search(rf"\b{re.escape(term)}{suffix}\b", title) is not None

    def matches(self, title: str) -> bool:
        canonical = normalize_title(title)
        if not all(self._term_matches(t, canonical) for t in self.required_terms):
            return False
        if not self.any_of_terms:
            return True
        return any(self._term_matches(t, canonical) for t in self.any_of_terms)


@dataclass(frozen=True)
class PeriodSlicing:
    """Ordered, non-overlapping inclusive year ranges."""

    periods: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple((int(a), int(b)) for a, b in self.periods))
        prev_end = None
        for start, end in self.periods:
            if start > end:
                raise ValueError(f"period {start}-{end} has start > end")
            if prev_end is not None and start <= prev_end:
                raise ValueError(f"period {start}-{end} overlaps or is out of order")
            prev_end = end

    def locate(self, year: int) -> tuple[int, int] | None:
        for start, end in self.periods:
            if start <= year <= end:
                return (start, end)
        return None


def period_label(period: tuple[int, int]) -> str:
    return f"{period[0]}-{period[1]}"


def _split_authors(cell: str) -> tuple[str, ...]:
    sep = ";" if ";" in cell else ","
    return tuple(a.strip() for a in cell.split(sep) if a.strip())


def _split_affiliations(cell: str) -> tuple[tuple[str, str], ...]:
    # "Institution, City, Country; Institution2, Country2" — first segment is
    # the institution, last is the country; entries without both are dropped.
    out = []
    for entry in cell.split(";"):
        parts = [p.strip() for p in entry.split(",") if p.strip()]
        if len(parts) >= 2:
            out.append((parts[0], parts[-1]))
    return tuple(out)


def _split_keywords(cell: str) -> tuple[str, ...]:
    seen = {normalize_keyword(k) for k in cell.split(";")}
    seen.discard("")
    return tuple(sorted(seen))


def parse_export(
    stream,
    format: str = "scopus-csv",
    *,
    ref_delimiter: str = ";",
    year_bounds: tuple[int, int] = (YEAR_MIN, YEAR_MAX),
    id_prefix: str = "d",
    provenance: str = "<stream>",
) -> tuple[Corpus, list[RowError]]:
    """Parse one export stream into a corpus plus a row-level error report.

    ``stream`` may be a text file object, a str, or UTF-8 bytes. Rows with
    a malformed or out-of-bounds year, or an empty title, are skipped and
    reported; a missing required column raises :class:`ParseError` naming it.
    The returned corpus is not deduplicated (see :func:`dedup`).
    """
    if format != "scopus-csv":
        raise ParseError(f"unsupported format: {format}")
    if isinstance(stream, bytes):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)

    reader = DictReader(stream)
    header = reader.fieldnames or []
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise ParseError(f"missing required column: {col}")

    lo, hi = year_bounds
    records: list[BibRecord] = []
    errors: list[RowError] = []
    for row_idx, row in enumerate(reader, start=1):
        line = row_idx + 1  # header is line 1
        title = (row.get("Title") or "").strip()
        if not title:
            errors.append(RowError(line, "empty Title"))
            continue
        raw_year = (row.get("Year") or "").strip()
        try:
            year = int(raw_year)
        except ValueError:
            errors.append(RowError(line, f"malformed Year: {raw_year!r}"))
            continue
        if not lo <= year <= hi:
            errors.append(RowError(line, f"Year {year} outside bounds {lo}-{hi}"))
            continue
        refs = tuple(r.strip() for r in (row.get("References") or "").split(ref_delimiter) if r.strip())
        doi = (row.get("DOI") or "").strip() or None
        records.append(
            BibRecord(
                id=f"{id_prefix}{row_idx:05d}",
                title=title,
                authors=_split_authors(row.get("Authors") or ""),
                affiliations=_split_affiliations(row.get("Affiliations") or ""),
                year=year,
                keywords=_split_keywords(row.get("Author Keywords") or ""),
                references=refs,
                source=(row.get("Source title") or "").strip(),
                doi=doi,
            )
        )
    return Corpus(tuple(records), provenance=(provenance,)), errors


def parse_export_file(path, **kwargs) -> tuple[Corpus, list[RowError]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_export(fh, provenance=str(path), **kwargs)


def merge_corpora(corpora: list[Corpus]) -> Corpus:
    records: list[BibRecord] = []
    provenance: list[str] = []
    for c in corpora:
        records.extend(c.records)
        provenance.extend(c.provenance)
    return Corpus(tuple(records), provenance=tuple(provenance))


def dedup(corpus: Corpus) -> Corpus:
    """Drop duplicates, first occurrence wins: DOI first, then (title, year)."""
    seen_doi: set[str] = set()
    seen_title_year: set[tuple[str, int]] = set()
    kept: list[BibRecord] = []
    for rec in corpus:
        if rec.doi is not None:
            if rec.doi in seen_doi:
                continue
            seen_doi.add(rec.doi)
        ty = (rec.canonical_title, rec.year)
        if ty in seen_title_year:
            continue
        seen_title_year.add(ty)
        kept.append(rec)
    return Corpus(tuple(kept), provenance=corpus.provenance)


def filter_by_title(corpus: Corpus, query: TitleQuery) -> Corpus:
    kept = tuple(r for r in corpus if query.matches(r.title))
    return Corpus(kept, provenance=corpus.provenance)


def slice_periods(
    corpus: Corpus, slicing: PeriodSlicing
) -> tuple[list[tuple[tuple[int, int], Corpus]], list[BibRecord]]:
    """Assign each record to the period containing its year.

    Returns the per-period corpora in period order plus the records whose
    year falls outside every period.
    """
    buckets: dict[tuple[int, int], list[BibRecord]] = {p: [] for p in slicing.periods}
    unassigned: list[BibRecord] = []
    for rec in corpus:
        period = slicing.locate(rec.year)
        if period is None:
            unassigned.append(rec)
        else:
            buckets[period].append(rec)
    slices = [
        (period, Corpus(tuple(buckets[period]), provenance=corpus.provenance))
        for period in slicing.periods
    ]
    return slices, unassigned


def corpus_to_json(corpus: Corpus) -> str:
    """Serialize to the canonical corpus JSON (sorted keys, stable arrays)."""
    payload = {
        "provenance": list(corpus.provenance),
        "records": [
            {
                "id": r.id,
                "title": r.title,
                "authors": list(r.authors),
                "affiliations": [list(a) for a in r.affiliations],
                "year": r.year,
                "keywords": list(r.keywords),
                "references": list(r.references),
                "source": r.source,
                "doi": r.doi,
            }
            for r in corpus
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def corpus_from_json(text: str) -> Corpus:
    payload = json.loads(text)
    records = tuple(
        BibRecord(
            id=r["id"],
            title=r["title"],
            authors=tuple(r["authors"]),
            affiliations=tuple((inst, country) for inst, country in r["affiliations"]),
            year=r["year"],
            keywords=tuple(r["keywords"]),
            references=tuple(r["references"]),
            source=r["source"],
            doi=r["doi"],
        )
        for r in payload["records"]
    )
    return Corpus(records, provenance=tuple(payload.get("provenance", ())))

"""Temporal expression parsing.

Extracts time values from natural-language phrases inside narrative text:
absolute years, month-years, full dates, relative ages, relative offsets,
ongoing markers, early-life markers, and ranges built from any of these.

The recognizer is rule-based and deterministic. Literal vocabularies
(month names, number words, ongoing and early phrases, shift phrases) live
in a versioned lexicon file bundled with the package; the combining
grammar is fixed here. Unrecognized text yields no mentions, never a
guess: a date is only produced when its defining number appears in the
source span.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from storyline.model import DatePrecision, TimeKind, TimeValue

_MIN_AGE, _MAX_AGE = 0, 120


class RangeRole(str, Enum):
    POINT = "point"
    RANGE_START = "range-start"
    RANGE_END = "range-end"


@dataclass(frozen=True)
class TemporalMention:
    """One recognized time expression: source span, value, range role."""

    span: tuple[int, int]  # character offsets into the input text
    value: TimeValue
    role: RangeRole


class LexiconError(Exception):
    """The lexicon file is malformed."""


@dataclass(frozen=True)
class TemporalLexicon:
    version: str
    months: dict[str, int]
    numbers: dict[str, int]
    ongoing: tuple[str, ...]
    early: tuple[str, ...]
    shifts: dict[str, tuple[str, int]]  # phrase -> (unit, delta)


def load_temporal_lexicon(path: str | Path | None = None) -> TemporalLexicon:
    """Read the rule lexicon from `path`, or the bundled default."""
    if path is None:
        text = (resources.files("storyline") / "data/temporal_lexicon.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    version = None
    months: dict[str, int] = {}
    numbers: dict[str, int] = {}
    ongoing: list[str] = []
    early: list[str] = []
    shifts: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise LexiconError(f"line {lineno}: expected 3 tab-separated fields")
        kind, pattern, variant = (p.strip() for p in parts)
        if kind == "meta":
            if pattern == "version":
                version = variant
        elif kind == "month":
            months[pattern.lower()] = int(variant)
        elif kind == "number":
            numbers[pattern.lower()] = int(variant)
        elif kind == "ongoing":
            ongoing.append(pattern.lower())
        elif kind == "early":
            early.append(pattern.lower())
        elif kind == "shift":
            unit, delta = variant.split(":")
            shifts[pattern.lower()] = (unit, int(delta))
        else:
            raise LexiconError(f"line {lineno}: unknown pattern-kind {kind!r}")
    if version is None:
        raise LexiconError("lexicon has no version entry")
    return TemporalLexicon(version, months, numbers, ongoing=tuple(ongoing),
                           early=tuple(early), shifts=shifts)


_NEVER = r"(?!x)x"


def _phrase_alternation(phrases) -> str:
    # longest first so alternation prefers maximal phrases
    ordered = sorted(phrases, key=len, reverse=True)
    return "|".join(re.escape(p) for p in ordered) or _NEVER


@dataclass(frozen=True)
class _Grammar:
    lexicon: TemporalLexicon
    full_date: list[re.Pattern]
    month_year: re.Pattern
    age_range: re.Pattern
    age: re.Pattern
    since_age: re.Pattern
    offset: re.Pattern
    shift: re.Pattern
    year: re.Pattern
    ongoing: re.Pattern
    early: re.Pattern
    connector: re.Pattern
    since_behind: re.Pattern
    between_behind: re.Pattern


def _compile(lexicon: TemporalLexicon) -> _Grammar:
    month = _phrase_alternation(lexicon.months)
    num_word = _phrase_alternation(w for w in lexicon.numbers if w not in ("a", "an"))
    num = rf"(?:\d{{1,3}}|{num_word})"
    count = rf"(?:\d{{1,3}}|{num_word}|an?)"
    year = r"(?:19\d{2}|20\d{2})"
    flags = re.IGNORECASE
    full_date = [
        re.compile(rf"\b({month})\s+(\d{{1,2}})(?:st|nd|rd|th)?\s*,?\s+({year})\b", flags),
        re.compile(rf"\b(\d{{1,2}})(?:st|nd|rd|th)?\s+(?:of\s+)?({month})\s*,?\s+({year})\b", flags),
        re.compile(rf"\b({year})-(\d{{2}})-(\d{{2}})\b", flags),
    ]
    month_year = re.compile(rf"\b({month})\s+(?:of\s+)?({year})\b", flags)
    age_range = re.compile(
        rf"\b(?:between\s+(?:the\s+)?ages?\s+(?:of\s+)?({num})\s+and\s+({num})"
        rf"|from\s+ages?\s+({num})\s+(?:to|until|through)\s+(?:age\s+)?({num}))\b",
        flags,
    )
    age = re.compile(
        rf"\b(?:(?:when|while)\s+i\s+was\s+({num})(?:\s+years?\s+old)?"
        rf"|i\s+was\s+({num})\s+years?\s+old"
        rf"|at\s+(?:the\s+)?age\s+(?:of\s+)?({num})"
        rf"|at\s+({num})\s+years?\s+old"
        rf"|aged\s+({num})"
        rf"|when\s+i\s+turned\s+({num}))"
        rf"\b(?!\s+(?:weeks?|months?|days?))",
        flags,
    )
    since_age = re.compile(rf"\bsince\s+i\s+was\s+({num})(?:\s+years?\s+old)?\b", flags)
    offset = re.compile(rf"\b({count})\s+(years?|months?)\s+(?:ago|back|earlier)\b", flags)
    shift = re.compile(rf"\b({_phrase_alternation(lexicon.shifts)})\b", flags)
    year_lit = re.compile(rf"\b({year})\b", flags)
    ongoing = re.compile(rf"\b(?:{_phrase_alternation(lexicon.ongoing)})\b", flags)
    early = re.compile(rf"\b(?:{_phrase_alternation(lexicon.early)})\b", flags)
    connector = re.compile(r"\s*(?:to|until|till|through|[–—−-]|,?\s*and)\s*", flags)
    since_behind = re.compile(r"(?:ever\s+)?since\s+$", flags)
    between_behind = re.compile(r"between\s+$", flags)
    return _Grammar(lexicon, full_date, month_year, age_range, age, since_age,
                    offset, shift, year_lit, ongoing, early, connector,
                    since_behind, between_behind)


@lru_cache(maxsize=4)
def _default_grammar() -> _Grammar:
    return _compile(load_temporal_lexicon())


def _to_int(token: str, numbers: dict[str, int]) -> int:
    token = token.lower()
    if token.isdigit():
        return int(token)
    if token in ("a", "an"):
        return 1
    return numbers[token]


def _month_shift(ref: dt.date, delta: int) -> dt.date:
    total = ref.year * 12 + (ref.month - 1) + delta
    year, month = divmod(total, 12)
    return dt.date(year, month + 1, 1)


# Internal candidate: (priority, start, end, tag, payload). Lower priority
# wins when spans overlap.
_Candidate = tuple[int, int, int, str, tuple]


def _collect(text: str, grammar: _Grammar) -> list[_Candidate]:
    numbers = grammar.lexicon.numbers
    found: list[_Candidate] = []

    for pattern in grammar.full_date:
        for m in pattern.finditer(text):
            g = m.groups()
            if g[0].isdigit() and len(g[0]) == 4:  # ISO or day-first form
                if g[1].isdigit() and len(g[1]) == 2:
                    y, mo, d = int(g[0]), int(g[1]), int(g[2])
                else:
                    y, mo, d = int(g[2]), grammar.lexicon.months[g[1].lower()], int(g[0])
            elif g[0].isdigit():
                y, mo, d = int(g[2]), grammar.lexicon.months[g[1].lower()], int(g[0])
            else:
                y, mo, d = int(g[2]), grammar.lexicon.months[g[0].lower()], int(g[1])
            try:
                day = dt.date(y, mo, d)
            except ValueError:
                continue
            found.append((0, m.start(), m.end(), "full-date", (day,)))

    for m in grammar.age_range.finditer(text):
        g = [x for x in m.groups() if x is not None]
        lo, hi = _to_int(g[0], numbers), _to_int(g[1], numbers)
        if _MIN_AGE <= lo <= _MAX_AGE and _MIN_AGE <= hi <= _MAX_AGE and lo <= hi:
            found.append((1, m.start(), m.end(), "age-range", (lo, hi)))

    for m in grammar.month_year.finditer(text):
        mo = grammar.lexicon.months[m.group(1).lower()]
        found.append((2, m.start(), m.end(), "month-year", (int(m.group(2)), mo)))

    for m in grammar.since_age.finditer(text):
        n = _to_int(m.group(1), numbers)
        if _MIN_AGE <= n <= _MAX_AGE:
            found.append((3, m.start(), m.end(), "since-age", (n,)))

    for m in grammar.age.finditer(text):
        token = next(x for x in m.groups() if x is not None)
        n = _to_int(token, numbers)
        if _MIN_AGE <= n <= _MAX_AGE:
            found.append((4, m.start(), m.end(), "age", (n,)))

    for m in grammar.offset.finditer(text):
        n = _to_int(m.group(1), numbers)
        unit = m.group(2).lower().rstrip("s")
        if n <= 100:
            found.append((5, m.start(), m.end(), "offset", (n, unit)))

    for m in grammar.shift.finditer(text):
        unit, delta = grammar.lexicon.shifts[m.group(1).lower()]
        found.append((6, m.start(), m.end(), "shift", (unit, delta)))

    for m in grammar.year.finditer(text):
        found.append((7, m.start(), m.end(), "year", (int(m.group(1)),)))

    for m in grammar.ongoing.finditer(text):
        found.append((8, m.start(), m.end(), "ongoing", ()))

    for m in grammar.early.finditer(text):
        found.append((9, m.start(), m.end(), "early", ()))

    return found


def _resolve_overlaps(found: list[_Candidate]) -> list[_Candidate]:
    accepted: list[_Candidate] = []
    for cand in sorted(found, key=lambda c: (c[0], c[1], -(c[2] - c[1]))):
        if all(cand[2] <= a[1] or cand[1] >= a[2] for a in accepted):
            accepted.append(cand)
    accepted.sort(key=lambda c: c[1])
    return accepted


@dataclass
class _Raw:
    span: tuple[int, int]
    value: TimeValue
    role: RangeRole = RangeRole.POINT
    partner: int | None = None  # index of paired range mention
    since: bool = False


def _build_raw(cand: _Candidate, dob: dt.date | None, ref: dt.date) -> list[_Raw]:
    _, start, end, tag, payload = cand
    span = (start, end)
    if tag == "full-date":
        return [_Raw(span, TimeValue.on(payload[0], DatePrecision.DAY))]
    if tag == "month-year":
        y, mo = payload
        return [_Raw(span, TimeValue.on(dt.date(y, mo, 1), DatePrecision.MONTH))]
    if tag == "year":
        return [_Raw(span, TimeValue.on(dt.date(payload[0], 1, 1), DatePrecision.YEAR))]
    if tag == "age":
        return [_Raw(span, TimeValue.at_age(payload[0], dob))]
    if tag == "since-age":
        return [_Raw(span, TimeValue.at_age(payload[0], dob), since=True)]
    if tag == "age-range":
        lo, hi = payload
        first = _Raw(span, TimeValue.at_age(lo, dob), RangeRole.RANGE_START, partner=1)
        second = _Raw(span, TimeValue.at_age(hi, dob), RangeRole.RANGE_END, partner=0)
        return [first, second]
    if tag == "offset":
        n, unit = payload
        if unit == "year":
            return [_Raw(span, TimeValue.on(dt.date(ref.year - n, 1, 1), DatePrecision.YEAR))]
        return [_Raw(span, TimeValue.on(_month_shift(ref, -n), DatePrecision.MONTH))]
    if tag == "shift":
        unit, delta = payload
        if unit == "year":
            return [_Raw(span, TimeValue.on(dt.date(ref.year + delta, 1, 1), DatePrecision.YEAR))]
        return [_Raw(span, TimeValue.on(_month_shift(ref, delta), DatePrecision.MONTH))]
    if tag == "ongoing":
        return [_Raw(span, TimeValue.current())]
    if tag == "early":
        return [_Raw(span, TimeValue.early())]
    raise AssertionError(tag)


def _pair_ranges(raws: list[_Raw], text: str, grammar: _Grammar) -> None:
    # adjacent date mentions joined by a connector become a range; "and"
    # joins only under a leading "between" (bare "and" lists two points)
    for i in range(len(raws) - 1):
        first, second = raws[i], raws[i + 1]
        if first.role is not RangeRole.POINT or second.role is not RangeRole.POINT:
            continue
        if not first.value.is_date:
            continue
        between = text[first.span[1]:second.span[0]]
        m = grammar.connector.fullmatch(between)
        if not m:
            continue
        if "and" in between.lower():
            behind = text[max(0, first.span[0] - 12):first.span[0]]
            if not grammar.between_behind.search(behind):
                continue
        if second.value.is_date:
            if first.value.date > second.value.date:
                continue
            first.role, second.role = RangeRole.RANGE_START, RangeRole.RANGE_END
            first.partner, second.partner = i + 1, i
        elif second.value.kind is TimeKind.CURRENT and "and" not in between.lower():
            first.role, second.role = RangeRole.RANGE_START, RangeRole.RANGE_END
            first.partner, second.partner = i + 1, i


def _apply_since(raws: list[_Raw], text: str, grammar: _Grammar) -> None:
    # "since <date>" opens a range ending at the present; a later ongoing
    # marker supplies the end mention, else one is synthesized
    for i, raw in enumerate(raws):
        if raw.role is not RangeRole.POINT or not raw.value.is_date:
            continue
        behind = text[max(0, raw.span[0] - 12):raw.span[0]]
        if not (raw.since or grammar.since_behind.search(behind)):
            continue
        raw.role = RangeRole.RANGE_START
        partner = None
        for j in range(i + 1, len(raws)):
            if raws[j].role is RangeRole.POINT and raws[j].value.kind is TimeKind.CURRENT:
                partner = j
                break
        if partner is not None:
            raws[partner].role = RangeRole.RANGE_END
            raws[partner].partner = i
            raw.partner = partner
        else:
            raws.insert(i + 1, _Raw(raw.span, TimeValue.current(), RangeRole.RANGE_END, partner=i))
            raw.partner = i + 1


def _suppress_redundant(raws: list[_Raw]) -> list[_Raw]:
    # at most one standalone Current and one standalone Early per clause;
    # a Current range end supersedes standalone Current mentions entirely
    has_current_end = any(
        r.role is RangeRole.RANGE_END and r.value.kind is TimeKind.CURRENT for r in raws
    )
    kept: list[_Raw] = []
    seen_current = seen_early = False
    for raw in raws:
        if raw.role is RangeRole.POINT and raw.value.kind is TimeKind.CURRENT:
            if has_current_end or seen_current:
                continue
            seen_current = True
        if raw.role is RangeRole.POINT and raw.value.kind is TimeKind.EARLY:
            if seen_early:
                continue
            seen_early = True
        kept.append(raw)
    return kept


def parse_time_expression(
    text: str,
    dob: dt.date | None,
    reference_date: dt.date,
    lexicon: TemporalLexicon | None = None,
) -> list[TemporalMention]:
    """Extract every recognizable time expression from `text`.

    `dob` anchors relative ages (None leaves them on a provisional epoch
    for later resolution); `reference_date` anchors relative offsets like
    "three years ago". Returns mentions in source order; range starts are
    always paired with a range end. Unrecognized text yields [].
    """
    if not text:
        return []
    grammar = _compile(lexicon) if lexicon is not None else _default_grammar()
    accepted = _resolve_overlaps(_collect(text, grammar))
    raws: list[_Raw] = []
    for cand in accepted:
        raws.extend(_build_raw(cand, dob, reference_date))
    _pair_ranges(raws, text, grammar)
    _apply_since(raws, text, grammar)
    raws = _suppress_redundant(raws)
    return [TemporalMention(r.span, r.value, r.role) for r in raws]

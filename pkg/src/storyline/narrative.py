"""Narrative parsing: freeform health stories to event lists.

Two paths share one output contract. The rule-based pipeline segments the
narrative into clauses, classifies each clause by a keyword lexicon,
extracts time values with the temporal parser, and assembles events
deterministically. The remote path posts the whole narrative to a
configured model endpoint and validates the response against the same
schema, dropping events that break hard invariants and flagging events
whose titles are not grounded in the source text.
"""

from __future__ import annotations

import datetime as dt
import os
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

import requests

from storyline.model import (
    CONCERN_LIFE,
    CONCERN_OTHER,
    Designation,
    Event,
    HealthStory,
    StorylineError,
    StorySchemaError,
    TimeKind,
    TimeValue,
    Violation,
    event_from_obj,
    validate_event,
)
from storyline.temporal import RangeRole, TemporalMention, parse_time_expression

#: Ties between keyword hits break toward the front of this list.
DESIGNATION_PRIORITY = (
    Designation.DIAGNOSIS,
    Designation.PROCEDURE,
    Designation.TEST,
    Designation.MEDICATION,
    Designation.TREATMENT,
    Designation.PROVIDER,
    Designation.SYMPTOM,
    Designation.LIFE_EVENT,
)

STOPWORDS = frozenset(
    """a an the and or but of in on at to for with my i we was were is are am
    been being have has had that this it its as by from about into over after
    before during when while since still very really quite just so then than
    too also me him her they them you your our his hers out up down off did do
    does not no got get""".split()
)

ENV_PARSER_URL = "STORYLINE_PARSER_URL"
ENV_PARSER_KEY = "STORYLINE_PARSER_KEY"


class RemoteParserUnavailable(StorylineError):
    """The remote parser endpoint could not be reached or answered 5xx."""


class RemoteParserProtocolError(StorylineError):
    """The remote parser answered with a payload that violates the contract."""


class ParserMode(str, Enum):
    RULE_BASED = "rule-based"
    REMOTE = "remote"
    REMOTE_WITH_FALLBACK = "remote-with-fallback"


class LexiconError(StorylineError):
    pass


@dataclass(frozen=True)
class Profile:
    name: str
    date_of_birth: dt.date | None


@dataclass(frozen=True)
class ParserConfig:
    designation_lexicon: dict[str, Designation]
    concern_lexicon: dict[str, tuple[str, str | None]]
    mode: ParserMode = ParserMode.RULE_BASED
    # anchors offsets like "two years ago"; None means today
    reference_date: dt.date | None = None

    def __post_init__(self) -> None:
        for key in list(self.designation_lexicon) + list(self.concern_lexicon):
            if key != key.lower():
                raise LexiconError(f"lexicon key {key!r} is not lowercase")


def load_designation_lexicon(path: str | Path | None = None) -> dict[str, Designation]:
    text = _read_data("designation_lexicon.tsv", path)
    lexicon: dict[str, Designation] = {}
    for lineno, parts in _tsv_rows(text):
        if parts[0] == "meta":
            continue
        if len(parts) != 2:
            raise LexiconError(f"designation lexicon line {lineno}: expected 2 fields")
        key = parts[0].lower()
        if key in lexicon:
            raise LexiconError(f"designation lexicon line {lineno}: duplicate key {key!r}")
        lexicon[key] = Designation(parts[1])
    return lexicon


def load_concern_lexicon(path: str | Path | None = None) -> dict[str, tuple[str, str | None]]:
    text = _read_data("concern_lexicon.tsv", path)
    lexicon: dict[str, tuple[str, str | None]] = {}
    for lineno, parts in _tsv_rows(text):
        if parts[0] == "meta":
            continue
        if len(parts) not in (2, 3):
            raise LexiconError(f"concern lexicon line {lineno}: expected 2 or 3 fields")
        key = parts[0].lower()
        if key in lexicon:
            raise LexiconError(f"concern lexicon line {lineno}: duplicate key {key!r}")
        broad = parts[2].strip() if len(parts) == 3 else ""
        lexicon[key] = (parts[1], broad or None)
    return lexicon


def load_remote_prompt() -> str:
    return (resources.files("storyline") / "data/remote_parser_prompt.txt").read_text("utf-8")


def _read_data(name: str, path: str | Path | None) -> str:
    if path is not None:
        return Path(path).read_text("utf-8")
    return (resources.files("storyline") / f"data/{name}").read_text("utf-8")


def _tsv_rows(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        yield lineno, [p.strip() for p in line.split("\t")]


@lru_cache(maxsize=1)
def default_parser_config() -> ParserConfig:
    return ParserConfig(load_designation_lexicon(), load_concern_lexicon())


# --- segmentation -------------------------------------------------------------

_ABBREVIATIONS = {"dr", "mr", "mrs", "ms", "st", "e.g", "i.e", "etc"}


@dataclass(frozen=True)
class Clause:
    start: int
    end: int
    text: str


def segment_narrative(text: str) -> list[Clause]:
    """Split into sentence clauses with character offsets.

    Boundaries fall after terminal punctuation and at newline groups; the
    clause spans jointly cover every non-whitespace character.
    """
    clauses: list[Clause] = []
    cursor = 0
    n = len(text)
    while cursor < n:
        if text[cursor].isspace():
            cursor += 1
            continue
        end = cursor
        while end < n:
            ch = text[end]
            if ch == "\n":
                break
            if ch in ".!?":
                while end + 1 < n and text[end + 1] in ".!?":
                    end += 1
                before = text[:end].rstrip(".!?")
                last_word = re.search(r"(\w[\w.]*)$", before)
                if ch == "." and last_word and last_word.group(1).lower() in _ABBREVIATIONS:
                    end += 1
                    continue
                if end + 1 >= n or text[end + 1].isspace():
                    end += 1
                    break
            end += 1
        chunk = text[cursor:end]
        trimmed = chunk.rstrip()
        if trimmed:
            clauses.append(Clause(cursor, cursor + len(trimmed), trimmed))
        cursor = end
    return clauses


# --- classification -----------------------------------------------------------

def _stem_pattern(key: str) -> re.Pattern:
    return re.compile(r"\b" + re.escape(key), re.IGNORECASE)


@lru_cache(maxsize=8)
def _compiled_lexicon(keys: tuple[str, ...]) -> tuple[re.Pattern, ...]:
    return tuple(_stem_pattern(k) for k in keys)


def _designation_hits(clause_text: str, lexicon: dict[str, Designation]) -> dict[Designation, int]:
    """Map each designation hit to its leftmost match position."""
    keys = tuple(lexicon)
    hits: dict[Designation, int] = {}
    for key, pattern in zip(keys, _compiled_lexicon(keys)):
        m = pattern.search(clause_text)
        if m:
            designation = lexicon[key]
            if designation not in hits or m.start() < hits[designation]:
                hits[designation] = m.start()
    return hits


def classify_designation(
    clause_text: str, lexicon: dict[str, Designation] | None = None
) -> Designation | None:
    """Highest-priority lexicon hit in the clause, or None."""
    lexicon = lexicon if lexicon is not None else default_parser_config().designation_lexicon
    hits = _designation_hits(clause_text, lexicon)
    for designation in DESIGNATION_PRIORITY:
        if designation in hits:
            return designation
    return None


def _concern_for(
    clause_text: str, lexicon: dict[str, tuple[str, str | None]]
) -> tuple[str, str | None]:
    # leftmost hit wins, longest key on ties
    keys = tuple(lexicon)
    best: tuple[int, int, str] | None = None
    for key, pattern in zip(keys, _compiled_lexicon(keys)):
        m = pattern.search(clause_text)
        if m and (best is None or (m.start(), -len(key)) < (best[0], best[1])):
            best = (m.start(), -len(key), key)
    if best is None:
        return CONCERN_OTHER, None
    return lexicon[best[2]]


# --- titles -------------------------------------------------------------------

_LEAD_CONJUNCTIONS = {"and", "then", "so", "but", "later", "eventually", "finally", "recently"}
_LEAD_PRONOUNS = {"i", "i've", "i'm", "i'd", "i'll", "my", "we"}
_LEAD_AUXILIARIES = {"was", "am", "have", "had", "been", "also", "got", "did", "get",
                     "then", "recently", "eventually", "finally", "just", "first"}
_TITLE_CONTENT_WORDS = 8


def _bare(token: str) -> str:
    return token.strip(".,;:!?\"'()").lower()


def make_title(clause_text: str) -> str:
    """Clause prefix through the 8th content word, leading first-person
    phrase stripped, trailing punctuation trimmed."""
    tokens = list(re.finditer(r"\S+", clause_text))
    i = 0
    if i < len(tokens) and _bare(tokens[i].group()) in _LEAD_CONJUNCTIONS:
        i += 1
    if i < len(tokens) and _bare(tokens[i].group()) in _LEAD_PRONOUNS:
        i += 1
        while i < len(tokens) and _bare(tokens[i].group()) in _LEAD_AUXILIARIES:
            i += 1
    if i >= len(tokens):
        i = 0
    content = 0
    last = len(tokens) - 1
    for j in range(i, len(tokens)):
        word = _bare(tokens[j].group())
        if word and word not in STOPWORDS:
            content += 1
            if content == _TITLE_CONTENT_WORDS:
                last = j
                break
    title = clause_text[tokens[i].start():tokens[last].end()]
    return title.rstrip(".,;:!?").strip()


def content_words(text: str) -> list[str]:
    return [w for w in (_bare(t) for t in text.split()) if w and w not in STOPWORDS]


# --- event assembly -----------------------------------------------------------

def _extent_from_mentions(mentions: list[TemporalMention]) -> tuple[TimeValue, TimeValue]:
    for i, m in enumerate(mentions):
        if m.role is RangeRole.RANGE_START:
            partner = next(
                x for x in mentions[i:] if x.role is RangeRole.RANGE_END
            )
            return m.value, partner.value
    dates = [m.value for m in mentions if m.value.is_date and m.role is RangeRole.POINT]
    currents = [m.value for m in mentions if m.value.kind is TimeKind.CURRENT]
    earlies = [m.value for m in mentions if m.value.kind is TimeKind.EARLY]
    if dates:
        end = TimeValue.current() if currents else TimeValue.unspecified()
        return dates[0], end
    if earlies:
        end = TimeValue.current() if currents else TimeValue.unspecified()
        return TimeValue.early(), end
    if currents:
        return TimeValue.current(), TimeValue.unspecified()
    return TimeValue.unspecified(), TimeValue.unspecified()


_CONJUNCTION_SPLIT = re.compile(r",?\s+\b(?:and|but|so|then)\b\s+|;\s*", re.IGNORECASE)


def _split_on_conjunctions(clause_text: str) -> list[str]:
    parts = [p.strip() for p in _CONJUNCTION_SPLIT.split(clause_text)]
    return [p for p in parts if p]


def extract_events(
    text: str, profile: Profile, config: ParserConfig | None = None
) -> list[Event]:
    """Rule-based extraction: one event per designation-bearing clause.

    Clauses naming two or more distinct designations split on coordinating
    conjunctions; otherwise the highest-priority designation wins. Ids and
    narrative indices follow emission order, so extending the narrative
    never changes earlier events.
    """
    config = config if config is not None else default_parser_config()
    reference = config.reference_date or dt.date.today()
    events: list[Event] = []
    for clause in segment_narrative(text):
        hits = _designation_hits(clause.text, config.designation_lexicon)
        if not hits:
            continue
        pieces = [clause.text]
        if len(hits) >= 2:
            pieces = _split_on_conjunctions(clause.text)
        for piece in pieces:
            designation = classify_designation(piece, config.designation_lexicon)
            if designation is None:
                continue
            mentions = parse_time_expression(piece, profile.date_of_birth, reference)
            start, end = _extent_from_mentions(mentions)
            if designation is Designation.LIFE_EVENT:
                specific, broad = CONCERN_LIFE, None
            else:
                specific, broad = _concern_for(piece, config.concern_lexicon)
            events.append(Event(
                id=f"e{len(events) + 1}",
                title=make_title(piece),
                notes=piece,
                designation=designation,
                specific_concern=specific,
                broad_concern=broad,
                start=start,
                end=end,
                narrative_index=len(events),
            ))
    return events


def build_story(
    text: str, profile: Profile, config: ParserConfig | None = None
) -> HealthStory:
    events = extract_events(text, profile, config)
    return HealthStory(
        name=profile.name,
        date_of_birth=profile.date_of_birth,
        events=tuple(events),
        source_narrative=text,
    )


# --- remote parser ------------------------------------------------------------

@dataclass(frozen=True)
class RemoteParseResult:
    events: tuple[Event, ...]
    dropped: tuple[Violation, ...]  # hard invariant failures, removed
    not_grounded: tuple[str, ...]  # kept, but titles stray from the narrative

_HARD_RULES = {"life-concern-coupling", "start-after-end", "empty-title"}


class HttpRemoteParserClient:
    """Blocking JSON-over-HTTP client for a remote narrative parser."""

    def __init__(self, url: str, api_key: str | None = None, timeout: float = 30.0):
        self.url = url
        self._api_key = api_key
        self.timeout = timeout

    @classmethod
    def from_env(cls) -> HttpRemoteParserClient:
        url = os.environ.get(ENV_PARSER_URL)
        if not url:
            raise RemoteParserUnavailable(f"{ENV_PARSER_URL} is not configured")
        return cls(url, os.environ.get(ENV_PARSER_KEY))

    def parse(self, request: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = requests.post(self.url, json=request, headers=headers,
                                     timeout=self.timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise RemoteParserUnavailable(f"remote parser unreachable: {exc}") from exc
        if response.status_code >= 500:
            raise RemoteParserUnavailable(f"remote parser answered {response.status_code}")
        if response.status_code != 200:
            raise RemoteParserProtocolError(f"remote parser answered {response.status_code}")
        try:
            return response.json()
        except ValueError as exc:
            raise RemoteParserProtocolError("remote parser returned invalid JSON") from exc


def remote_parse(text: str, profile: Profile, client) -> RemoteParseResult:
    """Run the remote parser and validate its answer.

    Schema violations fail the whole call; events breaking hard semantic
    invariants are dropped and reported; events whose titles contain words
    absent from the narrative are flagged not-grounded but kept.
    """
    request = {
        "narrative": text,
        "dateOfBirth": profile.date_of_birth.isoformat() if profile.date_of_birth else None,
    }
    payload = client.parse(request)
    if not isinstance(payload, dict) or not isinstance(payload.get("events"), list):
        raise RemoteParserProtocolError('remote response must be {"events": [...]}')
    parsed: list[Event] = []
    for i, raw in enumerate(payload["events"]):
        try:
            parsed.append(event_from_obj(raw, f"$.events[{i}]", default_index=i))
        except StorySchemaError as exc:
            raise RemoteParserProtocolError(str(exc)) from exc

    kept: list[Event] = []
    dropped: list[Violation] = []
    seen_ids: set[str] = set()
    for event in parsed:
        if event.id in seen_ids:
            dropped.append(Violation(event.id, "duplicate-id", "duplicate event id"))
            continue
        hard = [v for v in validate_event(event, profile.date_of_birth)
                if v.rule in _HARD_RULES]
        if hard:
            dropped.extend(hard)
            continue
        seen_ids.add(event.id)
        kept.append(event)

    narrative_words = set(content_words(text))
    not_grounded = tuple(
        e.id for e in kept if not set(content_words(e.title)) <= narrative_words
    )
    # reindex so narrative order is strictly increasing regardless of input
    reindexed = tuple(
        Event(e.id, e.title, e.notes, e.designation, e.specific_concern,
              e.broad_concern, e.start, e.end, narrative_index=i)
        for i, e in enumerate(kept)
    )
    return RemoteParseResult(reindexed, tuple(dropped), not_grounded)


def parse_narrative(
    text: str,
    profile: Profile,
    config: ParserConfig | None = None,
    client=None,
) -> list[Event]:
    """Mode dispatch: rule-based, remote, or remote with rule fallback."""
    config = config if config is not None else default_parser_config()
    if config.mode is ParserMode.RULE_BASED:
        return extract_events(text, profile, config)
    if client is None:
        client = HttpRemoteParserClient.from_env()
    try:
        return list(remote_parse(text, profile, client).events)
    except RemoteParserUnavailable:
        if config.mode is ParserMode.REMOTE_WITH_FALLBACK:
            return extract_events(text, profile, config)
        raise

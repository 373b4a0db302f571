"""Core event model for health stories.

A health story is a person's own account of their health over time. The
atomic unit is an :class:`Event` (a symptom, medication, treatment,
provider visit, test, procedure, diagnosis, or life event), each carrying
free-text fields, a categorical designation, concern labels used for
grouping, and start/end time values that tolerate the imprecision of real
narratives: a value is either a calendar date (at day, month, or year
precision, stated absolutely or as an age), or one of the markers
*unspecified*, *early* ("long ago, before anything dated"), and *current*
("still ongoing").

All types are immutable values; every operation here is a pure function,
so stories can be shared freely across threads.

The canonical serialized form is UTF-8 JSON with a fixed key order, so
serialization is byte-deterministic and round-trips exactly.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field, replace
from enum import Enum


class StorylineError(Exception):
    """Base class for errors raised by this package."""


class StoryParseError(StorylineError):
    """The document is not well-formed JSON."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class StorySchemaError(StorylineError):
    """The document is valid JSON but violates the story schema."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class UnresolvableRelativeDatesError(StorylineError):
    """Relative-age dates exist but the story has no date of birth."""

    def __init__(self, event_ids: list[str]):
        super().__init__(
            "cannot resolve relative-age dates without a date of birth; "
            f"affected events: {', '.join(event_ids)}"
        )
        self.event_ids = list(event_ids)


class Designation(str, Enum):
    """The categorical type of an event. Exactly eight values exist."""

    SYMPTOM = "Symptom"
    MEDICATION = "Medication"
    TREATMENT = "Treatment"
    PROVIDER = "Provider"
    TEST = "Test"
    PROCEDURE = "Procedure"
    DIAGNOSIS = "Diagnosis"
    LIFE_EVENT = "LifeEvent"


class DatePrecision(str, Enum):
    DAY = "day"
    MONTH = "month"
    YEAR = "year"


class DateOrigin(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE_AGE = "relativeAge"


class TimeKind(str, Enum):
    UNSPECIFIED = "unspecified"
    EARLY = "early"
    CURRENT = "current"
    DATE = "date"


#: Sentinel specific-concern meaning "no particular problem".
CONCERN_OTHER = "Other"
#: Sentinel specific-concern for all life events.
CONCERN_LIFE = "LifeConcern"

#: Anchor used for relative-age dates when no date of birth is known yet.
#: ``resolve_relative_dates`` rewrites these once a DOB is available.
PROVISIONAL_AGE_EPOCH = dt.date(1900, 1, 1)


def shift_years(day: dt.date, years: int) -> dt.date:
    """Shift a date forward by whole years, clamping Feb 29 to Feb 28."""
    try:
        return day.replace(year=day.year + years)
    except ValueError:
        return day.replace(year=day.year + years, day=28)


@dataclass(frozen=True)
class TimeValue:
    """One end of an event's temporal extent.

    ``kind`` selects the variant. Only the ``date`` variant carries payload:
    a calendar date stored at day resolution plus a precision flag, the
    origin of the value (stated absolutely or as an age), and, for ages,
    the stated age in years.
    """

    kind: TimeKind
    date: dt.date | None = None
    precision: DatePrecision | None = None
    origin: DateOrigin | None = None
    stated_age: int | None = None

    def __post_init__(self) -> None:
        if self.kind is TimeKind.DATE:
            if self.date is None or self.precision is None or self.origin is None:
                raise ValueError("date variant requires date, precision, and origin")
            if (self.stated_age is not None) != (self.origin is DateOrigin.RELATIVE_AGE):
                raise ValueError("statedAge is present exactly when origin is relativeAge")
            if self.stated_age is not None and self.stated_age < 0:
                raise ValueError("statedAge must be non-negative")
            if self.origin is DateOrigin.ABSOLUTE:
                if self.precision is DatePrecision.YEAR and (self.date.month, self.date.day) != (1, 1):
                    raise ValueError("year-precision absolute dates anchor on January 1")
                if self.precision is DatePrecision.MONTH and self.date.day != 1:
                    raise ValueError("month-precision dates anchor on the 1st")
        else:
            if (self.date, self.precision, self.origin, self.stated_age) != (None, None, None, None):
                raise ValueError(f"{self.kind.value} variant carries no date fields")

    @classmethod
    def unspecified(cls) -> TimeValue:
        return cls(TimeKind.UNSPECIFIED)

    @classmethod
    def early(cls) -> TimeValue:
        return cls(TimeKind.EARLY)

    @classmethod
    def current(cls) -> TimeValue:
        return cls(TimeKind.CURRENT)

    @classmethod
    def on(
        cls,
        date: dt.date,
        precision: DatePrecision = DatePrecision.DAY,
        origin: DateOrigin = DateOrigin.ABSOLUTE,
        stated_age: int | None = None,
    ) -> TimeValue:
        return cls(TimeKind.DATE, date, precision, origin, stated_age)

    @classmethod
    def at_age(cls, age: int, dob: dt.date | None) -> TimeValue:
        """Relative-age value on the DOB anniversary, or on the provisional
        epoch when no DOB is known yet."""
        anchor = dob if dob is not None else PROVISIONAL_AGE_EPOCH
        return cls(TimeKind.DATE, shift_years(anchor, age), DatePrecision.YEAR,
                   DateOrigin.RELATIVE_AGE, age)

    @property
    def is_date(self) -> bool:
        return self.kind is TimeKind.DATE


@dataclass(frozen=True)
class Event:
    """The atomic unit of a health story."""

    id: str
    title: str
    notes: str
    designation: Designation
    specific_concern: str
    broad_concern: str | None
    start: TimeValue
    end: TimeValue
    narrative_index: int

    def __post_init__(self) -> None:
        if self.narrative_index < 0:
            raise ValueError("narrative_index must be non-negative")


@dataclass(frozen=True)
class HealthStory:
    """A profile plus its events in narrative order."""

    name: str
    date_of_birth: dt.date | None
    events: tuple[Event, ...] = ()
    source_narrative: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))

    def event(self, event_id: str) -> Event:
        for e in self.events:
            if e.id == event_id:
                return e
        raise KeyError(event_id)


@dataclass(frozen=True)
class Violation:
    """One validation finding. Violations are data, not faults."""

    event_id: str | None
    rule: str
    message: str


# Validation rule ids, referenced by tests and the service layer.
RULE_LIFE_CONCERN = "life-concern-coupling"
RULE_START_AFTER_END = "start-after-end"
RULE_DUPLICATE_ID = "duplicate-id"
RULE_NARRATIVE_ORDER = "narrative-order"
RULE_EMPTY_TITLE = "empty-title"
RULE_BEFORE_BIRTH = "before-birth"
RULE_UNRESOLVED_AGE = "unresolved-relative-age"


def validate_event(event: Event, dob: dt.date | None) -> list[Violation]:
    """Per-event validation rules; story-level rules live in validate_story."""
    found: list[Violation] = []
    if not event.title.strip():
        found.append(Violation(event.id, RULE_EMPTY_TITLE, "event title must be non-empty"))
    is_life = event.designation is Designation.LIFE_EVENT
    has_life_concern = event.specific_concern == CONCERN_LIFE
    if is_life != has_life_concern:
        found.append(Violation(
            event.id, RULE_LIFE_CONCERN,
            "designation LifeEvent and specific concern LifeConcern imply each other",
        ))
    if event.start.is_date and event.end.is_date and event.start.date > event.end.date:
        found.append(Violation(
            event.id, RULE_START_AFTER_END,
            f"start {event.start.date.isoformat()} is after end {event.end.date.isoformat()}",
        ))
    for which, value in (("start", event.start), ("end", event.end)):
        if not value.is_date:
            continue
        if dob is not None and value.origin is DateOrigin.ABSOLUTE and value.date < dob:
            found.append(Violation(
                event.id, RULE_BEFORE_BIRTH,
                f"{which} date {value.date.isoformat()} precedes date of birth",
            ))
        if dob is None and value.origin is DateOrigin.RELATIVE_AGE:
            found.append(Violation(
                event.id, RULE_UNRESOLVED_AGE,
                f"{which} is a relative age but the story has no date of birth",
            ))
    return found


def validate_story(story: HealthStory) -> list[Violation]:
    """Check every invariant and return the exhaustive list of violations.

    Pure: the same story always yields the same report. An empty report
    means the story is fully consistent.
    """
    report: list[Violation] = []
    seen_ids: set[str] = set()
    previous_index: int | None = None
    for event in story.events:
        if event.id in seen_ids:
            report.append(Violation(event.id, RULE_DUPLICATE_ID,
                                    f"event id {event.id!r} is not unique"))
        seen_ids.add(event.id)
        if previous_index is not None and event.narrative_index <= previous_index:
            report.append(Violation(
                event.id, RULE_NARRATIVE_ORDER,
                "narrative indices must be strictly increasing in list order",
            ))
        previous_index = event.narrative_index
        report.extend(validate_event(event, story.date_of_birth))
    return report


def resolve_relative_dates(story: HealthStory) -> HealthStory:
    """Rewrite every relative-age date onto the DOB anniversary.

    Each relative-age value becomes DOB shifted forward by the stated age,
    at year precision. Absolute values are untouched. Idempotent.

    Raises :class:`UnresolvableRelativeDatesError` when relative-age values
    exist but the story has no date of birth.
    """
    dob = story.date_of_birth
    affected = [
        e.id for e in story.events
        if any(v.is_date and v.origin is DateOrigin.RELATIVE_AGE for v in (e.start, e.end))
    ]
    if not affected:
        return story
    if dob is None:
        raise UnresolvableRelativeDatesError(affected)

    def fix(value: TimeValue) -> TimeValue:
        if value.is_date and value.origin is DateOrigin.RELATIVE_AGE:
            return TimeValue.at_age(value.stated_age, dob)
        return value

    events = tuple(
        replace(e, start=fix(e.start), end=fix(e.end)) if e.id in set(affected) else e
        for e in story.events
    )
    return replace(story, events=events)


# --- canonical JSON document -------------------------------------------------

_STORY_KEYS = {"name", "dateOfBirth", "sourceNarrative", "events"}
_EVENT_KEYS = {"id", "title", "notes", "designation", "specificConcern",
               "broadConcern", "start", "end", "narrativeIndex"}
_TIME_KEYS = {"kind", "date", "precision", "origin", "statedAge"}


def _time_value_to_obj(value: TimeValue) -> dict:
    if value.kind is not TimeKind.DATE:
        return {"kind": value.kind.value}
    obj = {
        "kind": "date",
        "date": value.date.isoformat(),
        "precision": value.precision.value,
        "origin": value.origin.value,
    }
    if value.stated_age is not None:
        obj["statedAge"] = value.stated_age
    return obj


def event_to_obj(event: Event) -> dict:
    return {
        "id": event.id,
        "title": event.title,
        "notes": event.notes,
        "designation": event.designation.value,
        "specificConcern": event.specific_concern,
        "broadConcern": event.broad_concern,
        "start": _time_value_to_obj(event.start),
        "end": _time_value_to_obj(event.end),
        "narrativeIndex": event.narrative_index,
    }


def story_to_obj(story: HealthStory) -> dict:
    return {
        "name": story.name,
        "dateOfBirth": story.date_of_birth.isoformat() if story.date_of_birth else None,
        "sourceNarrative": story.source_narrative,
        "events": [event_to_obj(e) for e in story.events],
    }


def serialize_story(story: HealthStory) -> str:
    """Canonical text form: fixed key order, two-space indent, trailing newline."""
    return json.dumps(story_to_obj(story), ensure_ascii=False, indent=2) + "\n"


def _expect_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise StorySchemaError(f"unknown keys {sorted(unknown)}", path)


def _expect_str(obj: dict, key: str, path: str, optional: bool = False) -> str | None:
    value = obj.get(key)
    if value is None:
        if optional:
            return None
        raise StorySchemaError(f"missing required key {key!r}", path)
    if not isinstance(value, str):
        raise StorySchemaError(f"{key!r} must be a string", path)
    return value


def _parse_iso_date(text: str, path: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise StorySchemaError(f"invalid ISO date {text!r}", path) from None


def _time_value_from_obj(obj: object, path: str) -> TimeValue:
    if not isinstance(obj, dict):
        raise StorySchemaError("time value must be an object", path)
    _expect_keys(obj, _TIME_KEYS, path)
    kind = _expect_str(obj, "kind", path)
    try:
        tk = TimeKind(kind)
    except ValueError:
        raise StorySchemaError(f"unknown time value kind {kind!r}", path) from None
    if tk is not TimeKind.DATE:
        if set(obj) != {"kind"}:
            raise StorySchemaError(f"{kind!r} time values carry no other keys", path)
        return TimeValue(tk)
    date = _parse_iso_date(_expect_str(obj, "date", path), path)
    try:
        precision = DatePrecision(_expect_str(obj, "precision", path))
        origin = DateOrigin(_expect_str(obj, "origin", path))
    except ValueError as exc:
        raise StorySchemaError(str(exc), path) from None
    stated_age = obj.get("statedAge")
    if stated_age is not None and (not isinstance(stated_age, int) or isinstance(stated_age, bool)):
        raise StorySchemaError("statedAge must be an integer", path)
    try:
        return TimeValue(tk, date, precision, origin, stated_age)
    except ValueError as exc:
        raise StorySchemaError(str(exc), path) from None


def event_from_obj(obj: object, path: str, default_index: int = 0) -> Event:
    if not isinstance(obj, dict):
        raise StorySchemaError("event must be an object", path)
    _expect_keys(obj, _EVENT_KEYS, path)
    designation_name = _expect_str(obj, "designation", path)
    try:
        designation = Designation(designation_name)
    except ValueError:
        raise StorySchemaError(f"unknown designation {designation_name!r}", path) from None
    broad = obj.get("broadConcern")
    if broad is not None and not isinstance(broad, str):
        raise StorySchemaError("broadConcern must be a string or null", path)
    index = obj.get("narrativeIndex", default_index)
    if not isinstance(index, int) or isinstance(index, bool) or index < 0:
        raise StorySchemaError("narrativeIndex must be a non-negative integer", path)
    return Event(
        id=_expect_str(obj, "id", path),
        title=_expect_str(obj, "title", path),
        notes=_expect_str(obj, "notes", path),
        designation=designation,
        specific_concern=_expect_str(obj, "specificConcern", path),
        broad_concern=broad,
        start=_time_value_from_obj(obj.get("start"), f"{path}.start"),
        end=_time_value_from_obj(obj.get("end"), f"{path}.end"),
        narrative_index=index,
    )


def story_from_obj(obj: object, path: str = "$") -> HealthStory:
    if not isinstance(obj, dict):
        raise StorySchemaError("story must be an object", path)
    _expect_keys(obj, _STORY_KEYS, path)
    name = _expect_str(obj, "name", path)
    dob_text = obj.get("dateOfBirth")
    dob = None
    if dob_text is not None:
        if not isinstance(dob_text, str):
            raise StorySchemaError("dateOfBirth must be an ISO date string or null", path)
        dob = _parse_iso_date(dob_text, f"{path}.dateOfBirth")
    narrative = obj.get("sourceNarrative")
    if narrative is not None and not isinstance(narrative, str):
        raise StorySchemaError("sourceNarrative must be a string or null", path)
    raw_events = obj.get("events")
    if not isinstance(raw_events, list):
        raise StorySchemaError("events must be an array", path)
    events = tuple(
        event_from_obj(raw, f"{path}.events[{i}]", default_index=i)
        for i, raw in enumerate(raw_events)
    )
    return HealthStory(name=name, date_of_birth=dob, events=events, source_narrative=narrative)


def deserialize_story(document: str) -> HealthStory:
    """Parse the canonical JSON document back into a story.

    Raises :class:`StoryParseError` for malformed JSON (with location) and
    :class:`StorySchemaError` for well-formed JSON that breaks the schema.
    """
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise StoryParseError(exc.msg, exc.lineno, exc.colno) from None
    return story_from_obj(obj)

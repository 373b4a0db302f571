"""Turn freeform health narratives into structured timelines and SVG artifacts."""

from storyline.model import (
    CONCERN_LIFE,
    CONCERN_OTHER,
    DateOrigin,
    DatePrecision,
    Designation,
    Event,
    HealthStory,
    StoryParseError,
    StorySchemaError,
    StorylineError,
    TimeKind,
    TimeValue,
    UnresolvableRelativeDatesError,
    Violation,
    deserialize_story,
    resolve_relative_dates,
    serialize_story,
    validate_story,
)

__version__ = "0.1.0"

__all__ = [
    "CONCERN_LIFE",
    "CONCERN_OTHER",
    "DateOrigin",
    "DatePrecision",
    "Designation",
    "Event",
    "HealthStory",
    "StoryParseError",
    "StorySchemaError",
    "StorylineError",
    "TimeKind",
    "TimeValue",
    "UnresolvableRelativeDatesError",
    "Violation",
    "deserialize_story",
    "resolve_relative_dates",
    "serialize_story",
    "validate_story",
    "__version__",
]

"""HTTP service: story persistence, editing, layout, and artifact endpoints.

Stories live as one canonical JSON document each in a data directory,
written atomically and loaded back on startup. Every successful mutation
increments the record revision by exactly one; mutations to one story are
serialized by a per-story lock and callers may pass If-Match with an
expected revision to get compare-and-set semantics. Layout and SVG bytes
are computed on demand and cached per (story, revision), so repeated
fetches return identical bytes and mutations invalidate naturally.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import Body, FastAPI, Header, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from storyline.layout import serialize_layout, timeline_layout
from storyline.model import (
    HealthStory,
    StorylineError,
    StorySchemaError,
    UnresolvableRelativeDatesError,
    Violation,
    event_from_obj,
    event_to_obj,
    resolve_relative_dates,
    story_from_obj,
    story_to_obj,
    validate_story,
)
from storyline.narrative import (
    ParserConfig,
    ParserMode,
    Profile,
    RemoteParserProtocolError,
    RemoteParserUnavailable,
    default_parser_config,
    parse_narrative,
)
from storyline.render import render_svg

logger = logging.getLogger(__name__)

ENV_DATA_DIR = "STORYLINE_DATA_DIR"
ENV_PORT = "STORYLINE_PORT"
ENV_REFERENCE_DATE = "STORYLINE_REFERENCE_DATE"
ENV_STATIC_DIR = "STORYLINE_STATIC_DIR"

PARSER_MODES = {
    "rule": ParserMode.RULE_BASED,
    "remote": ParserMode.REMOTE,
    "remote-with-fallback": ParserMode.REMOTE_WITH_FALLBACK,
}


class RevisionConflict(StorylineError):
    def __init__(self, current_revision: int):
        super().__init__(f"revision mismatch, current is {current_revision}")
        self.current_revision = current_revision


@dataclass(frozen=True)
class StoryRecord:
    story_id: str
    story: HealthStory
    created_at: str
    updated_at: str
    revision: int


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


class StoryStore:
    """Persistent story records with per-story serialized mutations."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._records: dict[str, StoryRecord] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry = threading.Lock()
        for path in sorted(self.data_dir.glob("*.json")):
            try:
                record = self._read(path)
            except (StorylineError, ValueError, KeyError, OSError) as exc:
                logger.warning("skipping unreadable record %s: %s", path, exc)
                continue
            self._records[record.story_id] = record

    def _read(self, path: Path) -> StoryRecord:
        obj = json.loads(path.read_text())
        return StoryRecord(
            story_id=obj["storyId"],
            story=story_from_obj(obj["story"]),
            created_at=obj["createdAt"],
            updated_at=obj["updatedAt"],
            revision=int(obj["revision"]),
        )

    def _write(self, record: StoryRecord) -> None:
        payload = {
            "storyId": record.story_id,
            "revision": record.revision,
            "createdAt": record.created_at,
            "updatedAt": record.updated_at,
            "story": story_to_obj(record.story),
        }
        text = json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
        fd, tmp_name = tempfile.mkstemp(dir=self.data_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as handle:
                handle.write(text)
            os.replace(tmp_name, self.data_dir / f"{record.story_id}.json")
        except BaseException:
            os.unlink(tmp_name)
            raise

    def _lock_for(self, story_id: str) -> threading.Lock:
        with self._registry:
            return self._locks.setdefault(story_id, threading.Lock())

    def ids(self) -> list[str]:
        return sorted(self._records)

    def create(self, story: HealthStory) -> StoryRecord:
        now = _now()
        record = StoryRecord(uuid.uuid4().hex, story, now, now, revision=1)
        self._write(record)
        self._records[record.story_id] = record
        return record

    def get(self, story_id: str) -> StoryRecord:
        return self._records[story_id]

    def mutate(self, story_id: str, fn, expected_revision: int | None = None) -> StoryRecord:
        """Apply fn(story) -> story under the story lock, bump the revision,
        and persist. With expected_revision this is compare-and-set."""
        lock = self._lock_for(story_id)
        with lock:
            record = self._records[story_id]
            if expected_revision is not None and expected_revision != record.revision:
                raise RevisionConflict(record.revision)
            updated = replace(
                record,
                story=fn(record.story),
                revision=record.revision + 1,
                updated_at=_now(),
            )
            self._write(updated)
            self._records[story_id] = updated
            return updated


class _UnknownEvent(StorylineError):
    pass


class _InvalidMutation(StorylineError):
    def __init__(self, message: str, violations: list[Violation] = ()):
        super().__init__(message)
        self.violations = list(violations)


def _violations_obj(violations) -> list[dict]:
    return [
        {"eventId": v.event_id, "rule": v.rule, "message": v.message}
        for v in violations
    ]


def record_to_obj(record: StoryRecord) -> dict:
    return {
        "storyId": record.story_id,
        "revision": record.revision,
        "createdAt": record.created_at,
        "updatedAt": record.updated_at,
        "story": story_to_obj(record.story),
        "violations": _violations_obj(validate_story(record.story)),
    }


def _next_event_id(story: HealthStory) -> str:
    used = {e.id for e in story.events}
    n = len(story.events) + 1
    while f"e{n}" in used:
        n += 1
    return f"e{n}"


def _next_index(story: HealthStory) -> int:
    return max((e.narrative_index for e in story.events), default=-1) + 1


def _introduced(before: HealthStory, after: HealthStory) -> list[Violation]:
    prior = {(v.event_id, v.rule) for v in validate_story(before)}
    return [v for v in validate_story(after)
            if (v.event_id, v.rule) not in prior]


def _apply_patch(story: HealthStory, event_id: str, patch: dict) -> HealthStory:
    if "id" in patch:
        raise _InvalidMutation("event id is immutable")
    for event in story.events:
        if event.id == event_id:
            break
    else:
        raise _UnknownEvent(event_id)
    obj = event_to_obj(event)
    obj.update(patch)
    try:
        patched = event_from_obj(obj, "$.patch",
                                 default_index=event.narrative_index)
    except StorylineError as exc:
        raise _InvalidMutation(str(exc)) from exc
    updated = replace(
        story,
        events=tuple(patched if e.id == event_id else e for e in story.events),
    )
    introduced = _introduced(story, updated)
    if introduced:
        raise _InvalidMutation("patch violates story invariants", introduced)
    return updated


def _apply_add(story: HealthStory, payload: dict) -> HealthStory:
    obj = dict(payload)
    obj.setdefault("id", _next_event_id(story))
    obj.setdefault("narrativeIndex", _next_index(story))
    try:
        event = event_from_obj(obj, "$.event",
                               default_index=obj["narrativeIndex"])
    except StorylineError as exc:
        raise _InvalidMutation(str(exc)) from exc
    updated = replace(story, events=story.events + (event,))
    introduced = _introduced(story, updated)
    if introduced:
        raise _InvalidMutation("event violates story invariants", introduced)
    return updated


def _apply_delete(story: HealthStory, event_id: str) -> HealthStory:
    if all(e.id != event_id for e in story.events):
        raise _UnknownEvent(event_id)
    return replace(story,
                   events=tuple(e for e in story.events if e.id != event_id))


@dataclass
class _ArtifactEntry:
    revision: int
    layout_bytes: bytes
    svg_bytes: bytes


class _ArtifactCache:
    def __init__(self) -> None:
        self._entries: dict[str, _ArtifactEntry] = {}
        self._lock = threading.Lock()

    def get(self, record: StoryRecord) -> _ArtifactEntry:
        with self._lock:
            entry = self._entries.get(record.story_id)
            if entry is not None and entry.revision == record.revision:
                return entry
        geometry = timeline_layout(record.story)
        entry = _ArtifactEntry(
            revision=record.revision,
            layout_bytes=serialize_layout(geometry).encode("utf-8"),
            svg_bytes=render_svg(geometry, record.story).encode("utf-8"),
        )
        with self._lock:
            self._entries[record.story_id] = entry
        return entry


def _parse_expected_revision(if_match: str | None) -> int | None:
    if if_match is None:
        return None
    value = if_match.strip().strip('"')
    try:
        return int(value)
    except ValueError:
        raise HTTPException(400, "If-Match must hold a revision number")


def _profile_from(payload: dict) -> tuple[Profile, str, ParserMode]:
    if not isinstance(payload, dict):
        raise HTTPException(400, "body must be a JSON object")
    name = payload.get("name")
    if not isinstance(name, str) or not name.strip():
        raise HTTPException(400, "profile name is required")
    raw_dob = payload.get("dateOfBirth")
    dob = None
    if raw_dob is not None:
        if not isinstance(raw_dob, str):
            raise HTTPException(400, "dateOfBirth must be an ISO date or null")
        try:
            dob = dt.date.fromisoformat(raw_dob)
        except ValueError:
            raise HTTPException(400, f"invalid dateOfBirth: {raw_dob!r}")
    narrative = payload.get("narrative", "")
    if not isinstance(narrative, str):
        raise HTTPException(400, "narrative must be a string")
    raw_mode = payload.get("parserMode", "rule")
    if raw_mode not in PARSER_MODES:
        raise HTTPException(
            400, f"parserMode must be one of {sorted(PARSER_MODES)}")
    return Profile(name.strip(), dob), narrative, PARSER_MODES[raw_mode]


def create_app(
    data_dir: str | Path | None = None,
    parser_config: ParserConfig | None = None,
    remote_client=None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    if data_dir is None:
        data_dir = os.environ.get(ENV_DATA_DIR, "./storyline-data")
    if parser_config is None:
        parser_config = default_parser_config()
        raw_reference = os.environ.get(ENV_REFERENCE_DATE)
        if raw_reference:
            parser_config = replace(
                parser_config, reference_date=dt.date.fromisoformat(raw_reference))

    store = StoryStore(data_dir)
    cache = _ArtifactCache()
    app = FastAPI(title="storyline", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    def fetch(story_id: str) -> StoryRecord:
        try:
            return store.get(story_id)
        except KeyError:
            raise HTTPException(404, f"unknown story {story_id!r}")

    def mutate(story_id: str, fn, if_match: str | None) -> dict:
        expected = _parse_expected_revision(if_match)
        try:
            record = store.mutate(story_id, fn, expected)
        except KeyError:
            raise HTTPException(404, f"unknown story {story_id!r}")
        except RevisionConflict as exc:
            raise HTTPException(409, str(exc))
        except _UnknownEvent as exc:
            raise HTTPException(404, f"unknown event {exc}")
        except _InvalidMutation as exc:
            raise HTTPException(422, {
                "message": str(exc),
                "violations": _violations_obj(exc.violations),
            })
        return record_to_obj(record)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "stories": len(store.ids())}

    @app.post("/stories", status_code=201)
    def create_story(payload: dict = Body(...)) -> dict:
        profile, narrative, mode = _profile_from(payload)
        config = replace(parser_config, mode=mode)
        try:
            events = parse_narrative(narrative, profile, config, remote_client)
        except RemoteParserUnavailable as exc:
            raise HTTPException(502, f"remote parser unavailable: {exc}")
        except RemoteParserProtocolError as exc:
            raise HTTPException(502, f"remote parser protocol error: {exc}")
        story = HealthStory(profile.name, profile.date_of_birth,
                            tuple(events), narrative)
        try:
            story = resolve_relative_dates(story)
        except UnresolvableRelativeDatesError:
            pass  # kept unresolved; the violation report flags them
        return record_to_obj(store.create(story))

    @app.get("/stories/{story_id}")
    def get_story(story_id: str) -> dict:
        return record_to_obj(fetch(story_id))

    @app.patch("/stories/{story_id}/events/{event_id}")
    def patch_event(story_id: str, event_id: str,
                    payload: dict = Body(...),
                    if_match: str | None = Header(default=None)) -> dict:
        return mutate(story_id,
                      lambda story: _apply_patch(story, event_id, payload),
                      if_match)

    @app.post("/stories/{story_id}/events", status_code=201)
    def add_event(story_id: str, payload: dict = Body(...),
                  if_match: str | None = Header(default=None)) -> dict:
        return mutate(story_id,
                      lambda story: _apply_add(story, payload),
                      if_match)

    @app.delete("/stories/{story_id}/events/{event_id}")
    def delete_event(story_id: str, event_id: str,
                     if_match: str | None = Header(default=None)) -> dict:
        return mutate(story_id,
                      lambda story: _apply_delete(story, event_id),
                      if_match)

    @app.get("/stories/{story_id}/layout")
    def get_layout(story_id: str) -> Response:
        record = fetch(story_id)
        entry = cache.get(record)
        return Response(entry.layout_bytes, media_type="application/json")

    @app.get("/stories/{story_id}/artifact.svg")
    def get_artifact(story_id: str) -> Response:
        record = fetch(story_id)
        entry = cache.get(record)
        return Response(entry.svg_bytes, media_type="image/svg+xml")

    if static_dir is None:
        static_dir = os.environ.get(ENV_STATIC_DIR)
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True))

    return app


def __getattr__(name: str):
    # lazy module-level app so `uvicorn storyline.service:app` works
    # without importing side effects into library users
    if name == "app":
        return create_app()
    raise AttributeError(name)

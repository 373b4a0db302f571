"""Acceptance gate: every primary criterion at its stated tolerance.

Each test exercises one criterion end to end with independent oracles,
enforces the stated runtime budget, and prints one pass line. Run with
`pytest tests/test_acceptance.py -v -s` to see the lines.
"""

from __future__ import annotations

import datetime as dt
import json
import random
import threading
import time
from pathlib import Path

from fastapi.testclient import TestClient

from storyline.grouping import (
    DatedValue,
    cluster_dates,
    compute_eps,
    group_story,
)
from storyline.layout import (
    LayoutConfig,
    draft_layout,
    pack_track,
    single_timescale_layout,
    timeline_layout,
)
from storyline.model import (
    CONCERN_LIFE,
    CONCERN_OTHER,
    DateOrigin,
    DatePrecision,
    Designation,
    Event,
    HealthStory,
    TimeKind,
    TimeValue,
    deserialize_story,
    serialize_story,
)
from storyline.render import render_svg
from storyline.service import create_app
from storyline.temporal import parse_time_expression

DATA = Path(__file__).parent / "data"


def report(label: str, elapsed: float, budget: float) -> None:
    assert elapsed < budget, f"{label}: {elapsed:.2f}s exceeded {budget:.2f}s"
    print(f"[acceptance] PASS {label}: {elapsed * 1000:.0f} ms "
          f"(budget {budget * 1000:.0f} ms)")


# --- shared random generators ---------------------------------------------

GROUPED = [("asthma", "respiratory"), ("hay fever", "respiratory"),
           ("type 2 diabetes", "metabolic"), ("back pain", "musculoskeletal"),
           ("knee pain", "musculoskeletal"), ("eczema", "dermatologic")]
STANDALONE = ["migraines", "insomnia"]
MEDICAL = [d for d in Designation if d is not Designation.LIFE_EVENT]
WORDS = ("flare relapse clinic referral scan review result stable severe "
         "mild follow up persistent recurring seasonal").split()

EPOCH = dt.date(1950, 1, 1)
HORIZON = (dt.date(2030, 12, 31) - EPOCH).days


def random_date(rng: random.Random, lo: int = 0, hi: int = HORIZON) -> dt.date:
    return EPOCH + dt.timedelta(days=rng.randint(lo, hi))


def random_date_value(rng: random.Random) -> TimeValue:
    date = random_date(rng)
    precision = rng.choice(list(DatePrecision))
    if rng.random() < 0.25:
        return TimeValue(TimeKind.DATE, date, precision,
                         DateOrigin.RELATIVE_AGE, rng.randint(0, 90))
    if precision is DatePrecision.YEAR:
        date = date.replace(month=1, day=1)
    elif precision is DatePrecision.MONTH:
        date = date.replace(day=1)
    return TimeValue(TimeKind.DATE, date, precision, DateOrigin.ABSOLUTE)


def random_time_pair(rng: random.Random) -> tuple[TimeValue, TimeValue]:
    start_kind = rng.choice(["unspecified", "early", "date", "date"])
    end_kind = rng.choice(["unspecified", "unspecified", "current", "date"])
    start = (random_date_value(rng) if start_kind == "date"
             else TimeValue(TimeKind(start_kind)))
    end = (random_date_value(rng) if end_kind == "date"
           else TimeValue(TimeKind(end_kind)))
    if start.is_date and end.is_date and start.date > end.date:
        start, end = end, start
    return start, end


def random_event(rng: random.Random, index: int) -> Event:
    shape = rng.choice(["life", "other", "standalone", "grouped", "grouped"])
    if shape == "life":
        designation = Designation.LIFE_EVENT
        specific, broad = CONCERN_LIFE, None
    else:
        designation = rng.choice(MEDICAL)
        if shape == "other":
            specific, broad = CONCERN_OTHER, None
        elif shape == "standalone":
            specific, broad = rng.choice(STANDALONE), None
        else:
            specific, broad = rng.choice(GROUPED)
    start, end = random_time_pair(rng)
    title = " ".join(rng.sample(WORDS, rng.randint(1, 4)))
    notes = " ".join(rng.choices(WORDS, k=rng.randint(0, 12)))
    return Event(f"e{index + 1}", title, notes, designation, specific, broad,
                 start, end, index)


def random_story(rng: random.Random, max_events: int) -> HealthStory:
    count = rng.randint(0, max_events)
    events = tuple(random_event(rng, i) for i in range(count))
    dob = random_date(rng, 0, 20000) if rng.random() < 0.7 else None
    return HealthStory("Rio Park", dob, events)


# --- 1. eps formula ---------------------------------------------------------

class TestEpsFormula:
    def test_exact_values_and_monotonicity(self):
        rng = random.Random(101)
        started = time.perf_counter()
        assert compute_eps(2.5) == 30.0
        assert compute_eps(10.0) == 25.0
        assert compute_eps(50.0) == 5.0
        spans = sorted(rng.uniform(0.01, 120.0) for _ in range(1000))
        values = [compute_eps(s) for s in spans]
        for earlier, later in zip(values, values[1:]):
            assert earlier >= later
        assert all(0 < v <= 30.0 for v in values)
        report("eps formula", time.perf_counter() - started, 1.0)


# --- 2. clustering oracle ---------------------------------------------------

def dbscan_reference(dated: list[DatedValue]) -> list[frozenset[DatedValue]]:
    """Exhaustive pairwise-neighborhood DBSCAN with minPts 1."""
    if not dated:
        return []
    dates = [d.date for d in dated]
    lo, hi = min(dates), max(dates)
    span_days = (hi - lo).days
    if span_days == 0:
        return [frozenset(dated)]
    eps = min(30.0, 2.5 / (span_days / 365.25) * 100.0)
    pos = [(d - lo).days / span_days * 100.0 for d in dates]
    parent = list(range(len(dated)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(dated)):
        for j in range(i + 1, len(dated)):
            if abs(pos[i] - pos[j]) <= eps:
                parent[find(i)] = find(j)
    groups: dict[int, list[DatedValue]] = {}
    for i, value in enumerate(dated):
        groups.setdefault(find(i), []).append(value)
    return [frozenset(g) for g in groups.values()]


class TestClusteringOracle:
    def test_matches_brute_force_dbscan(self):
        rng = random.Random(202)
        started = time.perf_counter()
        for trial in range(500):
            if trial == 0:
                dated = []
            elif trial == 1:
                dated = [DatedValue("v1", "start", dt.date(2020, 5, 5))]
            elif trial == 2:
                dated = [DatedValue(f"v{i}", "start", dt.date(2015, 3, 3))
                         for i in range(6)]
            else:
                window = rng.choice([30, 365, 1500, 8000, 25000])
                base = rng.randint(0, HORIZON - window)
                dated = [
                    DatedValue(f"v{i}", rng.choice(["start", "end"]),
                               random_date(rng, base, base + window))
                    for i in range(rng.randint(0, 15))
                ]
            clusters = cluster_dates(list(dated))
            got = {frozenset(c.values) for c in clusters}
            assert got == set(dbscan_reference(dated))
            for cluster in clusters:
                member_dates = [v.date for v in cluster.values]
                assert cluster.min_date == min(member_dates)
                assert cluster.max_date == max(member_dates)
            mins = [c.min_date for c in clusters]
            assert mins == sorted(mins)
        report("clustering oracle", time.perf_counter() - started, 10.0)


# --- 3. split optimality ----------------------------------------------------

class TestSplitOptimality:
    def test_chosen_ratio_minimizes_height(self):
        rng = random.Random(303)
        config = LayoutConfig()
        started = time.perf_counter()
        for _ in range(100):
            story = random_story(rng, 40)
            groups = group_story(story.events)
            chosen = timeline_layout(story, groups, config)
            heights = {
                ratio: draft_layout(story, groups, config, ratio).total_height
                for ratio in config.split_ratios
            }
            best = min(heights.values())
            assert chosen.total_height == best
            assert chosen.split_ratio == min(
                r for r, h in heights.items() if h == best)
        report("split optimality", time.perf_counter() - started, 30.0)


# --- 4. multi vs single timescale -------------------------------------------

class TestTimescaleComparison:
    def test_split_story_shrinks_and_single_cluster_matches(self):
        started = time.perf_counter()
        split = deserialize_story((DATA / "e22_analog.json").read_text())
        multi = timeline_layout(split).total_height
        single = single_timescale_layout(split).total_height
        assert multi < single
        compact = deserialize_story((DATA / "single_cluster.json").read_text())
        assert (timeline_layout(compact).total_height
                == single_timescale_layout(compact).total_height)
        report("multi vs single timescale", time.perf_counter() - started, 1.0)


# --- 5. packing --------------------------------------------------------------

def first_fit_reference(boxes, padding: float) -> list[list[int]]:
    """First-fit that checks clearance against every occupant of a lane."""
    order = sorted(range(len(boxes)), key=lambda i: (boxes[i][0], boxes[i][2]))
    lanes: list[list[int]] = []
    for i in order:
        left, right, _ = boxes[i]
        for lane in lanes:
            if all(left >= boxes[j][1] + padding or right + padding <= boxes[j][0]
                   for j in lane):
                lane.append(i)
                break
        else:
            lanes.append([i])
    return lanes


class TestPacking:
    def test_no_overlap_and_reference_match(self):
        rng = random.Random(404)
        started = time.perf_counter()
        for _ in range(500):
            count = rng.randint(0, 25)
            padding = rng.choice([0.0, 4.0, 8.0])
            boxes = []
            for i in range(count):
                left = rng.uniform(0, 1500)
                boxes.append((left, left + rng.uniform(20, 280), i))
            lanes = pack_track(boxes, padding)
            assert sorted(i for lane in lanes for i in lane) == list(range(count))
            for lane in lanes:
                ordered = sorted(lane, key=lambda i: boxes[i][0])
                for prev, nxt in zip(ordered, ordered[1:]):
                    assert boxes[nxt][0] >= boxes[prev][1] + padding
            assert lanes == first_fit_reference(boxes, padding)
        report("lane packing", time.perf_counter() - started, 10.0)


# --- 6. partition identities --------------------------------------------------

class TestPartitions:
    def test_time_and_concern_partitions(self):
        rng = random.Random(505)
        started = time.perf_counter()
        for _ in range(500):
            story = random_story(rng, 20)
            groups = group_story(story.events)
            time_groups = groups.time
            slots = (len(time_groups.unspecified) + len(time_groups.early)
                     + len(time_groups.current)
                     + sum(len(c.values) for c in time_groups.clusters))
            assert slots == 2 * len(story.events)
            seen = list(time_groups.unspecified) + list(time_groups.early)
            seen += list(time_groups.current)
            seen += [(v.event_id, v.which_end)
                     for c in time_groups.clusters for v in c.values]
            expected = [(e.id, end) for e in story.events
                        for end in ("start", "end")]
            assert sorted(seen) == sorted(expected)
            assert sorted(groups.concern.all_event_ids()) == sorted(
                e.id for e in story.events)
        report("partition identities", time.perf_counter() - started, 5.0)


# --- 7. temporal corpus -------------------------------------------------------

CORPUS_DOB = dt.date(1990, 6, 15)
CORPUS_REF = dt.date(2025, 1, 1)


def encode_mention(mention) -> dict:
    value = mention.value
    if value.kind is not TimeKind.DATE:
        encoded = {"kind": value.kind.value}
    else:
        encoded = {
            "kind": "date",
            "date": value.date.isoformat(),
            "precision": value.precision.value,
            "origin": value.origin.value,
        }
        if value.stated_age is not None:
            encoded["statedAge"] = value.stated_age
    return {"role": mention.role.value, "value": encoded}


class TestTemporalCorpus:
    def test_full_corpus_parses_exactly(self):
        started = time.perf_counter()
        rows = []
        for line in (DATA / "temporal_corpus.tsv").read_text().splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            expression, expected = line.split("\t")
            rows.append((expression, json.loads(expected)))
        assert len(rows) >= 40

        kinds = set()
        roles = set()
        origins = set()
        silent_rows = 0
        failures = []
        for expression, expected in rows:
            mentions = parse_time_expression(expression, CORPUS_DOB, CORPUS_REF)
            got = [encode_mention(m) for m in mentions]
            if got != expected:
                failures.append((expression, expected, got))
            if not expected:
                silent_rows += 1  # no mention: the unspecified variant
            for mention in expected:
                roles.add(mention["role"])
                kinds.add(mention["value"]["kind"])
                origins.add(mention["value"].get("origin"))
        assert failures == []
        assert kinds >= {"date", "early", "current"}
        assert silent_rows > 0
        assert roles >= {"point", "range-start", "range-end"}
        assert "relativeAge" in origins
        report(f"temporal corpus ({len(rows)} expressions)",
               time.perf_counter() - started, 1.0)


# --- 8. round-trips and golden renders ----------------------------------------

class TestRoundTripsAndGoldens:
    def test_serialization_render_and_goldens(self):
        rng = random.Random(606)
        started = time.perf_counter()
        for _ in range(500):
            story = random_story(rng, 8)
            assert deserialize_story(serialize_story(story)) == story
            geometry = timeline_layout(story)
            assert render_svg(geometry, story) == render_svg(geometry, story)
        for name in ("e22_analog", "single_cluster", "fig2_shaped"):
            story = deserialize_story((DATA / f"{name}.json").read_text())
            golden = (DATA / "golden" / f"{name}.svg").read_text()
            assert render_svg(timeline_layout(story), story) == golden
        report("round-trips and goldens", time.perf_counter() - started, 5.0)


# --- 9. service integration ----------------------------------------------------

class TestServiceIntegration:
    def test_lifecycle_restart_and_concurrent_cas(self, tmp_path):
        started = time.perf_counter()
        narrative = " ".join(
            f"I was diagnosed with asthma in {1960 + i}." for i in range(50))
        app = create_app(data_dir=tmp_path)
        client = TestClient(app)
        record = client.post("/stories", json={
            "name": "Rio Park", "dateOfBirth": "1955-02-01",
            "narrative": narrative}).json()
        sid = record["storyId"]
        assert record["revision"] == 1
        assert len(record["story"]["events"]) == 50

        layout_before = client.get(f"/stories/{sid}/layout").content
        eid = record["story"]["events"][0]["id"]
        body = client.patch(f"/stories/{sid}/events/{eid}",
                            json={"title": "a very different and longer title"})
        assert body.status_code == 200
        assert body.json()["revision"] == 2
        layout_after = client.get(f"/stories/{sid}/layout").content
        assert layout_after != layout_before

        reborn = TestClient(create_app(data_dir=tmp_path))
        assert reborn.get(f"/stories/{sid}").json() == client.get(
            f"/stories/{sid}").json()
        assert reborn.get(f"/stories/{sid}/layout").content == layout_after

        ids = [e["id"] for e in record["story"]["events"]]
        failures = []

        def worker(event_id: str) -> None:
            with TestClient(app) as local:
                for _ in range(400):
                    revision = local.get(f"/stories/{sid}").json()["revision"]
                    response = local.patch(
                        f"/stories/{sid}/events/{event_id}",
                        json={"notes": f"edited {event_id}"},
                        headers={"If-Match": str(revision)})
                    if response.status_code == 200:
                        return
                    if response.status_code != 409:
                        failures.append((event_id, response.status_code))
                        return
                failures.append((event_id, "starved"))

        threads = [threading.Thread(target=worker, args=(eid,)) for eid in ids]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert failures == []
        final = client.get(f"/stories/{sid}").json()
        assert final["revision"] == 2 + len(ids)
        assert all(e["notes"] == f"edited {e['id']}"
                   for e in final["story"]["events"])
        report("service integration", time.perf_counter() - started, 30.0)


# --- 10. desk-scale performance --------------------------------------------------

class TestPerformance:
    def test_hundred_event_story_renders_quickly(self):
        rng = random.Random(707)
        events = tuple(random_event(rng, i) for i in range(100))
        story = HealthStory("Rio Park", dt.date(1950, 3, 3), events)
        render_svg(timeline_layout(story), story)  # warm caches

        best = min(
            self._timed(story) for _ in range(3)
        )
        report("100-event layout + render", best, 0.1)

    @staticmethod
    def _timed(story: HealthStory) -> float:
        started = time.perf_counter()
        render_svg(timeline_layout(story), story)
        return time.perf_counter() - started

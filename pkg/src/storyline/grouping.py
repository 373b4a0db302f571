"""Concern groups and time groups.

Concern grouping nests specific concerns under shared broad concerns and
keeps the Other and LifeConcern sentinels apart. Time grouping routes each
start/end value independently into Unspecified, Early, Current, or a
temporal cluster; the four categories partition all date slots. Clusters
come from one-dimensional DBSCAN over dates mapped onto a [0, 100] axis,
with the radius adapted to the overall span: min(30, (2.5 / span-years) *
100), so long histories cluster more selectively than short ones.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

from storyline.model import CONCERN_LIFE, CONCERN_OTHER, Event, TimeKind

EPS_BASE = 30.0
EPS_REFERENCE_GAP_YEARS = 2.5
AXIS_SPAN = 100.0
DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class SpecificGroup:
    name: str
    event_ids: tuple[str, ...]  # narrative order


@dataclass(frozen=True)
class BroadGroup:
    name: str
    specific_groups: tuple[SpecificGroup, ...]

    @property
    def event_ids(self) -> tuple[str, ...]:
        return tuple(eid for g in self.specific_groups for eid in g.event_ids)


@dataclass(frozen=True)
class ConcernGroups:
    broad_groups: tuple[BroadGroup, ...]
    standalone_specific_groups: tuple[SpecificGroup, ...]
    other_group: tuple[str, ...]
    life_group: tuple[str, ...]

    def all_event_ids(self) -> list[str]:
        ids: list[str] = []
        for broad in self.broad_groups:
            ids.extend(broad.event_ids)
        for group in self.standalone_specific_groups:
            ids.extend(group.event_ids)
        ids.extend(self.other_group)
        ids.extend(self.life_group)
        return ids


@dataclass(frozen=True)
class DatedValue:
    event_id: str
    which_end: str  # "start" | "end"
    date: dt.date


@dataclass(frozen=True)
class TemporalCluster:
    min_date: dt.date
    max_date: dt.date
    values: tuple[DatedValue, ...]


@dataclass(frozen=True)
class TimeGroups:
    unspecified: tuple[tuple[str, str], ...]  # (event-id, which-end)
    early: tuple[tuple[str, str], ...]
    current: tuple[tuple[str, str], ...]
    clusters: tuple[TemporalCluster, ...]

    def slot_count(self) -> int:
        return (len(self.unspecified) + len(self.early) + len(self.current)
                + sum(len(c.values) for c in self.clusters))


@dataclass(frozen=True)
class GroupedStory:
    concern: ConcernGroups
    time: TimeGroups


def group_story(events) -> GroupedStory:
    return GroupedStory(build_concern_groups(events), assign_time_groups(events))


def build_concern_groups(events) -> ConcernGroups:
    """Group events by exact specific-concern string, nesting specific
    groups that share a broad concern; order everything by earliest
    narrative index. The broad concern of a specific group is taken from
    its earliest member."""
    order: list[str] = []
    members: dict[str, list[Event]] = {}
    for event in sorted(events, key=lambda e: e.narrative_index):
        key = event.specific_concern
        if key not in members:
            members[key] = []
            order.append(key)
        members[key].append(event)

    other = tuple(e.id for e in members.get(CONCERN_OTHER, []))
    life = tuple(e.id for e in members.get(CONCERN_LIFE, []))

    broad_order: list[str] = []
    broad_members: dict[str, list[SpecificGroup]] = {}
    standalone: list[SpecificGroup] = []
    for key in order:
        if key in (CONCERN_OTHER, CONCERN_LIFE):
            continue
        group = SpecificGroup(key, tuple(e.id for e in members[key]))
        broad = members[key][0].broad_concern
        if broad is None:
            standalone.append(group)
        else:
            if broad not in broad_members:
                broad_members[broad] = []
                broad_order.append(broad)
            broad_members[broad].append(group)

    broads = tuple(
        BroadGroup(name, tuple(broad_members[name])) for name in broad_order
    )
    return ConcernGroups(broads, tuple(standalone), other, life)


def compute_eps(span_years: float) -> float:
    """Clustering radius on the normalized [0, 100] axis."""
    if span_years <= 0:
        return EPS_BASE
    return min(EPS_BASE, (EPS_REFERENCE_GAP_YEARS / span_years) * AXIS_SPAN)


def cluster_dates(dated: list[DatedValue]) -> tuple[TemporalCluster, ...]:
    """1-D DBSCAN with minPts=1 over dates normalized onto [0, 100].

    With minPts=1 nothing is noise, so the clusters partition the input;
    on a sorted axis a cluster boundary falls exactly where a gap exceeds
    eps. Returned in chronological order.
    """
    if not dated:
        return ()
    ordered = sorted(dated, key=lambda v: (v.date, v.event_id, v.which_end))
    earliest, latest = ordered[0].date, ordered[-1].date
    span_days = (latest - earliest).days
    if span_days == 0:
        return (TemporalCluster(earliest, latest, tuple(ordered)),)
    eps = compute_eps(span_days / DAYS_PER_YEAR)
    positions = [
        (value.date - earliest).days / span_days * AXIS_SPAN for value in ordered
    ]
    clusters: list[TemporalCluster] = []
    bucket = [ordered[0]]
    for value, position, prev_position in zip(ordered[1:], positions[1:], positions):
        if position - prev_position > eps:
            clusters.append(TemporalCluster(bucket[0].date, bucket[-1].date, tuple(bucket)))
            bucket = [value]
        else:
            bucket.append(value)
    clusters.append(TemporalCluster(bucket[0].date, bucket[-1].date, tuple(bucket)))
    return tuple(clusters)


def assign_time_groups(events) -> TimeGroups:
    """Route every (event, end) slot independently by its time variant."""
    unspecified: list[tuple[str, str]] = []
    early: list[tuple[str, str]] = []
    current: list[tuple[str, str]] = []
    dated: list[DatedValue] = []
    for event in events:
        for which, value in (("start", event.start), ("end", event.end)):
            if value.kind is TimeKind.UNSPECIFIED:
                unspecified.append((event.id, which))
            elif value.kind is TimeKind.EARLY:
                early.append((event.id, which))
            elif value.kind is TimeKind.CURRENT:
                current.append((event.id, which))
            else:
                dated.append(DatedValue(event.id, which, value.date))
    return TimeGroups(
        tuple(unspecified), tuple(early), tuple(current), cluster_dates(dated)
    )

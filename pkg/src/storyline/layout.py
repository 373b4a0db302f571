"""Timeline layout: segments, per-cluster timescales, and lane packing.

The canvas splits into a non-temporal region of width W*r and a temporal
region of width W*(1-r). Temporal segments (Past, one Timescale per
cluster, Present) share the temporal region with widths proportional to
how many date values each contains, so dense periods get more room. Each
Timescale carries a linear date-to-pixel scale; Past, Present, and the
No Time segment space their occupants evenly. Events become fixed-size
info boxes packed first-fit into horizontal lanes per concern track, and
the split ratio r is chosen from nine candidates as the one minimizing
total height, ties toward the smallest.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, replace
from enum import Enum

from storyline.grouping import (
    ConcernGroups,
    GroupedStory,
    TemporalCluster,
    TimeGroups,
    group_story,
)
from storyline.model import CONCERN_LIFE, CONCERN_OTHER, Event, HealthStory, TimeKind


@dataclass(frozen=True)
class LayoutConfig:
    canvas_width: float = 1600.0
    split_ratios: tuple[float, ...] = (0.10, 0.15, 0.20, 0.25, 0.30,
                                       0.35, 0.40, 0.45, 0.50)
    lane_height: float = 56.0  # base lane height; taller boxes stretch their lane
    lane_gap: float = 6.0
    infobox_padding: float = 8.0  # min horizontal separation within a lane
    char_width: float = 7.2
    notes_char_width: float = 6.2
    min_segment_width: float = 48.0
    min_box_width: float = 64.0
    max_box_width: float = 240.0
    header_band: float = 28.0  # segment label chrome
    axis_band: float = 36.0  # dual axis chrome

    @property
    def chrome_height(self) -> float:
        return self.header_band + self.axis_band


class SegmentKind(str, Enum):
    NO_TIME = "noTime"
    PAST = "past"
    TIMESCALE = "timescale"
    PRESENT = "present"


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    left: float
    right: float
    cluster: TemporalCluster | None = None  # Timescale segments only

    @property
    def width(self) -> float:
        return self.right - self.left

    def x_for(self, date: dt.date) -> float:
        """Linear date-to-pixel scale; Timescale segments only."""
        if self.cluster is None:
            raise ValueError("only Timescale segments carry a scale")
        span = (self.cluster.max_date - self.cluster.min_date).days
        if span == 0:
            return (self.left + self.right) / 2
        offset = (date - self.cluster.min_date).days
        return self.left + offset / span * self.width


@dataclass(frozen=True)
class Marker:
    kind: str  # "circle" | "line"
    x1: float
    x2: float


@dataclass(frozen=True)
class InfoBoxGeometry:
    event_id: str
    left: float
    right: float
    top: float
    bottom: float
    marker: Marker
    spans_segments: tuple[int, ...]


@dataclass(frozen=True)
class TrackGeometry:
    label: str
    top: float
    bottom: float
    lanes: tuple[tuple[InfoBoxGeometry, ...], ...]
    lane_heights: tuple[float, ...]

    @property
    def height(self) -> float:
        return self.bottom - self.top


@dataclass(frozen=True)
class LayoutGeometry:
    canvas_width: float
    split_ratio: float
    segments: tuple[Segment, ...]
    tracks: tuple[TrackGeometry, ...]
    total_height: float

    def boxes(self):
        for track in self.tracks:
            for lane in track.lanes:
                yield from lane


def _resolvable(value) -> bool:
    return value.kind is not TimeKind.UNSPECIFIED


def allocate_segment_widths(
    counts: list[int], total_width: float, min_segment_width: float
) -> list[float]:
    """Widths proportional to counts over `total_width`, zero-count
    segments omitted (width 0), a minimum width enforced and the sum
    renormalized back to `total_width`."""
    total = sum(counts)
    if total == 0:
        return [0.0 for _ in counts]
    widths = [
        max(min_segment_width, count / total * total_width) if count else 0.0
        for count in counts
    ]
    scale = total_width / sum(widths)
    return [w * scale for w in widths]


def _box_size(event: Event, config: LayoutConfig) -> tuple[float, float]:
    width = min(config.max_box_width,
                max(config.min_box_width, 20 + config.char_width * len(event.title)))
    if event.notes:
        note_lines = min(3, math.ceil(len(event.notes) * config.notes_char_width
                                      / (width - 16)))
    else:
        note_lines = 0
    height = 10 + 18 + note_lines * 13 + 8 + 10  # pads, title, notes, tail
    return width, height


def pack_track(boxes: list[tuple[float, float, int]], padding: float) -> list[list[int]]:
    """First-fit lane packing.

    `boxes` holds (left, right, narrative_index) extents; returns lanes as
    lists of indices into `boxes`. Boxes are processed by (left, narrative
    index) and placed into the first lane where they keep `padding`
    clearance from every box already there.
    """
    order = sorted(range(len(boxes)), key=lambda i: (boxes[i][0], boxes[i][2]))
    lanes: list[list[int]] = []
    lane_right: list[float] = []
    for i in order:
        left, right, _ = boxes[i]
        for lane_index, occupied_right in enumerate(lane_right):
            # sorted by left, so clearing the rightmost box clears them all
            if left >= occupied_right + padding:
                lanes[lane_index].append(i)
                lane_right[lane_index] = right
                break
        else:
            lanes.append([i])
            lane_right.append(right)
    return lanes


def _even_slots(left: float, width: float, count: int) -> list[float]:
    return [left + width * (i + 1) / (count + 1) for i in range(count)]


@dataclass(frozen=True)
class _Anchors:
    segments: tuple[Segment, ...]
    dated: dict  # (event-id, which-end) -> (segment index, x)
    past_slots: dict  # (event-id, which-end) -> (segment index, x)
    present_slots: dict
    present_segment: int | None
    no_time_slots: dict  # event-id -> (segment index, x)


def _build_segments(
    events: tuple[Event, ...],
    time_groups: TimeGroups,
    config: LayoutConfig,
    ratio: float,
) -> _Anchors:
    W = config.canvas_width
    no_time_events = [
        e for e in sorted(events, key=lambda e: e.narrative_index)
        if not _resolvable(e.start) and not _resolvable(e.end)
    ]
    counts = ([len(time_groups.early)]
              + [len(c.values) for c in time_groups.clusters]
              + [len(time_groups.current)])
    has_temporal = sum(counts) > 0

    segments: list[Segment] = []
    no_time_index = None
    if no_time_events:
        no_time_right = W * ratio if has_temporal else W
        no_time_index = 0
        segments.append(Segment(SegmentKind.NO_TIME, 0.0, no_time_right))

    dated: dict = {}
    past_slots: dict = {}
    present_slots: dict = {}
    present_segment = None
    if has_temporal:
        widths = allocate_segment_widths(counts, W * (1 - ratio), config.min_segment_width)
        kinds = ([ (SegmentKind.PAST, None) ]
                 + [(SegmentKind.TIMESCALE, c) for c in time_groups.clusters]
                 + [(SegmentKind.PRESENT, None)])
        x = W * ratio
        for (kind, cluster), width in zip(kinds, widths):
            if width == 0.0:
                continue
            index = len(segments)
            segment = Segment(kind, x, x + width, cluster)
            segments.append(segment)
            x = segment.right
            if kind is SegmentKind.TIMESCALE:
                for value in cluster.values:
                    dated[(value.event_id, value.which_end)] = (index, segment.x_for(value.date))
            elif kind is SegmentKind.PAST:
                slots = _even_slots(segment.left, width, len(time_groups.early))
                for slot, key in zip(slots, time_groups.early):
                    past_slots[key] = (index, slot)
            else:
                present_segment = index
                by_event = {e.id: e for e in events}
                slotted = []
                for eid, which in time_groups.current:
                    other = by_event[eid].end if which == "start" else by_event[eid].start
                    if not _resolvable(other):
                        slotted.append((eid, which))
                slots = _even_slots(segment.left, width, len(slotted))
                for slot, key in zip(slots, slotted):
                    present_slots[key] = (index, slot)

    no_time_slots: dict = {}
    if no_time_index is not None:
        segment = segments[no_time_index]
        slots = _even_slots(segment.left, segment.width, len(no_time_events))
        for slot, event in zip(slots, no_time_events):
            no_time_slots[event.id] = (no_time_index, slot)

    return _Anchors(tuple(segments), dated, past_slots, present_slots,
                    present_segment, no_time_slots)


def _anchor(event: Event, which: str, anchors: _Anchors) -> tuple[int, float] | None:
    value = event.start if which == "start" else event.end
    key = (event.id, which)
    if value.kind is TimeKind.DATE:
        return anchors.dated.get(key)
    if value.kind is TimeKind.EARLY:
        return anchors.past_slots.get(key)
    if value.kind is TimeKind.CURRENT:
        if key in anchors.present_slots:
            return anchors.present_slots[key]
        if anchors.present_segment is not None:
            segment = anchors.segments[anchors.present_segment]
            return (anchors.present_segment, (segment.left + segment.right) / 2)
        return None
    return None


def _marker_for(event: Event, anchors: _Anchors) -> Marker | None:
    start = _anchor(event, "start", anchors)
    end = _anchor(event, "end", anchors)
    if start is None and end is None:
        slot = anchors.no_time_slots.get(event.id)
        if slot is None:
            return None
        return Marker("circle", slot[1], slot[1])
    if start is None or end is None:
        x = (start or end)[1]
        return Marker("circle", x, x)
    x1, x2 = start[1], end[1]
    if x1 > x2:
        x1, x2 = x2, x1
    if x1 == x2:
        return Marker("circle", x1, x1)
    return Marker("line", x1, x2)


def _spanned(marker: Marker, segments: tuple[Segment, ...]) -> tuple[int, ...]:
    lo, hi = min(marker.x1, marker.x2), max(marker.x1, marker.x2)
    return tuple(
        i for i, s in enumerate(segments) if s.left <= hi and s.right >= lo
    )


def _track_specs(events: tuple[Event, ...], concerns: ConcernGroups) -> list[tuple[str, list[str]]]:
    """Ordered (label, member event ids): broad groups, standalone
    specific groups, then Other and LifeConcern at the bottom."""
    specs: list[tuple[str, list[str]]] = []
    for broad in concerns.broad_groups:
        specs.append((broad.name, list(broad.event_ids)))
    for group in concerns.standalone_specific_groups:
        specs.append((group.name, list(group.event_ids)))
    if concerns.other_group:
        specs.append((CONCERN_OTHER, list(concerns.other_group)))
    if concerns.life_group:
        specs.append((CONCERN_LIFE, list(concerns.life_group)))
    return specs


def draft_layout(
    story: HealthStory,
    groups: GroupedStory,
    config: LayoutConfig,
    ratio: float,
) -> LayoutGeometry:
    """Lay out the story at one fixed split ratio."""
    events = story.events
    anchors = _build_segments(events, groups.time, config, ratio)
    by_id = {e.id: e for e in events}

    tracks: list[TrackGeometry] = []
    y = config.header_band
    for label, member_ids in _track_specs(events, groups.concern):
        members = [by_id[eid] for eid in member_ids]
        extents: list[tuple[float, float, int]] = []
        boxed: list[tuple[Event, Marker, float, float]] = []
        for event in members:
            marker = _marker_for(event, anchors)
            if marker is None:
                continue
            width, height = _box_size(event, config)
            mid = (marker.x1 + marker.x2) / 2
            left = min(max(mid - width / 2, 0.0), config.canvas_width - width)
            boxed.append((event, marker, left, height))
            extents.append((left, left + width, event.narrative_index))
        lane_indices = pack_track(extents, config.infobox_padding)

        lanes: list[tuple[InfoBoxGeometry, ...]] = []
        lane_heights: list[float] = []
        lane_top = y
        for lane in lane_indices:
            tallest = max(boxed[i][3] for i in lane)
            lane_height = max(config.lane_height, tallest + config.lane_gap)
            row = []
            for i in lane:
                event, marker, left, height = boxed[i]
                width = extents[i][1] - extents[i][0]
                row.append(InfoBoxGeometry(
                    event_id=event.id,
                    left=left,
                    right=left + width,
                    top=lane_top + config.lane_gap / 2,
                    bottom=lane_top + config.lane_gap / 2 + height,
                    marker=marker,
                    spans_segments=_spanned(marker, anchors.segments),
                ))
            lanes.append(tuple(row))
            lane_heights.append(lane_height)
            lane_top += lane_height
        track_height = sum(lane_heights)
        tracks.append(TrackGeometry(label, y, y + track_height,
                                    tuple(lanes), tuple(lane_heights)))
        y += track_height

    return LayoutGeometry(
        canvas_width=config.canvas_width,
        split_ratio=ratio,
        segments=anchors.segments,
        tracks=tuple(tracks),
        total_height=y + config.axis_band,
    )


def timeline_layout(
    story: HealthStory,
    groups: GroupedStory | None = None,
    config: LayoutConfig | None = None,
) -> LayoutGeometry:
    """Evaluate every candidate split ratio and keep the shortest layout;
    ties break toward the smallest ratio."""
    config = config if config is not None else LayoutConfig()
    groups = groups if groups is not None else group_story(story.events)
    best: LayoutGeometry | None = None
    for ratio in config.split_ratios:
        candidate = draft_layout(story, groups, config, ratio)
        if best is None or candidate.total_height < best.total_height:
            best = candidate
    assert best is not None
    return best


def merge_clusters(time_groups: TimeGroups) -> TimeGroups:
    """Collapse all temporal clusters into one spanning the full range."""
    if len(time_groups.clusters) <= 1:
        return time_groups
    values = tuple(v for c in time_groups.clusters for v in c.values)
    merged = TemporalCluster(
        min(v.date for v in values), max(v.date for v in values), values
    )
    return replace(time_groups, clusters=(merged,))


def single_timescale_layout(
    story: HealthStory,
    groups: GroupedStory | None = None,
    config: LayoutConfig | None = None,
) -> LayoutGeometry:
    """Comparison baseline: identical to timeline_layout but every dated
    value shares one linear scale."""
    groups = groups if groups is not None else group_story(story.events)
    merged = GroupedStory(groups.concern, merge_clusters(groups.time))
    return timeline_layout(story, merged, config)


# --- geometry export ----------------------------------------------------------

def _round(x: float) -> float:
    return round(x, 2)


def layout_to_obj(geometry: LayoutGeometry) -> dict:
    segments = []
    for segment in geometry.segments:
        obj = {
            "kind": segment.kind.value,
            "left": _round(segment.left),
            "right": _round(segment.right),
        }
        if segment.cluster is not None:
            obj["dateRange"] = [segment.cluster.min_date.isoformat(),
                                segment.cluster.max_date.isoformat()]
        segments.append(obj)
    tracks = []
    for track in geometry.tracks:
        tracks.append({
            "label": track.label,
            "top": _round(track.top),
            "bottom": _round(track.bottom),
            "laneHeights": [_round(h) for h in track.lane_heights],
            "lanes": [
                [
                    {
                        "eventId": box.event_id,
                        "left": _round(box.left),
                        "right": _round(box.right),
                        "top": _round(box.top),
                        "bottom": _round(box.bottom),
                        "marker": {
                            "kind": box.marker.kind,
                            "x1": _round(box.marker.x1),
                            "x2": _round(box.marker.x2),
                        },
                        "segments": list(box.spans_segments),
                    }
                    for box in lane
                ]
                for lane in track.lanes
            ],
        })
    return {
        "canvasWidth": _round(geometry.canvas_width),
        "splitRatio": geometry.split_ratio,
        "totalHeight": _round(geometry.total_height),
        "segments": segments,
        "tracks": tracks,
    }


def serialize_layout(geometry: LayoutGeometry) -> str:
    return json.dumps(layout_to_obj(geometry), ensure_ascii=False, indent=2) + "\n"

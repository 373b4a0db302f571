"""SVG rendering of laid-out stories.

Events become dialogue bubbles with a tail pointing at their time marker,
color coded by designation and badged with a two-letter abbreviation.
Timescale segments draw vertical grid lines whose unit adapts to the date
span, with dual axis labels: absolute dates in black above, ages in green
below. Life events additionally draw a full-height vertical line. Output
is deterministic byte for byte.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from storyline.layout import (
    InfoBoxGeometry,
    LayoutGeometry,
    Segment,
    SegmentKind,
)
from storyline.model import Designation, HealthStory, StorylineError

MAX_TICKS = 12
MIN_TICKS = 2


class RenderConsistencyError(StorylineError):
    """Geometry and story disagree about which events exist."""


BADGES = {
    Designation.DIAGNOSIS: "Dx",
    Designation.PROCEDURE: "Pc",
    Designation.TEST: "Ts",
    Designation.MEDICATION: "Md",
    Designation.TREATMENT: "Tx",
    Designation.PROVIDER: "Pv",
    Designation.SYMPTOM: "Sy",
    Designation.LIFE_EVENT: "Le",
}

# Okabe-Ito categorical scheme: colorblind safe, pairwise distinct
_DEFAULT_PALETTE = {
    Designation.DIAGNOSIS: ("#E7F1F8", "#0072B2"),
    Designation.SYMPTOM: ("#FBEAE0", "#D55E00"),
    Designation.MEDICATION: ("#E5F5F0", "#009E73"),
    Designation.PROCEDURE: ("#FCF3E2", "#E69F00"),
    Designation.TEST: ("#EEF7FC", "#56B4E9"),
    Designation.TREATMENT: ("#FDFCE8", "#F0E442"),
    Designation.PROVIDER: ("#EDEDED", "#333333"),
    Designation.LIFE_EVENT: ("#F8EDF4", "#CC79A7"),
}

# light strokes need dark badge text
_DARK_TEXT = {Designation.TREATMENT, Designation.TEST, Designation.PROCEDURE}


@dataclass(frozen=True)
class StyleConfig:
    designation_palette: dict[Designation, tuple[str, str]] = field(
        default_factory=lambda: dict(_DEFAULT_PALETTE))
    life_event_line_color: str = "#8E44AD"
    absolute_axis_label_color: str = "#000000"
    relative_axis_label_color: str = "#1B7837"
    grid_line_color: str = "#DDDDDD"
    separator_color: str = "#999999"
    track_separator_color: str = "#CCCCCC"
    background_color: str = "#FFFFFF"
    grid_base_spacing: float = 40.0  # min px between axis labels, not grid lines
    font_family: str = "Helvetica, Arial, sans-serif"
    title_font_size: float = 13.0
    notes_font_size: float = 11.0
    label_font_size: float = 12.0
    axis_font_size: float = 10.0

    def __post_init__(self) -> None:
        missing = [d for d in Designation if d not in self.designation_palette]
        if missing:
            raise ValueError(f"palette missing designations: {missing}")
        strokes = [s for _, s in self.designation_palette.values()]
        if len(set(strokes)) != len(strokes):
            raise ValueError("palette stroke colors must be pairwise distinct")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _month_start_on_or_after(day: dt.date, step_months: int) -> dt.date:
    year, month = day.year, day.month
    if day.day != 1:
        month += 1
        if month > 12:
            year, month = year + 1, 1
    # snap up to the unit boundary (quarters start Jan/Apr/Jul/Oct)
    while (month - 1) % step_months:
        month += 1
        if month > 12:
            year, month = year + 1, 1
    return dt.date(year, month, 1)


def _unit_boundaries(start: dt.date, end: dt.date, step_months: int) -> list[dt.date]:
    ticks = []
    tick = _month_start_on_or_after(start, step_months)
    while tick <= end:
        ticks.append(tick)
        month = tick.month + step_months
        tick = dt.date(tick.year + (month - 1) // 12, (month - 1) % 12 + 1, 1)
    return ticks


def compute_grid_ticks(segment: Segment) -> list[tuple[dt.date, float]]:
    """Grid ticks for a Timescale segment as (date, x) pairs.

    Tries month, quarter, then year boundaries and keeps the densest unit
    that stays within MAX_TICKS; spans too long even for yearly ticks thin
    to a fixed stride, and spans too short for two ticks of any unit get
    one centered tick.
    """
    if segment.cluster is None:
        raise ValueError("grid ticks apply to Timescale segments only")
    start, end = segment.cluster.min_date, segment.cluster.max_date
    if start == end:
        return [(start, (segment.left + segment.right) / 2)]
    for step_months in (1, 3, 12):
        ticks = _unit_boundaries(start, end, step_months)
        if MIN_TICKS <= len(ticks) <= MAX_TICKS:
            return [(d, segment.x_for(d)) for d in ticks]
    years = _unit_boundaries(start, end, 12)
    if len(years) > MAX_TICKS:
        stride = math.ceil(len(years) / MAX_TICKS)
        return [(d, segment.x_for(d)) for d in years[::stride]]
    mid = start + dt.timedelta(days=(end - start).days // 2)
    return [(mid, segment.x_for(mid))]


def _age_at(dob: dt.date, day: dt.date) -> int:
    return day.year - dob.year - ((day.month, day.day) < (dob.month, dob.day))


def _segment_label(segment: Segment) -> str:
    if segment.kind is SegmentKind.NO_TIME:
        return "No time"
    if segment.kind is SegmentKind.PAST:
        return "Past"
    if segment.kind is SegmentKind.PRESENT:
        return "Present"
    lo, hi = segment.cluster.min_date.year, segment.cluster.max_date.year
    return str(lo) if lo == hi else f"{lo}–{hi}"


def _tick_label(day: dt.date, unit_months: int) -> str:
    if unit_months >= 12 and day.month == 1 and day.day == 1:
        return str(day.year)
    return day.strftime("%b %Y")


def _wrap_notes(notes: str, char_budget: int, max_lines: int) -> list[str]:
    if not notes or max_lines <= 0:
        return []
    budget = max(char_budget, 1)
    lines: list[str] = []
    current = ""
    for word in notes.split():
        while len(word) > budget:
            if current:
                lines.append(current)
                current = ""
            lines.append(word[:budget])
            word = word[budget:]
        candidate = f"{current} {word}".strip()
        if len(candidate) <= budget:
            current = candidate
        else:
            lines.append(current)
            current = word
    if current:
        lines.append(current)
    if len(lines) > max_lines:
        lines = lines[:max_lines]
        lines[-1] = lines[-1][: budget - 1] + "…"
    return lines


class _Doc:
    def __init__(self) -> None:
        self.parts: list[str] = []

    def add(self, text: str) -> None:
        self.parts.append(text)

    def text(self, x, y, content, size, color, anchor="start", weight=None,
             family="Helvetica, Arial, sans-serif") -> None:
        weight_attr = f' font-weight="{weight}"' if weight else ""
        self.add(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="{family}" '
            f'font-size="{_fmt(size)}" fill="{color}" '
            f'text-anchor="{anchor}"{weight_attr}>{escape(content)}</text>'
        )

    def line(self, x1, y1, x2, y2, color, width=1.0, cls=None) -> None:
        cls_attr = f' class="{cls}"' if cls else ""
        self.add(
            f'<line{cls_attr} x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{color}" stroke-width="{_fmt(width)}"/>'
        )


def _check_consistency(geometry: LayoutGeometry, story: HealthStory) -> None:
    geometry_ids = [box.event_id for box in geometry.boxes()]
    story_ids = {e.id for e in story.events}
    dangling = sorted(set(geometry_ids) - story_ids)
    if dangling:
        raise RenderConsistencyError(
            f"geometry references unknown events: {', '.join(dangling)}")
    duplicated = sorted({i for i in geometry_ids if geometry_ids.count(i) > 1})
    if duplicated:
        raise RenderConsistencyError(
            f"geometry repeats events: {', '.join(duplicated)}")
    missing = sorted(story_ids - set(geometry_ids))
    if missing:
        raise RenderConsistencyError(
            f"geometry is missing events: {', '.join(missing)}")


def _render_segment(doc: _Doc, index: int, segment: Segment, height: float,
                    dob: dt.date | None, style: StyleConfig) -> None:
    doc.add(f'<g id="segment-{index}">')
    top, bottom = 28.0, height - 36.0
    if segment.kind is SegmentKind.TIMESCALE:
        ticks = compute_grid_ticks(segment)
        unit_months = 1
        if len(ticks) >= 2:
            gap_days = (ticks[1][0] - ticks[0][0]).days
            unit_months = 12 if gap_days >= 300 else 3 if gap_days >= 85 else 1
        label_budget = max(
            1, math.ceil(style.grid_base_spacing
                         / max(segment.width / max(len(ticks), 1), 1e-9)))
        for i, (day, x) in enumerate(ticks):
            doc.line(x, top, x, bottom, style.grid_line_color, 1.0, cls="grid")
            if i % label_budget:
                continue
            doc.text(x, bottom + 14, _tick_label(day, unit_months),
                     style.axis_font_size, style.absolute_axis_label_color,
                     anchor="middle", family=style.font_family)
            if dob is not None and day >= dob:
                doc.text(x, bottom + 28, str(_age_at(dob, day)),
                         style.axis_font_size, style.relative_axis_label_color,
                         anchor="middle", family=style.font_family)
    doc.text((segment.left + segment.right) / 2, 18, _segment_label(segment),
             style.label_font_size, "#333333", anchor="middle",
             family=style.font_family)
    if index > 0:
        doc.line(segment.left, 0, segment.left, height,
                 style.separator_color, 1.0, cls="segment-separator")
    doc.add("</g>")


def _render_box(doc: _Doc, box: InfoBoxGeometry, event, style: StyleConfig,
                height: float) -> None:
    fill, stroke = style.designation_palette[event.designation]
    width = box.right - box.left
    bubble_bottom = box.bottom - 10  # tail occupies the last 10px
    marker_y = box.bottom
    mid = (box.marker.x1 + box.marker.x2) / 2

    doc.add(f'<g id="event-{escape(event.id, {chr(34): "&quot;"})}">')
    if event.designation is Designation.LIFE_EVENT:
        doc.line(mid, 28.0, mid, height - 36.0,
                 style.life_event_line_color, 2.0, cls="life-line")
    if box.marker.kind == "line":
        doc.line(box.marker.x1, marker_y, box.marker.x2, marker_y, stroke,
                 4.0, cls="marker-line")
    else:
        doc.add(f'<circle class="marker-circle" cx="{_fmt(mid)}" '
                f'cy="{_fmt(marker_y)}" r="4.5" fill="{stroke}"/>')

    tail_x = min(max(mid, box.left + 14), box.right - 14)
    doc.add(
        f'<path class="bubble" d="M {_fmt(box.left)} {_fmt(box.top)} '
        f'H {_fmt(box.right)} V {_fmt(bubble_bottom)} H {_fmt(tail_x + 6)} '
        f'L {_fmt(mid)} {_fmt(marker_y)} L {_fmt(tail_x - 6)} '
        f'{_fmt(bubble_bottom)} H {_fmt(box.left)} Z" '
        f'fill="{fill}" stroke="{stroke}" stroke-width="1.5"/>'
    )
    doc.add(f'<rect x="{_fmt(box.left + 4)}" y="{_fmt(box.top + 4)}" '
            f'width="18" height="13" rx="3" fill="{stroke}"/>')
    badge_color = "#000000" if event.designation in _DARK_TEXT else "#FFFFFF"
    doc.text(box.left + 13, box.top + 14, BADGES[event.designation], 9,
             badge_color, anchor="middle", family=style.font_family)
    doc.text(box.left + 26, box.top + 14.5, event.title,
             style.title_font_size, "#222222", family=style.font_family)
    note_budget = int((width - 16) / 6.2)
    reserved = int((box.bottom - box.top - 46) / 13)
    for i, line in enumerate(_wrap_notes(event.notes, note_budget, reserved)):
        doc.text(box.left + 8, box.top + 28 + 13 * (i + 1), line,
                 style.notes_font_size, "#444444", family=style.font_family)
    doc.add("</g>")


def render_svg(geometry: LayoutGeometry, story: HealthStory,
               style: StyleConfig | None = None) -> str:
    """Style a laid-out story as a standalone SVG document."""
    style = style if style is not None else StyleConfig()
    _check_consistency(geometry, story)
    by_id = {e.id: e for e in story.events}
    width, height = geometry.canvas_width, geometry.total_height

    doc = _Doc()
    doc.add(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    doc.add(f'<rect width="{_fmt(width)}" height="{_fmt(height)}" '
            f'fill="{style.background_color}"/>')

    for index, segment in enumerate(geometry.segments):
        _render_segment(doc, index, segment, height, story.date_of_birth, style)

    for index, track in enumerate(geometry.tracks):
        doc.add(f'<g id="track-{index}">')
        doc.text(6, track.top + 12, track.label, 10, "#777777",
                 family=style.font_family)
        doc.line(0, track.bottom, width, track.bottom,
                 style.track_separator_color, 1.0, cls="track-separator")
        doc.add("</g>")

    ordered_boxes = sorted(geometry.boxes(),
                           key=lambda b: by_id[b.event_id].narrative_index)
    for box in ordered_boxes:
        _render_box(doc, box, by_id[box.event_id], style, height)

    doc.add("</svg>")
    return "\n".join(doc.parts) + "\n"

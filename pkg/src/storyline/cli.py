"""Command line entry points: parse, render, compare, serve.

Exit codes: 0 success, 2 I/O failure, 3 schema or validation failure,
4 remote parser failure. Outputs are byte-identical to what the library
and the HTTP service produce for the same inputs and configuration.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
from dataclasses import replace
from pathlib import Path

from storyline.grouping import GroupedStory, group_story
from storyline.layout import (
    LayoutConfig,
    draft_layout,
    merge_clusters,
    serialize_layout,
    timeline_layout,
)
from storyline.model import (
    HealthStory,
    StoryParseError,
    StorySchemaError,
    UnresolvableRelativeDatesError,
    deserialize_story,
    resolve_relative_dates,
    serialize_story,
    validate_story,
)
from storyline.narrative import (
    ParserMode,
    Profile,
    RemoteParserProtocolError,
    RemoteParserUnavailable,
    default_parser_config,
    parse_narrative,
)
from storyline.render import render_svg
from storyline.service import ENV_PORT, ENV_REFERENCE_DATE, create_app

EXIT_OK = 0
EXIT_IO = 2
EXIT_SCHEMA = 3
EXIT_REMOTE = 4

_PARSER_MODES = {"rule": ParserMode.RULE_BASED, "remote": ParserMode.REMOTE}


def _fail(code: int, message: str) -> int:
    print(f"storyline: {message}", file=sys.stderr)
    return code


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_bytes(text.encode("utf-8"))


def _load_story(path: str) -> HealthStory:
    return deserialize_story(_read_text(path))


def cmd_parse(args: argparse.Namespace) -> int:
    dob = None
    if args.dob is not None:
        try:
            dob = dt.date.fromisoformat(args.dob)
        except ValueError:
            return _fail(EXIT_SCHEMA, f"--dob must be an ISO date, got {args.dob!r}")
    try:
        text = _read_text(args.narrative)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.narrative}: {exc}")

    config = default_parser_config()
    reference = os.environ.get(ENV_REFERENCE_DATE)
    if reference:
        try:
            config = replace(config, reference_date=dt.date.fromisoformat(reference))
        except ValueError:
            return _fail(EXIT_SCHEMA,
                         f"{ENV_REFERENCE_DATE} must be an ISO date, got {reference!r}")
    config = replace(config, mode=_PARSER_MODES[args.parser])

    profile = Profile(args.name, dob)
    try:
        events = parse_narrative(text, profile, config)
    except (RemoteParserUnavailable, RemoteParserProtocolError) as exc:
        return _fail(EXIT_REMOTE, f"remote parser failed: {exc}")

    story = HealthStory(profile.name, dob, tuple(events), text)
    try:
        story = resolve_relative_dates(story)
    except UnresolvableRelativeDatesError as exc:
        print(f"storyline: warning: {exc}", file=sys.stderr)
    for violation in validate_story(story):
        print(f"storyline: warning: {violation.event_id}: {violation.rule}: "
              f"{violation.message}", file=sys.stderr)

    try:
        _emit(serialize_story(story), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    try:
        story = _load_story(args.story)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.story}: {exc}")
    except (StoryParseError, StorySchemaError) as exc:
        return _fail(EXIT_SCHEMA, f"invalid story document: {exc}")
    config = LayoutConfig(canvas_width=args.width)
    svg = render_svg(timeline_layout(story, config=config), story)
    try:
        _emit(svg, args.out)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    return EXIT_OK


def cmd_layout(args: argparse.Namespace) -> int:
    try:
        story = _load_story(args.story)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.story}: {exc}")
    except (StoryParseError, StorySchemaError) as exc:
        return _fail(EXIT_SCHEMA, f"invalid story document: {exc}")
    config = LayoutConfig(canvas_width=args.width)
    try:
        _emit(serialize_layout(timeline_layout(story, config=config)), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    return EXIT_OK


def _compare_rows(story: HealthStory, config: LayoutConfig):
    groups = group_story(story.events)
    merged = GroupedStory(groups.concern, merge_clusters(groups.time))
    chosen = timeline_layout(story, groups, config).split_ratio
    rows = []
    for ratio in config.split_ratios:
        multi = draft_layout(story, groups, config, ratio).total_height
        single = draft_layout(story, merged, config, ratio).total_height
        rows.append((ratio, multi, single, ratio == chosen))
    return rows


def _compare_table(rows) -> str:
    lines = ["ratio\tmultiHeight\tsingleHeight\tchosen"]
    for ratio, multi, single, chosen in rows:
        mark = "*" if chosen else ""
        lines.append(f"{ratio:.2f}\t{multi:.2f}\t{single:.2f}\t{mark}")
    return "\n".join(lines) + "\n"


def _compare_figure(rows, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ratios = [r for r, _, _, _ in rows]
    multi = [m for _, m, _, _ in rows]
    single = [s for _, _, s, _ in rows]
    chosen = next(r for r, _, _, c in rows if c)

    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(ratios, multi, marker="o", label="multi timescale")
    ax.plot(ratios, single, marker="s", label="single timescale")
    ax.axvline(chosen, color="#999999", linestyle="--", linewidth=1,
               label=f"chosen ratio {chosen:.2f}")
    ax.set_xlabel("split ratio")
    ax.set_ylabel("layout height (px)")
    ax.set_title("Layout height by timescale strategy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        story = _load_story(args.story)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.story}: {exc}")
    except (StoryParseError, StorySchemaError) as exc:
        return _fail(EXIT_SCHEMA, f"invalid story document: {exc}")
    config = LayoutConfig(canvas_width=args.width)
    rows = _compare_rows(story, config)
    try:
        _emit(_compare_table(rows), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    figure = args.figure
    if figure is None and args.out is not None:
        figure = str(Path(args.out).with_suffix(".png"))
    if figure is not None:
        try:
            _compare_figure(rows, Path(figure))
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot write {figure}: {exc}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    port = args.port
    if port is None:
        port = int(os.environ.get(ENV_PORT, "8000"))
    app = create_app(data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storyline",
        description="Turn health narratives into structured timelines and SVG artifacts.")
    commands = parser.add_subparsers(dest="command", required=True)

    parse = commands.add_parser(
        "parse", help="extract events from a narrative file, print the story document")
    parse.add_argument("narrative", help="path to the narrative text file")
    parse.add_argument("--name", required=True, help="person the story is about")
    parse.add_argument("--dob", help="date of birth, ISO format")
    parse.add_argument("--parser", choices=sorted(_PARSER_MODES), default="rule")
    parse.add_argument("--out", help="write the story document here instead of stdout")
    parse.set_defaults(handler=cmd_parse)

    render = commands.add_parser("render", help="render a story document to SVG")
    render.add_argument("story", help="path to the story JSON document")
    render.add_argument("--width", type=float, default=1600.0)
    render.add_argument("--out", help="write the SVG here instead of stdout")
    render.set_defaults(handler=cmd_render)

    layout = commands.add_parser("layout", help="print the layout geometry document")
    layout.add_argument("story", help="path to the story JSON document")
    layout.add_argument("--width", type=float, default=1600.0)
    layout.add_argument("--out", help="write the geometry here instead of stdout")
    layout.set_defaults(handler=cmd_layout)

    compare = commands.add_parser(
        "compare",
        help="tabulate layout heights per split ratio, multi vs single timescale")
    compare.add_argument("story", help="path to the story JSON document")
    compare.add_argument("--width", type=float, default=1600.0)
    compare.add_argument("--out", help="write the table here instead of stdout; "
                                       "a .png chart lands alongside")
    compare.add_argument("--figure", help="explicit path for the chart image")
    compare.set_defaults(handler=cmd_compare)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=None,
                       help=f"default: ${ENV_PORT} or 8000")
    serve.add_argument("--data-dir", default=None,
                       help="story document directory")
    serve.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    raise SystemExit(main())

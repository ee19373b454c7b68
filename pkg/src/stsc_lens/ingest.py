"""Parsers and serializers for the four canonical bundle files.

Formats (all UTF-8):

* commit log        -- CSV, header ``module,version,file,author,timestamp``,
                       RFC 4180 quoting, ISO-8601 timestamps.
* thread export     -- JSON, ``{"threads": [{"id", "project", "notes":
                       [{"author", "timestamp", "reply_to"?}]}]}``.
* dependency edges  -- CSV, header ``module,version,from,to,weight``; the
                       weight field may be empty (defaults to 1).
* config            -- JSON; see README for the schema. Unknown keys are
                       rejected everywhere.

Parsers are pure and strict: any record violating its field contract raises
:class:`BundleParseError` carrying the offending location. Nothing is silently
reordered or dropped. Adapters for live repositories (git, modern trackers)
should implement :class:`BundleSource` and emit these formats.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass
from typing import Any, Mapping, Protocol, Sequence

from .model import (
    ArchComponent,
    CommitEvent,
    DetectorThresholds,
    Dsm,
    Person,
    ProjectConfig,
    Team,
    Thread,
    Note,
    module_version,
    split_module_version,
)

COMMIT_LOG_HEADER = ("module", "version", "file", "author", "timestamp")
DEPENDENCY_HEADER = ("module", "version", "from", "to", "weight")

_CONFIG_KEYS = {
    "teams",
    "persons",
    "components",
    "expected_coordinators",
    "thresholds",
    "random_seed",
    "pair_sets",
    "alias_map",
}
_PERSON_KEYS = {"id", "display_name", "team", "role", "organization"}
_TEAM_KEYS = {"id", "component_ids"}
_COMPONENT_KEYS = {"id", "depends_on"}
_THREAD_KEYS = {"id", "project", "notes"}
_NOTE_KEYS = {"author", "timestamp", "reply_to"}
_THRESHOLD_KEYS = {f.name for f in DetectorThresholds.__dataclass_fields__.values()}


class BundleParseError(ValueError):
    """A canonical input file failed to parse; message carries the location."""

    def __init__(self, message: str, *, source: str = "", line: int | None = None):
        prefix = source or ""
        if line is not None:
            prefix = f"{prefix}:{line}" if prefix else f"line {line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.source = source
        self.line = line


class BundleSource(Protocol):
    """Adapter interface: produce the four canonical exports from other tooling."""

    def config_text(self) -> str: ...

    def thread_export_text(self) -> str: ...

    def commit_log_text(self) -> str: ...

    def dependency_edges_text(self) -> str: ...


@dataclass(frozen=True)
class Bundle:
    """A fully parsed input bundle."""

    config: ProjectConfig
    threads: tuple[Thread, ...]
    commits: tuple[CommitEvent, ...]
    dsms: Mapping[str, Dsm]  # "module@version" -> Dsm, in declared version order


def parse_timestamp(raw: str, *, source: str = "", line: int | None = None) -> dt.datetime:
    """ISO-8601 timestamp with an explicit UTC offset; normalized to UTC, second precision."""
    text = raw.strip()
    if text.endswith("Z") or text.endswith("z"):
        text = text[:-1] + "+00:00"
    try:
        ts = dt.datetime.fromisoformat(text)
    except ValueError:
        raise BundleParseError(f"bad timestamp {raw!r}", source=source, line=line) from None
    if ts.tzinfo is None:
        raise BundleParseError(
            f"timestamp {raw!r} has no timezone offset", source=source, line=line
        )
    return ts.astimezone(dt.timezone.utc).replace(microsecond=0)


def _format_timestamp(ts: dt.datetime) -> str:
    return ts.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _csv_rows(text: str, header: tuple[str, ...], source: str):
    """Yield (line_number, row) for a headed CSV document; checks the header row."""
    stream = io.StringIO(text)
    reader = csv.reader(stream)
    try:
        first = next(reader)
    except StopIteration:
        return
    if tuple(first) != header:
        raise BundleParseError(
            f"expected header {','.join(header)!r}, got {','.join(first)!r}",
            source=source,
            line=1,
        )
    for row in reader:
        if not row:
            continue
        yield reader.line_num, row


def parse_commit_log(text: str) -> list[CommitEvent]:
    """Parse a commit log export; events are returned in file order, duplicates kept."""
    source = "commit log"
    if not text.strip():
        return []
    events: list[CommitEvent] = []
    for line_num, row in _csv_rows(text, COMMIT_LOG_HEADER, source):
        if len(row) != 5:
            raise BundleParseError(f"expected 5 fields at line {line_num}", source=source)
        module, version, file, author, stamp = (f.strip() for f in row)
        ts = parse_timestamp(stamp, source=source, line=line_num)
        try:
            events.append(
                CommitEvent(
                    file=file,
                    author=author,
                    timestamp=ts,
                    module=module_version(module, version),
                )
            )
        except ValueError as exc:
            raise BundleParseError(str(exc), source=source, line=line_num) from None
    return events


def serialize_commit_log(events: Sequence[CommitEvent]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COMMIT_LOG_HEADER)
    for e in events:
        writer.writerow(
            [e.module_name, e.version_tag, e.file, e.author, _format_timestamp(e.timestamp)]
        )
    return out.getvalue()


def _check_keys(obj: Mapping[str, Any], allowed: set[str], where: str, source: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise BundleParseError(f"unknown keys {unknown} in {where}", source=source)


def parse_thread_export(text: str) -> list[Thread]:
    """Parse the thread export document; note order and thread order are preserved."""
    source = "thread export"
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleParseError(f"invalid JSON: {exc}", source=source) from None
    if not isinstance(doc, dict):
        raise BundleParseError("top level must be an object", source=source)
    _check_keys(doc, {"threads"}, "top level", source)
    raw_threads = doc.get("threads", [])
    if not isinstance(raw_threads, list):
        raise BundleParseError('"threads" must be an array', source=source)

    threads: list[Thread] = []
    seen_ids: set[str] = set()
    for raw in raw_threads:
        if not isinstance(raw, dict):
            raise BundleParseError("each thread must be an object", source=source)
        _check_keys(raw, _THREAD_KEYS, "thread", source)
        tid = raw.get("id")
        if not isinstance(tid, str) or not tid:
            raise BundleParseError("thread id missing or not a string", source=source)
        if tid in seen_ids:
            raise BundleParseError(f"duplicate thread id {tid!r}", source=source)
        seen_ids.add(tid)
        project = raw.get("project")
        if not isinstance(project, str) or not project:
            raise BundleParseError(f"thread {tid!r}: project missing", source=source)
        raw_notes = raw.get("notes")
        if not isinstance(raw_notes, list) or not raw_notes:
            raise BundleParseError(f"thread {tid!r}: notes must be a non-empty array", source=source)
        notes: list[Note] = []
        for idx, raw_note in enumerate(raw_notes):
            if not isinstance(raw_note, dict):
                raise BundleParseError(f"thread {tid!r}: note {idx} must be an object", source=source)
            _check_keys(raw_note, _NOTE_KEYS, f"thread {tid!r} note {idx}", source)
            author = raw_note.get("author")
            if not isinstance(author, str) or not author:
                raise BundleParseError(f"thread {tid!r}: note {idx} has no author", source=source)
            stamp = raw_note.get("timestamp")
            if not isinstance(stamp, str):
                raise BundleParseError(f"thread {tid!r}: note {idx} has no timestamp", source=source)
            ts = parse_timestamp(stamp, source=f"{source} thread {tid!r} note {idx}")
            reply_to = raw_note.get("reply_to")
            if reply_to is not None:
                if not isinstance(reply_to, int) or isinstance(reply_to, bool):
                    raise BundleParseError(
                        f"thread {tid!r}: note {idx} reply_to must be an integer", source=source
                    )
                if not 0 <= reply_to < idx:
                    raise BundleParseError(
                        f"thread {tid!r}: reply_to out of range at note {idx}", source=source
                    )
            if notes and notes[-1].timestamp > ts:
                raise BundleParseError(
                    f"thread {tid!r}: note timestamps must be non-decreasing (note {idx})",
                    source=source,
                )
            notes.append(Note(author=author, timestamp=ts, reply_to=reply_to))
        threads.append(Thread(id=tid, project=project, notes=tuple(notes)))
    return threads


def serialize_thread_export(threads: Sequence[Thread]) -> str:
    doc = {
        "threads": [
            {
                "id": t.id,
                "project": t.project,
                "notes": [
                    {
                        "author": n.author,
                        "timestamp": _format_timestamp(n.timestamp),
                        **({"reply_to": n.reply_to} if n.reply_to is not None else {}),
                    }
                    for n in t.notes
                ],
            }
            for t in threads
        ]
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_dependency_edges(text: str) -> dict[str, Dsm]:
    """Parse the dependency edge list into one DSM per module version.

    Module ids of each DSM are the union of edge endpoints, sorted
    lexicographically; duplicate edges accumulate their weights. The order in
    which module versions first appear in the file is the declared version
    order, preserved in the returned mapping.
    """
    source = "dependency edges"
    if not text.strip():
        return {}
    groups: dict[str, dict[tuple[str, str], int]] = {}
    for line_num, row in _csv_rows(text, DEPENDENCY_HEADER, source):
        if len(row) != 5:
            raise BundleParseError(f"expected 5 fields at line {line_num}", source=source)
        module, version, src, dst, raw_weight = (f.strip() for f in row)
        try:
            key = module_version(module, version)
        except ValueError as exc:
            raise BundleParseError(str(exc), source=source, line=line_num) from None
        if not src or not dst:
            raise BundleParseError("empty edge endpoint", source=source, line=line_num)
        if src == dst:
            raise BundleParseError(f"self-dependency on {src!r}", source=source, line=line_num)
        if raw_weight == "":
            weight = 1
        else:
            try:
                weight = int(raw_weight)
            except ValueError:
                raise BundleParseError(
                    f"invalid weight {raw_weight!r}", source=source, line=line_num
                ) from None
        if weight < 0:
            raise BundleParseError(f"negative weight {weight}", source=source, line=line_num)
        edges = groups.setdefault(key, {})
        edges[(src, dst)] = edges.get((src, dst), 0) + weight

    dsms: dict[str, Dsm] = {}
    for key, edges in groups.items():
        ids = sorted({m for pair in edges for m in pair})
        index = {m: i for i, m in enumerate(ids)}
        cells = [[0] * len(ids) for _ in ids]
        for (src, dst), weight in edges.items():
            cells[index[src]][index[dst]] += weight
        dsms[key] = Dsm(module_ids=tuple(ids), cells=tuple(tuple(r) for r in cells))
    return dsms


def serialize_dependency_edges(dsms: Mapping[str, Dsm]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DEPENDENCY_HEADER)
    for key, dsm in dsms.items():
        name, version = split_module_version(key)
        for i, src in enumerate(dsm.module_ids):
            for j, dst in enumerate(dsm.module_ids):
                w = dsm.cells[i][j]
                if w > 0:
                    writer.writerow([name, version, src, dst, w])
    return out.getvalue()


def _expect(cond: bool, message: str, source: str) -> None:
    if not cond:
        raise BundleParseError(message, source=source)


def parse_config(text: str) -> ProjectConfig:
    """Parse the project config document; absent thresholds get their defaults."""
    source = "config"
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleParseError(f"invalid JSON: {exc}", source=source) from None
    _expect(isinstance(doc, dict), "top level must be an object", source)
    _check_keys(doc, _CONFIG_KEYS, "top level", source)

    teams = []
    for raw in doc.get("teams", []):
        _expect(isinstance(raw, dict), "each team must be an object", source)
        _check_keys(raw, _TEAM_KEYS, "team", source)
        try:
            teams.append(Team(id=raw.get("id", ""), component_ids=frozenset(raw.get("component_ids", []))))
        except ValueError as exc:
            raise BundleParseError(str(exc), source=source) from None

    persons = []
    for raw in doc.get("persons", []):
        _expect(isinstance(raw, dict), "each person must be an object", source)
        _check_keys(raw, _PERSON_KEYS, "person", source)
        try:
            persons.append(
                Person(
                    id=raw.get("id", ""),
                    display_name=raw.get("display_name", ""),
                    team=raw.get("team", "external"),
                    role=raw.get("role", "unknown"),
                    organization=raw.get("organization", ""),
                )
            )
        except ValueError as exc:
            raise BundleParseError(str(exc), source=source) from None

    components = []
    for raw in doc.get("components", []):
        _expect(isinstance(raw, dict), "each component must be an object", source)
        _check_keys(raw, _COMPONENT_KEYS, "component", source)
        try:
            components.append(
                ArchComponent(id=raw.get("id", ""), depends_on=frozenset(raw.get("depends_on", [])))
            )
        except ValueError as exc:
            raise BundleParseError(str(exc), source=source) from None

    raw_expected = doc.get("expected_coordinators", {})
    _expect(isinstance(raw_expected, dict), "expected_coordinators must be an object", source)
    expected = {}
    for project, ids in raw_expected.items():
        _expect(isinstance(ids, list), f"expected_coordinators[{project}] must be an array", source)
        expected[project] = frozenset(ids)

    raw_thresholds = doc.get("thresholds", {})
    _expect(isinstance(raw_thresholds, dict), "thresholds must be an object", source)
    _check_keys(raw_thresholds, _THRESHOLD_KEYS, "thresholds", source)
    try:
        thresholds = DetectorThresholds(**raw_thresholds)
    except (TypeError, ValueError) as exc:
        raise BundleParseError(f"threshold out of range: {exc}", source=source) from None

    raw_pairs = doc.get("pair_sets", {})
    _expect(isinstance(raw_pairs, dict), "pair_sets must be an object", source)
    pair_sets = {}
    for name, pairs in raw_pairs.items():
        _expect(isinstance(pairs, list), f"pair_sets[{name}] must be an array", source)
        normalized = []
        for pair in pairs:
            _expect(
                isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, str) for x in pair),
                f"pair_sets[{name}] entries must be [teamA, teamB]",
                source,
            )
            normalized.append((pair[0], pair[1]))
        pair_sets[name] = frozenset(normalized)

    raw_alias = doc.get("alias_map", {})
    _expect(isinstance(raw_alias, dict), "alias_map must be an object", source)

    raw_seed = doc.get("random_seed", 0)
    _expect(isinstance(raw_seed, int) and not isinstance(raw_seed, bool), "random_seed must be an integer", source)

    try:
        return ProjectConfig(
            teams=tuple(teams),
            persons=tuple(persons),
            components=tuple(components),
            expected_coordinators=expected,
            thresholds=thresholds,
            random_seed=raw_seed,
            pair_sets=pair_sets,
            alias_map={str(k): str(v) for k, v in raw_alias.items()},
        )
    except ValueError as exc:
        raise BundleParseError(str(exc), source=source) from None


def serialize_config(config: ProjectConfig) -> str:
    doc = {
        "teams": [
            {"id": t.id, "component_ids": sorted(t.component_ids)} for t in config.teams
        ],
        "persons": [
            {
                "id": p.id,
                "display_name": p.display_name,
                "team": p.team,
                "role": p.role,
                "organization": p.organization,
            }
            for p in config.persons
        ],
        "components": [
            {"id": c.id, "depends_on": sorted(c.depends_on)} for c in config.components
        ],
        "expected_coordinators": {
            project: sorted(ids) for project, ids in sorted(config.expected_coordinators.items())
        },
        "thresholds": {
            name: getattr(config.thresholds, name) for name in sorted(_THRESHOLD_KEYS)
        },
        "random_seed": config.random_seed,
        "pair_sets": {
            name: sorted([list(p) for p in pairs])
            for name, pairs in sorted(config.pair_sets.items())
        },
        "alias_map": dict(sorted(config.alias_map.items())),
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_bundle(
    config_text: str, threads_text: str, commits_text: str, deps_text: str
) -> Bundle:
    """Parse all four canonical documents into one bundle."""
    return Bundle(
        config=parse_config(config_text),
        threads=tuple(parse_thread_export(threads_text)),
        commits=tuple(parse_commit_log(commits_text)),
        dsms=parse_dependency_edges(deps_text),
    )


def parse_source(source: BundleSource) -> Bundle:
    """Parse a bundle produced by a :class:`BundleSource` adapter."""
    return parse_bundle(
        source.config_text(),
        source.thread_export_text(),
        source.commit_log_text(),
        source.dependency_edges_text(),
    )

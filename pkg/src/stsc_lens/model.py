"""Core domain types for socio-technical repository analysis.

Everything here is immutable after construction and safe to share between
concurrent analysis tasks. Parsing of the canonical file formats lives in
:mod:`stsc_lens.ingest`; this module only enforces per-object invariants and
cross-reference validation over a whole input bundle.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

EXTERNAL_TEAM = "external"
PERSON_ROLES = frozenset({"developer", "manager", "support", "client", "unknown"})
FINDING_KINDS = ("conway", "code_ownership", "project_coordination")

MODULE_VERSION_SEP = "@"
WEEK = dt.timedelta(days=7)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


def module_version(name: str, version: str) -> str:
    """Join a module name and version tag into the canonical ``name@tag`` key."""
    _require(bool(name) and bool(version), "module name and version must be non-empty")
    _require(
        MODULE_VERSION_SEP not in name,
        f"module name {name!r} may not contain {MODULE_VERSION_SEP!r}",
    )
    return f"{name}{MODULE_VERSION_SEP}{version}"


def split_module_version(key: str) -> tuple[str, str]:
    name, sep, version = key.partition(MODULE_VERSION_SEP)
    _require(bool(sep) and bool(name) and bool(version), f"malformed module-version key {key!r}")
    return name, version


def week_index(t: dt.datetime, project_start: dt.datetime) -> int:
    """Whole weeks elapsed since the project start (floor division)."""
    return (t - project_start) // WEEK


@dataclass(frozen=True)
class Person:
    """A project participant; anyone not on a declared team counts as external."""

    id: str
    display_name: str = ""
    team: str = EXTERNAL_TEAM
    role: str = "unknown"
    organization: str = ""

    def __post_init__(self) -> None:
        _require(bool(self.id), "person id must be non-empty")
        _require(self.role in PERSON_ROLES, f"unknown role {self.role!r} for person {self.id!r}")
        if not self.display_name:
            object.__setattr__(self, "display_name", self.id)


def external_person(person_id: str) -> Person:
    """Placeholder Person for authors that appear in data but not in the roster."""
    return Person(id=person_id, team=EXTERNAL_TEAM, role="unknown")


@dataclass(frozen=True)
class Team:
    id: str
    component_ids: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        _require(bool(self.id), "team id must be non-empty")
        _require(self.id != EXTERNAL_TEAM, f"{EXTERNAL_TEAM!r} is reserved and cannot be declared")
        object.__setattr__(self, "component_ids", frozenset(self.component_ids))


@dataclass(frozen=True)
class ArchComponent:
    id: str
    depends_on: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        _require(bool(self.id), "component id must be non-empty")
        object.__setattr__(self, "depends_on", frozenset(self.depends_on))
        _require(self.id not in self.depends_on, f"component {self.id!r} depends on itself")


def _normalize_utc(ts: dt.datetime, what: str) -> dt.datetime:
    _require(ts.tzinfo is not None, f"{what} timestamp must be timezone-aware")
    return ts.astimezone(dt.timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class Note:
    """One message in an issue thread. ``reply_to`` indexes an earlier note."""

    author: str
    timestamp: dt.datetime
    reply_to: int | None = None

    def __post_init__(self) -> None:
        _require(bool(self.author), "note author must be non-empty")
        object.__setattr__(self, "timestamp", _normalize_utc(self.timestamp, "note"))


@dataclass(frozen=True)
class Thread:
    id: str
    project: str
    notes: tuple[Note, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "notes", tuple(self.notes))
        _require(bool(self.id), "thread id must be non-empty")
        _require(bool(self.project), f"thread {self.id!r}: project must be non-empty")
        _require(len(self.notes) > 0, f"thread {self.id!r}: notes must be non-empty")
        for prev, cur in zip(self.notes, self.notes[1:]):
            _require(
                prev.timestamp <= cur.timestamp,
                f"thread {self.id!r}: note timestamps must be non-decreasing",
            )
        for idx, note in enumerate(self.notes):
            if note.reply_to is not None:
                _require(
                    0 <= note.reply_to < idx,
                    f"thread {self.id!r}: reply_to out of range at note {idx}",
                )

    @property
    def start(self) -> dt.datetime:
        return self.notes[0].timestamp


@dataclass(frozen=True)
class CommitEvent:
    """One file modification, tagged with the module version it belongs to."""

    file: str
    author: str
    timestamp: dt.datetime
    module: str  # canonical "name@version" key

    def __post_init__(self) -> None:
        _require(bool(self.file), "commit file must be non-empty")
        _require(bool(self.author), "commit author must be non-empty")
        object.__setattr__(self, "timestamp", _normalize_utc(self.timestamp, "commit"))
        split_module_version(self.module)

    @property
    def module_name(self) -> str:
        return split_module_version(self.module)[0]

    @property
    def version_tag(self) -> str:
        return split_module_version(self.module)[1]


@dataclass(frozen=True)
class Dsm:
    """Square dependency matrix; ``cells[i][j]`` counts dependencies of module i on module j."""

    module_ids: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        ids = tuple(self.module_ids)
        rows = []
        for row in self.cells:
            converted = []
            for x in row:
                xi = int(x)
                _require(xi == x and xi >= 0, "dsm cells must be non-negative integers")
                converted.append(xi)
            rows.append(tuple(converted))
        cells = tuple(rows)
        object.__setattr__(self, "module_ids", ids)
        object.__setattr__(self, "cells", cells)
        n = len(ids)
        _require(n >= 1, "dsm needs at least one module")
        _require(len(set(ids)) == n, "dsm module ids must be unique")
        _require(len(cells) == n and all(len(r) == n for r in cells), "dsm cells must be n x n")
        for i in range(n):
            _require(cells[i][i] == 0, f"dsm diagonal must be zero (module {ids[i]!r})")

    @property
    def size(self) -> int:
        return len(self.module_ids)

    def index_of(self, module_id: str) -> int:
        return self.module_ids.index(module_id)


@dataclass(frozen=True)
class DetectorThresholds:
    """Tunable cut-offs for the three detectors; defaults are deliberately conservative.

    ``ownership_core_cpdm`` is an absolute value on the core-distance scale
    (so k/2 with the default k = 9). ``ic_display_min`` only filters report
    output and never affects detection.
    """

    conway_min_total_median: float = 3.0
    conway_max_pair_median: float = 0.0
    ownership_core_cpdm: float = 4.5
    ownership_prior_core_versions: int = 1
    coordination_window_weeks: int = 4
    coordination_margin: float = 1.0
    ic_display_min: float = 0.05

    def __post_init__(self) -> None:
        _require(self.conway_min_total_median >= 0, "conway_min_total_median must be >= 0")
        _require(self.conway_max_pair_median >= 0, "conway_max_pair_median must be >= 0")
        _require(self.ownership_core_cpdm >= 0, "ownership_core_cpdm must be >= 0")
        _require(self.ownership_prior_core_versions >= 1, "ownership_prior_core_versions must be >= 1")
        _require(self.coordination_window_weeks >= 1, "coordination_window_weeks must be >= 1")
        _require(self.coordination_margin >= 1, "coordination_margin must be >= 1")
        _require(self.ic_display_min >= 0, "ic_display_min must be >= 0")


def _normalize_pair(pair: Sequence[str]) -> tuple[str, str]:
    a, b = pair
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class ProjectConfig:
    """Declared organization: teams, roster, architecture and expectations."""

    teams: tuple[Team, ...] = ()
    persons: tuple[Person, ...] = ()
    components: tuple[ArchComponent, ...] = ()
    expected_coordinators: Mapping[str, frozenset[str]] = field(default_factory=dict)
    thresholds: DetectorThresholds = field(default_factory=DetectorThresholds)
    random_seed: int = 0
    pair_sets: Mapping[str, frozenset[tuple[str, str]]] = field(default_factory=dict)
    alias_map: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "teams", tuple(self.teams))
        object.__setattr__(self, "persons", tuple(self.persons))
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(
            self,
            "expected_coordinators",
            {p: frozenset(ids) for p, ids in self.expected_coordinators.items()},
        )
        object.__setattr__(
            self,
            "pair_sets",
            {name: frozenset(_normalize_pair(p) for p in pairs) for name, pairs in self.pair_sets.items()},
        )
        object.__setattr__(self, "alias_map", dict(self.alias_map))
        for kind, items in (("team", self.teams), ("person", self.persons), ("component", self.components)):
            seen: set[str] = set()
            for item in items:
                _require(item.id not in seen, f"duplicate {kind} id {item.id!r}")
                seen.add(item.id)
        _require(self.random_seed >= 0, "random_seed must be non-negative")

    def person_team(self) -> dict[str, str]:
        """Person id -> team id; look up missing authors with ``EXTERNAL_TEAM`` as default."""
        return {p.id: p.team for p in self.persons}

    def component_owner(self) -> dict[str, str]:
        """Component id -> owning team id (first declaration wins; validation flags duplicates)."""
        owner: dict[str, str] = {}
        for team in self.teams:
            for cid in sorted(team.component_ids):
                owner.setdefault(cid, team.id)
        return owner


@dataclass(frozen=True)
class StscFinding:
    """One detected structure clash, with the metric evidence that triggered it."""

    kind: str
    subject: str
    interval: tuple[str, str] | None
    evidence: Mapping[str, float]
    severity: float

    def __post_init__(self) -> None:
        _require(self.kind in FINDING_KINDS, f"unknown finding kind {self.kind!r}")
        _require(bool(self.subject), "finding subject must be non-empty")
        object.__setattr__(self, "evidence", dict(self.evidence))
        _require(len(self.evidence) > 0, "finding evidence must be non-empty")
        _require(0.0 <= self.severity <= 1.0, "finding severity must be in [0, 1]")
        if self.interval is not None:
            start, end = self.interval
            object.__setattr__(self, "interval", (str(start), str(end)))


@dataclass(frozen=True)
class Diagnostic:
    """A located validation problem. Warnings do not block analysis; errors do."""

    location: str
    reason: str
    severity: str = "error"

    def __post_init__(self) -> None:
        _require(self.severity in ("error", "warning"), f"bad diagnostic severity {self.severity!r}")

    def __str__(self) -> str:
        return f"{self.severity}: {self.location}: {self.reason}"


def apply_alias_map(
    threads: Sequence[Thread],
    commits: Sequence[CommitEvent],
    alias_map: Mapping[str, str],
) -> tuple[list[Thread], list[CommitEvent]]:
    """Rewrite note and commit authors through the alias map (identity when empty)."""
    if not alias_map:
        return list(threads), list(commits)

    def canon(author: str) -> str:
        return alias_map.get(author, author)

    new_threads = [
        dataclasses.replace(
            t, notes=tuple(dataclasses.replace(n, author=canon(n.author)) for n in t.notes)
        )
        for t in threads
    ]
    new_commits = [dataclasses.replace(c, author=canon(c.author)) for c in commits]
    return new_threads, new_commits


def validate_bundle(
    config: ProjectConfig,
    threads: Sequence[Thread],
    commits: Sequence[CommitEvent],
    dsms: Mapping[str, Dsm],
) -> list[Diagnostic]:
    """Cross-reference checks over a parsed bundle.

    Returns an empty list iff every reference resolves. Unknown authors are
    reported as warnings (they are analysed as external participants, never
    dropped); structural problems such as dangling component references are
    errors. The result is a pure function of the inputs, in a fixed order:
    config, threads, commits, dependency data.
    """
    out: list[Diagnostic] = []
    team_ids = {t.id for t in config.teams}
    person_ids = {p.id for p in config.persons}
    component_ids = {c.id for c in config.components}

    owners: dict[str, list[str]] = {}
    for team in config.teams:
        for cid in sorted(team.component_ids):
            owners.setdefault(cid, []).append(team.id)
            if cid not in component_ids:
                out.append(
                    Diagnostic(f"config:teams[{team.id}]", f"undeclared component {cid!r}")
                )
    for comp in config.components:
        owning = owners.get(comp.id, [])
        if len(owning) > 1:
            out.append(
                Diagnostic(
                    f"config:components[{comp.id}]",
                    f"owned by more than one team: {', '.join(sorted(owning))}",
                )
            )
        elif not owning:
            out.append(
                Diagnostic(f"config:components[{comp.id}]", "not owned by any team", "warning")
            )
        for dep in sorted(comp.depends_on):
            if dep not in component_ids:
                out.append(
                    Diagnostic(f"config:components[{comp.id}]", f"undeclared dependency {dep!r}")
                )
    for person in config.persons:
        if person.team != EXTERNAL_TEAM and person.team not in team_ids:
            out.append(
                Diagnostic(f"config:persons[{person.id}]", f"undeclared team {person.team!r}")
            )
    for project in sorted(config.expected_coordinators):
        for pid in sorted(config.expected_coordinators[project]):
            if pid not in person_ids:
                out.append(
                    Diagnostic(
                        f"config:expected_coordinators[{project}]", f"unknown person {pid!r}"
                    )
                )
    for name in sorted(config.pair_sets):
        for a, b in sorted(config.pair_sets[name]):
            for tid in (a, b):
                if tid != EXTERNAL_TEAM and tid not in team_ids:
                    out.append(
                        Diagnostic(f"config:pair_sets[{name}]", f"undeclared team {tid!r}")
                    )
    for alias in sorted(config.alias_map):
        target = config.alias_map[alias]
        if target not in person_ids:
            out.append(
                Diagnostic(
                    f"config:alias_map[{alias}]",
                    f"alias target {target!r} is not a declared person",
                    "warning",
                )
            )

    for thread in threads:
        for idx, note in enumerate(thread.notes):
            if note.author not in person_ids:
                out.append(
                    Diagnostic(
                        f"threads[{thread.id}].notes[{idx}]",
                        f"unknown person {note.author!r} (treated as external)",
                        "warning",
                    )
                )

    modules_with_dsms: dict[str, set[str]] = {}
    for key in dsms:
        name, version = split_module_version(key)
        modules_with_dsms.setdefault(name, set()).add(version)

    for idx, commit in enumerate(commits):
        if commit.author not in person_ids:
            out.append(
                Diagnostic(
                    f"commits[{idx}]",
                    f"unknown person {commit.author!r} (treated as external)",
                    "warning",
                )
            )
        versions = modules_with_dsms.get(commit.module_name)
        if versions is None:
            out.append(
                Diagnostic(
                    f"commits[{idx}]",
                    f"module {commit.module_name!r} has no dependency data; its commits are not analysed",
                    "warning",
                )
            )
        elif commit.version_tag not in versions:
            out.append(
                Diagnostic(
                    f"commits[{idx}]",
                    f"no dependency data for version {commit.version_tag!r} of module {commit.module_name!r}",
                )
            )
    return out

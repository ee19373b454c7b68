"""Reply networks, information centrality and communication statistics.

A thread's social graph links the author of a note to the author of each
reply it receives. Centrality is the harmonic-average kind: on the
symmetrized graph, score(i) = n / sum_j d(i, j) with d the unweighted
shortest-path length. Any node that cannot reach every other node scores
exactly 0 (the summed reciprocal distances degenerate), which also covers
the single-node graph.
"""

from __future__ import annotations

import datetime as dt
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import EXTERNAL_TEAM, Thread, week_index

TOTAL_COMM = "TotalComm"


@dataclass(frozen=True)
class SocialGraph:
    """Directed reply network of one thread; edge weights count messages."""

    thread_id: str
    timestamp: dt.datetime
    persons: tuple[str, ...]
    edges: tuple[tuple[str, str, int], ...]

    def __post_init__(self) -> None:
        known = set(self.persons)
        for src, dst, count in self.edges:
            if src == dst:
                raise ValueError(f"graph {self.thread_id!r}: self-edge on {src!r}")
            if src not in known or dst not in known:
                raise ValueError(f"graph {self.thread_id!r}: edge endpoint not in persons")
            if count <= 0:
                raise ValueError(f"graph {self.thread_id!r}: non-positive message count")


@dataclass(frozen=True)
class CentralityScores:
    values: Mapping[str, float]


@dataclass(frozen=True)
class BoxStats:
    """Five-number summary with Tukey hinges; whiskers are clamped to the data."""

    median: float
    q1: float
    q3: float
    iqr: float
    lower_whisker: float
    upper_whisker: float
    outliers: tuple[float, ...]


@dataclass(frozen=True)
class CentralityTimeline:
    """Per-person cumulative centrality sampled on a shared week grid."""

    weeks: tuple[int, ...]
    series: Mapping[str, tuple[float, ...]]


def build_thread_graph(thread: Thread) -> SocialGraph:
    """Build the reply network of one thread.

    Each note replies to the note indexed by ``reply_to``, or to the
    immediately preceding note when ``reply_to`` is absent; the first note
    only introduces its author. A reply adds one message on the edge from
    the replied-to author to the replying author. Self-replies add no edge.
    """
    persons: list[str] = []
    seen: set[str] = set()
    counts: dict[tuple[str, str], int] = {}
    for idx, note in enumerate(thread.notes):
        if note.author not in seen:
            seen.add(note.author)
            persons.append(note.author)
        if idx == 0:
            continue
        target = note.reply_to if note.reply_to is not None else idx - 1
        source = thread.notes[target].author
        if source == note.author:
            continue
        counts[(source, note.author)] = counts.get((source, note.author), 0) + 1
    edges = tuple((src, dst, n) for (src, dst), n in counts.items())
    return SocialGraph(
        thread_id=thread.id, timestamp=thread.start, persons=tuple(persons), edges=edges
    )


def information_centrality(graph: SocialGraph) -> CentralityScores:
    """Harmonic-average centrality of every node in the graph.

    Distances are unweighted shortest-path lengths on the symmetrized graph
    (direction only matters for message counting, not for how information
    can travel). score(i) = n / sum_j d(i, j); a node with an unreachable
    peer, or alone in the graph, scores 0.
    """
    persons = graph.persons
    n = len(persons)
    index = {p: i for i, p in enumerate(persons)}
    adjacency: list[set[int]] = [set() for _ in range(n)]
    for src, dst, _count in graph.edges:
        i, j = index[src], index[dst]
        adjacency[i].add(j)
        adjacency[j].add(i)

    values: dict[str, float] = {}
    for i, person in enumerate(persons):
        dist = [-1] * n
        dist[i] = 0
        queue = deque([i])
        total = 0
        reached = 1
        while queue:
            u = queue.popleft()
            for v in adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    total += dist[v]
                    reached += 1
                    queue.append(v)
        values[person] = n / total if reached == n and total > 0 else 0.0
    return CentralityScores(values=values)


def cumulative_centrality(
    threads: Sequence[Thread], week_grid: Sequence[int] | None = None
) -> CentralityTimeline:
    """Cumulative per-person centrality over a project's threads.

    Each thread contributes its per-thread centrality score from its start
    week onward (0 for persons absent from the thread), so every series is
    non-decreasing and additive over disjoint thread sets. All threads must
    belong to the same project. The default grid covers week 0 through the
    last thread's start week.
    """
    if not threads:
        return CentralityTimeline(weeks=tuple(week_grid or ()), series={})
    projects = {t.project for t in threads}
    if len(projects) != 1:
        raise ValueError(f"threads span multiple projects: {sorted(projects)}")
    start = min(t.start for t in threads)
    contributions: list[tuple[int, CentralityScores]] = []
    persons: set[str] = set()
    for thread in threads:
        scores = information_centrality(build_thread_graph(thread))
        contributions.append((week_index(thread.start, start), scores))
        persons.update(scores.values)

    if week_grid is None:
        weeks = tuple(range(max(w for w, _ in contributions) + 1))
    else:
        weeks = tuple(week_grid)
        if list(weeks) != sorted(set(weeks)):
            raise ValueError("week grid must be strictly increasing")

    series: dict[str, tuple[float, ...]] = {}
    for person in sorted(persons):
        series[person] = tuple(
            sum(s.values.get(person, 0.0) for w, s in contributions if w <= week)
            for week in weeks
        )
    return CentralityTimeline(weeks=weeks, series=series)


def _normalize_pairs(pairs: Iterable[Sequence[str]]) -> set[tuple[str, str]]:
    return {(a, b) if a <= b else (b, a) for a, b in pairs}


def interteam_message_counts(
    threads: Sequence[Thread],
    person_team: Mapping[str, str],
    pair_sets: Mapping[str, Iterable[tuple[str, str]]],
) -> dict[str, list[int]]:
    """Per-thread message counts between team pairs, direction ignored.

    ``pair_sets`` names sets of unordered team pairs; for each name the
    result holds one count per thread (in input order). The distinguished
    name ``TotalComm`` counts all messages regardless of teams. Persons with
    no team mapping count as ``external``.
    """
    normalized = {
        name: None if name == TOTAL_COMM else _normalize_pairs(pairs)
        for name, pairs in pair_sets.items()
    }
    result: dict[str, list[int]] = {name: [] for name in pair_sets}
    for thread in threads:
        graph = build_thread_graph(thread)
        for name, pairs in normalized.items():
            total = 0
            for src, dst, count in graph.edges:
                if pairs is None:
                    total += count
                    continue
                a = person_team.get(src, EXTERNAL_TEAM)
                b = person_team.get(dst, EXTERNAL_TEAM)
                if ((a, b) if a <= b else (b, a)) in pairs:
                    total += count
            result[name].append(total)
    return result


def _median_of(sorted_values: Sequence[float]) -> float:
    n = len(sorted_values)
    mid = n // 2
    if n % 2:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2.0


def box_stats(values: Sequence[float]) -> BoxStats:
    """Tukey box-and-whisker statistics.

    Hinges are medians of the lower/upper halves, where the halves include
    the median element for odd-length data. Whiskers sit on the most extreme
    observations within 1.5 * IQR of the hinges; anything beyond is an
    outlier.
    """
    if not values:
        raise ValueError("empty distribution")
    data = sorted(float(v) for v in values)
    n = len(data)
    median = _median_of(data)
    half = n // 2 + (n % 2)  # include the median element when n is odd
    q1 = _median_of(data[:half])
    q3 = _median_of(data[n - half:])
    iqr = q3 - q1
    low_fence = q1 - 1.5 * iqr
    high_fence = q3 + 1.5 * iqr
    inside = [v for v in data if low_fence <= v <= high_fence]
    outliers = tuple(v for v in data if v < low_fence or v > high_fence)
    return BoxStats(
        median=median,
        q1=q1,
        q3=q3,
        iqr=iqr,
        lower_whisker=inside[0],
        upper_whisker=inside[-1],
        outliers=outliers,
    )


def timeline_rows(timeline: CentralityTimeline) -> list[tuple[str, int, float]]:
    """Flatten a timeline into (person, week, cumulative score) rows."""
    rows: list[tuple[str, int, float]] = []
    for person in sorted(timeline.series):
        for week, value in zip(timeline.weeks, timeline.series[person]):
            rows.append((person, week, value))
    return rows

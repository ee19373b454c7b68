"""Renderers for the analysis outputs: CSV tables, DOT graphs, JSON documents.

Everything here is a pure function from analysis results to text, with fully
deterministic ordering, so repeated runs with the same inputs and seed
produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Mapping, Sequence

from .coreperiphery import (
    ClusterDependencyMatrix,
    CorenessRanking,
    CpdmSeries,
    PeopleClusterMatrix,
)
from .dsmcluster import ClusterAssignment
from .model import StscFinding, split_module_version
from .socialnet import CentralityScores, CentralityTimeline, SocialGraph


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def _num(x: float) -> str:
    """Canonical number text: integers without a trailing .0, floats via repr."""
    f = float(x)
    if f.is_integer():
        return str(int(f))
    return repr(f)


def centrality_csv(
    timelines: Mapping[str, CentralityTimeline],
    thread_counts: Mapping[str, int],
    ic_display_min: float = 0.0,
) -> str:
    """Cumulative centrality series of all projects.

    Persons whose average per-thread score (final cumulative value divided by
    the project's thread count) stays below ``ic_display_min`` are omitted.
    This is a display filter only; detection always sees everyone.
    """
    rows: list[list[object]] = []
    for project in sorted(timelines):
        timeline = timelines[project]
        threads = max(thread_counts.get(project, 0), 1)
        for person in sorted(timeline.series):
            values = timeline.series[person]
            if values and values[-1] / threads < ic_display_min:
                continue
            for week, value in zip(timeline.weeks, values):
                rows.append([project, person, week, _num(value)])
    return _csv_text(["project", "person", "week", "cumulative_ic"], rows)


def cpdm_csv(series_by_module: Mapping[str, CpdmSeries]) -> str:
    rows: list[list[object]] = []
    for module in sorted(series_by_module):
        series = series_by_module[module]
        for version in series.versions:
            for developer in series.developers:
                rows.append(
                    [module, version, developer, _num(series.values[(developer, version)])]
                )
    return _csv_text(["module", "version", "developer", "cpdm"], rows)


def interteam_csv(counts: Mapping[str, Sequence[int]], thread_ids: Sequence[str]) -> str:
    rows: list[list[object]] = []
    for name in sorted(counts):
        for thread_id, count in zip(thread_ids, counts[name]):
            rows.append([name, thread_id, count])
    return _csv_text(["set", "thread", "count"], rows)


def clusters_csv(
    assignments: Mapping[str, ClusterAssignment],
    rankings: Mapping[str, CorenessRanking],
) -> str:
    """Cluster membership of every module version; clusters are named by rank."""
    rows: list[list[object]] = []
    for key in assignments:
        name, version = split_module_version(key)
        assignment = assignments[key]
        ranking = rankings[key]
        label: dict[int, str] = {cid: f"c{rank}" for cid, rank in ranking.rank.items()}
        for idx, module_id in enumerate(assignment.module_ids):
            if idx in assignment.buses:
                rows.append([name, version, module_id, "", "true"])
            else:
                rows.append([name, version, module_id, label[assignment.cluster_of[idx]], "false"])
    return _csv_text(["module", "version", "file", "cluster", "is_bus"], rows)


def cost_trace_csv(trace: Sequence[float]) -> str:
    rows = [[i, _num(cost)] for i, cost in enumerate(trace)]
    return _csv_text(["iteration", "total_cost"], rows)


def findings_json(findings: Sequence[StscFinding]) -> str:
    doc = [
        {
            "kind": f.kind,
            "subject": f.subject,
            "interval": list(f.interval) if f.interval is not None else None,
            "evidence": {k: f.evidence[k] for k in sorted(f.evidence)},
            "severity": f.severity,
        }
        for f in findings
    ]
    return json.dumps(doc, indent=2) + "\n"


def manifest_json(
    tool_version: str,
    seed: int,
    inputs: Mapping[str, Mapping[str, str]],
    parameters: Mapping[str, object],
) -> str:
    doc = {
        "tool": "stsc-lens",
        "version": tool_version,
        "seed": seed,
        "inputs": {name: dict(inputs[name]) for name in sorted(inputs)},
        "parameters": {k: parameters[k] for k in sorted(parameters)},
    }
    return json.dumps(doc, indent=2) + "\n"


def _quote(name: str) -> str:
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def thread_dot(graph: SocialGraph, scores: CentralityScores) -> str:
    """One thread's reply network; node attribute ``ic``, edge attribute ``message_count``."""
    lines = [f"digraph {_quote('thread ' + graph.thread_id)} {{"]
    for person in sorted(graph.persons):
        lines.append(f"  {_quote(person)} [ic={_num(scores.values[person])}];")
    for src, dst, count in sorted(graph.edges):
        lines.append(f"  {_quote(src)} -> {_quote(dst)} [message_count={count}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def project_dot(project: str, graphs: Sequence[SocialGraph], timeline: CentralityTimeline) -> str:
    """Merged reply network of a whole project; node attribute ``cumulative_ic``."""
    totals: dict[tuple[str, str], int] = {}
    persons: set[str] = set()
    for graph in graphs:
        persons.update(graph.persons)
        for src, dst, count in graph.edges:
            totals[(src, dst)] = totals.get((src, dst), 0) + count
    lines = [f"digraph {_quote('project ' + project)} {{"]
    for person in sorted(persons):
        series = timeline.series.get(person, ())
        final = series[-1] if series else 0.0
        lines.append(f"  {_quote(person)} [cumulative_ic={_num(final)}];")
    for (src, dst), count in sorted(totals.items()):
        lines.append(f"  {_quote(src)} -> {_quote(dst)} [message_count={count}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cluster_overlay_dot(
    module_version_key: str,
    assignment: ClusterAssignment,
    cdm: ClusterDependencyMatrix,
    ranking: CorenessRanking,
    pcm: PeopleClusterMatrix,
    cpdm_values: Mapping[str, float],
) -> str:
    """Clusters as nodes sized by member count, with developers linked to
    the clusters whose files they modified.

    Cluster nodes are named by rank (``c0`` is the most core); edges between
    clusters carry the raw inter-cluster dependency weight, developer edges
    carry the distinct-file count, and developer nodes carry their ``cpdm``.
    """
    label: dict[int, str] = {cid: f"c{rank}" for cid, rank in ranking.rank.items()}
    sizes = assignment.sizes()
    lines = [f"digraph {_quote('clusters ' + module_version_key)} {{"]
    for cid in sorted(label, key=lambda c: ranking.rank[c]):
        lines.append(f"  {_quote(label[cid])} [members={sizes[cid]}];")
    if assignment.buses:
        lines.append(f"  {_quote('bus')} [members={len(assignment.buses)}];")
    ids = cdm.cluster_ids
    for ai, a in enumerate(ids):
        for bi, b in enumerate(ids):
            weight = cdm.matrix[ai][bi]
            if weight > 0:
                lines.append(f"  {_quote(label[a])} -> {_quote(label[b])} [weight={weight}];")
    for dev, row in zip(pcm.developers, pcm.counts):
        lines.append(f"  {_quote(dev)} [cpdm={_num(cpdm_values.get(dev, 0.0))}];")
        for cid, files in zip(pcm.cluster_order, row):
            if files > 0:
                lines.append(f"  {_quote(dev)} -> {_quote(label[cid])} [files={files}];")
    lines.append("}")
    return "\n".join(lines) + "\n"

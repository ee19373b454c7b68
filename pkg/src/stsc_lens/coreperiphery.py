"""Core/periphery ranking of clusters and the per-developer core-distance metric.

Clusters are ranked by weighting their inter-cluster dependencies with the
partner cluster sizes: the larger and better connected a cluster, the more
core it is (rank 0). A developer's core-periphery distance metric (CPDM) on
a scale k is the activity-weighted mean of ``k - rank`` over the clusters
whose files they modified: k means they work at the very core, 0 means they
touched nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dsmcluster import ClusterAssignment, ClusterParams, cluster
from .model import CommitEvent, Dsm

__all__ = [
    "ClusterDependencyMatrix",
    "CorenessRanking",
    "PeopleClusterMatrix",
    "CpdmSeries",
    "cluster_dependency_matrix",
    "coreness_order",
    "coreness_ranking",
    "people_cluster_matrix",
    "cpdm",
    "cpdm_series",
]


@dataclass(frozen=True)
class ClusterDependencyMatrix:
    """Raw dependency counts aggregated across cluster boundaries (buses excluded)."""

    cluster_ids: tuple[int, ...]
    matrix: tuple[tuple[int, ...], ...]
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        k = len(self.cluster_ids)
        if len(self.matrix) != k or any(len(row) != k for row in self.matrix):
            raise ValueError("cluster dependency matrix must be square")
        if any(self.matrix[i][i] != 0 for i in range(k)):
            raise ValueError("cluster dependency matrix diagonal must be zero")
        if len(self.sizes) != k:
            raise ValueError("sizes must match cluster count")


@dataclass(frozen=True)
class CorenessRanking:
    """rank maps cluster id -> 0..k'-1 with 0 the most core; score is the raw weight."""

    rank: Mapping[int, int]
    score: Mapping[int, float]


@dataclass(frozen=True)
class PeopleClusterMatrix:
    """Distinct files modified per developer (rows) and cluster (columns).

    Columns follow ``cluster_order``: cluster ids sorted most core first.
    """

    developers: tuple[str, ...]
    cluster_order: tuple[int, ...]
    counts: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class CpdmSeries:
    """CPDM of every developer of one module across its versions.

    ``scale`` holds the per-version rank scale (the cluster count, capped by
    the requested maximum). ``diagnostics`` lists ignored inputs, e.g.
    commits naming files absent from the version's dependency matrix.
    """

    module: str
    versions: tuple[str, ...]
    developers: tuple[str, ...]
    values: Mapping[tuple[str, str], float]
    scale: Mapping[str, int]
    diagnostics: tuple[str, ...] = ()


def cluster_dependency_matrix(dsm: Dsm, assignment: ClusterAssignment) -> ClusterDependencyMatrix:
    """Aggregate raw dependency counts between clusters; bus modules are excluded."""
    cells = np.asarray(dsm.cells, dtype=np.int64)
    ids = tuple(cid for cid, _members in assignment.clusters)
    members = {cid: sorted(m) for cid, m in assignment.clusters}
    k = len(ids)
    matrix = [[0] * k for _ in range(k)]
    for ai, a in enumerate(ids):
        for bi, b in enumerate(ids):
            if ai != bi:
                matrix[ai][bi] = int(cells[np.ix_(members[a], members[b])].sum())
    return ClusterDependencyMatrix(
        cluster_ids=ids,
        matrix=tuple(tuple(row) for row in matrix),
        sizes=tuple(len(members[cid]) for cid in ids),
    )


def coreness_order(matrix: Sequence[Sequence[float]], sizes: Sequence[int]) -> list[int]:
    """Positions of a cluster dependency matrix ordered most core first.

    The matrix is column-scaled by cluster size; a cluster's score is its
    scaled row sum plus scaled column sum. Ties break by descending size,
    then by position.
    """
    m = np.asarray(matrix, dtype=np.float64) * np.asarray(sizes, dtype=np.float64)
    scores = m.sum(axis=1) + m.sum(axis=0)
    return sorted(range(len(sizes)), key=lambda p: (-scores[p], -sizes[p], p))


def coreness_ranking(cdm: ClusterDependencyMatrix) -> CorenessRanking:
    """Rank clusters 0..k'-1, most core first."""
    m = np.asarray(cdm.matrix, dtype=np.float64) * np.asarray(cdm.sizes, dtype=np.float64)
    scores = m.sum(axis=1) + m.sum(axis=0)
    order = sorted(
        range(len(cdm.cluster_ids)),
        key=lambda p: (-scores[p], -cdm.sizes[p], cdm.cluster_ids[p]),
    )
    rank = {cdm.cluster_ids[p]: r for r, p in enumerate(order)}
    score = {cdm.cluster_ids[p]: float(scores[p]) for p in range(len(cdm.cluster_ids))}
    return CorenessRanking(rank=rank, score=score)


def people_cluster_matrix(
    commits: Sequence[CommitEvent],
    dsm: Dsm,
    assignment: ClusterAssignment,
    ranking: CorenessRanking,
) -> tuple[PeopleClusterMatrix, list[str]]:
    """Count distinct modified files per developer and cluster.

    Distinct files, not commit events: committing the same file twice does
    not make a developer more core. Files absent from the dependency matrix
    are skipped with a diagnostic; files that are vertical buses belong to
    no cluster and are skipped silently.
    """
    index = {mid: i for i, mid in enumerate(dsm.module_ids)}
    cluster_order = tuple(sorted(ranking.rank, key=ranking.rank.__getitem__))
    column = {cid: c for c, cid in enumerate(cluster_order)}
    touched: dict[str, set[tuple[int, str]]] = {}
    diagnostics: list[str] = []
    for commit in commits:
        idx = index.get(commit.file)
        if idx is None:
            diagnostics.append(
                f"commit by {commit.author!r} touches {commit.file!r}, "
                f"absent from the {commit.module} dependency matrix; ignored"
            )
            continue
        if idx in assignment.buses:
            continue
        cid = assignment.cluster_of[idx]
        touched.setdefault(commit.author, set()).add((column[cid], commit.file))
    developers = tuple(sorted(touched))
    counts = []
    for dev in developers:
        row = [0] * len(cluster_order)
        for col, _file in touched[dev]:
            row[col] += 1
        counts.append(tuple(row))
    pcm = PeopleClusterMatrix(
        developers=developers, cluster_order=cluster_order, counts=tuple(counts)
    )
    return pcm, diagnostics


def cpdm(
    pcm: PeopleClusterMatrix,
    ranking: CorenessRanking,
    k: int,
    *,
    equal_weight: bool = False,
    literal_distance: bool = False,
) -> dict[str, float]:
    """Core-periphery distance of each developer on a 0..k scale.

    A developer who modified nothing scores 0; otherwise the score is the
    mean of ``k - rank(c)`` over modified clusters c, weighted by the
    distinct-file counts (or unweighted with ``equal_weight``). With
    ``literal_distance`` the distance from the core is instead the raw
    column-weighted sum ``sum(p_dj * j) / k`` over 1-based rank positions;
    that variant does not stay on a 0..k scale on its own and is clamped.
    """
    if k < len(pcm.cluster_order):
        raise ValueError("k must be at least the cluster count")
    ranks = [ranking.rank[cid] for cid in pcm.cluster_order]
    result: dict[str, float] = {}
    for dev, row in zip(pcm.developers, pcm.counts):
        total = sum(row)
        if total == 0:
            result[dev] = 0.0
            continue
        if literal_distance:
            distance = sum(p * (rank + 1) for p, rank in zip(row, ranks)) / k
            result[dev] = min(float(k), max(0.0, k - distance))
        elif equal_weight:
            active = [k - rank for p, rank in zip(row, ranks) if p > 0]
            result[dev] = sum(active) / len(active)
        else:
            result[dev] = sum(p * (k - rank) for p, rank in zip(row, ranks)) / total
    return result


def cpdm_series(
    module: str,
    commits: Sequence[CommitEvent],
    dsms_by_version: Mapping[str, Dsm],
    params: ClusterParams | None = None,
    *,
    equal_weight: bool = False,
    literal_distance: bool = False,
    assignments: Mapping[str, ClusterAssignment] | None = None,
) -> CpdmSeries:
    """CPDM of every developer of one module, per version.

    ``dsms_by_version`` must be in declared version order; every version a
    commit references must have dependency data. Developers inactive in a
    version score 0 there. Each version is clustered and ranked on its own,
    so the scale is that version's cluster count. Pass precomputed
    ``assignments`` (keyed by version tag) to skip the clustering step.
    """
    params = params or ClusterParams()
    versions = tuple(dsms_by_version)
    by_version: dict[str, list[CommitEvent]] = {v: [] for v in versions}
    for commit in commits:
        if commit.module_name != module:
            continue
        if commit.version_tag not in by_version:
            raise ValueError(
                f"module {module!r}: commits reference version {commit.version_tag!r} "
                "which has no dependency matrix"
            )
        by_version[commit.version_tag].append(commit)

    values: dict[tuple[str, str], float] = {}
    scale: dict[str, int] = {}
    diagnostics: list[str] = []
    developers: set[str] = set()
    per_version: dict[str, dict[str, float]] = {}
    for version in versions:
        dsm = dsms_by_version[version]
        if assignments is not None and version in assignments:
            assignment = assignments[version]
        else:
            assignment = cluster(dsm, params)
        cdm = cluster_dependency_matrix(dsm, assignment)
        ranking = coreness_ranking(cdm)
        pcm, notes = people_cluster_matrix(by_version[version], dsm, assignment, ranking)
        diagnostics.extend(notes)
        k_eff = len(assignment.clusters)
        scale[version] = k_eff
        scores = (
            cpdm(pcm, ranking, k_eff, equal_weight=equal_weight, literal_distance=literal_distance)
            if k_eff
            else {}
        )
        per_version[version] = scores
        developers.update(c.author for c in by_version[version])

    ordered_devs = tuple(sorted(developers))
    for version in versions:
        for dev in ordered_devs:
            values[(dev, version)] = per_version[version].get(dev, 0.0)
    return CpdmSeries(
        module=module,
        versions=versions,
        developers=ordered_devs,
        values=values,
        scale=scale,
        diagnostics=tuple(diagnostics),
    )

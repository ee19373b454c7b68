"""Dependency-matrix clustering by randomized cost-descent bidding.

A partition of the matrix is scored by its clustered cost: every dependent
pair (i, j) costs ``(SM(i,j) + SM(j,i)) * size(i,j) ** lambda``, where the
size is 1 when either endpoint is a vertical bus, the cluster size when both
share a cluster, and the full matrix size otherwise. Starting from
singletons, a seeded loop repeatedly draws a random module, lets every other
cluster bid the exact total-cost delta of absorbing it, and accepts the best
bid only if it strictly lowers the cost. The loop stops after a configurable
streak of consecutive rejections.

Vertical buses are modules whose fan-in reaches a threshold fraction of the
matrix; they are exempt from clustering and from size penalties.

:class:`DsmClusterer` wraps the algorithm in a scikit-learn compatible
estimator so it can sit in pipelines and be configured via ``get_params`` /
``set_params``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array

from .model import Dsm

_EPS = 1e-9


@dataclass(frozen=True)
class ClusterParams:
    """Knobs for the bidding loop.

    ``lambda_`` is the size-penalty exponent (2 works well in practice).
    ``stability_window`` is the number of consecutive rejected bids that ends
    a run; ``None`` means 10 * n. The best assignment over ``restarts``
    seeded runs is reported.
    """

    lambda_: float = 2.0
    bus_threshold: float = 0.25
    max_clusters: int = 9
    stability_window: int | None = None
    restarts: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.lambda_ > 0:
            raise ValueError("lambda_ must be positive")
        if not 0 < self.bus_threshold <= 1:
            raise ValueError("bus_threshold must be in (0, 1]")
        if self.max_clusters < 1:
            raise ValueError("max_clusters must be >= 1")
        if self.stability_window is not None and self.stability_window < 1:
            raise ValueError("stability_window must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class ClusterAssignment:
    """A partition of the non-bus modules, with the cost that produced it.

    ``clusters`` holds (cluster id, member indexes) pairs in canonical order;
    ids are assigned 0..k'-1 by smallest member index. ``cost_trace`` records
    the total cost after every accepted change, starting from the singleton
    initialization.
    """

    module_ids: tuple[str, ...]
    cluster_of: Mapping[int, int]
    clusters: tuple[tuple[int, frozenset[int]], ...]
    buses: frozenset[int]
    total_cost: float
    cost_trace: tuple[float, ...]

    def sizes(self) -> dict[int, int]:
        return {cid: len(members) for cid, members in self.clusters}


def pair_weights(dsm: Dsm) -> np.ndarray:
    """Symmetric dependency weights: w[i, j] = SM(i, j) + SM(j, i)."""
    cells = np.asarray(dsm.cells, dtype=np.int64)
    return cells + cells.T


def identify_vertical_buses(dsm: Dsm, bus_threshold: float) -> frozenset[int]:
    """Module indexes whose fan-in count reaches ``bus_threshold * n``."""
    if not 0 < bus_threshold <= 1:
        raise ValueError("bus_threshold must be in (0, 1]")
    cells = np.asarray(dsm.cells, dtype=np.int64)
    fan_in = (cells > 0).sum(axis=0)
    return frozenset(int(j) for j in np.nonzero(fan_in >= bus_threshold * dsm.size)[0])


def dependency_cost(
    dsm: Dsm,
    i: int,
    j: int,
    cluster_of: Mapping[int, int],
    buses: frozenset[int],
    lambda_: float = 2.0,
) -> float:
    """Cost of the (binary) dependency between modules i and j under a partition.

    Returns d, d * n_c ** lambda or d * N ** lambda for the bus,
    intra-cluster and inter-cluster case respectively, where d is 1 iff any
    dependency exists between i and j in either direction.
    """
    if i == j:
        raise ValueError("dependency_cost is defined for distinct modules")
    d = 1 if dsm.cells[i][j] + dsm.cells[j][i] > 0 else 0
    if i in buses or j in buses:
        return float(d)
    if i in cluster_of and cluster_of.get(i) == cluster_of.get(j):
        n_c = sum(1 for c in cluster_of.values() if c == cluster_of[i])
        return d * n_c**lambda_
    return d * dsm.size**lambda_


def clustered_cost(
    dsm: Dsm,
    cluster_of: Mapping[int, int],
    buses: frozenset[int],
    lambda_: float = 2.0,
) -> float:
    """Total clustered cost of a partition, each unordered pair counted once.

    Unlike :func:`dependency_cost` this uses the raw dependency counts, so
    heavily coupled pairs weigh more than single references.
    """
    n = dsm.size
    w = pair_weights(dsm)
    member = np.full(n, -1, dtype=np.int64)
    for idx, cid in cluster_of.items():
        member[idx] = cid
    sizes: dict[int, int] = {}
    for cid in cluster_of.values():
        sizes[cid] = sizes.get(cid, 0) + 1

    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            weight = int(w[i, j])
            if weight == 0:
                continue
            if i in buses or j in buses:
                size = 1
            elif member[i] >= 0 and member[i] == member[j]:
                size = sizes[int(member[i])]
            else:
                size = n
            total += weight * float(size) ** lambda_
    return total


def _cluster_once(
    w: np.ndarray, n: int, buses: frozenset[int], params: ClusterParams, seed: int
) -> tuple[np.ndarray, float, list[float]]:
    """One seeded bidding run. Returns (membership, total cost, cost trace)."""
    lam = params.lambda_
    powers = np.arange(n + 2, dtype=np.float64) ** lam
    big = float(n) ** lam

    non_bus = [i for i in range(n) if i not in buses]
    member = np.full(n, -1, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    intra = np.zeros(n, dtype=np.float64)
    for cid, idx in enumerate(non_bus):
        member[idx] = cid
        sizes[cid] = 1

    wf = w.astype(np.float64)
    bus_mask = np.zeros(n, dtype=bool)
    for b in buses:
        bus_mask[b] = True

    # Initial cost: bus pairs cost their weight, everything else is inter-cluster.
    iu, ju = np.triu_indices(n, k=1)
    pw = wf[iu, ju]
    touches_bus = bus_mask[iu] | bus_mask[ju]
    total = float(np.sum(np.where(touches_bus, pw, pw * big)))
    trace = [total]

    if len(non_bus) <= 1:
        return member, total, trace

    rng = random.Random(seed)
    window = params.stability_window if params.stability_window is not None else 10 * n
    rejections = 0
    cluster_ids = np.arange(n)
    while rejections < window:
        m = non_bus[rng.randrange(len(non_bus))]
        s = int(member[m])
        wm = wf[m]
        # m's total weight into each cluster (bus modules carry member -1).
        in_cluster = member >= 0
        link = np.bincount(member[in_cluster], weights=wm[in_cluster], minlength=n)

        size_s = int(sizes[s])
        w_to_rest = float(link[s])  # weight between m and its own cluster
        leave = w_to_rest * (big - powers[size_s]) + (intra[s] - w_to_rest) * (
            powers[size_s - 1] - powers[size_s]
        )

        alive = (sizes > 0) & (cluster_ids != s)
        candidates = cluster_ids[alive]
        if candidates.size == 0:
            rejections += 1
            continue
        grown = powers[sizes[alive] + 1]
        deltas = link[alive] * (grown - big) + intra[alive] * (grown - powers[sizes[alive]]) + leave
        best_pos = int(np.argmin(deltas))
        best_delta = float(deltas[best_pos])
        if best_delta < -_EPS:
            c = int(candidates[best_pos])
            intra[s] -= w_to_rest
            intra[c] += link[c]
            sizes[s] -= 1
            sizes[c] += 1
            member[m] = c
            total += best_delta
            trace.append(total)
            rejections = 0
        else:
            rejections += 1
    return member, total, trace


def _merge_to_limit(
    cells: np.ndarray,
    w: np.ndarray,
    n: int,
    member: np.ndarray,
    total: float,
    trace: list[float],
    params: ClusterParams,
) -> float:
    """Force the cluster count down to ``max_clusters``.

    The naturally stable partition can exceed the requested cluster count;
    when it does, the lowest-coreness cluster is repeatedly merged into the
    partner that increases the total cost least.
    """
    # Imported here: coreperiphery builds on this module's output types.
    from .coreperiphery import coreness_order

    lam = params.lambda_
    big = float(n) ** lam
    while True:
        ids = sorted(int(c) for c in set(member[member >= 0]))
        if len(ids) <= params.max_clusters:
            return total
        members = {cid: np.nonzero(member == cid)[0] for cid in ids}
        sizes = [len(members[cid]) for cid in ids]
        cdm = [
            [
                0 if a == b else int(cells[np.ix_(members[a], members[b])].sum())
                for b in ids
            ]
            for a in ids
        ]
        order = coreness_order(cdm, sizes)
        victim = ids[order[-1]]

        intra_of = {
            cid: float(np.triu(w[np.ix_(members[cid], members[cid])], k=1).sum())
            for cid in ids
        }
        best: tuple[float, int] | None = None
        for other in ids:
            if other == victim:
                continue
            cross = float(w[np.ix_(members[victim], members[other])].sum())
            merged = float(len(members[victim]) + len(members[other]))
            delta = (
                cross * (merged**lam - big)
                + intra_of[victim] * (merged**lam - float(len(members[victim])) ** lam)
                + intra_of[other] * (merged**lam - float(len(members[other])) ** lam)
            )
            if best is None or (delta, other) < best:
                best = (delta, other)
        assert best is not None
        delta, partner = best
        member[member == victim] = partner
        total += delta
        trace.append(total)


def _canonicalize(
    member: np.ndarray, n: int
) -> tuple[dict[int, int], list[tuple[int, frozenset[int]]]]:
    """Renumber clusters 0..k'-1 by smallest member index."""
    groups: dict[int, list[int]] = {}
    for idx in range(n):
        cid = int(member[idx])
        if cid >= 0:
            groups.setdefault(cid, []).append(idx)
    ordered = sorted(groups.values(), key=lambda g: g[0])
    cluster_of: dict[int, int] = {}
    clusters: list[tuple[int, frozenset[int]]] = []
    for new_id, group in enumerate(ordered):
        clusters.append((new_id, frozenset(group)))
        for idx in group:
            cluster_of[idx] = new_id
    return cluster_of, clusters


def cluster(dsm: Dsm, params: ClusterParams | None = None) -> ClusterAssignment:
    """Cluster a DSM; deterministic for a given seed, best of ``restarts`` runs."""
    params = params or ClusterParams()
    n = dsm.size
    buses = identify_vertical_buses(dsm, params.bus_threshold)
    cells = np.asarray(dsm.cells, dtype=np.int64)
    w = cells + cells.T

    seeder = random.Random(params.seed)
    run_seeds = [seeder.randrange(2**63) for _ in range(params.restarts)]
    best_member: np.ndarray | None = None
    best_total = 0.0
    best_trace: list[float] = []
    for run_seed in run_seeds:
        member, total, trace = _cluster_once(w, n, buses, params, run_seed)
        total = _merge_to_limit(cells, w, n, member, total, trace, params)
        if best_member is None or total < best_total - _EPS:
            best_member, best_total, best_trace = member, total, trace
    assert best_member is not None
    cluster_of, clusters = _canonicalize(best_member, n)
    return ClusterAssignment(
        module_ids=dsm.module_ids,
        cluster_of=cluster_of,
        clusters=tuple(clusters),
        buses=buses,
        total_cost=best_total,
        cost_trace=tuple(best_trace),
    )


class DsmClusterer(ClusterMixin, BaseEstimator):
    """Scikit-learn estimator facade over :func:`cluster`.

    ``fit`` accepts a :class:`~stsc_lens.model.Dsm` or a square array of
    non-negative integer dependency counts with a zero diagonal. After
    fitting, ``labels_`` holds the cluster id per module with ``-1`` marking
    vertical buses.
    """

    def __init__(
        self,
        lambda_: float = 2.0,
        bus_threshold: float = 0.25,
        max_clusters: int = 9,
        stability_window: int | None = None,
        restarts: int = 5,
        seed: int = 0,
    ):
        self.lambda_ = lambda_
        self.bus_threshold = bus_threshold
        self.max_clusters = max_clusters
        self.stability_window = stability_window
        self.restarts = restarts
        self.seed = seed

    def _params(self) -> ClusterParams:
        return ClusterParams(
            lambda_=self.lambda_,
            bus_threshold=self.bus_threshold,
            max_clusters=self.max_clusters,
            stability_window=self.stability_window,
            restarts=self.restarts,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        if isinstance(X, Dsm):
            dsm = X
        else:
            arr = check_array(X, dtype=np.int64)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ValueError("X must be a square dependency matrix")
            dsm = Dsm(
                module_ids=tuple(str(i) for i in range(arr.shape[0])),
                cells=tuple(tuple(int(v) for v in row) for row in arr),
            )
        assignment = cluster(dsm, self._params())
        labels = np.full(dsm.size, -1, dtype=np.int64)
        for cid, members in assignment.clusters:
            for idx in members:
                labels[idx] = cid
        self.assignment_ = assignment
        self.labels_ = labels
        self.buses_ = assignment.buses
        self.total_cost_ = assignment.total_cost
        self.cost_trace_ = assignment.cost_trace
        self.module_ids_ = dsm.module_ids
        self.n_features_in_ = dsm.size
        return self

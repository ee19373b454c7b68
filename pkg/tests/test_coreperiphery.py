from __future__ import annotations

import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stsc_lens.coreperiphery import (
    ClusterDependencyMatrix,
    CorenessRanking,
    PeopleClusterMatrix,
    cluster_dependency_matrix,
    coreness_ranking,
    cpdm,
    cpdm_series,
    people_cluster_matrix,
)
from stsc_lens.dsmcluster import ClusterParams, cluster
from stsc_lens.model import CommitEvent, Dsm

from conftest import at, clique_dsm, dsm_from_edges


def commit(file, author, module="MZM", version="1.7.1", week=0):
    return CommitEvent(
        file=file, author=author, timestamp=at(week), module=f"{module}@{version}"
    )


def ranking_for(ranks):
    """CorenessRanking with the given id -> rank map (scores mirror ranks)."""
    return CorenessRanking(
        rank=dict(ranks), score={cid: float(len(ranks) - r) for cid, r in ranks.items()}
    )


def nine_rank_pcm(rows):
    """PCM over nine clusters (id == rank) with the given developer rows."""
    return PeopleClusterMatrix(
        developers=tuple(sorted(rows)),
        cluster_order=tuple(range(9)),
        counts=tuple(tuple(rows[d]) for d in sorted(rows)),
    )


NINE = ranking_for({i: i for i in range(9)})


class TestClusterDependencyMatrix:
    def test_direct_aggregation(self):
        dsm = dsm_from_edges(["A", "B", "C"], [("B", "C", 2)])
        assignment = cluster(dsm, ClusterParams(seed=1, bus_threshold=0.9))
        # force the documented grouping regardless of the search result
        from stsc_lens.dsmcluster import ClusterAssignment

        assignment = ClusterAssignment(
            module_ids=dsm.module_ids,
            cluster_of={0: 0, 1: 0, 2: 1},
            clusters=((0, frozenset({0, 1})), (1, frozenset({2}))),
            buses=frozenset(),
            total_cost=0.0,
            cost_trace=(0.0,),
        )
        cdm = cluster_dependency_matrix(dsm, assignment)
        assert cdm.matrix == ((0, 2), (0, 0))
        assert cdm.sizes == (2, 1)

    def test_single_cluster_is_one_by_one_zero(self):
        # M is a bus (fan-in 2 of 3); A and B co-cluster since 2**2 < 3**2
        dsm = dsm_from_edges(
            ["A", "B", "M"], [("A", "M", 1), ("B", "M", 1), ("A", "B", 1)]
        )
        assignment = cluster(dsm, ClusterParams(seed=1, bus_threshold=0.5))
        assert assignment.buses == {2}
        assert len(assignment.clusters) == 1
        cdm = cluster_dependency_matrix(dsm, assignment)
        assert cdm.matrix == ((0,),)

    def test_no_inter_cluster_edges_gives_zero_matrix(self):
        dsm = clique_dsm([(0, 1), (2, 3)])
        assignment = cluster(dsm, ClusterParams(seed=1, bus_threshold=0.6))
        cdm = cluster_dependency_matrix(dsm, assignment)
        assert all(v == 0 for row in cdm.matrix for v in row)

    def test_buses_are_excluded(self):
        edges = [(f"m{i}", "m0", 1) for i in range(1, 6)] + [("m1", "m2", 3), ("m3", "m4", 3)]
        dsm = dsm_from_edges([f"m{i}" for i in range(6)], edges)
        assignment = cluster(dsm, ClusterParams(seed=2))
        assert assignment.buses == {0}
        cdm = cluster_dependency_matrix(dsm, assignment)
        # none of m0's edges may leak into the aggregation
        assert sum(v for row in cdm.matrix for v in row) == 0


class TestCorenessRanking:
    def test_connected_large_cluster_is_core(self):
        cdm = ClusterDependencyMatrix(
            cluster_ids=(0, 1), matrix=((0, 4), (1, 0)), sizes=(5, 1)
        )
        ranking = coreness_ranking(cdm)
        assert ranking.rank == {0: 0, 1: 1}

    def test_all_zero_matrix_ranks_by_size_then_id(self):
        cdm = ClusterDependencyMatrix(
            cluster_ids=(0, 1, 2),
            matrix=((0, 0, 0), (0, 0, 0), (0, 0, 0)),
            sizes=(2, 5, 2),
        )
        ranking = coreness_ranking(cdm)
        assert ranking.rank == {1: 0, 0: 1, 2: 2}

    def test_equal_score_equal_size_breaks_by_id(self):
        cdm = ClusterDependencyMatrix(
            cluster_ids=(3, 7), matrix=((0, 1), (1, 0)), sizes=(2, 2)
        )
        ranking = coreness_ranking(cdm)
        assert ranking.rank == {3: 0, 7: 1}

    def test_invariant_under_simultaneous_permutation(self):
        matrix = ((0, 3, 1), (2, 0, 0), (4, 1, 0))
        sizes = (3, 1, 2)
        base = coreness_ranking(
            ClusterDependencyMatrix(cluster_ids=(0, 1, 2), matrix=matrix, sizes=sizes)
        )
        perm = (2, 0, 1)  # position -> original position
        permuted_matrix = tuple(
            tuple(matrix[perm[a]][perm[b]] for b in range(3)) for a in range(3)
        )
        permuted = coreness_ranking(
            ClusterDependencyMatrix(
                cluster_ids=tuple(perm),
                matrix=permuted_matrix,
                sizes=tuple(sizes[p] for p in perm),
            )
        )
        assert permuted.rank == base.rank


class TestCpdm:
    def test_single_rank_four_cluster_scores_five(self):
        rows = {"david": [0, 0, 0, 0, 3, 0, 0, 0, 0]}
        assert cpdm(nine_rank_pcm(rows), NINE, 9) == {"david": 5.0}

    def test_no_modifications_scores_zero(self):
        rows = {"ethan": [0] * 9}
        assert cpdm(nine_rank_pcm(rows), NINE, 9) == {"ethan": 0.0}

    def test_equal_activity_in_ranks_five_and_six_scores_three_and_a_half(self):
        rows = {"ethan": [0, 0, 0, 0, 0, 2, 2, 0, 0]}
        assert cpdm(nine_rank_pcm(rows), NINE, 9) == {"ethan": 3.5}

    def test_most_core_cluster_scores_k(self):
        rows = {"david": [7, 0, 0, 0, 0, 0, 0, 0, 0]}
        assert cpdm(nine_rank_pcm(rows), NINE, 9) == {"david": 9.0}

    def test_file_count_weighting_is_the_default(self):
        rows = {"dev": [0, 0, 0, 0, 0, 3, 1, 0, 0]}
        pcm = nine_rank_pcm(rows)
        assert cpdm(pcm, NINE, 9) == {"dev": pytest.approx(3.75)}
        assert cpdm(pcm, NINE, 9, equal_weight=True) == {"dev": pytest.approx(3.5)}

    def test_literal_distance_variant(self):
        rows = {"dev": [1, 0, 0, 0, 0, 0, 0, 0, 0]}
        scores = cpdm(nine_rank_pcm(rows), NINE, 9, literal_distance=True)
        assert scores == {"dev": pytest.approx(9 - 1 / 9)}
        heavy = {"dev": [0, 0, 0, 0, 0, 0, 0, 0, 100]}
        clamped = cpdm(nine_rank_pcm(heavy), NINE, 9, literal_distance=True)
        assert clamped == {"dev": 0.0}

    def test_single_cluster_scale(self):
        pcm = PeopleClusterMatrix(developers=("d",), cluster_order=(0,), counts=((2,),))
        assert cpdm(pcm, ranking_for({0: 0}), 1) == {"d": 1.0}

    def test_k_smaller_than_cluster_count_rejected(self):
        with pytest.raises(ValueError, match="cluster count"):
            cpdm(nine_rank_pcm({"d": [0] * 9}), NINE, 5)

    @given(
        st.lists(st.integers(min_value=0, max_value=4), min_size=9, max_size=9).filter(
            lambda row: sum(row) > 0
        ),
        st.data(),
    )
    @settings(max_examples=100)
    def test_shifting_work_toward_the_core_never_decreases(self, row, data):
        occupied = [i for i, p in enumerate(row) if p > 0]
        src = data.draw(st.sampled_from(occupied))
        if src == 0:
            return
        dst = data.draw(st.integers(min_value=0, max_value=src - 1))
        moved = list(row)
        moved[src] -= 1
        moved[dst] += 1
        before = cpdm(nine_rank_pcm({"d": row}), NINE, 9)["d"]
        after = cpdm(nine_rank_pcm({"d": moved}), NINE, 9)["d"]
        assert after >= before - 1e-12


class TestPeopleClusterMatrix:
    def test_distinct_files_not_commit_events(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        assignment = cluster(dsm, ClusterParams(seed=1, bus_threshold=0.9))
        ranking = coreness_ranking(cluster_dependency_matrix(dsm, assignment))
        # "a" is committed twice but may only count once
        commits = [commit("a", "dev"), commit("a", "dev"), commit("b", "dev")]
        pcm, notes = people_cluster_matrix(commits, dsm, assignment, ranking)
        assert notes == []
        assert sum(pcm.counts[0]) == 2
        assert max(pcm.counts[0]) == 1

    def test_unknown_file_reported_and_skipped(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        assignment = cluster(dsm, ClusterParams(seed=1, bus_threshold=0.9))
        ranking = coreness_ranking(cluster_dependency_matrix(dsm, assignment))
        pcm, notes = people_cluster_matrix([commit("ghost", "dev")], dsm, assignment, ranking)
        assert pcm.developers == ()
        assert len(notes) == 1 and "ghost" in notes[0]


NINE_GROUPS = [
    tuple(range(start, start + size))
    for start, size in zip(
        [0, 10, 19, 27, 34, 40, 45, 49, 52], [10, 9, 8, 7, 6, 5, 4, 3, 2]
    )
]


class TestCpdmSeries:
    def _dsms(self, versions):
        dsm = clique_dsm(NINE_GROUPS)  # 54 modules, nine disjoint cliques
        return {v: dsm for v in versions}

    def test_rank_four_cluster_gives_constant_five(self):
        versions = ("1.7.1", "1.7.2")
        dsms = self._dsms(versions)
        # the size-6 clique (rank 4 by size) starts at module index 34
        commits = [
            commit("m34", "david", version="1.7.1"),
            commit("m34", "david", version="1.7.2"),
        ]
        series = cpdm_series("MZM", commits, dsms, ClusterParams(seed=3))
        assert series.scale == {"1.7.1": 9, "1.7.2": 9}
        assert series.values[("david", "1.7.1")] == 5.0
        assert series.values[("david", "1.7.2")] == 5.0

    def test_inactive_developer_scores_zero_everywhere(self):
        versions = ("1.7.1", "1.7.2")
        commits = [commit("m0", "david", version="1.7.1"), commit("m0", "ethan", version="1.7.2")]
        series = cpdm_series("MZM", commits, self._dsms(versions), ClusterParams(seed=3))
        assert series.values[("ethan", "1.7.1")] == 0.0
        assert series.values[("david", "1.7.2")] == 0.0

    def test_zero_activity_endpoints(self):
        versions = ("1", "2", "3")
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        dsms = {v: dsm for v in versions}
        commits = [commit("a", "dev", module="M", version="2")]
        series = cpdm_series("M", commits, dsms, ClusterParams(seed=1, bus_threshold=0.9))
        values = [series.values[("dev", v)] for v in versions]
        assert values[0] == 0.0 and values[2] == 0.0 and values[1] > 0.0

    def test_version_without_dsm_is_an_error(self):
        commits = [commit("a", "dev", module="M", version="9.9")]
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        with pytest.raises(ValueError, match="9.9"):
            cpdm_series("M", commits, {"1.0": dsm}, ClusterParams(seed=1))

    def test_unknown_file_lands_in_diagnostics(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        commits = [commit("ghost", "dev", module="M", version="1.0")]
        series = cpdm_series("M", commits, {"1.0": dsm}, ClusterParams(seed=1, bus_threshold=0.9))
        assert len(series.diagnostics) == 1
        assert series.values[("dev", "1.0")] == 0.0

    def test_other_modules_commits_are_ignored(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        commits = [commit("a", "dev", module="OTHER", version="7.7")]
        series = cpdm_series("M", commits, {"1.0": dsm}, ClusterParams(seed=1))
        assert series.developers == ()

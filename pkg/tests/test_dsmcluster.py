from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone

from stsc_lens.dsmcluster import (
    ClusterParams,
    DsmClusterer,
    cluster,
    clustered_cost,
    dependency_cost,
    identify_vertical_buses,
)
from stsc_lens.model import Dsm

from conftest import clique_dsm, dsm_from_edges


class TestVerticalBuses:
    def test_high_fan_in_module_is_a_bus(self):
        # 8 modules; everyone except m7 depends on m0
        edges = [(f"m{i}", "m0", 1) for i in range(1, 7)]
        dsm = dsm_from_edges([f"m{i}" for i in range(8)], edges)
        assert identify_vertical_buses(dsm, 0.25) == {0}

    def test_all_zero_matrix_has_no_buses(self):
        dsm = Dsm(module_ids=("a", "b", "c"), cells=((0, 0, 0), (0, 0, 0), (0, 0, 0)))
        assert identify_vertical_buses(dsm, 0.25) == frozenset()

    def test_threshold_one_requires_total_fan_in(self):
        edges = [("a", "c", 1), ("b", "c", 1)]
        dsm = dsm_from_edges(["a", "b", "c"], edges)
        assert identify_vertical_buses(dsm, 1.0) == frozenset()


class TestDependencyCost:
    dsm = dsm_from_edges(["a", "b", "c"], [("a", "b", 2), ("b", "c", 1)])

    def test_bus_target(self):
        cost = dependency_cost(self.dsm, 0, 1, {}, frozenset({1}), 2.0)
        assert cost == 1.0

    def test_same_cluster_uses_cluster_size(self):
        cluster_of = {0: 0, 1: 0, 2: 0}
        assert dependency_cost(self.dsm, 0, 1, cluster_of, frozenset(), 2.0) == 9.0

    def test_different_clusters_use_matrix_size(self):
        cluster_of = {0: 0, 1: 1, 2: 1}
        assert dependency_cost(self.dsm, 0, 1, cluster_of, frozenset(), 2.0) == 9.0 == 3.0**2

    def test_independent_pair_costs_nothing(self):
        assert dependency_cost(self.dsm, 0, 2, {0: 0, 2: 1}, frozenset(), 2.0) == 0.0


class TestClusteredCost:
    def test_co_clustered_pair(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        assert clustered_cost(dsm, {0: 0, 1: 0}, frozenset()) == 4.0

    def test_separate_singletons_degenerate_tie(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        assert clustered_cost(dsm, {0: 0, 1: 1}, frozenset()) == 4.0

    def test_chain_in_one_cluster(self):
        dsm = dsm_from_edges(["a", "b", "c"], [("a", "b", 1), ("b", "c", 1)])
        assert clustered_cost(dsm, {0: 0, 1: 0, 2: 0}, frozenset()) == 18.0

    def test_bus_pairs_cost_their_weight(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 3)])
        assert clustered_cost(dsm, {0: 0}, frozenset({1})) == 3.0

    def test_lambda_generalizes_exponent(self):
        dsm = dsm_from_edges(["a", "b"], [("a", "b", 1)])
        assert clustered_cost(dsm, {0: 0, 1: 0}, frozenset(), lambda_=3.0) == 8.0


class TestCluster:
    def test_single_module(self):
        dsm = Dsm(module_ids=("only",), cells=((0,),))
        assignment = cluster(dsm, ClusterParams(seed=1))
        assert assignment.clusters == ((0, frozenset({0})),)
        assert assignment.total_cost == 0.0

    def test_fully_disconnected_modules_stay_singletons(self):
        dsm = Dsm(module_ids=tuple("abcde"), cells=tuple(tuple([0] * 5) for _ in range(5)))
        assignment = cluster(dsm, ClusterParams(seed=3))
        assert len(assignment.clusters) == 5
        assert assignment.total_cost == 0.0

    def test_two_planted_cliques_recovered_for_any_seed(self):
        # fan-in inside a 4-clique is 3 of 8 modules; bus_threshold must
        # exceed 3/8 so bus detection stays out of the way
        dsm = clique_dsm([(0, 1, 2, 3), (4, 5, 6, 7)])
        planted = {frozenset({0, 1, 2, 3}), frozenset({4, 5, 6, 7})}
        for seed in range(6):
            assignment = cluster(dsm, ClusterParams(seed=seed, bus_threshold=0.5))
            assert {members for _cid, members in assignment.clusters} == planted

    def test_same_seed_reproduces_assignment(self):
        dsm = clique_dsm([(0, 1, 2), (3, 4, 5)], extra_edges=[(0, 3, 1)])
        params = ClusterParams(seed=11, bus_threshold=0.6)
        assert cluster(dsm, params) == cluster(dsm, params)

    def test_cost_trace_strictly_decreases(self):
        dsm = clique_dsm([(0, 1, 2, 3), (4, 5, 6, 7)])
        assignment = cluster(dsm, ClusterParams(seed=5, bus_threshold=0.5))
        trace = assignment.cost_trace
        assert len(trace) >= 2
        assert all(a > b for a, b in zip(trace, trace[1:]))
        assert trace[-1] == assignment.total_cost

    def test_incremental_cost_matches_scratch_recomputation(self):
        dsm = clique_dsm(
            [(0, 1, 2), (3, 4, 5, 6)], n=8, extra_edges=[(0, 3, 2), (7, 0, 1)]
        )
        for seed in range(4):
            assignment = cluster(dsm, ClusterParams(seed=seed, bus_threshold=0.9))
            scratch = clustered_cost(dsm, assignment.cluster_of, assignment.buses)
            assert assignment.total_cost == pytest.approx(scratch, abs=1e-9)

    def test_buses_never_join_clusters(self):
        # m0 is referenced by everyone: a vertical bus at the default threshold
        edges = [(f"m{i}", "m0", 1) for i in range(1, 6)]
        edges += [("m1", "m2", 2), ("m3", "m4", 2)]
        dsm = dsm_from_edges([f"m{i}" for i in range(6)], edges)
        assignment = cluster(dsm, ClusterParams(seed=2))
        assert assignment.buses == {0}
        clustered = {i for _cid, members in assignment.clusters for i in members}
        assert 0 not in clustered
        assert 0 not in assignment.cluster_of

    def test_max_clusters_enforced_by_merging(self):
        dsm = clique_dsm([(0, 1), (2, 3), (4, 5), (6, 7)])
        assignment = cluster(dsm, ClusterParams(seed=1, bus_threshold=0.5, max_clusters=3))
        assert len(assignment.clusters) == 3
        scratch = clustered_cost(dsm, assignment.cluster_of, assignment.buses)
        assert assignment.total_cost == pytest.approx(scratch, abs=1e-9)

    def test_restarts_pick_best_cost(self):
        dsm = clique_dsm([(0, 1, 2, 3), (4, 5, 6, 7)])
        one = cluster(dsm, ClusterParams(seed=9, bus_threshold=0.5, restarts=1))
        many = cluster(dsm, ClusterParams(seed=9, bus_threshold=0.5, restarts=6))
        assert many.total_cost <= one.total_cost

    def test_param_validation(self):
        with pytest.raises(ValueError, match="lambda_"):
            ClusterParams(lambda_=0)
        with pytest.raises(ValueError, match="bus_threshold"):
            ClusterParams(bus_threshold=0.0)
        with pytest.raises(ValueError, match="max_clusters"):
            ClusterParams(max_clusters=0)


class TestEstimator:
    def test_fit_sets_labels_and_cost(self):
        dsm = clique_dsm([(0, 1, 2), (3, 4, 5)])
        est = DsmClusterer(seed=4, bus_threshold=0.6).fit(dsm)
        assert sorted(set(est.labels_)) == [0, 1]
        assert est.labels_[0] == est.labels_[1] == est.labels_[2]
        assert est.labels_[3] == est.labels_[4] == est.labels_[5]
        assert est.total_cost_ == est.assignment_.total_cost

    def test_fit_accepts_arrays_and_marks_buses(self):
        matrix = np.zeros((6, 6), dtype=int)
        for i in range(1, 6):
            matrix[i, 0] = 1
        matrix[1, 2] = matrix[2, 1] = 2
        matrix[3, 4] = matrix[4, 3] = 2
        est = DsmClusterer(seed=2).fit(matrix)
        assert est.labels_[0] == -1
        assert est.module_ids_ == tuple(str(i) for i in range(6))

    def test_fit_predict_matches_labels(self):
        dsm = clique_dsm([(0, 1), (2, 3)])
        est = DsmClusterer(seed=1, bus_threshold=0.6)
        labels = est.fit_predict(dsm)
        assert (labels == est.labels_).all()

    def test_get_params_round_trip_and_clone(self):
        est = DsmClusterer(lambda_=3.0, max_clusters=4, seed=13)
        params = est.get_params()
        assert params["lambda_"] == 3.0 and params["max_clusters"] == 4
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_rejects_non_square_input(self):
        with pytest.raises(ValueError, match="square"):
            DsmClusterer().fit(np.zeros((2, 3), dtype=int))

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError, match="diagonal"):
            DsmClusterer().fit(np.eye(3, dtype=int))

    def test_same_seed_same_labels(self):
        dsm = clique_dsm([(0, 1, 2), (3, 4, 5)], extra_edges=[(1, 4, 1)])
        a = DsmClusterer(seed=21, bus_threshold=0.9).fit(dsm)
        b = DsmClusterer(seed=21, bus_threshold=0.9).fit(dsm)
        assert (a.labels_ == b.labels_).all()

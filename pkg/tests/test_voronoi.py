#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Unit tests for isoprefs.voronoi module."""
import math

import numpy as np
import pytest
import sys
sys.path.insert(0, 'src')

from isoprefs.voronoi import (
    VoronoiForest,
    VoronoiNode,
    adjustment_c,
    anomaly_scores,
    build_voronoi_forest,
    build_voronoi_tree,
    check_forest_params,
    depth_limit_for,
    path_length,
    scores_from_depths,
    tree_depth,
)
from isoprefs.exceptions import ValidationError


def clustered_preferences(seed=0, n=200, m=40):
    """Rows sharing one preference pattern plus a single orthogonal row."""
    rng = np.random.default_rng(seed)
    P = np.zeros((n + 1, m))
    P[:n, : m // 2] = rng.uniform(0.6, 1.0, size=(n, m // 2))
    P[n, m // 2 :] = 1.0
    return P


def leaves(node):
    if node.is_leaf:
        return [node]
    return [leaf for child in node.children for leaf in leaves(child)]


class TestAdjustment:
    """Tests for adjustment_c and depth_limit_for."""

    def test_small_values(self):
        """Test the base cases."""
        assert adjustment_c(0) == 0.0
        assert adjustment_c(1) == 0.0
        assert adjustment_c(2) == 1.0

    def test_psi_256(self):
        """Test the usual normalizer."""
        expected = 2 * (math.log(255) + 0.5772156649) - 2 * 255 / 256
        assert adjustment_c(256) == pytest.approx(expected)
        assert adjustment_c(256) == pytest.approx(10.2448, abs=1e-3)

    @pytest.mark.parametrize(
        "psi,b,limit", [(256, 2, 8), (256, 4, 4), (256, 3, 6), (255, 2, 8), (1, 2, 0), (257, 16, 3)]
    )
    def test_depth_limit(self, psi, b, limit):
        """Test ceil(log_b psi) in integer arithmetic."""
        assert depth_limit_for(psi, b) == limit

    def test_scores_from_depths(self):
        """Test depth 0 scores 1 and depth c scores 0.5."""
        scores = scores_from_depths(np.array([0.0, 4.0]), 4.0)
        assert scores.tolist() == [1.0, 0.5]


class TestBuildVoronoiTree:
    """Tests for build_voronoi_tree function."""

    def test_leaves_partition_points(self):
        """Test leaf sizes sum to the number of points and depth is capped."""
        P = np.random.default_rng(1).uniform(size=(64, 10))
        tree = build_voronoi_tree(P, b=2, depth_limit=6, metric="tanimoto", rng=3)
        assert sum(leaf.size for leaf in leaves(tree)) == 64
        assert tree_depth(tree) <= 6
        assert all(len(node.children) in (0, 2) for node in leaves(tree) + [tree])

    def test_stops_on_few_points(self):
        """Test fewer than b points make a leaf."""
        tree = build_voronoi_tree(np.eye(3), b=4, depth_limit=5, metric="ruzicka", rng=0)
        assert tree.is_leaf
        assert tree.size == 3

    def test_stops_on_identical_points(self):
        """Test identical rows cannot be split."""
        tree = build_voronoi_tree(np.ones((10, 4)), b=2, depth_limit=5, metric="tanimoto", rng=0)
        assert tree.is_leaf
        assert tree.size == 10

    def test_seeds_route_to_own_child(self):
        """Test every seed lies in the cell of its own index."""
        P = np.eye(6)
        tree = build_voronoi_tree(P, b=3, depth_limit=1, metric="euclidean", rng=4)
        assert tree.seeds.shape == (3, 6)
        for j, seed in enumerate(tree.seeds):
            assert path_length(seed, tree, "euclidean") == 1 + adjustment_c(tree.children[j].size)


class TestVoronoiForest:
    """Tests for build_voronoi_forest and scoring."""

    def test_parameters(self):
        """Test forest metadata."""
        forest = build_voronoi_forest(np.random.default_rng(0).uniform(size=(300, 8)), t=5, psi=64, b=4, rng=1)
        assert isinstance(forest, VoronoiForest)
        assert len(forest.trees) == 5
        assert forest.psi == 64
        assert forest.depth_limit == 3
        assert forest.max_depth <= 3
        assert forest.normalizer == pytest.approx(adjustment_c(64))

    def test_small_dataset(self):
        """Test psi shrinks to the number of rows."""
        forest = build_voronoi_forest(np.random.default_rng(0).uniform(size=(10, 3)), t=3, psi=256, rng=0)
        assert forest.psi == 10
        assert forest.depth_limit == 4

    def test_log_b_normalizer(self):
        """Test the log_b normalization."""
        forest = build_voronoi_forest(
            np.random.default_rng(0).uniform(size=(300, 4)), t=2, psi=256, b=4, rng=0, normalize_log_b=True
        )
        assert forest.normalizer == pytest.approx(4.0)

    def test_single_row(self):
        """Test one row scores 1 under the unit normalizer."""
        forest = build_voronoi_forest(np.ones((1, 3)), t=4, psi=256, b=2, rng=0)
        assert forest.normalizer == 1.0
        assert anomaly_scores(np.ones((1, 3)), forest).tolist() == [1.0]

    def test_vectorized_matches_scalar(self):
        """Test batch routing agrees with single-point routing."""
        P = np.random.default_rng(5).uniform(size=(80, 12))
        forest = build_voronoi_forest(P, t=4, psi=32, b=3, metric="ruzicka", rng=2)
        lengths = forest.path_lengths(P[:10])
        assert lengths.shape == (10, 4)
        for j in range(10):
            for i, tree in enumerate(forest.trees):
                assert lengths[j, i] == pytest.approx(path_length(P[j], tree, "ruzicka"))

    def test_orthogonal_point_isolated(self):
        """Test a point preferring other models scores highest."""
        P = clustered_preferences()
        scores = build_voronoi_forest(P, t=100, psi=128, b=2, rng=7).anomaly_scores(P)
        assert np.all((scores > 0) & (scores <= 1))
        assert scores[-1] > np.median(scores[:-1])

    def test_threads_do_not_change_scores(self):
        """Test results are independent of the worker count."""
        P = np.random.default_rng(9).uniform(size=(120, 6))
        one = build_voronoi_forest(P, t=8, psi=64, rng=11, n_jobs=1).anomaly_scores(P)
        two = build_voronoi_forest(P, t=8, psi=64, rng=11, n_jobs=2).anomaly_scores(P)
        assert np.array_equal(one, two)

    def test_depth_histogram(self):
        """Test the histogram counts every leaf."""
        forest = build_voronoi_forest(np.random.default_rng(0).uniform(size=(50, 4)), t=3, psi=16, rng=0)
        histogram = forest.depth_histogram()
        assert sum(histogram.values()) == sum(len(leaves(tree)) for tree in forest.trees)
        assert max(histogram) <= forest.depth_limit

    def test_invalid_parameters(self):
        """Test t, b and psi are validated."""
        with pytest.raises(ValidationError):
            check_forest_params(0, 256, 2)
        with pytest.raises(ValidationError):
            check_forest_params(10, 256, 1)
        with pytest.raises(ValidationError):
            check_forest_params(10, 4, 8)
        with pytest.raises(ValidationError):
            build_voronoi_forest(np.ones((5, 2)), metric="cosine")

    def test_leaf_node(self):
        """Test a bare node is a leaf."""
        assert VoronoiNode(depth=2, size=3).is_leaf

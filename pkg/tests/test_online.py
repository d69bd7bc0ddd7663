#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Unit tests for isoprefs.online module."""
import numpy as np
import pytest
import sys
sys.path.insert(0, 'src')

from isoprefs.online import (
    OnlineForest,
    OnlineNode,
    ShadowOracle,
    depth_bounds,
    forget_point,
    iter_nodes,
    learn_point,
    merge_children,
    point_depth,
    route_mask,
    split_leaf,
    split_threshold,
)
from isoprefs.config import OnlineConfig
from isoprefs.datasets import generate_stream, two_gaussian_stream_spec
from isoprefs.evaluation import roc_auc
from isoprefs.exceptions import IsoPrefsError, UnderflowViolationError, ValidationError


def learned_tree(points, eta=8, depth_cap=3, seed=0):
    """A single tree that learned every row of ``points``."""
    root = OnlineNode()
    rng = np.random.default_rng(seed)
    for x in points:
        learn_point(x, root, eta, depth_cap, rng)
    return root


class TestHelpers:
    """Tests for thresholds and depth bounds."""

    def test_split_threshold(self):
        """Test eta * 2**k."""
        assert split_threshold(32, 0) == 32
        assert split_threshold(32, 3) == 256

    def test_depth_bounds(self):
        """Test the usual buffer and leaf sizes."""
        assert depth_bounds(2048, 32) == (4, 7)

    def test_depth_bounds_invalid(self):
        """Test omega below eta fails."""
        with pytest.raises(ValidationError):
            depth_bounds(16, 32)

    def test_point_depth(self):
        """Test the leaf mass correction."""
        leaf = OnlineNode(k=2, h=10)
        assert point_depth(np.zeros(2), leaf, 32) == 2.0
        leaf.h = 128
        assert point_depth(np.zeros(2), leaf, 32) == pytest.approx(4.0)


class TestSplitAndMerge:
    """Tests for split_leaf and merge_children."""

    def test_split_conserves_mass(self):
        """Test children share the parent height and stay in its support."""
        node = OnlineNode(h=40, lo=np.zeros(3), hi=np.ones(3))
        split_leaf(node, np.random.default_rng(1))
        assert not node.is_leaf
        assert node.left.h + node.right.h == 40
        assert node.left.k == node.right.k == 1
        for child in (node.left, node.right):
            if child.h:
                assert np.all(child.lo >= 0) and np.all(child.hi <= 1)
        assert 0.0 <= node.p <= 1.0

    def test_degenerate_support(self):
        """Test a single-point support splits at its coordinate."""
        node = OnlineNode(h=8, lo=np.full(2, 0.5), hi=np.full(2, 0.5))
        split_leaf(node, np.random.default_rng(0))
        assert node.p == 0.5
        assert node.left.h == 0 and node.left.support is None
        assert node.right.h == 8

    def test_split_needs_support(self):
        """Test an empty leaf cannot split."""
        with pytest.raises(ValidationError):
            split_leaf(OnlineNode(), np.random.default_rng(0))

    def test_children_cover_routed_points(self):
        """Test in-window points keep a support after the split that moves them."""
        node = OnlineNode(h=4, lo=np.zeros(2), hi=np.ones(2))
        routed = np.random.default_rng(3).uniform(size=(60, 2))
        split_leaf(node, np.random.default_rng(5), routed)
        assert node.left.h + node.right.h == 4
        assert all(node.route(x).contains(x) for x in routed)

    def test_route_mask(self):
        """Test the mask follows every split on the path."""
        root = OnlineNode(h=16, lo=np.zeros(2), hi=np.ones(2))
        root.q, root.p = 0, 0.5
        root.left, root.right = OnlineNode(k=1), OnlineNode(k=1)
        root.right.q, root.right.p = 1, 0.5
        root.right.left, root.right.right = OnlineNode(k=2), OnlineNode(k=2)
        X = np.array([[0.2, 0.9], [0.7, 0.2], [0.7, 0.8]])
        assert route_mask(X, [root], root.left).tolist() == [True, False, False]
        assert route_mask(X, [root, root.right], root.right.left).tolist() == [False, True, False]
        assert route_mask(X, [], root).all()

    def test_merge_spans_children(self):
        """Test the merged support covers both children."""
        node = OnlineNode(h=2, lo=np.zeros(2), hi=np.ones(2))
        node.q, node.p = 0, 0.5
        node.left = OnlineNode(k=1, h=1, lo=np.array([0.1, 0.2]), hi=np.array([0.3, 0.4]))
        node.right = OnlineNode(k=1, h=1, lo=np.array([0.6, 0.0]), hi=np.array([0.9, 0.3]))
        merge_children(node)
        assert node.is_leaf
        assert node.lo.tolist() == [0.1, 0.0]
        assert node.hi.tolist() == [0.9, 0.4]


class TestLearnAndForget:
    """Tests for learn_point and forget_point."""

    def test_split_at_threshold(self):
        """Test the root splits when its height reaches eta."""
        points = np.random.default_rng(0).uniform(size=(8, 2))
        root = learned_tree(points[:7])
        assert root.is_leaf
        learn_point(points[7], root, 8, 3, np.random.default_rng(1))
        assert not root.is_leaf
        assert root.left.h + root.right.h == 8

    def test_support_is_bounding_box(self):
        """Test the root support is the bounding box of learned points."""
        points = np.random.default_rng(2).uniform(size=(50, 3))
        root = learned_tree(points)
        assert np.allclose(root.lo, points.min(axis=0))
        assert np.allclose(root.hi, points.max(axis=0))

    def test_depth_cap(self):
        """Test no node goes deeper than the cap."""
        points = np.random.default_rng(3).uniform(size=(2000, 2))
        root = learned_tree(points, eta=4, depth_cap=3)
        assert max(node.k for node in iter_nodes(root)) <= 3

    def test_mass_conservation_under_forgetting(self):
        """Test h = h_left + h_right while points are forgotten."""
        points = np.random.default_rng(4).uniform(size=(300, 2))
        root = learned_tree(points, eta=8, depth_cap=4)
        for x in points[:200]:
            forget_point(x, root, 8)
            for node in iter_nodes(root):
                assert node.h >= 0
                if not node.is_leaf:
                    assert node.h == node.left.h + node.right.h
        assert root.h == 100

    def test_merge_below_threshold(self):
        """Test the root merges once it falls below eta."""
        points = np.random.default_rng(5).uniform(size=(8, 2))
        root = learned_tree(points)
        forget_point(points[0], root, 8)
        assert root.is_leaf
        assert root.h == 7

    def test_underflow(self):
        """Test forgetting on an empty tree fails."""
        root = learned_tree(np.zeros((1, 2)))
        forget_point(np.zeros(2), root, 8)
        with pytest.raises(UnderflowViolationError):
            forget_point(np.zeros(2), root, 8)


class TestShadowOracle:
    """Tests for the reference bookkeeping."""

    def test_no_violations(self):
        """Test in-window points stay inside every support they are routed through."""
        rng = np.random.default_rng(6)
        oracle = ShadowOracle()
        root = OnlineNode()
        points = rng.uniform(size=(400, 2))

        def window():
            return np.array(list(oracle.window.values()))

        for i, x in enumerate(points):
            oracle.add(i, x)
            learn_point(x, root, 8, 4, rng, window)
            if i >= 100:
                forget_point(points[i - 100], root, 8)
                oracle.drop(i - 100)
        assert oracle.violations(root) == []
        assert len(oracle.window) == 100

    def test_lists_follow_current_splits(self):
        """Test points learned before a split are listed on the child they now reach."""
        oracle = ShadowOracle()
        root = OnlineNode(h=2, lo=np.zeros(1), hi=np.ones(1))
        root.q, root.p = 0, 0.5
        root.left = OnlineNode(k=1, h=1, lo=np.zeros(1), hi=np.full(1, 0.2))
        root.right = OnlineNode(k=1, h=1, lo=np.full(1, 0.6), hi=np.ones(1))
        oracle.add(0, np.array([0.1]))
        oracle.add(1, np.array([0.7]))
        lists = oracle.routed_lists(root)
        assert sorted(lists[root]) == [0, 1]
        assert lists[root.left] == [0]
        assert lists[root.right] == [1]
        assert oracle.violations(root) == []

    def test_detects_support_breach(self):
        """Test a routed point outside a child's support is reported."""
        oracle = ShadowOracle()
        root = OnlineNode(h=2, lo=np.zeros(1), hi=np.ones(1))
        root.q, root.p = 0, 0.5
        root.left = OnlineNode(k=1, h=1, lo=np.full(1, 0.3), hi=np.full(1, 0.4))
        root.right = OnlineNode(k=1, h=1, lo=np.full(1, 0.6), hi=np.ones(1))
        oracle.add(7, np.array([0.1]))
        problems = oracle.violations(root)
        assert len(problems) == 1
        assert "point 7" in problems[0]


class TestOnlineForest:
    """Tests for OnlineForest."""

    def test_invariants_hold(self):
        """Test structural invariants over a stream with debug checks."""
        X = np.random.default_rng(7).normal(size=(600, 3))
        forest = OnlineForest(n_trees=4, omega=64, eta=8, rng=0, debug=True, shadow=True)
        forest.process_batch(X)
        assert forest.check_invariants() == []
        assert all(tree.h == 64 for tree in forest.trees)
        assert forest.max_depth <= 3
        assert len(forest.buffer) == 64
        assert forest.processed == 600

    def test_scores_in_range(self):
        """Test scores lie in (0, 1]."""
        X = np.random.default_rng(8).normal(size=(200, 2))
        scores = OnlineForest(n_trees=8, omega=128, eta=8, rng=1).process_batch(X)
        assert scores.shape == (200,)
        assert np.all((scores > 0) & (scores <= 1))
        assert scores[0] == 1.0

    def test_detects_uniform_anomalies(self):
        """Test anomalies in empty space outscore the clusters."""
        data = generate_stream(two_gaussian_stream_spec(n=4000, d=4, anomaly_rate=0.05), seed=3)
        forest = OnlineForest.from_config(OnlineConfig(), rng=3)
        scores = forest.process_batch(data.points)
        assert roc_auc(scores, data.labels) >= 0.8

    def test_deterministic(self):
        """Test a seed fixes the scores."""
        X = np.random.default_rng(9).normal(size=(300, 2))
        a = OnlineForest(n_trees=4, omega=64, eta=8, rng=5).process_batch(X)
        b = OnlineForest(n_trees=4, omega=64, eta=8, rng=5).process_batch(X)
        assert np.array_equal(a, b)

    def test_dimension_checks(self):
        """Test the first point fixes the dimension."""
        forest = OnlineForest(n_trees=2, omega=16, eta=4, rng=0)
        forest.process([0.0, 1.0])
        with pytest.raises(ValidationError):
            forest.process([0.0, 1.0, 2.0])
        with pytest.raises(ValidationError):
            forest.process([np.inf, 0.0])

    def test_invalid_sizes(self):
        """Test omega must not be below eta."""
        with pytest.raises(ValidationError):
            OnlineForest(omega=16, eta=32)

    def test_debug_detects_corruption(self):
        """Test a corrupted tree stops a debug forest."""
        forest = OnlineForest(n_trees=2, omega=16, eta=4, rng=0, debug=True)
        forest.process([0.0, 0.0])
        forest.trees[0].h += 3
        with pytest.raises(IsoPrefsError):
            forest.process([1.0, 1.0])

    def test_histogram_and_counts(self):
        """Test the histogram counts every leaf."""
        forest = OnlineForest(n_trees=3, omega=64, eta=8, rng=2)
        forest.process_batch(np.random.default_rng(10).uniform(size=(150, 2)))
        histogram = forest.depth_histogram()
        leaves = sum(1 for tree in forest.trees for node in iter_nodes(tree) if node.is_leaf)
        assert sum(histogram.values()) == leaves
        assert forest.node_count() >= leaves
        assert forest.normalizer == pytest.approx(3.0)

    def test_routed_points_inside_supports(self):
        """Test every buffered point lies in each support along its current path."""
        X = np.random.default_rng(0).normal(size=(3000, 4))
        forest = OnlineForest(n_trees=4, omega=512, eta=16, rng=0, shadow=True)
        forest.process_batch(X)
        outside = 0
        for _, x in forest.buffer:
            for tree in forest.trees:
                node = tree
                while True:
                    outside += not node.contains(x)
                    if node.is_leaf:
                        break
                    node = node.route(x)
        assert outside == 0
        assert forest.check_invariants() == []

    def test_drain(self):
        """Test omega further points leave no count of the first ones."""
        rng = np.random.default_rng(11)
        forest = OnlineForest(n_trees=4, omega=64, eta=8, rng=6)
        forest.process_batch(rng.normal(50.0, 1.0, size=(30, 2)))
        forest.process_batch(rng.normal(size=(64, 2)))
        assert [pid for pid, _ in forest.buffer] == list(range(30, 94))
        for tree in forest.trees:
            assert tree.h == 64
            assert sum(node.h for node in iter_nodes(tree) if node.is_leaf) == 64
        assert forest.check_invariants() == []

    def test_constant_stream(self):
        """Test a repeated point settles on a constant score."""
        forest = OnlineForest(n_trees=4, omega=64, eta=8, rng=0)
        scores = forest.process_batch(np.ones((400, 3)))
        assert np.all(scores[100:] == scores[100])
        assert 0 < scores[100] < 1

#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Voronoi isolation forest.

A Voronoi-iTree isolates points by nested Voronoi tessellations: each
internal node draws ``b`` seeds from its points and sends every point to
the child of its nearest seed under a pluggable metric. Points that end
in shallow leaves are easy to isolate and receive high anomaly scores.

The scoring machinery (average path length, ``c(n)`` adjustment, score
normalization, per-tree parallelism) lives in :class:`IsolationForestBase`
and is shared with the RuzHash forest.

Example::

    from isoprefs.voronoi import build_voronoi_forest

    forest = build_voronoi_forest(P, t=100, psi=256, b=2, metric="tanimoto", rng=7)
    scores = forest.anomaly_scores(P)
"""
import math
import time
from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from isoprefs.exceptions import ValidationError
from isoprefs.geometry import RandomState, as_generator, spawn_generators
from isoprefs.iso_logs import add_log, format_duration
from isoprefs.preference import METRICS, distances_to_seeds
from isoprefs.validation import (
    validate_choice,
    validate_points,
    validate_positive_int,
)

EULER_GAMMA = 0.5772156649


def adjustment_c(n: float) -> float:
    """Average path length of an unsuccessful search in a binary tree of ``n`` points.

    :param n: Number of points (>= 0)

    :return: 0 for n <= 1, 1 for n = 2, else 2 H(n-1) - 2 (n-1) / n with
        H(i) = ln(i) + Euler's constant

    Example::

        adjustment_c(256)  # 10.2448...
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1.0) + EULER_GAMMA) - 2.0 * (n - 1.0) / n


def depth_limit_for(psi: int, b: int) -> int:
    """Smallest integer l with b**l >= psi, i.e. ceil(log_b psi)."""
    limit, reach = 0, 1
    while reach < psi:
        reach *= b
        limit += 1
    return limit


def scores_from_depths(mean_depths: np.ndarray, normalizer: float) -> np.ndarray:
    """Isolation scores 2^(-E(D) / normalizer)."""
    return np.power(2.0, -np.asarray(mean_depths, dtype=np.float64) / normalizer)


@dataclass(eq=False)
class VoronoiNode:
    """Node of a Voronoi-iTree.

    Internal nodes hold ``b`` seed rows and ``b`` children, leaves hold
    the number of build points that reached them.
    """

    depth: int
    size: int = 0
    seeds: Optional[np.ndarray] = None
    children: Tuple["VoronoiNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


def _iter_leaves(node: Any) -> Iterator[Any]:
    stack = [node]
    while stack:
        current = stack.pop()
        if current.is_leaf:
            yield current
        elif isinstance(current.children, dict):
            stack.extend(current.children.values())
        else:
            stack.extend(current.children)


def tree_depth(node: Any) -> int:
    """Depth of the deepest leaf below ``node``."""
    return max(leaf.depth for leaf in _iter_leaves(node))


@dataclass(eq=False)
class IsolationForestBase:
    """Scoring contract shared by the preference-space isolation forests.

    Subclasses provide :meth:`_tree_path_lengths`, the per-tree routing of
    a batch of rows; everything else is common.

    Attributes:
        trees: Tree roots
        psi: Subsample size each tree was built on
        b: Branching factor
        depth_limit: Maximum tree depth, ceil(log_b psi)
        normalize_log_b: Normalize scores by log_b(psi) instead of c(psi)
        n_jobs: Worker threads used for scoring
    """

    trees: List[Any]
    psi: int
    b: int
    depth_limit: int
    normalize_log_b: bool = False
    n_jobs: int = 1

    def _tree_path_lengths(self, tree: Any, P: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def normalizer(self) -> float:
        """Expected path length used to normalize average depths."""
        if self.normalize_log_b:
            value = math.log(self.psi) / math.log(self.b) if self.psi > 1 else 0.0
        else:
            value = adjustment_c(self.psi)
        # a one-point subsample isolates everything at depth 0
        return value if value > 0 else 1.0

    def path_lengths(self, P: Any) -> np.ndarray:
        """Path length of every row in every tree.

        :param P: Rows of shape (n, m)

        :return: Array of shape (n, t)
        """
        P = np.asarray(P)
        if P.ndim == 1:
            P = P.reshape(1, -1)
        columns = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self._tree_path_lengths)(tree, P) for tree in self.trees
        )
        return np.column_stack(columns) if columns else np.zeros((len(P), 0))

    def anomaly_scores(self, P: Any) -> np.ndarray:
        """Scores 2^(-E(D)/c(psi)) in (0, 1]; higher means more anomalous."""
        start = time.perf_counter()
        depths = self.path_lengths(P)
        scores = scores_from_depths(depths.mean(axis=1), self.normalizer)
        add_log(
            f"Scored {len(scores)} rows with {len(self.trees)} trees "
            f"in {format_duration(time.perf_counter() - start)}",
            "debug",
        )
        return scores

    def depth_histogram(self) -> Dict[int, int]:
        """Number of leaves at each depth over the whole forest."""
        counts: Counter = Counter()
        for tree in self.trees:
            counts.update(leaf.depth for leaf in _iter_leaves(tree))
        return dict(sorted(counts.items()))

    @property
    def max_depth(self) -> int:
        return max((tree_depth(tree) for tree in self.trees), default=0)


@dataclass(eq=False)
class VoronoiForest(IsolationForestBase):
    """Forest of Voronoi-iTrees.

    Attributes:
        metric: Distance used for nearest-seed routing
    """

    metric: str = "tanimoto"

    def _tree_path_lengths(self, tree: VoronoiNode, P: np.ndarray) -> np.ndarray:
        out = np.empty(len(P))
        _route(tree, P, np.arange(len(P)), out, self.metric)
        return out


def _route(node: VoronoiNode, P: np.ndarray, idx: np.ndarray, out: np.ndarray, metric: str) -> None:
    if node.is_leaf:
        out[idx] = node.depth + adjustment_c(node.size)
        return
    nearest = np.argmin(distances_to_seeds(P[idx], node.seeds, metric), axis=1)
    for j, child in enumerate(node.children):
        selected = idx[nearest == j]
        if selected.size:
            _route(child, P, selected, out, metric)


def build_voronoi_tree(
    P: Any,
    b: int,
    depth_limit: int,
    metric: str,
    rng: RandomState = None,
    depth: int = 0,
) -> VoronoiNode:
    """Build one Voronoi-iTree.

    Recursion stops when ``depth >= depth_limit``, when fewer than ``b``
    points remain, or when all remaining points are identical. Otherwise
    ``b`` seeds are drawn without replacement and each point goes to the
    child of its nearest seed, ties to the lowest seed index.

    :param P: Rows of shape (n, m), n >= 1
    :param b: Branching factor (>= 2)
    :param depth_limit: Maximum depth
    :param metric: One of jaccard, ruzicka, tanimoto, euclidean
    :param rng: Seed or Generator
    :param depth: Depth of the node being built

    :return: Root :class:`VoronoiNode`
    """
    P = np.asarray(P)
    rng = as_generator(rng)
    n = len(P)
    if depth >= depth_limit or n < b or np.all(P == P[0]):
        return VoronoiNode(depth=depth, size=n)

    seeds = P[rng.choice(n, size=b, replace=False)].copy()
    nearest = np.argmin(distances_to_seeds(P, seeds, metric), axis=1)
    children = tuple(
        build_voronoi_tree(P[nearest == j], b, depth_limit, metric, rng, depth + 1)
        if np.any(nearest == j)
        else VoronoiNode(depth=depth + 1, size=0)
        for j in range(b)
    )
    return VoronoiNode(depth=depth, size=n, seeds=seeds, children=children)


def path_length(p: Any, tree: VoronoiNode, metric: str) -> float:
    """Depth of the leaf reached by ``p`` plus ``adjustment_c(leaf.size)``."""
    row = np.asarray(p).reshape(1, -1)
    node = tree
    while not node.is_leaf:
        j = int(np.argmin(distances_to_seeds(row, node.seeds, metric)[0]))
        node = node.children[j]
    return node.depth + adjustment_c(node.size)


def check_forest_params(t: int, psi: int, b: int) -> Tuple[int, int, int]:
    """Validate forest sizes: t >= 1 and 2 <= b <= psi."""
    t = validate_positive_int(t, "t")
    psi = validate_positive_int(psi, "psi")
    b = validate_positive_int(b, "b", minimum=2)
    if b > psi:
        raise ValidationError(f"b must be <= psi ({psi}), got {b}", field="b", value=b)
    return t, psi, b


def build_voronoi_forest(
    P: Any,
    t: int = 100,
    psi: int = 256,
    b: int = 2,
    metric: str = "tanimoto",
    rng: RandomState = None,
    normalize_log_b: bool = False,
    n_jobs: int = 1,
) -> VoronoiForest:
    """Build ``t`` Voronoi-iTrees on independent subsamples.

    Each tree sees ``min(psi, |P|)`` rows drawn without replacement. Trees
    get child generators spawned from ``rng``, so results do not depend on
    ``n_jobs``.

    :param P: Rows of shape (n, m), n >= 1
    :param t: Number of trees
    :param psi: Subsample size
    :param b: Branching factor
    :param metric: Routing distance
    :param rng: Seed, SeedSequence or Generator
    :param normalize_log_b: Normalize scores by log_b(psi) instead of c(psi)
    :param n_jobs: Worker threads

    :return: :class:`VoronoiForest`
    """
    P = validate_points(P, min_rows=1, field="P")
    t, psi, b = check_forest_params(t, psi, b)
    metric = validate_choice(metric, "metric", METRICS)
    psi_eff = min(psi, len(P))
    limit = depth_limit_for(psi_eff, b)

    def grow(gen: np.random.Generator) -> VoronoiNode:
        sample = gen.choice(len(P), size=psi_eff, replace=False)
        return build_voronoi_tree(P[sample], b, limit, metric, gen)

    start = time.perf_counter()
    trees = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(grow)(gen) for gen in spawn_generators(rng, t)
    )
    add_log(
        f"Built {t} Voronoi trees (psi={psi_eff}, b={b}, metric={metric}) "
        f"in {format_duration(time.perf_counter() - start)}",
        "debug",
    )
    return VoronoiForest(
        trees=list(trees),
        psi=psi_eff,
        b=b,
        depth_limit=limit,
        normalize_log_b=normalize_log_b,
        n_jobs=n_jobs,
        metric=metric,
    )


def anomaly_scores(P: Any, forest: IsolationForestBase) -> np.ndarray:
    """Anomaly score of every row of ``P`` under ``forest``."""
    return forest.anomaly_scores(P)

#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""RuzHash locality-sensitive hashing and the RzHash isolation forest.

RuzHash binarizes a preference vector against random thresholds ``tau``
and returns the smallest permuted index ``pi`` among the active
coordinates. Two vectors collide with probability ``1 - d_R`` (Ruzicka
distance). An aggregation vector ``beta`` folds the ``m`` buckets into
``b`` branches; the collision probability becomes ``1 + (1 - b) / b * d_R``.

RzHash-iTrees partition points by hashing them with fresh parameters at
every node: one pass over the rows, no distance evaluations.

A vector with no active coordinate hashes to :data:`EMPTY`. In trees the
empty bucket is an extra child, or is folded into branch 1 when ``beta``
is used.
"""
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from joblib import Parallel, delayed

from isoprefs.exceptions import ValidationError
from isoprefs.geometry import RandomState, as_generator, spawn_generators
from isoprefs.iso_logs import add_log, format_duration
from isoprefs.validation import (
    validate_points,
    validate_positive_int,
    validate_same_length,
)
from isoprefs.voronoi import (
    IsolationForestBase,
    adjustment_c,
    check_forest_params,
    depth_limit_for,
)

# Bucket of vectors with no coordinate above its threshold
EMPTY = 0


@dataclass(eq=False)
class RuzHashParams:
    """Parameters of one RuzHash function.

    Attributes:
        tau: m thresholds in [0, 1)
        pi: Permutation of 1..m
        beta: Optional aggregation vector with entries in 1..b
    """

    tau: np.ndarray
    pi: np.ndarray
    beta: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return int(self.tau.shape[0])


def sample_ruzhash_params(m: int, b: Optional[int] = None, rng: RandomState = None) -> RuzHashParams:
    """Draw fresh RuzHash parameters.

    :param m: Length of the preference vectors
    :param b: Number of aggregated branches, or None for no aggregation
    :param rng: Seed or Generator

    :return: :class:`RuzHashParams`
    """
    m = validate_positive_int(m, "m")
    gen = as_generator(rng)
    tau = gen.random(m)
    pi = gen.permutation(m) + 1
    beta = None
    if b is not None:
        b = validate_positive_int(b, "b")
        beta = gen.integers(1, b + 1, size=m)
    return RuzHashParams(tau=tau, pi=pi, beta=beta)


def ruzhash_rows(P: np.ndarray, params: RuzHashParams) -> np.ndarray:
    """Vectorized :func:`ruzhash` over the rows of ``P``."""
    P = np.asarray(P)
    ranks = np.where(P > params.tau, params.pi, params.m + 1)
    h = ranks.min(axis=1) if P.shape[1] else np.full(len(P), params.m + 1)
    return np.where(h > params.m, EMPTY, h).astype(np.int64)


def ruzhash_aggregated_rows(P: np.ndarray, params: RuzHashParams) -> np.ndarray:
    """Vectorized :func:`ruzhash_aggregated` over the rows of ``P``."""
    h = ruzhash_rows(P, params)
    return np.where(h == EMPTY, EMPTY, params.beta[np.maximum(h, 1) - 1]).astype(np.int64)


def ruzhash(p: Any, params: RuzHashParams) -> int:
    """Hash a preference vector: min of ``pi`` over the coordinates with p > tau.

    :param p: Vector of length m
    :param params: Hash parameters

    :return: An index in 1..m, or :data:`EMPTY`

    Example::

        params = RuzHashParams(tau=np.full(3, 0.5), pi=np.array([2, 3, 1]))
        ruzhash([0, 1, 0], params)  # 3
    """
    row = np.asarray(p, dtype=np.float64).reshape(1, -1)
    validate_same_length(row[0], params.tau)
    return int(ruzhash_rows(row, params)[0])


def ruzhash_aggregated(p: Any, params: RuzHashParams) -> int:
    """RuzHash followed by the aggregation ``beta``; :data:`EMPTY` propagates."""
    if params.beta is None:
        raise ValidationError("params carry no aggregation vector", field="beta")
    h = ruzhash(p, params)
    return EMPTY if h == EMPTY else int(params.beta[h - 1])


def estimate_collision(
    p: Any,
    q: Any,
    b: Optional[int] = None,
    trials: int = 10000,
    rng: RandomState = None,
) -> float:
    """Fraction of independent hash draws under which ``p`` and ``q`` collide.

    :param p: Preference vector
    :param q: Preference vector of the same length
    :param b: Aggregation branches, or None for plain RuzHash
    :param trials: Number of parameter draws
    :param rng: Seed or Generator

    :return: Collision frequency in [0, 1]
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    validate_same_length(p, q)
    trials = validate_positive_int(trials, "trials")
    m = len(p)
    gen = as_generator(rng)

    tau = gen.random((trials, m))
    pi = gen.permuted(np.tile(np.arange(1, m + 1), (trials, 1)), axis=1)
    sentinel = m + 1
    hp = np.where(p > tau, pi, sentinel).min(axis=1)
    hq = np.where(q > tau, pi, sentinel).min(axis=1)
    if b is not None:
        b = validate_positive_int(b, "b")
        beta = gen.integers(1, b + 1, size=(trials, m))
        rows = np.arange(trials)
        hp = np.where(hp == sentinel, EMPTY, beta[rows, np.minimum(hp, m) - 1])
        hq = np.where(hq == sentinel, EMPTY, beta[rows, np.minimum(hq, m) - 1])
    return float(np.mean(hp == hq))


@dataclass(eq=False)
class RzHashNode:
    """Node of an RzHash-iTree.

    Internal nodes keep their own hash parameters and a child per
    non-empty bucket; buckets that received no build point are virtual
    leaves of size 0.
    """

    depth: int
    size: int = 0
    params: Optional[RuzHashParams] = None
    children: Dict[int, "RzHashNode"] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.params is None


def _buckets(P: np.ndarray, params: RuzHashParams) -> np.ndarray:
    if params.beta is None:
        return ruzhash_rows(P, params)
    buckets = ruzhash_aggregated_rows(P, params)
    buckets[buckets == EMPTY] = 1
    return buckets


def build_rzhash_tree(
    P: Any,
    b: Optional[int],
    depth_limit: int,
    rng: RandomState = None,
    depth: int = 0,
) -> RzHashNode:
    """Build one RzHash-iTree.

    Recursion stops when ``depth >= depth_limit`` or fewer than ``b``
    points remain (fewer than 2 without aggregation). Otherwise fresh
    parameters are drawn and the points are split by bucket in one pass.

    :param P: Preference rows of shape (n, m), n >= 1
    :param b: Branching factor, or None for one child per bucket
    :param depth_limit: Maximum depth
    :param rng: Seed or Generator
    :param depth: Depth of the node being built

    :return: Root :class:`RzHashNode`
    """
    P = np.asarray(P)
    gen = as_generator(rng)
    n = len(P)
    min_split = 2 if b is None else b
    if depth >= depth_limit or n < min_split or P.shape[1] == 0:
        return RzHashNode(depth=depth, size=n)

    params = sample_ruzhash_params(P.shape[1], b, gen)
    buckets = _buckets(P, params)
    children = {
        int(bucket): build_rzhash_tree(P[buckets == bucket], b, depth_limit, gen, depth + 1)
        for bucket in np.unique(buckets)
    }
    return RzHashNode(depth=depth, size=n, params=params, children=children)


def rz_path_length(p: Any, tree: RzHashNode) -> float:
    """Depth of the leaf reached by ``p`` plus ``adjustment_c(leaf.size)``."""
    row = np.asarray(p, dtype=np.float64).reshape(1, -1)
    node = tree
    while not node.is_leaf:
        bucket = int(_buckets(row, node.params)[0])
        child = node.children.get(bucket)
        if child is None:
            return node.depth + 1.0
        node = child
    return node.depth + adjustment_c(node.size)


@dataclass(eq=False)
class RzHashForest(IsolationForestBase):
    """Forest of RzHash-iTrees.

    Attributes:
        aggregated: Whether trees fold buckets into ``b`` branches
    """

    aggregated: bool = True

    def _tree_path_lengths(self, tree: RzHashNode, P: np.ndarray) -> np.ndarray:
        out = np.empty(len(P))
        _route(tree, P, np.arange(len(P)), out)
        return out


def _route(node: RzHashNode, P: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = node.depth + adjustment_c(node.size)
        return
    buckets = _buckets(P[idx], node.params)
    for bucket in np.unique(buckets):
        selected = idx[buckets == bucket]
        child = node.children.get(int(bucket))
        if child is None:
            out[selected] = node.depth + 1.0
        else:
            _route(child, P, selected, out)


def build_rzhash_forest(
    P: Any,
    t: int = 100,
    psi: int = 256,
    b: Optional[int] = 2,
    rng: RandomState = None,
    normalize_log_b: bool = False,
    n_jobs: int = 1,
) -> RzHashForest:
    """Build ``t`` RzHash-iTrees on independent subsamples.

    :param P: Preference rows of shape (n, m), n >= 1
    :param t: Number of trees
    :param psi: Subsample size
    :param b: Branching factor, or None for un-aggregated trees (depth
        limit then follows binary trees, ceil(log2 psi))
    :param rng: Seed, SeedSequence or Generator
    :param normalize_log_b: Normalize scores by log_b(psi) instead of c(psi)
    :param n_jobs: Worker threads

    :return: :class:`RzHashForest`
    """
    P = validate_points(P, min_rows=1, field="P")
    branching = 2 if b is None else b
    t, psi, branching = check_forest_params(t, psi, branching)
    psi_eff = min(psi, len(P))
    limit = depth_limit_for(psi_eff, branching)

    def grow(gen: np.random.Generator) -> RzHashNode:
        sample = gen.choice(len(P), size=psi_eff, replace=False)
        return build_rzhash_tree(P[sample], b, limit, gen)

    start = time.perf_counter()
    trees = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(grow)(gen) for gen in spawn_generators(rng, t)
    )
    add_log(
        f"Built {t} RzHash trees (psi={psi_eff}, b={b}) "
        f"in {format_duration(time.perf_counter() - start)}",
        "debug",
    )
    return RzHashForest(
        trees=list(trees),
        psi=psi_eff,
        b=branching,
        depth_limit=limit,
        normalize_log_b=normalize_log_b,
        n_jobs=n_jobs,
        aggregated=b is not None,
    )

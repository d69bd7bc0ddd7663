#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Online isolation forest over a sliding buffer.

Each tree is an adaptive multi-resolution histogram. A node holds its
bin height ``h`` (points that crossed it) and its support ``R``, a box
containing every in-window point the current splits route to it. A leaf
at depth ``k`` splits once ``h`` reaches ``eta * 2**k``; an internal node
whose height falls below that threshold merges its subtree back into a
leaf.

Every processed point is learned by all trees and appended to a FIFO
buffer of length ``omega``; when the buffer overflows, its oldest point
is forgotten. Points in sparse regions end in shallow leaves and score
close to 1.

Example::

    from isoprefs.online import OnlineForest

    forest = OnlineForest(n_trees=32, omega=2048, eta=32, rng=0)
    scores = forest.process_batch(stream)
"""
import math
import time
from collections import Counter, deque
from typing import Any, Callable, Deque, Dict, Iterator, List, Optional, Tuple

import numpy as np

from isoprefs.config import OnlineConfig
from isoprefs.exceptions import IsoPrefsError, UnderflowViolationError, ValidationError
from isoprefs.geometry import RandomState, spawn_generators
from isoprefs.iso_logs import add_log, format_duration
from isoprefs.validation import validate_points, validate_positive_int


class OnlineNode:
    """Bin of an online isolation tree.

    Attributes:
        h: Bin height
        lo: Lower corner of the support, None until the first point
        hi: Upper corner of the support
        q: Split dimension (internal nodes)
        p: Split value (internal nodes)
        left: Child receiving x[q] < p
        right: Child receiving x[q] >= p
        k: Depth, root = 0
    """

    __slots__ = ("h", "lo", "hi", "q", "p", "left", "right", "k")

    def __init__(
        self,
        k: int = 0,
        h: int = 0,
        lo: Optional[np.ndarray] = None,
        hi: Optional[np.ndarray] = None,
    ) -> None:
        self.k = k
        self.h = h
        self.lo = lo
        self.hi = hi
        self.q: Optional[int] = None
        self.p: Optional[float] = None
        self.left: Optional["OnlineNode"] = None
        self.right: Optional["OnlineNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def support(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        if self.lo is None:
            return None
        return self.lo, self.hi

    def expand(self, x: np.ndarray) -> None:
        """Grow the support to the smallest box containing ``x``."""
        if self.lo is None:
            self.lo = x.copy()
            self.hi = x.copy()
        else:
            np.minimum(self.lo, x, out=self.lo)
            np.maximum(self.hi, x, out=self.hi)

    def route(self, x: np.ndarray) -> "OnlineNode":
        return self.left if x[self.q] < self.p else self.right

    def contains(self, x: np.ndarray) -> bool:
        return self.lo is not None and bool(np.all(self.lo <= x) and np.all(x <= self.hi))

    def __repr__(self) -> str:
        kind = "Leaf" if self.is_leaf else f"Split(q={self.q}, p={self.p:.4g})"
        return f"<OnlineNode k={self.k} h={self.h} {kind}>"


def iter_nodes(root: OnlineNode) -> Iterator[OnlineNode]:
    """All nodes of a tree, depth first."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)


def split_threshold(eta: int, k: int) -> int:
    """Bin height eta * 2**k at which a depth-k leaf splits."""
    return eta << k


def split_leaf(
    node: OnlineNode, rng: np.random.Generator, routed: Optional[np.ndarray] = None
) -> None:
    """Split a full leaf using synthetic points drawn from its support.

    ``h`` points are drawn uniformly from the support and partitioned by
    a random split; each child starts with the count and bounding box of
    its side (no support when its side is empty).

    :param routed: In-window points currently routed into ``node``; each
        child's support is grown to cover the ones sent to its side, the
        counts stay synthetic.
    """
    if not node.is_leaf or node.lo is None:
        raise ValidationError("only a leaf with a support can be split", field="node")
    d = len(node.lo)
    q = int(rng.integers(d))
    lo_q, hi_q = float(node.lo[q]), float(node.hi[q])
    p = rng.uniform(lo_q, hi_q) if hi_q > lo_q else lo_q
    synthetic = rng.uniform(node.lo, node.hi, size=(node.h, d))
    goes_left = synthetic[:, q] < p
    if routed is None:
        routed = np.empty((0, d))
    real_left = routed[:, q] < p

    def child(points: np.ndarray, real: np.ndarray) -> OnlineNode:
        covered = np.concatenate([points, real])
        if len(covered) == 0:
            return OnlineNode(k=node.k + 1)
        return OnlineNode(
            k=node.k + 1, h=len(points), lo=covered.min(axis=0), hi=covered.max(axis=0)
        )

    node.q, node.p = q, float(p)
    node.left = child(synthetic[goes_left], routed[real_left])
    node.right = child(synthetic[~goes_left], routed[~real_left])


def route_mask(X: np.ndarray, path: List[OnlineNode], target: OnlineNode) -> np.ndarray:
    """Rows of ``X`` that the splits along ``path`` send to ``target``."""
    mask = np.ones(len(X), dtype=bool)
    for parent, child in zip(path, path[1:] + [target]):
        if child is parent.left:
            mask &= X[:, parent.q] < parent.p
        else:
            mask &= X[:, parent.q] >= parent.p
    return mask


def merge_children(node: OnlineNode) -> None:
    """Turn an internal node back into a leaf spanning its children's supports."""
    supports = [c.support for c in (node.left, node.right) if c.support is not None]
    if supports:
        node.lo = np.min([s[0] for s in supports], axis=0)
        node.hi = np.max([s[1] for s in supports], axis=0)
    node.q = node.p = None
    node.left = node.right = None


def learn_point(
    x: np.ndarray,
    node: OnlineNode,
    eta: int,
    depth_cap: float,
    rng: np.random.Generator,
    window: Optional[Callable[[], np.ndarray]] = None,
) -> None:
    """Add ``x`` to every bin along its root-to-leaf path.

    The reached leaf splits when ``h >= eta * 2**k`` and one more level
    stays within ``depth_cap``.

    :param window: Returns the in-window points, called only on a split
        so the new children cover the ones routed into the leaf
    """
    path: List[OnlineNode] = []
    while True:
        node.h += 1
        node.expand(x)
        if node.is_leaf:
            if node.h >= split_threshold(eta, node.k) and node.k + 1 <= depth_cap:
                routed: Optional[np.ndarray] = None
                if window is not None:
                    X = window()
                    routed = X[route_mask(X, path, node)]
                split_leaf(node, rng, routed)
            return
        path.append(node)
        node = node.route(x)


def forget_point(x: np.ndarray, node: OnlineNode, eta: int) -> None:
    """Remove ``x`` from the bins along its current path.

    An internal node falling below ``eta * 2**k`` merges its subtree and
    the descent stops there. A route into an empty child continues into
    its sibling, so heights never become negative.

    :raises UnderflowViolationError: When forgetting on an empty tree
    """
    if node.h <= 0:
        raise UnderflowViolationError(depth=node.k)
    while True:
        node.h -= 1
        if node.is_leaf:
            return
        if node.h < split_threshold(eta, node.k):
            merge_children(node)
            return
        child = node.route(x)
        if child.h == 0:
            child = node.right if child is node.left else node.left
        node = child


def point_depth(x: np.ndarray, node: OnlineNode, eta: int) -> float:
    """Depth of the reached leaf plus max(0, log2(h / eta))."""
    while not node.is_leaf:
        node = node.route(x)
    extra = math.log2(node.h / eta) if node.h > eta else 0.0
    return node.k + extra


def depth_bounds(omega: int, eta: int) -> Tuple[int, int]:
    """Average and worst-case depth of an online tree.

    :return: (floor(log2(omega / eta) / 2 + 1), floor(log2((omega + 1) / eta) + 1))

    Example::

        depth_bounds(2048, 32)  # (4, 7)
    """
    eta = validate_positive_int(eta, "eta")
    omega = validate_positive_int(omega, "omega", minimum=eta)
    average = math.floor(0.5 * math.log2(omega / eta) + 1)
    worst = math.floor(math.log2((omega + 1) / eta) + 1)
    return average, worst


class ShadowOracle:
    """Reference list of the in-window points routed through every node.

    The lists are rebuilt from the window by routing each point with the
    tree's current splits, so points learned before a split are listed
    on the children they now reach. Every listed point must lie in the
    node's support.
    """

    def __init__(self) -> None:
        self.window: Dict[int, np.ndarray] = {}

    def add(self, point_id: int, x: np.ndarray) -> None:
        self.window[point_id] = x

    def drop(self, point_id: int) -> None:
        self.window.pop(point_id, None)

    def routed_lists(self, root: OnlineNode) -> Dict[OnlineNode, List[int]]:
        """Ids of the in-window points each node routes, root to leaf."""
        lists: Dict[OnlineNode, List[int]] = {}
        for point_id, x in self.window.items():
            node = root
            while True:
                lists.setdefault(node, []).append(point_id)
                if node.is_leaf:
                    break
                node = node.route(x)
        return lists

    def violations(self, root: OnlineNode) -> List[str]:
        """Support violations of the in-window points of one tree."""
        found = []
        for node, ids in self.routed_lists(root).items():
            for point_id in ids:
                if not node.contains(self.window[point_id]):
                    found.append(f"point {point_id} outside support of {node!r}")
        return found


class OnlineForest:
    """Forest of online isolation trees over a sliding buffer.

    Attributes:
        trees: Tree roots
        eta: Max leaf samples
        omega: Buffer length
        buffer: The ``omega`` most recent points
        depth_cap: log2(omega / eta), the maximum node depth

    Example::

        forest = OnlineForest(n_trees=32, omega=2048, eta=32, rng=0)
        for x in stream:
            score = forest.process(x)
    """

    def __init__(
        self,
        n_trees: int = 32,
        omega: int = 2048,
        eta: int = 32,
        rng: RandomState = None,
        debug: bool = False,
        shadow: bool = False,
    ) -> None:
        """Initialize an empty forest.

        :param n_trees: Number of trees
        :param omega: Buffer length (>= eta)
        :param eta: Max leaf samples (>= 1)
        :param rng: Seed, SeedSequence or Generator
        :param debug: Check structural invariants after every step
        :param shadow: Keep a :class:`ShadowOracle` over the buffer
        """
        self.eta = validate_positive_int(eta, "eta")
        self.omega = validate_positive_int(omega, "omega", minimum=self.eta)
        n_trees = validate_positive_int(n_trees, "n_trees")
        self.depth_cap = math.log2(self.omega / self.eta)
        self.trees = [OnlineNode() for _ in range(n_trees)]
        self.rngs = spawn_generators(rng, n_trees)
        self.buffer: Deque[Tuple[int, np.ndarray]] = deque()
        self.debug = debug
        self.oracle = ShadowOracle() if shadow else None
        self.dim: Optional[int] = None
        self.processed = 0
        self._window: Optional[np.ndarray] = None

    @classmethod
    def from_config(cls, config: OnlineConfig, rng: RandomState = None) -> "OnlineForest":
        return cls(
            n_trees=config.n_trees,
            omega=config.omega,
            eta=config.eta,
            rng=rng,
            debug=config.debug,
        )

    @property
    def normalizer(self) -> float:
        """c(omega, eta) = log2(omega / eta), 1 when omega = eta."""
        return self.depth_cap if self.depth_cap > 0 else 1.0

    def _check_point(self, x: Any) -> np.ndarray:
        row = np.asarray(x, dtype=np.float64).reshape(-1)
        if self.dim is None:
            validate_points(row.reshape(1, -1), field="x")
            self.dim = len(row)
        elif len(row) != self.dim:
            raise ValidationError(
                f"point has dimension {len(row)}, forest expects {self.dim}", field="x"
            )
        elif not np.all(np.isfinite(row)):
            raise ValidationError("point has non-finite coordinates", field="x")
        return row

    def window_points(self) -> np.ndarray:
        """The buffered points as an (n, d) array, cached until the buffer changes."""
        if self._window is None:
            self._window = np.array([row for _, row in self.buffer])
        return self._window

    def learn(self, x: Any) -> None:
        """Learn ``x`` in every tree and forget the oldest point on overflow."""
        row = self._check_point(x)
        point_id = self.processed
        self.processed += 1
        self.buffer.append((point_id, row))
        self._window = None
        if self.oracle is not None:
            self.oracle.add(point_id, row)
        for tree, gen in zip(self.trees, self.rngs):
            learn_point(row, tree, self.eta, self.depth_cap, gen, self.window_points)
        if len(self.buffer) > self.omega:
            old_id, old = self.buffer.popleft()
            self._window = None
            for tree in self.trees:
                forget_point(old, tree, self.eta)
            if self.oracle is not None:
                self.oracle.drop(old_id)
        if self.debug:
            problems = self.check_invariants()
            if problems:
                add_log(f"Online forest invariant violated: {problems[0]}", "error")
                raise IsoPrefsError("runtime", problems[0])

    def score(self, x: Any) -> float:
        """Score ``x`` against the current trees without learning it."""
        row = np.asarray(x, dtype=np.float64).reshape(-1)
        mean_depth = sum(point_depth(row, tree, self.eta) for tree in self.trees) / len(self.trees)
        return 2.0 ** (-mean_depth / self.normalizer)

    def process(self, x: Any) -> float:
        """Learn ``x``, update the buffer, then return its score in (0, 1]."""
        self.learn(x)
        return self.score(x)

    def process_batch(self, X: Any) -> np.ndarray:
        """Process the rows of ``X`` in order and return their scores."""
        X = validate_points(X, field="X")
        start = time.perf_counter()
        scores = np.array([self.process(row) for row in X])
        add_log(
            f"Processed {len(X)} points with {len(self.trees)} online trees "
            f"in {format_duration(time.perf_counter() - start)}",
            "debug",
        )
        return scores

    def check_invariants(self) -> List[str]:
        """Return every structural invariant violation, empty when consistent.

        Checks mass conservation, the depth cap, support ordering, the
        root height against the buffer and, with a shadow oracle, support
        containment.
        """
        problems: List[str] = []
        for i, tree in enumerate(self.trees):
            if tree.h != len(self.buffer):
                problems.append(f"tree {i}: root h={tree.h} != buffer {len(self.buffer)}")
            for node in iter_nodes(tree):
                if node.h < 0:
                    problems.append(f"tree {i}: negative height at {node!r}")
                if node.k > self.depth_cap:
                    problems.append(f"tree {i}: {node!r} deeper than {self.depth_cap}")
                if node.lo is not None and np.any(node.lo > node.hi):
                    problems.append(f"tree {i}: unordered support at {node!r}")
                if not node.is_leaf and node.h != node.left.h + node.right.h:
                    problems.append(
                        f"tree {i}: h={node.h} != {node.left.h} + {node.right.h} at {node!r}"
                    )
            if self.oracle is not None:
                problems.extend(f"tree {i}: {v}" for v in self.oracle.violations(tree))
        return problems

    def node_count(self) -> int:
        return sum(1 for tree in self.trees for _ in iter_nodes(tree))

    def depth_histogram(self) -> Dict[int, int]:
        """Number of leaves at each depth over the whole forest."""
        counts: Counter = Counter(
            node.k for tree in self.trees for node in iter_nodes(tree) if node.is_leaf
        )
        return dict(sorted(counts.items()))

    @property
    def max_depth(self) -> int:
        return max(node.k for tree in self.trees for node in iter_nodes(tree))

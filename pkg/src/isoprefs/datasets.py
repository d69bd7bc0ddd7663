#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Seeded synthetic benchmark generators.

* :func:`generate_primitive_2d` - lines and circles in the unit square
  with as many uniform anomalies as genuine points;
* :func:`generate_surface_grid` - smooth range images with an optional pit;
* :func:`generate_stream` - Gaussian mixture streams with uniform
  anomalies and optional drift.

All generators draw from a single ``numpy.random.default_rng(seed)``, so a
fixed seed gives identical output.

Canonical geometry:
    stairK: K segments of length 1/ceil(K/2), alternately horizontal and
    vertical, climbing from the origin. starK: K segments of length 1
    through (0.5, 0.5) at angles i*pi/K. circleK: K circles of radius 0.15
    with centres on a circle of radius 0.35 around (0.5, 0.5).
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from isoprefs.exceptions import ValidationError
from isoprefs.geometry import LabeledDataset
from isoprefs.sliding import RangeImage
from isoprefs.validation import (
    validate_choice,
    validate_fraction,
    validate_positive_float,
    validate_positive_int,
    validate_seed,
)

PRIMITIVE_KINDS = ("stair3", "stair4", "star5", "star11", "circle3", "circle4", "circle5")
SURFACE_SHAPES = ("plane", "paraboloid", "sphere_cap")
POINTS_PER_STRUCTURE = 50
UNBALANCED_COUNTS = (70, 50, 30)
DEFAULT_SIGMA = 0.02
CIRCLE_RADIUS = 0.15

# (mean vector, covariance scale, weight)
Cluster = Tuple[Sequence[float], float, float]


def _structure_counts(kind: str, structures: int) -> List[int]:
    if kind in ("stair3", "circle3"):
        return list(UNBALANCED_COUNTS)
    return [POINTS_PER_STRUCTURE] * structures


def _stair_segments(count: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    length = 1.0 / math.ceil(count / 2)
    corner = np.zeros(2)
    segments = []
    for i in range(count):
        step = np.array([length, 0.0]) if i % 2 == 0 else np.array([0.0, length])
        segments.append((corner.copy(), corner + step))
        corner = corner + step
    return segments


def _star_segments(count: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    centre = np.array([0.5, 0.5])
    segments = []
    for i in range(count):
        angle = math.pi * i / count
        half = 0.5 * np.array([math.cos(angle), math.sin(angle)])
        segments.append((centre - half, centre + half))
    return segments


def generate_primitive_2d(
    kind: str,
    seed: Optional[int] = None,
    sigma: float = DEFAULT_SIGMA,
) -> LabeledDataset:
    """Generate a 2-D dataset of noisy lines or circles plus anomalies.

    Genuine points are spread uniformly along each structure and
    perturbed by isotropic Gaussian noise. Anomalies, exactly as many as
    genuine points, are uniform over the genuine bounding box.

    :param kind: One of stair3, stair4, star5, star11, circle3, circle4, circle5
    :param seed: Random seed
    :param sigma: Noise standard deviation (default: 0.02)

    :return: :class:`LabeledDataset` with genuine points first

    Example::

        data = generate_primitive_2d("star5", seed=7)
        len(data), data.anomaly_fraction  # (500, 0.5)
    """
    kind = validate_choice(kind, "kind", PRIMITIVE_KINDS)
    sigma = validate_positive_float(sigma, "sigma")
    rng = np.random.default_rng(validate_seed(seed))
    structures = int(kind.lstrip("abcdefghijklmnopqrstuvwxyz"))
    counts = _structure_counts(kind, structures)

    genuine = []
    structure_ids = []
    if kind.startswith("circle"):
        for sid, count in enumerate(counts):
            angle = 2 * math.pi * sid / structures
            centre = 0.5 + 0.35 * np.array([math.cos(angle), math.sin(angle)])
            theta = rng.uniform(0.0, 2 * math.pi, size=count)
            ring = centre + CIRCLE_RADIUS * np.column_stack([np.cos(theta), np.sin(theta)])
            genuine.append(ring)
            structure_ids.extend([sid] * count)
    else:
        segments = _stair_segments(structures) if kind.startswith("stair") else _star_segments(structures)
        for sid, ((a, b), count) in enumerate(zip(segments, counts)):
            u = rng.uniform(0.0, 1.0, size=(count, 1))
            genuine.append(a + u * (b - a))
            structure_ids.extend([sid] * count)

    inliers = np.vstack(genuine)
    inliers = inliers + rng.normal(0.0, sigma, size=inliers.shape)
    lo, hi = inliers.min(axis=0), inliers.max(axis=0)
    outliers = rng.uniform(lo, hi, size=inliers.shape)

    n = len(inliers)
    return LabeledDataset(
        points=np.vstack([inliers, outliers]),
        labels=np.concatenate([np.zeros(n, dtype=np.int64), np.ones(n, dtype=np.int64)]),
        structure_id=np.concatenate([np.asarray(structure_ids), np.full(n, -1)]),
        noise_sigma=sigma,
    )


def _surface_height(shape: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if shape == "plane":
        return 0.2 * x + 0.1 * y
    if shape == "paraboloid":
        return 0.5 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)
    # cap of a unit sphere centred below the grid
    return np.sqrt(1.0 - (x - 0.5) ** 2 - (y - 0.5) ** 2) - 0.8


def generate_surface_grid(
    shape: str,
    side: int,
    sigma: float = 0.001,
    defect: Optional[Tuple[Tuple[int, int], float, float]] = None,
    seed: Optional[int] = None,
) -> RangeImage:
    """Generate a square range image of a smooth surface.

    The surface is sampled over the unit square on a ``side`` x ``side``
    grid with Gaussian noise on z. A defect ``((row, col), radius_px,
    depth)`` lowers every pixel within ``radius_px`` of the centre by
    ``depth * sigma`` and marks it in the ground-truth mask.

    :param shape: plane, paraboloid or sphere_cap
    :param side: Image side in pixels (>= 16)
    :param sigma: z-noise standard deviation
    :param defect: Optional pit as (centre, radius in pixels, depth in sigmas)
    :param seed: Random seed

    :return: :class:`RangeImage` with all pixels valid
    """
    shape = validate_choice(shape, "shape", SURFACE_SHAPES)
    side = validate_positive_int(side, "side", minimum=16)
    sigma = validate_positive_float(sigma, "sigma")
    rng = np.random.default_rng(validate_seed(seed))

    grid = np.linspace(0.0, 1.0, side)
    x, y = np.meshgrid(grid, grid)
    z = _surface_height(shape, x, y) + rng.normal(0.0, sigma, size=x.shape)
    gt_mask = np.zeros((side, side), dtype=bool)
    if defect is not None:
        (row, col), radius, depth = defect
        radius = validate_positive_float(radius, "radius")
        depth = validate_positive_float(depth, "depth", allow_zero=True)
        rows, cols = np.mgrid[0:side, 0:side]
        gt_mask = (rows - row) ** 2 + (cols - col) ** 2 <= radius**2
        z = np.where(gt_mask, z - depth * sigma, z)
    return RangeImage(
        xyz=np.stack([x, y, z], axis=-1),
        valid=np.ones((side, side), dtype=bool),
        gt_mask=gt_mask,
    )


@dataclass
class StreamSpec:
    """Description of a synthetic stream.

    Attributes:
        n: Total number of points
        d: Dimension
        clusters: (mean, covariance scale, weight) of each genuine component
        anomaly_rate: Fraction of uniform anomalies, in [0, 0.5)
        drift: Optional (time index, new clusters) regime changes
    """

    n: int
    d: int
    clusters: List[Cluster]
    anomaly_rate: float = 0.0
    drift: List[Tuple[int, List[Cluster]]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.n = validate_positive_int(self.n, "n")
        self.d = validate_positive_int(self.d, "d")
        self.anomaly_rate = validate_fraction(self.anomaly_rate, "anomaly_rate", upper=0.5)
        for clusters in [self.clusters] + [c for _, c in self.drift]:
            self._check_clusters(clusters)
        for index, _ in self.drift:
            if not 0 <= index < self.n:
                raise ValidationError("drift index outside the stream", field="drift", value=index)

    def _check_clusters(self, clusters: List[Cluster]) -> None:
        if not clusters:
            raise ValidationError("at least one cluster is required", field="clusters")
        weights = [w for _, _, w in clusters]
        if any(w < 0 for w in weights) or not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
            raise ValidationError("cluster weights must sum to 1", field="clusters", value=weights)
        for mean, scale, _ in clusters:
            if len(mean) != self.d:
                raise ValidationError(
                    f"cluster mean has dimension {len(mean)}, expected {self.d}", field="clusters"
                )
            validate_positive_float(scale, "scale")

    def regimes(self) -> List[Tuple[int, List[Cluster]]]:
        """Cluster sets with their start index, in stream order."""
        return [(0, self.clusters)] + sorted(self.drift, key=lambda item: item[0])


def two_gaussian_stream_spec(n: int = 10000, d: int = 4, anomaly_rate: float = 0.02) -> StreamSpec:
    """Two well-separated unit Gaussians with uniform anomalies."""
    return StreamSpec(
        n=n,
        d=d,
        clusters=[([0.0] * d, 1.0, 0.5), ([6.0] * d, 1.0, 0.5)],
        anomaly_rate=anomaly_rate,
    )


def generate_stream(spec: StreamSpec, seed: Optional[int] = None) -> LabeledDataset:
    """Draw an ordered stream from ``spec``.

    Exactly ``round(anomaly_rate * n)`` positions, chosen at random, hold
    anomalies uniform over the bounding box of every cluster (mean +/- 3
    scales) inflated by a quarter of its extent on each side. Genuine
    points follow the cluster set active at their index.

    :param spec: Stream description
    :param seed: Random seed

    :return: :class:`LabeledDataset` in stream order
    """
    rng = np.random.default_rng(validate_seed(seed))
    n, d = spec.n, spec.d
    labels = np.zeros(n, dtype=np.int64)
    labels[rng.choice(n, size=int(round(spec.anomaly_rate * n)), replace=False)] = 1

    all_clusters = [c for _, clusters in spec.regimes() for c in clusters]
    lo = np.min([np.asarray(m) - 3 * s for m, s, _ in all_clusters], axis=0)
    hi = np.max([np.asarray(m) + 3 * s for m, s, _ in all_clusters], axis=0)
    pad = 0.25 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    points = np.empty((n, d))
    structure = np.full(n, -1, dtype=np.int64)
    regimes = spec.regimes()
    for r, (start, clusters) in enumerate(regimes):
        stop = regimes[r + 1][0] if r + 1 < len(regimes) else n
        idx = np.arange(start, stop)
        weights = np.array([w for _, _, w in clusters])
        component = rng.choice(len(clusters), size=len(idx), p=weights)
        means = np.array([m for m, _, _ in clusters], dtype=np.float64)
        scales = np.array([s for _, s, _ in clusters])
        points[idx] = means[component] + scales[component, None] * rng.normal(size=(len(idx), d))
        structure[idx] = component

    anomalies = labels == 1
    points[anomalies] = rng.uniform(lo, hi, size=(int(anomalies.sum()), d))
    structure[anomalies] = -1
    return LabeledDataset(points=points, labels=labels, structure_id=structure, noise_sigma=1.0)

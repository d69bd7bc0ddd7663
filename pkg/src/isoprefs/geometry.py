#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Parametric model families, minimal-sample fitting and hypothesis sampling.

Every family knows how to fit a model exactly through a minimal sample set
and how to measure the residual of a point with respect to a model.
:func:`sample_models` draws random minimal sets RanSaC-style and fits one
model per set; these hypotheses feed the preference embedding.

Families:
    * ``line2d``: 2 points, theta = (a, b, c), ax + by + c = 0, (a, b) unit
    * ``circle2d``: 3 points, theta = (cx, cy, r)
    * ``plane3d``: 3 points, theta = (a, b, c, d), unit normal
    * ``sphere3d``: 4 points, theta = (cx, cy, cz, r)
    * ``quadric3d``: 9 points, theta = unit coefficients of
      x², y², z², xy, xz, yz, x, y, z, 1

Example::

    from isoprefs.geometry import LINE2D, fit_minimal, residual

    line = fit_minimal(LINE2D, [(0, 0), (1, 1)])
    residual(line, (1, 0))  # 0.7071...
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from isoprefs.exceptions import DegenerateSampleError, ValidationError
from isoprefs.iso_logs import add_log
from isoprefs.retry import DEFAULT_CONFIG, ResampleConfig, with_resample
from isoprefs.validation import validate_points, validate_positive_int

# Tolerance of the degeneracy tests on determinants and ranks
DEGENERACY_TOL = 1e-9

RandomState = Union[None, int, np.random.Generator, np.random.SeedSequence]


def as_generator(rng: RandomState) -> np.random.Generator:
    """Return a numpy Generator for a seed, a SeedSequence or a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def spawn_generators(rng: RandomState, n: int) -> List[np.random.Generator]:
    """Derive ``n`` independent child generators from one random state.

    Children depend only on the parent state and their position, so work
    scheduled on them gives the same result in any execution order.
    """
    if isinstance(rng, np.random.SeedSequence):
        seq = rng
    elif isinstance(rng, np.random.Generator):
        seq = np.random.SeedSequence(int(rng.integers(2**63 - 1)))
    else:
        seq = np.random.SeedSequence(rng)
    return [np.random.default_rng(child) for child in seq.spawn(n)]


@dataclass(frozen=True)
class ModelFamily:
    """A parametric model class with its minimal sample size.

    Attributes:
        kind: Family name (line2d, circle2d, plane3d, sphere3d, quadric3d)
        min_sample_size: Points needed to constrain one model
        ambient_dim: Dimension of the points the family applies to
    """

    kind: str
    min_sample_size: int
    ambient_dim: int

    def __str__(self) -> str:
        return self.kind


LINE2D = ModelFamily("line2d", 2, 2)
CIRCLE2D = ModelFamily("circle2d", 3, 2)
PLANE3D = ModelFamily("plane3d", 3, 3)
SPHERE3D = ModelFamily("sphere3d", 4, 3)
QUADRIC3D = ModelFamily("quadric3d", 9, 3)

FAMILIES: Dict[str, ModelFamily] = {
    f.kind: f for f in (LINE2D, CIRCLE2D, PLANE3D, SPHERE3D, QUADRIC3D)
}
_SHORT_NAMES = {
    "line": LINE2D,
    "circle": CIRCLE2D,
    "plane": PLANE3D,
    "sphere": SPHERE3D,
    "quadric": QUADRIC3D,
}


def family_by_name(name: Union[str, ModelFamily]) -> ModelFamily:
    """Look up a model family by kind or short name.

    :param name: ``line``, ``circle``, ``plane``, ``sphere``, ``quadric`` or
        the full kind name such as ``line2d``

    :return: The matching :class:`ModelFamily`

    :raises ValidationError: For an unknown name
    """
    if isinstance(name, ModelFamily):
        return name
    key = str(name).strip().lower()
    family = FAMILIES.get(key) or _SHORT_NAMES.get(key)
    if family is None:
        raise ValidationError(
            message=f"Unknown model family '{name}'. "
            f"Use one of {', '.join(sorted(FAMILIES) + sorted(_SHORT_NAMES))}",
            field="family",
            value=name,
        )
    return family


@dataclass(frozen=True, eq=False)
class ModelInstance:
    """A fitted model of a declared family.

    Attributes:
        family: The model family
        theta: Parameter vector (see module docstring for the layout)
    """

    family: ModelFamily
    theta: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        object.__setattr__(self, "theta", theta)
        kind = self.family.kind
        if kind == "line2d" and abs(np.hypot(theta[0], theta[1]) - 1.0) > 1e-9:
            raise ValidationError("line normal must have unit norm", field="theta")
        if kind == "plane3d" and abs(np.linalg.norm(theta[:3]) - 1.0) > 1e-9:
            raise ValidationError("plane normal must have unit norm", field="theta")
        if kind in ("circle2d", "sphere3d") and not theta[-1] > 0:
            raise ValidationError("radius must be positive", field="theta")
        if kind == "quadric3d" and abs(np.linalg.norm(theta) - 1.0) > 1e-9:
            raise ValidationError(
                "quadric coefficients must have unit norm", field="theta"
            )

    def residual(self, x: Sequence[float]) -> float:
        """Residual of a single point, see :func:`residual`."""
        return residual(self, x)


@dataclass
class LabeledDataset:
    """Points with ground-truth anomaly labels.

    Attributes:
        points: Array of shape (n, d)
        labels: Array of n flags, 0 genuine and 1 anomaly
        structure_id: Optional genuine structure index per point, -1 for anomalies
        noise_sigma: Noise standard deviation used by the generator
    """

    points: np.ndarray
    labels: np.ndarray
    structure_id: Optional[np.ndarray] = None
    noise_sigma: float = 0.02

    def __post_init__(self) -> None:
        self.points = validate_points(self.points, min_dim=1)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.labels) != len(self.points):
            raise ValidationError(
                message=f"{len(self.points)} points but {len(self.labels)} labels",
                field="labels",
            )
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ValidationError("labels must be 0 or 1", field="labels")
        if self.structure_id is not None:
            self.structure_id = np.asarray(self.structure_id, dtype=np.int64).reshape(-1)
            if len(self.structure_id) != len(self.points):
                raise ValidationError(
                    "structure ids and points differ in length", field="structure_id"
                )
            if np.any(self.structure_id[self.labels == 1] != -1):
                raise ValidationError(
                    "anomalies must have structure id -1", field="structure_id"
                )
        if not self.noise_sigma > 0:
            raise ValidationError(
                "noise_sigma must be positive", field="noise_sigma", value=self.noise_sigma
            )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        """Ambient dimension d."""
        return int(self.points.shape[1])

    @property
    def anomaly_fraction(self) -> float:
        """Fraction of points labelled as anomalies."""
        if len(self.labels) == 0:
            return 0.0
        return float(np.mean(self.labels))


def _check_sample(family: ModelFamily, sample: Any) -> np.ndarray:
    pts = np.asarray(sample, dtype=np.float64)
    if pts.shape != (family.min_sample_size, family.ambient_dim):
        raise ValidationError(
            message=f"{family.kind} needs {family.min_sample_size} points of "
            f"dimension {family.ambient_dim}, got shape {pts.shape}",
            field="sample",
        )
    return pts


def _quadric_monomials(X: np.ndarray) -> np.ndarray:
    x, y, z = X[:, 0], X[:, 1], X[:, 2]
    one = np.ones_like(x)
    return np.stack([x * x, y * y, z * z, x * y, x * z, y * z, x, y, z, one], axis=1)


def _quadric_gradients(X: np.ndarray) -> List[np.ndarray]:
    x, y, z = X[:, 0], X[:, 1], X[:, 2]
    zero, one = np.zeros_like(x), np.ones_like(x)
    dx = np.stack([2 * x, zero, zero, y, z, zero, one, zero, zero, zero], axis=1)
    dy = np.stack([zero, 2 * y, zero, x, zero, z, zero, one, zero, zero], axis=1)
    dz = np.stack([zero, zero, 2 * z, zero, x, y, zero, zero, one, zero], axis=1)
    return [dx, dy, dz]


def fit_minimal(family: ModelFamily, sample: Any) -> ModelInstance:
    """Fit the unique model of ``family`` through a minimal sample set.

    :param family: The model family
    :param sample: ``family.min_sample_size`` points of dimension
        ``family.ambient_dim``

    :return: A :class:`ModelInstance` interpolating every sample point

    :raises DegenerateSampleError: If the sample does not constrain a model
    :raises ValidationError: If the sample has the wrong shape

    Example::

        circle = fit_minimal(CIRCLE2D, [(1, 0), (0, 1), (-1, 0)])
        circle.theta  # array([0., 0., 1.])
    """
    pts = _check_sample(family, sample)
    kind = family.kind

    if kind == "line2d":
        direction = pts[1] - pts[0]
        length = np.hypot(direction[0], direction[1])
        if length < DEGENERACY_TOL:
            raise DegenerateSampleError("coincident points", family=kind)
        normal = np.array([-direction[1], direction[0]]) / length
        return ModelInstance(family, np.append(normal, -normal @ pts[0]))

    if kind == "plane3d":
        normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        norm = np.linalg.norm(normal)
        if norm < DEGENERACY_TOL:
            raise DegenerateSampleError("collinear points", family=kind)
        normal = normal / norm
        return ModelInstance(family, np.append(normal, -normal @ pts[0]))

    if kind in ("circle2d", "sphere3d"):
        A = 2.0 * (pts[1:] - pts[0])
        if abs(np.linalg.det(A)) < DEGENERACY_TOL:
            what = "collinear" if kind == "circle2d" else "coplanar"
            raise DegenerateSampleError(f"{what} points", family=kind)
        rhs = np.sum(pts[1:] ** 2, axis=1) - np.sum(pts[0] ** 2)
        center = np.linalg.solve(A, rhs)
        radius = float(np.linalg.norm(pts[0] - center))
        if radius < DEGENERACY_TOL:
            raise DegenerateSampleError("zero radius", family=kind)
        return ModelInstance(family, np.append(center, radius))

    # quadric3d: null space of the 9x10 design matrix
    design = _quadric_monomials(pts)
    _, singular, vt = np.linalg.svd(design)
    if singular[0] == 0 or singular[-1] / singular[0] < DEGENERACY_TOL:
        raise DegenerateSampleError("rank-deficient sample", family=kind)
    coef = vt[-1]
    return ModelInstance(family, coef / np.linalg.norm(coef))


def residuals(models: Sequence[ModelInstance], X: Any) -> np.ndarray:
    """Residuals of every point with respect to every model.

    :param models: Models of one family
    :param X: Points, shape (n, d)

    :return: Array of shape (n, m); column i holds residuals to ``models[i]``

    :raises ValidationError: If the models mix families or X has the wrong dimension
    """
    if len(models) == 0:
        pts = np.asarray(X, dtype=np.float64)
        return np.zeros((pts.shape[0] if pts.ndim == 2 else 0, 0))
    family = models[0].family
    if any(mdl.family != family for mdl in models):
        raise ValidationError("models must share one family", field="models")
    X = validate_points(X, dim=family.ambient_dim)
    theta = np.stack([mdl.theta for mdl in models])
    kind = family.kind

    if kind in ("line2d", "plane3d"):
        d = family.ambient_dim
        return np.abs(X @ theta[:, :d].T + theta[:, d])

    if kind in ("circle2d", "sphere3d"):
        d = family.ambient_dim
        sq = np.zeros((X.shape[0], theta.shape[0]))
        for j in range(d):
            sq += (X[:, j : j + 1] - theta[:, j]) ** 2
        return np.abs(np.sqrt(sq) - theta[:, d])

    values = _quadric_monomials(X) @ theta.T
    grad_sq = sum((g @ theta.T) ** 2 for g in _quadric_gradients(X))
    grad = np.sqrt(np.maximum(grad_sq, 1e-24))
    return np.abs(values) / grad


def residual(model: ModelInstance, x: Sequence[float]) -> float:
    """Residual of one point with respect to one model.

    Orthogonal distance for lines and planes, ``| ||x - c|| - r |`` for
    circles and spheres, first-order Taubin distance for quadrics.

    :param model: The fitted model
    :param x: A point of dimension ``model.family.ambient_dim``

    :return: Non-negative residual, 0 iff ``x`` lies on the model
    """
    return float(residuals([model], np.asarray(x, dtype=np.float64).reshape(1, -1))[0, 0])


def sample_models(
    data: Union[LabeledDataset, np.ndarray],
    family: ModelFamily,
    m: int,
    rng_seed: RandomState = None,
    locality: Optional[Sequence[int]] = None,
    config: Optional[ResampleConfig] = None,
) -> List[ModelInstance]:
    """Sample ``m`` model hypotheses from random minimal sample sets.

    Each hypothesis is fitted on ``family.min_sample_size`` points drawn
    uniformly without replacement, from ``locality`` when given. Degenerate
    draws are redrawn; more than 100·m consecutive degenerate draws raise.

    :param data: Dataset or array of shape (n, d)
    :param family: Model family
    :param m: Number of models
    :param rng_seed: Seed, SeedSequence or Generator
    :param locality: Optional indices restricting the draws
    :param config: Redraw configuration

    :return: List of exactly ``m`` models

    :raises SamplingExhaustedError: On pathological input
    :raises ValidationError: If there are too few points to draw from
    """
    m = validate_positive_int(m, "m", minimum=0)
    X = data.points if isinstance(data, LabeledDataset) else validate_points(data)
    if X.shape[1] != family.ambient_dim:
        raise ValidationError(
            message=f"{family.kind} needs dimension {family.ambient_dim}, got {X.shape[1]}",
            field="data",
        )
    pool = np.arange(len(X)) if locality is None else np.asarray(locality, dtype=np.int64)
    if len(pool) < family.min_sample_size:
        raise ValidationError(
            message=f"need at least {family.min_sample_size} points to sample "
            f"{family.kind} models, got {len(pool)}",
            field="locality" if locality is not None else "data",
        )
    if locality is not None and (pool.min() < 0 or pool.max() >= len(X)):
        raise ValidationError("locality indices out of range", field="locality")

    rng = as_generator(rng_seed)
    retry_config = config or DEFAULT_CONFIG
    redraws: List[BaseException] = []

    @with_resample(
        retry_config.budget(m),
        family=family.kind,
        config=retry_config,
        on_retry=lambda attempt, e: redraws.append(e),
    )
    def draw() -> ModelInstance:
        idx = rng.choice(pool, size=family.min_sample_size, replace=False)
        return fit_minimal(family, X[idx])

    models = [draw() for _ in range(m)]
    if redraws:
        add_log(f"Redrew {len(redraws)} degenerate {family.kind} samples for {m} models", "debug")
    return models


def fit_plane_lstsq(points: Any) -> ModelInstance:
    """Total least-squares plane through a 3-D point set.

    :param points: Array of shape (n, 3), n >= 3

    :return: A ``plane3d`` model

    :raises DegenerateSampleError: If the points are collinear
    """
    X = validate_points(points, dim=3, min_rows=3)
    centroid = X.mean(axis=0)
    _, singular, vt = np.linalg.svd(X - centroid, full_matrices=False)
    if singular.size < 2 or singular[1] < DEGENERACY_TOL:
        raise DegenerateSampleError("collinear points", family="plane3d")
    normal = vt[-1] / np.linalg.norm(vt[-1])
    return ModelInstance(PLANE3D, np.append(normal, -normal @ centroid))


def robust_sigma(points: Any) -> float:
    """Robust noise scale: 1.4826 times the median absolute plane residual.

    :param points: Array of shape (n, 3)

    :return: Positive noise scale estimate
    """
    plane = fit_plane_lstsq(points)
    res = residuals([plane], points)[:, 0]
    return max(1.4826 * float(np.median(res)), np.finfo(np.float64).eps)

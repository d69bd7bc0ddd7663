#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Window-wise preference isolation forest on range images.

The image is covered by half-overlapping square windows. Every window
samples its own models from its valid pixels, embeds and scores them
with a RuzHash forest; a pixel's final score is the plain mean of the
scores it received from the windows covering it.

The number of models per window follows a memory model: the preference
matrices of all windows together must fit ``budget_bytes``.

Example::

    from isoprefs.config import SlidingConfig
    from isoprefs.geometry import PLANE3D
    from isoprefs.sliding import sliding_pif

    result = sliding_pif(image, PLANE3D, SlidingConfig(omega=20), rng=3)
    result.score_map.shape  # (image.height, image.width)
"""
import math
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from isoprefs.config import SlidingConfig
from isoprefs.exceptions import GeometryError, ValidationError, WindowTooSparseError
from isoprefs.geometry import (
    ModelFamily,
    RandomState,
    family_by_name,
    robust_sigma,
    sample_models,
    spawn_generators,
)
from isoprefs.iso_logs import add_log, format_duration
from isoprefs.pif import build_forest
from isoprefs.preference import PreferenceConfig, embed
from isoprefs.validation import validate_positive_int


@dataclass(eq=False)
class RangeImage:
    """Grid of 3-D points with a validity mask.

    Attributes:
        xyz: Array of shape (height, width, 3)
        valid: Boolean array of shape (height, width)
        gt_mask: Optional boolean ground-truth anomaly mask
    """

    xyz: np.ndarray
    valid: np.ndarray
    gt_mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.xyz = np.asarray(self.xyz, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.xyz.ndim != 3 or self.xyz.shape[2] != 3:
            raise ValidationError(f"xyz must have shape (h, w, 3), got {self.xyz.shape}", field="xyz")
        if self.valid.shape != self.xyz.shape[:2]:
            raise ValidationError("valid mask does not match the image", field="valid")
        if self.gt_mask is not None:
            self.gt_mask = np.asarray(self.gt_mask, dtype=bool)
            if self.gt_mask.shape != self.valid.shape:
                raise ValidationError("gt mask does not match the image", field="gt_mask")
        if not np.all(np.isfinite(self.xyz[self.valid])):
            raise ValidationError("valid pixels must have finite coordinates", field="xyz")

    @property
    def height(self) -> int:
        return int(self.xyz.shape[0])

    @property
    def width(self) -> int:
        return int(self.xyz.shape[1])


@dataclass
class WindowGrid:
    """Half-overlapping windows covering an image.

    Attributes:
        window_side: Window side omega in pixels
        stride: Offset between neighbouring windows, ceil(omega / 2)
        windows: Top-left corners (row0, col0)
        height: Image height
        width: Image width
    """

    window_side: int
    stride: int
    windows: List[Tuple[int, int]] = field(default_factory=list)
    height: int = 0
    width: int = 0

    def __len__(self) -> int:
        return len(self.windows)

    def bounds(self, window: Tuple[int, int]) -> Tuple[int, int, int, int]:
        """(row0, row1, col0, col1) of a window clipped to the image."""
        r0, c0 = window
        return (
            r0,
            min(r0 + self.window_side, self.height),
            c0,
            min(c0 + self.window_side, self.width),
        )

    def coverage(self) -> np.ndarray:
        """Number of windows covering each pixel."""
        counts = np.zeros((self.height, self.width), dtype=np.int64)
        for window in self.windows:
            r0, r1, c0, c1 = self.bounds(window)
            counts[r0:r1, c0:c1] += 1
        return counts


def _starts(side: int, omega: int, stride: int) -> List[int]:
    starts = list(range(0, side - omega + 1, stride))
    if starts[-1] + omega < side:
        starts.append(starts[-1] + stride)
    return starts


def enumerate_windows(image: Union[RangeImage, Tuple[int, int]], omega: int) -> WindowGrid:
    """Place windows of side ``omega`` at stride ceil(omega / 2).

    Windows that would cross the bottom or right border are clipped, so
    every pixel is covered. A square image of side delta divisible by
    omega gets (2 delta / omega - 1)² windows.

    :param image: Range image or its (height, width)
    :param omega: Window side, 1 <= omega <= min(height, width)

    :return: :class:`WindowGrid`
    """
    height, width = (image.height, image.width) if isinstance(image, RangeImage) else image
    omega = validate_positive_int(omega, "omega")
    if omega > min(height, width):
        raise ValidationError(
            f"omega must be <= {min(height, width)}, got {omega}", field="omega", value=omega
        )
    stride = (omega + 1) // 2
    windows = [(r, c) for r in _starts(height, omega, stride) for c in _starts(width, omega, stride)]
    return WindowGrid(window_side=omega, stride=stride, windows=windows, height=height, width=width)


def models_per_window(s_bits: int, budget_bytes: int, delta: float, k: float) -> int:
    """Models per window allowed by the memory budget.

    floor(budget / (s_bits / 8 * (delta / k)² * (2k - 1)²)), with
    ``k = delta / omega`` windows per side.

    Example::

        models_per_window(32, 2**30, 800, 1)   # 419
        models_per_window(32, 2**30, 800, 20)  # 110
    """
    s, budget, delta, k = (Fraction(v) for v in (s_bits, budget_bytes, delta, k))
    if min(s, budget, delta, k) <= 0:
        raise ValidationError("memory model parameters must be positive", field="budget_bytes")
    per_model = (s / 8) * (delta / k) ** 2 * (2 * k - 1) ** 2
    return math.floor(budget / per_model)


class MatrixBytesTracker:
    """Live and peak bytes of preference matrices held by concurrent windows."""

    def __init__(self) -> None:
        self.live = 0
        self.peak = 0
        self._lock = threading.Lock()

    def allocate(self, nbytes: int) -> None:
        with self._lock:
            self.live += nbytes
            self.peak = max(self.peak, self.live)

    def release(self, nbytes: int) -> None:
        with self._lock:
            self.live -= nbytes


@dataclass(eq=False)
class SlidingResult:
    """Outcome of a Sliding-PIF run.

    Attributes:
        score_map: Per-pixel mean score, NaN where no window scored the pixel
        windows_scored: Windows that produced scores
        windows_skipped: Windows skipped for lack of valid pixels
        peak_matrix_bytes: Peak bytes of live preference matrices
        models_per_window: Models sampled in each window
    """

    score_map: np.ndarray
    windows_scored: int
    windows_skipped: int
    peak_matrix_bytes: int
    models_per_window: int


def _score_window(
    image: RangeImage,
    points: np.ndarray,
    index_map: np.ndarray,
    bounds: Tuple[int, int, int, int],
    family: ModelFamily,
    m: int,
    config: SlidingConfig,
    tracker: MatrixBytesTracker,
    gen: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    r0, r1, c0, c1 = bounds
    rows, cols = np.nonzero(image.valid[r0:r1, c0:c1])
    rows, cols = rows + r0, cols + c0
    if len(rows) < family.min_sample_size:
        raise WindowTooSparseError(window=(r0, c0), valid=int(len(rows)))

    locality = index_map[rows, cols]
    local = points[locality]
    try:
        sigma = config.sigma if config.sigma is not None else robust_sigma(local)
        models = sample_models(points, family, m, rng_seed=gen, locality=locality)
    except GeometryError as e:
        raise WindowTooSparseError(message=str(e), window=(r0, c0), valid=int(len(rows)))

    pref_config = PreferenceConfig(sigma=sigma, k_multiplier=config.k_multiplier)
    P = embed(local, models, pref_config)
    tracker.allocate(P.nbytes)
    try:
        forest = build_forest(P.values, config.forest, gen)
        scores = forest.anomaly_scores(P.values)
    finally:
        tracker.release(P.nbytes)
    return rows, cols, scores


def sliding_pif(
    image: RangeImage,
    family: Union[str, ModelFamily],
    config: SlidingConfig,
    rng: RandomState = None,
) -> SlidingResult:
    """Score every pixel of a range image window by window.

    :param image: Range image
    :param family: A 3-D model family (plane3d, sphere3d, quadric3d)
    :param config: Window, forest and memory configuration
    :param rng: Seed, SeedSequence or Generator

    :return: :class:`SlidingResult`

    :raises ValidationError: On a 2-D family, a bad window size or a budget
        too small for one model per window
    """
    family = family_by_name(family)
    if family.ambient_dim != 3:
        raise ValidationError(f"{family.kind} is not a 3-D family", field="family")

    grid = enumerate_windows(image, config.omega)
    if config.models_per_window is not None:
        m = validate_positive_int(config.models_per_window, "models_per_window")
    else:
        # general form of the budget model: all windows at full size
        per_model = Fraction(config.s_bits, 8) * config.omega**2 * len(grid)
        m = math.floor(Fraction(config.budget_bytes) / per_model)
    if m < 1:
        raise ValidationError(
            "memory budget does not allow one model per window", field="budget_bytes"
        )

    points = image.xyz[image.valid]
    index_map = np.full(image.valid.shape, -1, dtype=np.int64)
    index_map[image.valid] = np.arange(len(points))
    tracker = MatrixBytesTracker()
    skipped: List[Tuple[int, int]] = []

    def run(window: Tuple[int, int], gen: np.random.Generator) -> Optional[Tuple]:
        try:
            return _score_window(
                image, points, index_map, grid.bounds(window), family, m, config, tracker, gen
            )
        except WindowTooSparseError as e:
            add_log(f"Window {window} skipped: {e}", "warning")
            skipped.append(window)
            return None

    start = time.perf_counter()
    results = Parallel(n_jobs=config.forest.n_jobs, prefer="threads")(
        delayed(run)(window, gen)
        for window, gen in zip(grid.windows, spawn_generators(rng, len(grid)))
    )

    total = np.zeros(image.valid.shape)
    count = np.zeros(image.valid.shape, dtype=np.int64)
    scored = 0
    for result in results:
        if result is None:
            continue
        rows, cols, scores = result
        total[rows, cols] += scores
        count[rows, cols] += 1
        scored += 1

    score_map = np.full(image.valid.shape, np.nan)
    covered = count > 0
    score_map[covered] = total[covered] / count[covered]
    add_log(
        f"Sliding-PIF over {len(grid)} windows (omega={config.omega}, m={m}): "
        f"{scored} scored, {len(skipped)} skipped in "
        f"{format_duration(time.perf_counter() - start)}",
        "debug",
    )
    return SlidingResult(
        score_map=score_map,
        windows_scored=scored,
        windows_skipped=len(skipped),
        peak_matrix_bytes=tracker.peak,
        models_per_window=m,
    )

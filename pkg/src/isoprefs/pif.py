#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""End-to-end preference isolation forest.

Samples ``m`` model hypotheses, embeds the points in preference space
and isolates them with a Voronoi or RuzHash forest.

Example::

    from isoprefs.config import ForestConfig, PIFConfig
    from isoprefs.datasets import generate_primitive_2d
    from isoprefs.geometry import LINE2D
    from isoprefs.pif import preference_isolation_forest

    data = generate_primitive_2d("star5", seed=7)
    result = preference_isolation_forest(data, LINE2D, PIFConfig(), rng=7)
    result.scores[:5]
"""
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Union

import numpy as np

from isoprefs.config import ForestConfig, PIFConfig
from isoprefs.exceptions import ValidationError
from isoprefs.geometry import (
    LabeledDataset,
    ModelFamily,
    ModelInstance,
    RandomState,
    family_by_name,
    sample_models,
    spawn_generators,
)
from isoprefs.iso_logs import add_log, format_duration
from isoprefs.preference import PreferenceConfig, PreferenceMatrix, embed
from isoprefs.ruzhash import build_rzhash_forest
from isoprefs.validation import validate_choice, validate_points
from isoprefs.voronoi import IsolationForestBase, build_voronoi_forest

FOREST_ENGINES = ("vifor", "rzhash")


@dataclass(eq=False)
class PIFResult:
    """Outcome of one preference isolation forest run.

    Attributes:
        scores: Anomaly score per point, in (0, 1]
        models: Sampled hypotheses (empty for ambient runs)
        preferences: Preference matrix (None for ambient runs)
        forest: The fitted forest
        timings: Wall seconds per phase: embed, build, score
    """

    scores: np.ndarray
    models: List[ModelInstance]
    preferences: Optional[PreferenceMatrix]
    forest: IsolationForestBase
    timings: Dict[str, float] = field(default_factory=dict)


def build_forest(P: Any, config: ForestConfig, rng: RandomState = None) -> IsolationForestBase:
    """Build the forest selected by ``config.engine`` on the rows of ``P``."""
    engine = validate_choice(config.engine, "engine", FOREST_ENGINES)
    if engine == "rzhash":
        return build_rzhash_forest(
            P,
            t=config.t,
            psi=config.psi,
            b=config.b,
            rng=rng,
            normalize_log_b=config.normalize_log_b,
            n_jobs=config.n_jobs,
        )
    if config.b is None:
        raise ValidationError("vifor needs a branching factor", field="b")
    return build_voronoi_forest(
        P,
        t=config.t,
        psi=config.psi,
        b=config.b,
        metric=config.metric,
        rng=rng,
        normalize_log_b=config.normalize_log_b,
        n_jobs=config.n_jobs,
    )


def preference_isolation_forest(
    data: Union[LabeledDataset, np.ndarray],
    family: Union[str, ModelFamily],
    config: Optional[PIFConfig] = None,
    rng: RandomState = None,
) -> PIFResult:
    """Score every point of ``data`` for anomaly.

    Binary runs route with Jaccard distance. Ambient runs skip sampling
    and embedding and isolate the raw points with Euclidean Voronoi trees.

    :param data: Dataset or array of shape (n, d)
    :param family: Model family or its name
    :param config: Pipeline configuration
    :param rng: Seed, SeedSequence or Generator

    :return: :class:`PIFResult`

    :raises ValidationError: On invalid parameters or a missing noise scale
    :raises SamplingExhaustedError: When hypotheses cannot be drawn
    """
    config = config or PIFConfig()
    family = family_by_name(family)
    X = data.points if isinstance(data, LabeledDataset) else validate_points(data, min_rows=1)
    model_rng, forest_rng = spawn_generators(rng, 2)
    timings: Dict[str, float] = {}

    if config.ambient:
        forest_config = ForestConfig(
            engine="vifor",
            t=config.forest.t,
            psi=config.forest.psi,
            b=config.forest.b or 2,
            metric="euclidean",
            normalize_log_b=config.forest.normalize_log_b,
            n_jobs=config.forest.n_jobs,
        )
        timings["embed"] = 0.0
        models: List[ModelInstance] = []
        preferences = None
        rows = X
    else:
        sigma = config.sigma
        if sigma is None:
            if not isinstance(data, LabeledDataset):
                raise ValidationError("sigma is required for raw arrays", field="sigma")
            sigma = data.noise_sigma
        pref_config = PreferenceConfig(
            sigma=sigma,
            k_multiplier=config.k_multiplier,
            mode="binary" if config.binary else "continuous",
        )
        forest_config = config.forest
        if config.binary and forest_config.engine == "vifor":
            forest_config = replace(forest_config, metric="jaccard")

        start = time.perf_counter()
        models = sample_models(X, family, config.models_for(len(X)), rng_seed=model_rng)
        preferences = embed(X, models, pref_config)
        timings["embed"] = time.perf_counter() - start
        rows = preferences.values

    start = time.perf_counter()
    forest = build_forest(rows, forest_config, forest_rng)
    timings["build"] = time.perf_counter() - start

    start = time.perf_counter()
    scores = forest.anomaly_scores(rows)
    timings["score"] = time.perf_counter() - start

    add_log(
        f"PIF on {len(X)} points ({family.kind}, {forest_config.engine}, "
        f"m={len(models)}): embed {format_duration(timings['embed'])}, "
        f"build {format_duration(timings['build'])}, "
        f"score {format_duration(timings['score'])}",
        "debug",
    )
    return PIFResult(
        scores=scores,
        models=models,
        preferences=preferences,
        forest=forest,
        timings=timings,
    )

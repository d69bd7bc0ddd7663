#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""isoprefs - isolation forests in preference space and over data streams.

isoprefs detects anomalies that do not fit the structures of a dataset
and anomalies that fall in low-density regions of a stream.

Features:
    * Preference embedding against sampled line, circle, plane, sphere
      and quadric hypotheses
    * Voronoi isolation trees with Jaccard, Ruzicka, Tanimoto or
      Euclidean routing
    * RuzHash isolation trees, a locality sensitive hash of the Ruzicka
      distance, with optional bucket aggregation
    * Window-wise scoring of range images under a memory budget
    * Online isolation forest over a sliding buffer
    * Seeded synthetic benchmarks, ROC AUC and an axis-parallel baseline

Quick Start
-----------

Structure-based scoring of a 2-D dataset::

    from isoprefs import PIFConfig, generate_primitive_2d, preference_isolation_forest, roc_auc

    data = generate_primitive_2d("star5", seed=7)
    result = preference_isolation_forest(data, "line", PIFConfig(), rng=7)
    print(roc_auc(result.scores, data.labels))

RuzHash trees with branching factor 4::

    from isoprefs import ForestConfig, PIFConfig

    config = PIFConfig(forest=ForestConfig(engine="rzhash", b=4))

Streaming scores::

    from isoprefs import OnlineForest

    forest = OnlineForest(n_trees=32, omega=2048, eta=32, rng=0)
    for x in stream:
        score = forest.process(x)

Logging goes to ``isoprefs.log`` under ``ISOPREFS_LOG_DIR``::

    from isoprefs import add_log

    add_log("Starting sweep", "info")
"""
from isoprefs.iso_logs import add_log, WORK_PATH
from isoprefs.exceptions import (
    IsoPrefsError,
    ValidationError,
    LengthMismatchError,
    GeometryError,
    DegenerateSampleError,
    SamplingExhaustedError,
    UnderflowViolationError,
    WindowTooSparseError,
    DegenerateLabelsError,
    DataFileError,
    exit_code_for,
)
from isoprefs.retry import ResampleConfig, resample, with_resample
from isoprefs.geometry import (
    ModelFamily,
    ModelInstance,
    LabeledDataset,
    LINE2D,
    CIRCLE2D,
    PLANE3D,
    SPHERE3D,
    QUADRIC3D,
    family_by_name,
    fit_minimal,
    residuals,
    sample_models,
)
from isoprefs.preference import (
    PreferenceConfig,
    PreferenceMatrix,
    embed,
    jaccard,
    ruzicka,
    tanimoto,
)
from isoprefs.voronoi import VoronoiForest, build_voronoi_forest, anomaly_scores
from isoprefs.ruzhash import (
    RuzHashParams,
    RzHashForest,
    sample_ruzhash_params,
    ruzhash,
    ruzhash_aggregated,
    build_rzhash_forest,
)
from isoprefs.config import (
    ForestConfig,
    PIFConfig,
    SlidingConfig,
    OnlineConfig,
    RunConfig,
)
from isoprefs.pif import PIFResult, preference_isolation_forest
from isoprefs.sliding import RangeImage, enumerate_windows, models_per_window, sliding_pif
from isoprefs.online import OnlineForest
from isoprefs.datasets import (
    StreamSpec,
    generate_primitive_2d,
    generate_surface_grid,
    generate_stream,
    two_gaussian_stream_spec,
)
from isoprefs.evaluation import roc_auc, baseline_iforest, score_map_auc, summarize_runs
from isoprefs.iterators import Batches
from isoprefs.streaming import (
    CsvExporter,
    read_dataset_csv,
    write_dataset_csv,
    read_rimg,
    write_rimg,
)

__version__ = "0.1.0"
__all__ = [
    # Logging
    "add_log",
    "WORK_PATH",
    # Exceptions
    "IsoPrefsError",
    "ValidationError",
    "LengthMismatchError",
    "GeometryError",
    "DegenerateSampleError",
    "SamplingExhaustedError",
    "UnderflowViolationError",
    "WindowTooSparseError",
    "DegenerateLabelsError",
    "DataFileError",
    "exit_code_for",
    # Resampling
    "ResampleConfig",
    "resample",
    "with_resample",
    # Geometry
    "ModelFamily",
    "ModelInstance",
    "LabeledDataset",
    "LINE2D",
    "CIRCLE2D",
    "PLANE3D",
    "SPHERE3D",
    "QUADRIC3D",
    "family_by_name",
    "fit_minimal",
    "residuals",
    "sample_models",
    # Preference space
    "PreferenceConfig",
    "PreferenceMatrix",
    "embed",
    "jaccard",
    "ruzicka",
    "tanimoto",
    # Forests
    "VoronoiForest",
    "build_voronoi_forest",
    "anomaly_scores",
    "RuzHashParams",
    "RzHashForest",
    "sample_ruzhash_params",
    "ruzhash",
    "ruzhash_aggregated",
    "build_rzhash_forest",
    # Configuration
    "ForestConfig",
    "PIFConfig",
    "SlidingConfig",
    "OnlineConfig",
    "RunConfig",
    # Pipelines
    "PIFResult",
    "preference_isolation_forest",
    "RangeImage",
    "enumerate_windows",
    "models_per_window",
    "sliding_pif",
    "OnlineForest",
    # Data and evaluation
    "StreamSpec",
    "generate_primitive_2d",
    "generate_surface_grid",
    "generate_stream",
    "two_gaussian_stream_spec",
    "roc_auc",
    "score_map_auc",
    "baseline_iforest",
    "summarize_runs",
    "Batches",
    "CsvExporter",
    "read_dataset_csv",
    "write_dataset_csv",
    "read_rimg",
    "write_rimg",
]

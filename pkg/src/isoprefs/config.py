#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Configuration objects for the detection engines and the command line.

Engine configs are plain dataclasses with documented defaults; the
engines validate the values they receive. :class:`RunConfig` gathers
every command-line parameter and can list all of its problems at once
with :meth:`RunConfig.validate`.
"""
import os
from dataclasses import dataclass, field
from typing import List, Optional

from isoprefs.exceptions import ValidationError
from isoprefs.preference import METRICS

ENGINES = ("vifor", "rzhash", "online", "sliding", "baseline")
THREADS_ENV = "ISOPREFS_THREADS"


@dataclass
class ForestConfig:
    """Configuration of a preference-space isolation forest.

    Attributes:
        engine: ``vifor`` (Voronoi trees) or ``rzhash`` (RuzHash trees)
        t: Number of trees (default: 100)
        psi: Subsample size per tree (default: 256)
        b: Branching factor (default: 2); None builds un-aggregated RzHash trees
        metric: Voronoi routing distance (default: tanimoto)
        normalize_log_b: Normalize scores by log_b(psi) instead of c(psi)
        n_jobs: Worker threads for building and scoring (default: 1)

    Example::

        config = ForestConfig(engine="rzhash", t=100, psi=256, b=4)
    """

    engine: str = "vifor"
    t: int = 100
    psi: int = 256
    b: Optional[int] = 2
    metric: str = "tanimoto"
    normalize_log_b: bool = False
    n_jobs: int = 1


@dataclass
class PIFConfig:
    """Configuration of the end-to-end preference isolation forest.

    Attributes:
        forest: Forest configuration
        sigma: Noise scale; None takes the dataset's ``noise_sigma``
        k_multiplier: Inlier threshold multiple (default: 3)
        binary: Binary preferences, scored with Jaccard routing
        m_factor: Models sampled per point, m = m_factor * |X| (default: 10)
        m: Explicit number of models, overrides ``m_factor``
        ambient: Skip the embedding and isolate the ambient points
    """

    forest: ForestConfig = field(default_factory=ForestConfig)
    sigma: Optional[float] = None
    k_multiplier: float = 3.0
    binary: bool = False
    m_factor: float = 10.0
    m: Optional[int] = None
    ambient: bool = False

    def models_for(self, n: int) -> int:
        """Number of models to sample for a dataset of ``n`` points."""
        if self.m is not None:
            return self.m
        return max(1, int(round(self.m_factor * n)))


@dataclass
class SlidingConfig:
    """Configuration of window-wise PIF on range images.

    Attributes:
        omega: Window side in pixels
        forest: Forest configuration (rzhash engine)
        budget_bytes: Preference-matrix memory budget (default: 1 GiB)
        s_bits: Bits per preference entry (default: 32)
        sigma: Fixed noise scale; None estimates it per window
        k_multiplier: Inlier threshold multiple (default: 3)
        models_per_window: Explicit model count, overrides the budget model
    """

    omega: int
    forest: ForestConfig = field(default_factory=lambda: ForestConfig(engine="rzhash"))
    budget_bytes: int = 2**30
    s_bits: int = 32
    sigma: Optional[float] = None
    k_multiplier: float = 3.0
    models_per_window: Optional[int] = None


@dataclass
class OnlineConfig:
    """Configuration of the online isolation forest.

    Attributes:
        n_trees: Number of trees (default: 32)
        omega: Sliding buffer length (default: 2048)
        eta: Max leaf samples (default: 32)
        debug: Check structural invariants after every step

    Example::

        config = OnlineConfig(n_trees=32, omega=2048, eta=32)
    """

    n_trees: int = 32
    omega: int = 2048
    eta: int = 32
    debug: bool = False


@dataclass
class RunConfig:
    """Every parameter of one command-line run.

    Attributes mirror the command-line flags; paths are plain strings.
    """

    engine: str = "vifor"
    metric: str = "tanimoto"
    family: str = "line"
    t: int = 100
    psi: int = 256
    b: Optional[int] = 2
    m_factor: float = 10.0
    sigma: Optional[float] = None
    sigma_k: float = 3.0
    binary: bool = False
    ambient: bool = False
    tau: int = 32
    omega: int = 2048
    eta: int = 32
    batch: int = 100
    window: Optional[int] = None
    budget_bytes: int = 2**30
    seed: int = 0
    threads: int = 1
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    manifest_path: Optional[str] = None
    dump_preferences: Optional[str] = None

    def validate(self) -> List[ValidationError]:
        """Return every problem of this configuration, empty when valid."""
        problems: List[ValidationError] = []

        def check(ok: bool, name: str, message: str) -> None:
            if not ok:
                problems.append(
                    ValidationError(message, field=name, value=getattr(self, name))
                )

        check(self.engine in ENGINES, "engine", f"engine must be one of {', '.join(ENGINES)}")
        check(self.seed >= 0, "seed", "seed must be >= 0")
        check(self.threads >= 1, "threads", "threads must be >= 1")
        check(self.input_path is not None, "input_path", "an input file is required")

        if self.engine in ("vifor", "rzhash", "sliding", "baseline"):
            check(self.t >= 1, "t", "t must be >= 1")
            check(self.psi >= 1, "psi", "psi must be >= 1")
        if self.engine in ("vifor", "rzhash", "sliding"):
            check(self.m_factor > 0, "m_factor", "m-factor must be > 0")
            check(self.sigma is None or self.sigma > 0, "sigma", "sigma must be > 0")
            check(self.sigma_k > 0, "sigma_k", "sigma-k must be > 0")
            check(
                self.b is None or 2 <= self.b <= self.psi,
                "b",
                f"b must lie in [2, psi={self.psi}]",
            )
            check(
                self.b is not None or self.engine != "vifor",
                "b",
                "vifor needs a branching factor",
            )
        if self.engine == "vifor":
            check(self.metric in METRICS, "metric", f"metric must be one of {', '.join(METRICS)}")
        if self.engine == "online":
            check(self.tau >= 1, "tau", "tau must be >= 1")
            check(self.eta >= 1, "eta", "eta must be >= 1")
            check(self.omega >= self.eta, "omega", "omega must be >= eta")
            check(self.batch >= 1, "batch", "batch must be >= 1")
        if self.engine == "sliding":
            check(self.window is not None and self.window >= 1, "window", "window must be >= 1")
            check(self.budget_bytes > 0, "budget_bytes", "budget must be > 0")
        return problems


def resolve_threads(flag: Optional[int]) -> int:
    """Thread count from the flag, else ``ISOPREFS_THREADS``, else 1.

    :raises ValidationError: If the environment value is not a positive integer
    """
    if flag is not None:
        return flag
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer", field="threads", value=raw)
    if value < 1:
        raise ValidationError(f"{THREADS_ENV} must be >= 1", field="threads", value=raw)
    return value

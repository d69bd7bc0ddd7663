#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Redraw utilities for randomized hypothesis generation.

Minimal sample sets drawn at random are sometimes degenerate (coincident
or collinear points). This module provides the bounded redraw loop used
by model sampling: degenerate draws are retried until a budget of
consecutive failures is spent.

Example::

    from isoprefs.retry import ResampleConfig, with_resample

    config = ResampleConfig(max_attempts_factor=100)

    @with_resample(budget=config.budget(m), family="line2d", config=config)
    def draw():
        return fit_minimal(family, pick_minimal_sample())
"""
import functools
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Tuple, Type, TypeVar

from isoprefs.exceptions import DegenerateSampleError, SamplingExhaustedError
from isoprefs.iso_logs import add_log

# Type variable for generic return type
T = TypeVar("T")


@dataclass
class ResampleConfig:
    """Configuration for the redraw loop.

    Attributes:
        max_attempts_factor: Consecutive degenerate draws tolerated per
            requested model (default: 100, i.e. a budget of 100·m)
        retryable_exceptions: Exception types that trigger a redraw

    Example::

        config = ResampleConfig(max_attempts_factor=10)
        config.budget(500)  # 5000
    """

    max_attempts_factor: int = 100
    retryable_exceptions: Tuple[Type[BaseException], ...] = field(
        default_factory=lambda: (DegenerateSampleError,)
    )

    def budget(self, m: int) -> int:
        """Return the number of consecutive degenerate draws allowed.

        :param m: Number of models requested

        :return: ``max_attempts_factor * max(m, 1)``
        """
        return self.max_attempts_factor * max(int(m), 1)


# Default configuration
DEFAULT_CONFIG = ResampleConfig()


def resample(
    draw: Callable[[], T],
    budget: int,
    family: Optional[str] = None,
    config: Optional[ResampleConfig] = None,
    on_retry: Optional[Callable[[int, BaseException], None]] = None,
) -> Tuple[T, int]:
    """Call ``draw`` until it succeeds or ``budget`` draws have failed.

    :param draw: Zero-argument callable producing one result
    :param budget: Maximum number of consecutive failed draws
    :param family: Model family name, reported in the error
    :param config: Redraw configuration
    :param on_retry: Callback called after each failed draw (attempt, exception)

    :return: Tuple of (result, number of failed draws before success)

    :raises SamplingExhaustedError: When more than ``budget`` draws failed
    """
    retry_config = config or DEFAULT_CONFIG
    failures = 0
    last_exception: Optional[BaseException] = None
    while failures <= budget:
        try:
            return draw(), failures
        except retry_config.retryable_exceptions as e:
            last_exception = e
            failures += 1
            if on_retry:
                on_retry(failures, e)

    add_log(
        f"Sampling exhausted after {failures} consecutive degenerate draws "
        f"(family={family}): {last_exception}",
        "error",
    )
    raise SamplingExhaustedError(
        message="Too many consecutive degenerate minimal samples",
        family=family,
        attempts=failures,
    )


def with_resample(
    budget: int,
    family: Optional[str] = None,
    config: Optional[ResampleConfig] = None,
    on_retry: Optional[Callable[[int, BaseException], None]] = None,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """Decorator form of :func:`resample`, used by model sampling.

    :param budget: Maximum number of consecutive failed draws
    :param family: Model family name, reported in the error
    :param config: Redraw configuration
    :param on_retry: Callback called after each failed draw (attempt, exception)

    :return: Decorated function returning only the successful result

    Example::

        @with_resample(budget=1000, family="circle2d")
        def draw_circle():
            return fit_minimal(CIRCLE, pick_three())
    """

    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> T:
            result, _ = resample(
                lambda: func(*args, **kwargs),
                budget=budget,
                family=family,
                config=config,
                on_retry=on_retry,
            )
            return result

        return wrapper

    return decorator

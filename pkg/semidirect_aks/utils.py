"""Small numeric helpers."""

from __future__ import annotations

import functools
import logging
from collections.abc import Callable

import numpy as np

_LOGGER = logging.getLogger(__name__)


def finite_result(method):
    """Decorator rejecting NaN or infinite array results."""

    @functools.wraps(method)
    def wrapper(*args, **kwargs):
        result = method(*args, **kwargs)
        values = np.asarray(result)
        if not np.all(np.isfinite(values)):
            _LOGGER.debug("Non-finite output from %s", method.__name__)
            raise FloatingPointError(f"{method.__name__} produced a non-finite value")
        return result

    return wrapper


def central_difference(curve: Callable[[float], np.ndarray], step: float) -> np.ndarray:
    """Return the derivative at zero of a vector valued curve."""
    forward = np.asarray(curve(step), dtype=float)
    backward = np.asarray(curve(-step), dtype=float)
    return (forward - backward) / (2.0 * step)


FIVE_POINT_WEIGHTS = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def five_point_derivative(samples, spacing: float) -> np.ndarray:
    """Return the fourth order central derivative at the middle of five evenly spaced samples."""
    values = np.asarray(samples, dtype=float)
    if values.shape[0] != 5:
        raise ValueError("five samples are needed")
    return np.tensordot(FIVE_POINT_WEIGHTS, values, axes=1) / spacing


def uniform_coefficients(rng: np.random.Generator, size: int, scale: float = 1.0) -> np.ndarray:
    """Draw coefficients uniformly from [-scale, scale]."""
    return rng.uniform(-scale, scale, size=size)


def max_abs(values) -> float:
    """Return the sup norm of an array, zero when empty."""
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values)))

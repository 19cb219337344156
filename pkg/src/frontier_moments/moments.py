"""Numerically stable empirical kernel moments and the ratios built on them.

A raw power sum (1/n) sum_i Y_i^p K_h(x - X_i) overflows or underflows for
p in the hundreds, so moments are carried as (mantissa, log_scale) pairs.
The scale is pinned to M, the largest response with positive kernel weight:
every mantissa term (Y_i / M)^p lies in [0, 1], the dominant one is exactly
1, and the represented value is mantissa * exp(log_scale) with
log_scale = p * log(M).  Ratios of consecutive moments share one window
scan and one scale, so the common factor cancels without ever being formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec
from .model import Sample


class InsufficientLocalDataError(RuntimeError):
    """The kernel window around the query point holds no usable mass."""

    def __init__(self, count: int, message: str | None = None):
        self.count = count
        super().__init__(message or f"kernel window holds {count} points")


@dataclass(frozen=True)
class ScaledMoment:
    """Kernel moment in scaled form: value = mantissa * exp(log_scale)."""

    log_scale: float
    mantissa: float
    count: int

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    @property
    def value(self) -> float:
        """Reconstructed moment; may overflow for extreme scales, by design."""
        return self.mantissa * math.exp(self.log_scale)

    @property
    def log_value(self) -> float:
        if self.mantissa <= 0.0:
            return -math.inf
        return math.log(self.mantissa) + self.log_scale


def _window(sample: Sample, x, h: float, kernel: KernelSpec):
    weights = kernel.scaled_density(x, sample.xs, h)
    mask = weights > 0.0
    return weights[mask], sample.ys[mask]


def _check_params(p: float, h: float) -> None:
    if not p > 0:
        raise ValueError("moment power p must be positive")
    if not h > 0:
        raise ValueError("bandwidth h must be positive")


def scaled_moment(sample: Sample, x, p: float, h: float, kernel: KernelSpec) -> ScaledMoment:
    """(1/n) sum_i Y_i^p K_h(x - X_i) in scaled representation.

    An empty window is a value, not an error: count 0, mantissa 0.
    """
    _check_params(p, h)
    w, y = _window(sample, x, h, kernel)
    count = int(w.size)
    if count == 0:
        return ScaledMoment(log_scale=0.0, mantissa=0.0, count=0)
    m = float(y.max())
    mantissa = float(np.sum((y / m) ** p * w)) / sample.n
    return ScaledMoment(log_scale=p * math.log(m), mantissa=mantissa, count=count)


def moment_ratio(sample: Sample, x, p: float, h: float, kernel: KernelSpec) -> float:
    """Ratio of consecutive kernel moments at powers p and p + 1.

    Computed in one pass with a shared scale, mathematically identical to
    the naive ratio of the two moments.
    """
    _check_params(p, h)
    w, y = _window(sample, x, h, kernel)
    count = int(w.size)
    if count == 0:
        raise InsufficientLocalDataError(0)
    m = float(y.max())
    t = y / m
    tp = t**p
    num = float(np.sum(tp * w))
    den = float(np.sum(tp * t * w))
    if den <= 0.0:
        raise InsufficientLocalDataError(count, f"window of {count} points carries no usable moment mass")
    return num / (m * den)


def moment_ratio_pair(sample: Sample, x, p: float, a: float, h: float, kernel: KernelSpec):
    """The two ratios the frontier estimate needs, from a single window scan.

    Returns (high, low, count) where high is the ratio at power (a + 1) p,
    low the ratio at power p; all four underlying moments share one scale.
    """
    _check_params(p, h)
    if not a > 0:
        raise ValueError("order multiplier a must be positive")
    w, y = _window(sample, x, h, kernel)
    count = int(w.size)
    if count == 0:
        raise InsufficientLocalDataError(0)
    m = float(y.max())
    t = y / m
    tp = t**p
    tq = t ** ((a + 1.0) * p)
    den_low = float(np.sum(tp * t * w))
    den_high = float(np.sum(tq * t * w))
    if den_low <= 0.0 or den_high <= 0.0:
        raise InsufficientLocalDataError(count, f"window of {count} points carries no usable moment mass")
    low = float(np.sum(tp * w)) / (m * den_low)
    high = float(np.sum(tq * w)) / (m * den_high)
    return high, low, count


def effective_count(sample: Sample, x, h: float) -> int:
    """Number of sample points strictly inside the radius-h ball around x."""
    if not h > 0:
        raise ValueError("bandwidth h must be positive")
    x = np.asarray(x, dtype=float)
    d2 = np.sum((sample.xs - x) ** 2, axis=1)
    return int(np.count_nonzero(d2 < h * h))

"""Measurement noise and first-order low-pass filtering ahead of the controller."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit


@dataclass(frozen=True)
class NoiseParams:
    variance: float = 0.0
    sample_time: float = 0.01
    seed: int | None = None

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError(f"noise variance must be >= 0, got {self.variance}")
        if not self.sample_time > 0:
            raise ValueError(f"noise sample_time must be > 0, got {self.sample_time}")


class HeldNoise:
    """Band-limited white noise: a zero-mean Gaussian vector redrawn once per
    ``sample_time`` and held in between."""

    def __init__(self, params: NoiseParams, rng: np.random.Generator, size: int = 3):
        self.params = params
        self.rng = rng
        self.size = size
        self._sigma = math.sqrt(params.variance)
        self._slot = -1
        self._value: tuple[float, ...] = (0.0,) * size

    def __call__(self, t: float) -> tuple[float, ...]:
        if self._sigma == 0.0:
            return self._value
        slot = int(t / self.params.sample_time + 1e-9)
        if slot != self._slot:
            self._slot = slot
            self._value = tuple(self.rng.normal(0.0, self._sigma, self.size).tolist())
        return self._value


def noise_table(params: NoiseParams, rng: np.random.Generator, n_samples: int, size: int = 3) -> np.ndarray:
    """The first ``n_samples`` held values of a ``HeldNoise`` stream, one row each.

    Consumes ``rng`` exactly as the sample-by-sample redraws do.
    """
    if params.variance == 0:
        return np.zeros((n_samples, size))
    return rng.normal(0.0, math.sqrt(params.variance), size=(n_samples, size))


def inject_noise(true_value: Sequence[float], t: float, noise: HeldNoise) -> tuple[float, ...]:
    n = noise(t)
    return tuple(v + e for v, e in zip(true_value, n))


class FilterState(NamedTuple):
    omega_c: float
    y: tuple[float, ...]


@njit(cache=True)
def lowpass(y, x, a):
    """One filter update with pole ``a = exp(-omega_c dt)``."""
    return a * y + (1.0 - a) * x


@njit(cache=True)
def lowpass3(y, x, a):
    return (lowpass(y[0], x[0], a), lowpass(y[1], x[1], a), lowpass(y[2], x[2], a))


@njit(cache=True)
def backdiff3(new, old, dt):
    return ((new[0] - old[0]) / dt, (new[1] - old[1]) / dt, (new[2] - old[2]) / dt)


def filter_step(fs: FilterState, x: Sequence[float], dt: float) -> tuple[FilterState, tuple[float, ...]]:
    """Zero-order-hold discretisation of ``omega_c / (s + omega_c)``, one step per channel."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    a = math.exp(-fs.omega_c * dt)
    y = tuple(lowpass(float(yi), float(xi), a) for yi, xi in zip(fs.y, x))
    return FilterState(fs.omega_c, y), y


class RateEstimator(NamedTuple):
    """Backward difference of an already-filtered signal.

    The filter ahead of it is the only smoothing; a second low-pass on the
    difference adds enough lag to destabilise the attitude loop.
    """

    prev: tuple[float, ...]

    @classmethod
    def start(cls, value: Sequence[float]) -> "RateEstimator":
        return cls(tuple(value))

    def update(self, value: Sequence[float], dt: float) -> tuple["RateEstimator", tuple[float, ...]]:
        value = tuple(value)
        return RateEstimator(value), tuple((v - p) / dt for v, p in zip(value, self.prev))

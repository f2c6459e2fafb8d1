"""Reproducible i.i.d. non-negative random potentials.

Every realization draws from its own Philox stream keyed by
``(realization_index << 64) | seed``; site ``j`` of a realization always
consumes the ``j``-th 64-bit output of that stream, so a value depends only on
``(seed, realization, site)`` and never on call order or worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

DISTRIBUTIONS = ("uniform", "bernoulli", "exponential")

_SEED_LIMIT = 1 << 64


@dataclass(frozen=True)
class DisorderSpec:
    """Single-site law, master seed and number of realizations.

    uniform      V ~ U(0, v_max)
    bernoulli    V = v_max with probability p, else 0
    exponential  V = min(Exp(rate), cap)
    """

    distribution: str = "uniform"
    v_max: float = 1.0
    p: float = 0.5
    rate: float = 1.0
    cap: float = 10.0
    seed: int = 0
    realizations: int = 1

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}")
        if not (0 <= self.seed < _SEED_LIMIT) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if self.realizations < 0:
            raise ValueError(f"realization count must be >= 0, got {self.realizations}")
        if not (self.v_max >= 0 and math.isfinite(self.v_max)):
            raise ValueError(f"v_max must be finite and >= 0, got {self.v_max!r}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")
        if self.distribution == "exponential":
            if not self.rate > 0:
                raise ValueError(f"rate must be positive, got {self.rate!r}")
            if not (self.cap >= 0 and math.isfinite(self.cap)):
                raise ValueError(f"cap must be finite and >= 0, got {self.cap!r}")

    @property
    def upper_bound(self) -> float:
        return self.cap if self.distribution == "exponential" else self.v_max


@dataclass(frozen=True)
class PotentialField:
    index: int
    values: np.ndarray

    def __len__(self):
        return len(self.values)


def _uniforms(seed: int, index: int, count: int) -> np.ndarray:
    bitgen = np.random.Philox(key=(index << 64) | seed)
    return np.random.Generator(bitgen).random(count)


def sample_field(spec: DisorderSpec, sites: int, realization_index: int) -> PotentialField:
    """Realization ``realization_index`` of the potential on ``sites`` sites."""
    if not 0 <= realization_index < spec.realizations:
        raise IndexError(
            f"realization index {realization_index} outside [0, {spec.realizations})"
        )
    u = _uniforms(spec.seed, realization_index, sites)
    if spec.distribution == "uniform":
        values = spec.v_max * u
    elif spec.distribution == "bernoulli":
        values = np.where(u < spec.p, spec.v_max, 0.0)
    else:
        values = np.minimum(-np.log1p(-u) / spec.rate, spec.cap)
    values.setflags(write=False)
    return PotentialField(realization_index, values)


def stream_realizations(spec: DisorderSpec, sites: int) -> Iterator[PotentialField]:
    for index in range(spec.realizations):
        yield sample_field(spec, sites, index)

"""Symbol substitution noise, the detection-efficacy curve z(K), detect and repair.

Randomness comes from numpy's ``PCG64`` bit generator seeded through
``SeedSequence``.  A stream is addressed by a master seed plus a tuple of
integers (trial, level, stage); see :func:`rng_for`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateAlphabet, MaskMismatch, NotDifferentiable

RNG_NAME = "numpy.random.PCG64 via SeedSequence(entropy=seed, spawn_key=stream)"

# stage ids used in spawn keys
STAGE_NOISE = 0
STAGE_DETECT = 1
STAGE_SOURCE = 2


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``stream`` under ``seed``.

    ``rng_for(s, trial, level, stage)`` is how trials derive their streams, so a
    trial's draws do not depend on how many other trials run or in what order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(stream))))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, tuple):
        return rng_for(*seed)
    return rng_for(int(seed))


@dataclass(frozen=True)
class NoiseSpec:
    """Each symbol is replaced, with probability ``f``, by a uniformly chosen other symbol."""

    f: float

    def __post_init__(self):
        if not 0.0 <= self.f < 1.0:
            raise ValueError(f"error rate f={self.f} outside [0, 1)")


@dataclass(frozen=True)
class CorrectionSideInfo:
    """Ground truth about which positions are wrong and what they should hold."""

    mask: np.ndarray
    original: np.ndarray

    def __post_init__(self):
        if self.mask.shape != self.original.shape:
            raise MaskMismatch("mask and original message differ in length")

    @property
    def positions(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


@dataclass(frozen=True)
class EfficacyFamily:
    """Fraction of errors found as a function of per-bit detection energy K.

    ``inverse_exponential``: z = z_max * (1 - exp(-K / scale))
    ``linear_saturating``:  z = z_max * min(K / scale, 1)
    """

    kind: str = "inverse_exponential"
    z_max: float = 0.95
    scale: float = 1.0

    KINDS = ("inverse_exponential", "linear_saturating")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown efficacy family {self.kind!r}")
        if not 0.0 <= self.z_max < 1.0:
            raise ValueError("z_max must lie in [0, 1)")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def __call__(self, K):
        return efficacy(self, K)

    def derivative(self, K: float) -> float:
        """dz/dK (right derivative at K = 0)."""
        if K < 0:
            raise ValueError("K must be nonnegative")
        if self.kind == "inverse_exponential":
            return self.z_max / self.scale * math.exp(-K / self.scale)
        if K == self.scale:
            raise NotDifferentiable(f"linear_saturating efficacy has a kink at K={self.scale}")
        return self.z_max / self.scale if K < self.scale else 0.0


def efficacy(family: EfficacyFamily, K):
    K_arr = np.asarray(K, dtype=float)
    if (K_arr < 0).any():
        raise ValueError("K must be nonnegative")
    if family.kind == "inverse_exponential":
        z = family.z_max * -np.expm1(-K_arr / family.scale)
    else:
        z = family.z_max * np.minimum(K_arr / family.scale, 1.0)
    return float(z) if z.ndim == 0 else z


def apply_noise(message: Sequence[int], n_symbols: int, spec: NoiseSpec, rng_seed):
    """Corrupt ``message`` (symbol indices over ``n_symbols`` letters).

    Returns the corrupted copy and the side information recording exactly
    which positions changed.
    """
    msg = np.asarray(message, dtype=np.int64)
    if spec.f > 0 and n_symbols < 2:
        raise DegenerateAlphabet("cannot substitute symbols in a one-letter alphabet")
    if spec.f == 0:
        return msg.copy(), CorrectionSideInfo(np.zeros(msg.shape, dtype=bool), msg.copy())
    rng = _rng(rng_seed)
    mask = rng.random(msg.shape) < spec.f
    offset = rng.integers(1, n_symbols, size=msg.shape)
    corrupted = np.where(mask, (msg + offset) % n_symbols, msg)
    return corrupted, CorrectionSideInfo(mask, msg.copy())


def detect(corrupted: Sequence[int], truth: CorrectionSideInfo, z: float, rng_seed) -> np.ndarray:
    """Positions flagged as wrong; each true error is found independently with probability z.

    One uniform draw is made per position (not per error), so with a fixed seed
    the detected set only grows as z grows.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"efficacy {z} outside [0, 1]")
    corrupted = np.asarray(corrupted)
    if corrupted.shape != truth.mask.shape:
        raise MaskMismatch("message and side information differ in length")
    if z == 0:
        return np.empty(0, dtype=np.int64)
    u = _rng(rng_seed).random(truth.mask.shape)
    return np.flatnonzero(truth.mask & (u < z))


def repair(corrupted: Sequence[int], detected, truth: CorrectionSideInfo):
    """Restore the detected positions; undetected errors stay."""
    out = np.array(corrupted, dtype=np.int64, copy=True)
    detected = np.asarray(detected, dtype=np.int64)
    if out.shape != truth.mask.shape:
        raise MaskMismatch("message and side information differ in length")
    if detected.size:
        if detected.min() < 0 or detected.max() >= out.size or not truth.mask[detected].all():
            raise MaskMismatch("detected positions include positions that were not corrupted")
        out[detected] = truth.original[detected]
    return out, int(np.unique(detected).size)

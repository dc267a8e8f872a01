"""Finite Hamming-space geometry of a code.

Points are tuples of ``nu`` symbol indices in ``[0, N)``.  The census walks the
whole space ``N**nu`` and classifies each point as valid, correctable (one
nearest valid point) or ambiguous (two or more valid points tied at the
minimum distance).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import EntropyExceedsSpace, LengthMismatch, SingletonCode, SpaceTooLarge

DEFAULT_ENUMERATION_CAP = 2**24
# cells (points x valid points x nu) compared per chunk
_CHUNK_CELLS = 1 << 24


@dataclass(frozen=True)
class CodeSpace:
    n: int
    nu: int
    valid_points: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        pts = tuple(tuple(int(c) for c in p) for p in self.valid_points)
        object.__setattr__(self, "valid_points", pts)
        if self.n < 1 or self.nu < 1:
            raise ValueError("alphabet size and dimension must be positive")
        if not pts:
            raise ValueError("a code space needs at least one valid point")
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate valid points")
        for p in pts:
            if len(p) != self.nu or not all(0 <= c < self.n for c in p):
                raise ValueError(f"valid point {p} is not in [0, {self.n})^{self.nu}")

    @property
    def total_points(self) -> int:
        return self.n**self.nu

    def contains(self, point: Sequence[int]) -> bool:
        return len(point) == self.nu and all(0 <= int(c) < self.n for c in point)


@dataclass(frozen=True)
class CensusReport:
    total_points: int
    valid: int
    correctable: int
    ambiguous: int
    distance: int | None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Ambiguous:
    """Marker returned when several valid points tie for nearest."""

    candidates: tuple[tuple[int, ...], ...]
    distance: int


def repetition_code(nu: int, n: int = 2) -> CodeSpace:
    return CodeSpace(n, nu, tuple((s,) * nu for s in range(n)))


def hamming_distance(u: Sequence, v: Sequence) -> int:
    if len(u) != len(v):
        raise LengthMismatch(f"lengths {len(u)} and {len(v)} differ")
    return sum(a != b for a, b in zip(u, v))


def code_distance(space: CodeSpace) -> int:
    pts = space.valid_points
    if len(pts) < 2:
        raise SingletonCode("distance is undefined for a single valid point")
    return min(hamming_distance(a, b) for a, b in combinations(pts, 2))


def p_valid(entropy_bits: float, n: int, nu: int) -> float:
    """Chance that a uniformly drawn point of ``[0, n)^nu`` is a valid code point."""
    if entropy_bits < 0:
        raise ValueError("entropy must be nonnegative")
    log_space = nu * math.log2(n)
    if entropy_bits > log_space + 1e-12:
        raise EntropyExceedsSpace(f"2^{entropy_bits} valid points do not fit in {n}^{nu}")
    return min(1.0, 2.0 ** (entropy_bits - log_space))


def _points(start: int, stop: int, n: int, nu: int) -> np.ndarray:
    """Rows are the base-``n`` digits (most significant first) of ``start..stop-1``."""
    idx = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((idx.size, nu), dtype=np.int16)
    for k in range(nu - 1, -1, -1):
        digits[:, k] = idx % n
        idx //= n
    return digits


def _classify_chunk(start: int, stop: int, space: CodeSpace, valid: np.ndarray):
    pts = _points(start, stop, space.n, space.nu)
    dist = (pts[:, None, :] != valid[None, :, :]).sum(axis=2)
    dmin = dist.min(axis=1)
    ties = (dist == dmin[:, None]).sum(axis=1)
    n_valid = int((dmin == 0).sum())
    n_amb = int(((dmin > 0) & (ties > 1)).sum())
    n_corr = int(((dmin > 0) & (ties == 1)).sum())
    return n_valid, n_corr, n_amb


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MLEC_THREADS", "1")))
    except ValueError:
        return 1


def census(space: CodeSpace, cap: int = DEFAULT_ENUMERATION_CAP) -> CensusReport:
    """Exhaustive valid / correctable / ambiguous counts over the whole space.

    Chunks may run on a thread pool (``MLEC_THREADS``); counts are integers so
    the result does not depend on the partitioning.
    """
    total = space.total_points
    if total > cap:
        raise SpaceTooLarge(f"{space.n}^{space.nu} = {total} points exceeds the cap of {cap}")
    valid = np.array(space.valid_points, dtype=np.int16)
    chunk = max(1, _CHUNK_CELLS // (len(valid) * space.nu))
    bounds = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    workers = _worker_count()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _classify_chunk(b[0], b[1], space, valid), bounds))
    else:
        parts = [_classify_chunk(a, b, space, valid) for a, b in bounds]
    n_valid, n_corr, n_amb = (sum(col) for col in zip(*parts))
    distance = code_distance(space) if len(space.valid_points) > 1 else None
    return CensusReport(total, n_valid, n_corr, n_amb, distance)


def nearest_valid(point: Sequence[int], space: CodeSpace) -> tuple[int, ...] | Ambiguous:
    if not space.contains(point):
        raise LengthMismatch(f"point {tuple(point)} is not in the space")
    point = tuple(int(c) for c in point)
    dists = [hamming_distance(point, v) for v in space.valid_points]
    best = min(dists)
    tied = tuple(v for v, d in zip(space.valid_points, dists) if d == best)
    if len(tied) > 1:
        return Ambiguous(tied, best)
    return tied[0]

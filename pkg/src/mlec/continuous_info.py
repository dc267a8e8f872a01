"""Information measures along trajectories through phase space.

A signal is a path ``q(t)`` sampled on a time grid, and a density field gives
``p(q, t)``.  Divergences here integrate density values *along the paths*
over time (trapezoid rule, log base 2), i.e. they are time integrals and not
the usual state-space KL.  Every integral is divided by the interval length,
so results are bits per unit time; on the unit interval the two coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridMismatch, NotAProductDensity

PRODUCT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a trajectory needs at least two time samples")
        if not (np.diff(t) > 0).all():
            raise ValueError("time grid must be strictly increasing")
        if x.ndim != 2 or x.shape[0] != t.size or x.shape[1] < 1:
            raise ValueError(f"points of shape {x.shape} do not match {t.size} time samples")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", x)

    @property
    def nu(self) -> int:
        return self.points.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @staticmethod
    def grid(t0: float, t1: float, step: float) -> np.ndarray:
        n = int(round((t1 - t0) / step))
        return np.linspace(t0, t1, max(n, 1) + 1)

    @classmethod
    def linear(cls, times, start: Sequence[float], velocity: Sequence[float]) -> "Trajectory":
        t = np.asarray(times, dtype=float)
        start = np.atleast_1d(np.asarray(start, dtype=float))
        velocity = np.atleast_1d(np.asarray(velocity, dtype=float))
        return cls(t, start[None, :] + np.outer(t - t[0], velocity))

    @classmethod
    def sine(cls, times, offset, amplitude, frequency, phase=0.0) -> "Trajectory":
        t = np.asarray(times, dtype=float)[:, None]
        offset, amplitude, frequency, phase = (
            np.atleast_1d(np.asarray(v, dtype=float)) for v in (offset, amplitude, frequency, phase)
        )
        return cls(t[:, 0], offset + amplitude * np.sin(2 * np.pi * frequency * t + phase))

    @classmethod
    def concat(cls, *trajs: "Trajectory") -> "Trajectory":
        """Append coordinates of paths that share one grid."""
        _check_grids(*trajs)
        return cls(trajs[0].times, np.hstack([tr.points for tr in trajs]))


class DensityField:
    kind = "abstract"

    def evaluate(self, points: np.ndarray, times: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def along(self, traj: Trajectory) -> np.ndarray:
        return self.evaluate(traj.points, traj.times)


@dataclass(frozen=True, eq=False)
class ConstantDensity(DensityField):
    value: float
    kind = "constant"

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("density must be nonnegative")

    def evaluate(self, points, times):
        return np.full(np.shape(times), float(self.value))


@dataclass(frozen=True, eq=False)
class GaussianDensity(DensityField):
    """Axis-aligned normal density whose mean may drift linearly in time."""

    mean: Sequence[float]
    std: Sequence[float]
    drift: Sequence[float] | None = None
    kind = "gaussian"

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        std = np.atleast_1d(np.asarray(self.std, dtype=float))
        drift = np.zeros_like(mean) if self.drift is None else np.atleast_1d(np.asarray(self.drift, dtype=float))
        if not (mean.shape == std.shape == drift.shape):
            raise ValueError("mean, std and drift must have the same length")
        if not (std > 0).all():
            raise ValueError("std must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "drift", drift)

    def evaluate(self, points, times):
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        mu = self.mean[None, :] + np.outer(times, self.drift)
        u = (x - mu) / self.std
        norm = np.prod(self.std) * (2 * np.pi) ** (len(self.std) / 2)
        return np.exp(-0.5 * (u * u).sum(axis=1)) / norm


@dataclass(frozen=True, eq=False)
class ProductDensity(DensityField):
    """Product of factor densities, each reading its own coordinates.

    ``factors`` is a sequence of ``(density, coordinate indices)``.  With a
    single factor this is just that density applied to a subset of the
    coordinates.
    """

    factors: tuple
    kind = "product"

    def __post_init__(self):
        fs = tuple((d, tuple(int(i) for i in dims)) for d, dims in self.factors)
        if not fs:
            raise ValueError("product needs at least one factor")
        object.__setattr__(self, "factors", fs)

    @classmethod
    def of_1d(cls, densities: Sequence[DensityField]) -> "ProductDensity":
        return cls(tuple((d, (i,)) for i, d in enumerate(densities)))

    def evaluate(self, points, times):
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        out = np.ones(np.shape(times))
        for d, dims in self.factors:
            out = out * d.evaluate(x[:, list(dims)], times)
        return out


def _check_grids(*trajs: Trajectory) -> None:
    t0 = trajs[0].times
    for tr in trajs[1:]:
        if tr.times.shape != t0.shape or not np.array_equal(tr.times, t0):
            raise GridMismatch("trajectories do not share a time grid")


def _time_average(y: np.ndarray, t: np.ndarray) -> float:
    # np.sum reduces pairwise in a fixed order
    area = float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))
    return area / float(t[-1] - t[0])


def _plogp_ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """``a log2(a/b)`` with 0 log 0 = 0; None when ``b = 0`` under ``a > 0``."""
    if ((b <= 0) & (a > 0)).any():
        return None
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log2(a[pos] / b[pos])
    return out


def path_relative_entropy(p_a: DensityField, traj_a: Trajectory, p_b: DensityField, traj_b: Trajectory) -> float:
    """Time-averaged ``p_a(a) log2(p_a(a) / p_b(b))`` along the two paths.

    Returns ``math.inf`` when ``p_b`` vanishes somewhere ``p_a`` does not.
    """
    _check_grids(traj_a, traj_b)
    y = _plogp_ratio(p_a.along(traj_a), p_b.along(traj_b))
    if y is None:
        return math.inf
    return _time_average(y, traj_a.times)


def _coords(start: int, n: int) -> tuple[int, ...]:
    return tuple(range(start, start + n))


def path_mutual_information(
    joint: DensityField,
    marginal_a: DensityField,
    marginal_b: DensityField,
    traj_a: Trajectory,
    traj_b: Trajectory,
) -> float:
    """Divergence of ``joint`` from ``marginal_a * marginal_b``.

    ``joint`` reads the appended coordinates ``(a, b)``.
    """
    path = Trajectory.concat(traj_a, traj_b)
    product = ProductDensity(
        ((marginal_a, _coords(0, traj_a.nu)), (marginal_b, _coords(traj_a.nu, traj_b.nu)))
    )
    return path_relative_entropy(joint, path, product, path)


def expected_entropy(
    p: DensityField,
    traj: Trajectory,
    other: DensityField | None = None,
    other_traj: Trajectory | None = None,
) -> float:
    """``-p log2 p`` weighted by the product of the other inputs' densities."""
    a = p.along(traj)
    if other is None:
        w = np.ones_like(a)
    else:
        other_traj = traj if other_traj is None else other_traj
        _check_grids(traj, other_traj)
        w = other.along(other_traj)
    y = np.zeros_like(a)
    pos = a > 0
    y[pos] = -a[pos] * w[pos] * np.log2(a[pos])
    return _time_average(y, traj.times)


def entropy(p: DensityField, traj: Trajectory) -> float:
    return expected_entropy(p, traj)


@dataclass(frozen=True)
class AdditivityReport:
    H_r: float
    mutual_information: tuple[float, ...]
    sum_I: float
    gap: float

    def to_dict(self) -> dict:
        return {
            "H_r": self.H_r,
            "mutual_information": list(self.mutual_information),
            "sum_I": self.sum_I,
            "gap": self.gap,
        }


def _validate_product(inputs, output: DensityField, traj: Trajectory) -> None:
    _check_grids(traj, *(tr for _, tr in inputs))
    prod = np.ones(traj.times.shape)
    for d, tr in inputs:
        prod = prod * d.along(tr)
    out = output.along(traj)
    if not np.allclose(out, prod, rtol=PRODUCT_TOL, atol=PRODUCT_TOL):
        worst = float(np.max(np.abs(out - prod)))
        raise NotAProductDensity(f"output density differs from the product of inputs by up to {worst:.3g}")


def _mi_with_inputs(inputs, idx: Sequence[int], output: DensityField, traj: Trajectory) -> float:
    """I(q_S; r) for the inputs in ``idx``, with p(q_S, r) = p(r)."""
    chosen = [inputs[i] for i in idx]
    trajs = [tr for _, tr in chosen]
    offsets = np.cumsum([0] + [tr.nu for tr in trajs])
    marginal = ProductDensity(tuple((d, _coords(int(o), tr.nu)) for (d, tr), o in zip(chosen, offsets)))
    in_path = Trajectory.concat(*trajs)
    joint = ProductDensity(((output, _coords(in_path.nu, traj.nu)),))
    return path_mutual_information(joint, marginal, output, in_path, traj)


def additivity_check(inputs: Sequence[tuple[DensityField, Trajectory]], output: DensityField, traj: Trajectory):
    """Compare H(r) with the sum of I(q; r) over independent inputs.

    ``output`` must equal the product of the input densities along the paths.
    """
    inputs = list(inputs)
    _validate_product(inputs, output, traj)
    H_r = entropy(output, traj)
    mis = tuple(_mi_with_inputs(inputs, [i], output, traj) for i in range(len(inputs)))
    total = math.fsum(mis)
    return AdditivityReport(H_r, mis, total, abs(H_r - total))


def conditional_entropy(
    inputs: Sequence[tuple[DensityField, Trajectory]],
    output: DensityField,
    traj: Trajectory,
    given: Sequence[int],
) -> float:
    """H(r | q_given) = H(r) - I(q_given; r)."""
    inputs = list(inputs)
    _validate_product(inputs, output, traj)
    H_r = entropy(output, traj)
    given = sorted(set(int(i) for i in given))
    if not given:
        return H_r
    return H_r - _mi_with_inputs(inputs, given, output, traj)

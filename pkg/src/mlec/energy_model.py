"""Energy of error correction split across levels, and where to spend it.

Two-level model, normalised by the bits seen at the first level::

    E / I_QR = K_R + f L_R z(K_R) + alpha K_S(K_R) + f L_S alpha (1 - z(K_R))

with ``alpha = I_RS / I_QR`` and ``K_S = b_S + k_S(K_R)``.  The bound is used
as the model value.  Derivatives come from closed forms per family; finite
differences are only used by the tests.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NotDifferentiable
from .noise_channel import EfficacyFamily

GRID_POINTS = 1024
REL_TOL = 1e-6
_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class KsDependency:
    """Part of the level-S detection cost that shrinks as K_R grows.

    ``independent``:       k = 0
    ``exponential_decay``: k = k0 exp(-K / scale)
    ``linear_ramp``:       k = k0 max(0, 1 - K / scale), reaching zero at K = scale
    ``step``:              k = k0 for K < scale, 0 from K = scale on
    """

    kind: str = "independent"
    k0: float = 0.0
    scale: float = 1.0

    KINDS = ("independent", "exponential_decay", "linear_ramp", "step")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown k_S dependency {self.kind!r}")
        if self.k0 < 0:
            raise ValueError("k0 must be nonnegative")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def __call__(self, K):
        K = np.asarray(K, dtype=float)
        if self.kind == "independent":
            k = np.zeros_like(K)
        elif self.kind == "exponential_decay":
            k = self.k0 * np.exp(-K / self.scale)
        elif self.kind == "linear_ramp":
            k = self.k0 * np.maximum(0.0, 1.0 - K / self.scale)
        else:
            k = np.where(K < self.scale, self.k0, 0.0)
        return float(k) if k.ndim == 0 else k

    def derivative(self, K: float) -> float:
        if self.kind == "independent":
            return 0.0
        if self.kind == "exponential_decay":
            return -self.k0 / self.scale * math.exp(-K / self.scale)
        if K == self.scale and self.k0 > 0:
            raise NotDifferentiable(f"{self.kind} k_S has a kink or jump at K={self.scale}")
        if self.kind == "linear_ramp":
            return -self.k0 / self.scale if K < self.scale else 0.0
        return 0.0


@dataclass(frozen=True)
class EnergyParams:
    f: float
    L_R: float
    L_S: float
    I_QR: float = 1.0
    I_RS: float = 1.0
    z_family: EfficacyFamily = field(default_factory=EfficacyFamily)
    ks_model: KsDependency = field(default_factory=KsDependency)
    b_S: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.f < 1.0:
            raise ValueError("f must lie in [0, 1)")
        for name in ("L_R", "L_S", "I_RS", "b_S"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not self.I_QR > 0:
            raise ValueError("I_QR must be positive")

    @classmethod
    def with_alpha(cls, alpha: float, **kw) -> "EnergyParams":
        return cls(I_QR=1.0, I_RS=float(alpha), **kw)

    @property
    def alpha(self) -> float:
        return self.I_RS / self.I_QR

    def K_S(self, K_R):
        return self.b_S + self.ks_model(K_R)


@dataclass(frozen=True)
class AllocationResult:
    K: tuple[float, ...]
    energy: float
    energy_normalized: float
    status: str  # boundary | interior | flat

    @property
    def K_R(self) -> float:
        return self.K[0]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["K"] = list(self.K)
        return d


def energy_one_level(p: EnergyParams, K_R: float) -> float:
    return K_R * p.I_QR + p.f * p.L_R * p.I_QR * p.z_family(K_R)


def added_noise_term(p: EnergyParams, g: float) -> float:
    """Normalised cost of repairing fresh R->S errors at S; independent of K_R."""
    if not 0.0 <= g < 1.0:
        raise ValueError("noise rate g must lie in [0, 1)")
    return g * p.L_S * p.alpha


def energy_two_level(p: EnergyParams, K_R, noise_g: float = 0.0):
    """E / I_QR at ``K_R`` (scalar or array)."""
    z = p.z_family(K_R)
    a = p.alpha
    E = np.asarray(K_R, dtype=float) + p.f * p.L_R * z + p.K_S(K_R) * a + p.f * p.L_S * a * (1.0 - z)
    if noise_g:
        E = E + added_noise_term(p, noise_g)
    return float(E) if np.ndim(E) == 0 else E


def marginal_condition(p: EnergyParams, K_R: float) -> float:
    """dE/dK_R of the normalised two-level energy; zero at a stationary point."""
    dz = p.z_family.derivative(K_R)
    return 1.0 + p.f * (p.L_R - p.alpha * p.L_S) * dz + p.alpha * p.ks_model.derivative(K_R)


def final_mess_residual(p: EnergyParams, K_R: float) -> float:
    """``-k_S'`` minus the slope it has to beat; zero exactly where the marginal is zero."""
    a = p.alpha
    if a == 0:
        raise ValueError("residual is undefined for alpha = 0")
    dz = p.z_family.derivative(K_R)
    dk = p.ks_model.derivative(K_R)
    return -dk - (1.0 / a + p.f * (p.L_R - a * p.L_S) / a * dz)


def golden_section(fun: Callable[[float], float], lo: float, hi: float, xtol: float):
    """Shrink ``[lo, hi]`` around a minimum; returns the best point evaluated."""
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    best = (x1, f1) if f1 <= f2 else (x2, f2)
    while hi - lo > xtol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = fun(x1)
            if f1 < best[1]:
                best = (x1, f1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = fun(x2)
            if f2 < best[1]:
                best = (x2, f2)
    return best


def minimize_1d(fun: Callable, K_max: float, grid_points: int = GRID_POINTS):
    """Global minimum of ``fun`` on ``[0, K_max]``: grid bracketing, then golden section.

    ``fun`` must accept arrays.  Ties within the tolerance go to the smaller K.
    Returns ``(K, value, status)``.
    """
    if not K_max > 0:
        raise ValueError("K_max must be positive")
    grid = np.linspace(0.0, K_max, grid_points)
    E = np.asarray(fun(grid), dtype=float)
    spread = float(E.max() - E.min())
    tol = REL_TOL * max(1.0, spread)
    if spread < tol:
        return 0.0, float(E[0]), "flat"

    i = int(np.argmin(E))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    x, fx = golden_section(lambda k: float(fun(k)), lo, hi, xtol=REL_TOL * K_max)
    if E[i] < fx:
        x, fx = float(grid[i]), float(E[i])
    if E[-1] < fx:
        x, fx = K_max, float(E[-1])
    if E[0] <= fx + tol:
        return 0.0, float(E[0]), "boundary"
    status = "boundary" if x >= K_max else "interior"
    return float(x), float(fx), status


def optimize_two_level(p: EnergyParams, K_max: float, noise_g: float = 0.0) -> AllocationResult:
    K, E, status = minimize_1d(lambda k: energy_two_level(p, k, noise_g), K_max)
    return AllocationResult((K, float(p.K_S(K))), E * p.I_QR, E, status)


def energy_curve(p: EnergyParams, K_max: float, points: int = 101, noise_g: float = 0.0):
    """Rows of (K_R, E_normalized, z, K_S) for plotting."""
    K = np.linspace(0.0, K_max, points)
    E = energy_two_level(p, K, noise_g)
    z = p.z_family(K)
    KS = np.broadcast_to(p.K_S(K), K.shape)
    return [tuple(float(v) for v in row) for row in zip(K, E, z, KS)]


@dataclass(frozen=True)
class LevelSpec:
    """One level of a chain.

    ``I`` is the bit count seen at the level, ``L`` the per-bit repair cost and
    ``z_family`` the efficacy of its discretionary detection energy (ignored
    for the last level, which repairs whatever is left).  ``ks`` links the
    level's required detection cost to the predecessor's energy, on top of
    the fixed part ``b``.
    """

    L: float
    I: float
    z_family: EfficacyFamily | None = None
    ks: KsDependency = field(default_factory=KsDependency)
    b: float = 0.0


def multilevel_energy(levels: Sequence[LevelSpec], f: float, K: Sequence[float]) -> float:
    """Normalised energy (per bit of the first level) for decision energies ``K``.

    ``K`` has one entry per level except the last.  Errors arrive at rate ``f``
    at the first level; level ``i`` repairs a fraction ``z_i(K_i)`` of the
    errors still outstanding and the last level repairs the rest.
    """
    n = len(levels)
    if len(K) != n - 1:
        raise ValueError(f"expected {n - 1} decision energies, got {len(K)}")
    I0 = levels[0].I
    outstanding = 1.0
    E = 0.0
    for i, lev in enumerate(levels):
        a = lev.I / I0
        spend = lev.b + (lev.ks(K[i - 1]) if i > 0 else 0.0)
        if i < n - 1:
            spend += K[i]
            z = lev.z_family(K[i]) if lev.z_family is not None else 0.0
        else:
            z = 1.0
        E += a * (spend + f * lev.L * outstanding * z)
        outstanding *= 1.0 - z
    return E


def _level_spend(levels: Sequence[LevelSpec], K: Sequence[float]) -> tuple[float, ...]:
    last = levels[-1]
    tail = last.b + last.ks(K[-1])
    return tuple(float(k) for k in K) + (float(tail),)


def optimize_multilevel(
    levels: Sequence[LevelSpec],
    K_max: float,
    f: float,
    max_sweeps: int = 100,
) -> AllocationResult:
    """Allocate detection energy over a chain of two or more levels.

    First pass: for each level in turn, everything after it is one aggregate
    level (held at the current allocation) and the level's energy is chosen by
    the 1-D optimiser.  Then coordinate descent until a sweep improves the
    total by less than the tolerance.
    """
    levels = list(levels)
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    if any(lev.I < 0 for lev in levels) or not levels[0].I > 0:
        raise ValueError("bit counts must be nonnegative, first level positive")
    if len(levels) == 2:
        first, second = levels
        p = EnergyParams(
            f=f,
            L_R=first.L,
            L_S=second.L,
            I_QR=first.I,
            I_RS=second.I,
            z_family=first.z_family or EfficacyFamily(z_max=0.0),
            ks_model=second.ks,
            b_S=second.b,
        )
        res = optimize_two_level(p, K_max)
        if first.b:
            E = res.energy_normalized + first.b
            res = AllocationResult(res.K, E * first.I, E, res.status)
        return res

    n_dec = len(levels) - 1
    K = [0.0] * n_dec
    statuses = [""] * n_dec

    def along(i):
        def fun(k):
            k_arr = np.atleast_1d(np.asarray(k, dtype=float))
            out = np.empty(k_arr.shape)
            for j, kv in enumerate(k_arr):
                trial = list(K)
                trial[i] = float(kv)
                out[j] = multilevel_energy(levels, f, trial)
            return out if np.ndim(k) else float(out[0])

        return fun

    for i in range(n_dec):
        K[i], _, statuses[i] = minimize_1d(along(i), K_max)
    E = multilevel_energy(levels, f, K)
    for _ in range(max_sweeps):
        prev = E
        for i in range(n_dec):
            K[i], _, statuses[i] = minimize_1d(along(i), K_max)
        E = multilevel_energy(levels, f, K)
        if prev - E < REL_TOL * max(1.0, abs(prev)):
            break

    if all(s == "flat" for s in statuses):
        status = "flat"
    elif all(k == 0.0 or k >= K_max for k in K):
        status = "boundary"
    else:
        status = "interior"
    return AllocationResult(_level_spend(levels, K), E * levels[0].I, E, status)

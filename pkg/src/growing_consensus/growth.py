"""Population growth N' = b(t, N) N, its generalized inverse and regime taxonomy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

REGIMES = ("finite", "linear", "subexponential", "exponential", "superexponential", "unclassified")


@dataclass(frozen=True)
class GrowthRate:
    """A nonnegative growth rate b(t, N).

    ``kind`` is one of ``constant`` (``value``), ``power_decay`` (``alpha``,
    regularized to ``(1 + t) ** -alpha``), ``table`` (``points`` as
    ``[[t, b], ...]``, piecewise linear, constant beyond the ends) or
    ``custom`` (``func(t, N)``).
    """

    kind: str
    value: float = 0.0
    alpha: float = 0.0
    points: tuple[tuple[float, float], ...] = ()
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "constant":
            if not math.isfinite(self.value) or self.value < 0:
                raise ValueError(f"constant growth rate must be finite and >= 0, got {self.value}")
        elif self.kind == "power_decay":
            if not math.isfinite(self.alpha):
                raise ValueError("power_decay alpha must be finite")
        elif self.kind == "table":
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
                raise ValueError("table growth rate needs points [[t, b], ...]")
            if np.any(np.diff(pts[:, 0]) <= 0):
                raise ValueError("table growth rate times must be strictly increasing")
            if np.any(pts[:, 1] < 0) or not np.all(np.isfinite(pts)):
                raise ValueError("table growth rate values must be finite and >= 0")
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom growth rate needs func(t, N)")
        else:
            raise ValueError(f"unknown growth rate kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> GrowthRate:
        return cls("constant", value=float(value))

    @classmethod
    def power_decay(cls, alpha: float) -> GrowthRate:
        return cls("power_decay", alpha=float(alpha))

    @classmethod
    def table(cls, points) -> GrowthRate:
        return cls("table", points=tuple((float(t), float(b)) for t, b in points))

    @classmethod
    def custom(cls, func) -> GrowthRate:
        return cls("custom", func=func)

    def evaluate(self, t, N=1.0):
        """b(t, N); vectorized over ``t`` and ``N``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = np.full(np.broadcast(t, np.asarray(N)).shape, self.value)
        elif self.kind == "power_decay":
            out = (1.0 + t) ** (-self.alpha)
        elif self.kind == "table":
            pts = np.asarray(self.points, dtype=float)
            out = np.interp(t, pts[:, 0], pts[:, 1])
        else:
            out = np.asarray(self.func(t, np.asarray(N, dtype=float)), dtype=float)
        if out.ndim == 0:
            return float(out)
        return out

    def total_integral(self) -> float | None:
        """Closed-form value of the integral of b over [0, inf), when known."""
        if self.kind == "constant":
            return 0.0 if self.value == 0 else math.inf
        if self.kind == "power_decay":
            return 1.0 / (self.alpha - 1.0) if self.alpha > 1 else math.inf
        return None

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "power_decay":
            return {"kind": "power_decay", "alpha": self.alpha}
        if self.kind == "table":
            return {"kind": "table", "points": [list(p) for p in self.points]}
        return {"kind": "custom"}


def classify_growth(rate: GrowthRate) -> str:
    """Growth regime of a preset rate from its large-time behaviour."""
    if rate.kind == "power_decay":
        a = rate.alpha
        if a > 1:
            return "finite"
        if a == 1:
            return "linear"
        if a > 0:
            return "subexponential"
        if a == 0:
            return "exponential"
        return "superexponential"
    if rate.kind == "constant":
        return "exponential" if rate.value > 0 else "finite"
    return "unclassified"


def _checked_rate(rate: GrowthRate, t: float, N: float) -> float:
    b = rate.evaluate(t, N)
    if not math.isfinite(b):
        raise ValueError(f"growth rate is not finite at t={t}, N={N}")
    if b < 0:
        raise ValueError(f"growth rate is negative at t={t}: {b}")
    return b


@dataclass(frozen=True)
class PopulationPath:
    """Population trajectory sampled on a time grid.

    ``log_growth`` holds the running integral of b, i.e. ``log(N / N0)``;
    every consumer that needs that integral reads it from here.
    """

    N0: float
    rate: GrowthRate
    times: np.ndarray
    N: np.ndarray
    log_growth: np.ndarray
    regime: str

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(self.times, self.log_growth, extrapolate=False)

    @cached_property
    def rates(self) -> np.ndarray:
        """b(t_k, N_k) on the grid."""
        return np.asarray(self.rate.evaluate(self.times, self.N), dtype=float) * np.ones_like(self.times)

    @property
    def Ndot(self) -> np.ndarray:
        return self.rates * self.N

    def integral_b(self, t):
        """Integral of b over [0, t] (monotone cubic dense output between grid points)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon * (1 + 1e-12) + 1e-12):
            raise ValueError(f"time outside the path horizon [0, {self.horizon}]")
        out = self._interp(np.clip(t, 0.0, self.horizon))
        return float(out) if out.ndim == 0 else out

    def population(self, t):
        y = self.integral_b(t)
        return self.N0 * np.exp(y)

    def index(self, t: float) -> int:
        """Grid index of a time that lies on the grid (nearest point otherwise)."""
        return int(np.clip(np.searchsorted(self.times, t - 1e-9 * max(1.0, abs(t))), 0, len(self.times) - 1))


def integrate_population(rate: GrowthRate, N0: float, t_end: float, dt: float) -> PopulationPath:
    """Integrate N' = b(t, N) N on {0, dt, ..., t_end} with classical RK4.

    The scheme advances y = log(N / N0), so N stays positive and, with
    b >= 0, nondecreasing by construction.
    """
    if not N0 > 0:
        raise ValueError("N0 must be > 0")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not t_end >= 0:
        raise ValueError("t_end must be >= 0")
    n = int(math.floor(t_end / dt + 1e-9))
    times = dt * np.arange(n + 1)
    if t_end - times[-1] > 1e-9 * max(1.0, t_end):
        times = np.append(times, t_end)
    y = np.zeros_like(times)
    for k in range(len(times) - 1):
        t, h = times[k], times[k + 1] - times[k]
        yk = y[k]
        k1 = _checked_rate(rate, t, N0 * math.exp(yk))
        k2 = _checked_rate(rate, t + h / 2, N0 * math.exp(yk + h / 2 * k1))
        k3 = _checked_rate(rate, t + h / 2, N0 * math.exp(yk + h / 2 * k2))
        k4 = _checked_rate(rate, t + h, N0 * math.exp(yk + h * k3))
        y[k + 1] = yk + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    _checked_rate(rate, times[-1], N0 * math.exp(y[-1]))
    return PopulationPath(N0=float(N0), rate=rate, times=times, N=N0 * np.exp(y),
                          log_growth=y, regime=classify_growth(rate))


def generalized_inverse(path: PopulationPath, s: float) -> float:
    """inf{t : N_t > s}; ``math.inf`` if the path never exceeds ``s`` on its horizon."""
    if s < 0:
        raise ValueError("s must be >= 0")
    N = path.N
    if s < N[0]:
        return 0.0
    if N[-1] <= s:
        return math.inf
    k = int(np.searchsorted(N, s, side="right"))
    lo, hi = float(path.times[k - 1]), float(path.times[k])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if path.population(mid) > s:
            hi = mid
        else:
            lo = mid
    return hi


def semi_explicit_residual(path: PopulationPath) -> float:
    """max_t |N_t - N0 exp(trapezoid of b)| / N_t on the grid."""
    from scipy.integrate import cumulative_trapezoid

    quad = cumulative_trapezoid(path.rates, path.times, initial=0.0)
    return float(np.max(np.abs(path.N - path.N0 * np.exp(quad)) / path.N))


def rate_jumps(rate: GrowthRate, times, lipschitz_bound: float, N=1.0) -> np.ndarray:
    """Indices of grid intervals where b jumps by more than 10 L_b dt (relative)."""
    times = np.asarray(times, dtype=float)
    b = np.asarray(rate.evaluate(times, N), dtype=float) * np.ones_like(times)
    jump = np.abs(np.diff(b)) / np.maximum(np.abs(b[:-1]), 1e-300)
    return np.nonzero(jump > 10 * lipschitz_bound * np.diff(times))[0]

"""Opinions X(t, N) assigned to newborn agents, and the (C1)/(C1') averages."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .growth import PopulationPath

KINDS = ("constant", "eventually_constant", "sinusoidal", "population_power", "table")


def _vec(x, dim: int | None = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError("opinion vectors must be one-dimensional")
    if dim is not None and len(v) == 1 and dim > 1:
        v = np.full(dim, v[0])
    return v


@dataclass(frozen=True, eq=False)
class InflowProfile:
    """Boundary profile X(t, N) in R^d with uniform bound ``x_bound``.

    Parameters by kind:

    * ``constant``: ``xc``
    * ``eventually_constant``: ``xc``, ``t0``, ``x_start``; a C^1 smoothstep
      from ``x_start`` at t = 0 to ``xc`` at ``t0``, constant afterwards
    * ``sinusoidal``: ``amplitude``, ``frequency``, ``phase``;
      X = amplitude * sin(frequency * t + phase)
    * ``population_power``: ``c``, ``C``, ``eps``, ``n_min``; X = c + C N^-eps
      for N >= n_min
    * ``table``: ``points`` rows ``[t, x_1, ..., x_d]``, linear in t
    """

    kind: str
    dim: int
    x_bound: float
    xc: np.ndarray | None = None
    x_start: np.ndarray | None = None
    t0: float = 0.0
    amplitude: np.ndarray | None = None
    frequency: float = 1.0
    phase: float = 0.0
    c: np.ndarray | None = None
    C: np.ndarray | None = None
    eps: float = 0.0
    n_min: float = 1.0
    points: np.ndarray | None = None

    @property
    def differentiable(self) -> bool:
        return self.kind != "table"

    def values(self, t, N=None) -> np.ndarray:
        """X at arrays of times (and populations); shape (n, d)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise ValueError("inflow time must be >= 0")
        n = len(t)
        if self.kind == "constant":
            out = np.broadcast_to(self.xc, (n, self.dim)).copy()
        elif self.kind == "eventually_constant":
            u = np.clip(t / self.t0, 0.0, 1.0) if self.t0 > 0 else np.ones_like(t)
            s = u * u * (3.0 - 2.0 * u)
            out = self.x_start + s[:, None] * (self.xc - self.x_start)
        elif self.kind == "sinusoidal":
            out = np.sin(self.frequency * t + self.phase)[:, None] * self.amplitude
        elif self.kind == "population_power":
            if N is None:
                raise ValueError("population_power profile needs N")
            N = np.broadcast_to(np.asarray(N, dtype=float), t.shape)
            if np.any(N < self.n_min * (1 - 1e-12)):
                raise ValueError(f"population_power profile defined for N >= {self.n_min}")
            out = self.c + (N ** (-self.eps))[:, None] * self.C
        else:
            pts = self.points
            out = np.stack([np.interp(t, pts[:, 0], pts[:, j + 1]) for j in range(self.dim)], axis=1)
        norms = np.linalg.norm(out, axis=1)
        if np.any(norms > self.x_bound * (1 + 1e-12) + 1e-15):
            raise ValueError(f"inflow value exceeds the declared bound X_B={self.x_bound}")
        return out

    def evaluate(self, t: float, N: float | None = None) -> np.ndarray:
        return self.values([t], None if N is None else [N])[0]

    def time_derivative(self, t, N=None, Ndot=None) -> np.ndarray:
        """Total derivative X_t + X_N N' along the population path; shape (n, d)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = len(t)
        if self.kind == "table":
            raise ValueError("table inflow profiles are not differentiable")
        if self.kind == "constant":
            return np.zeros((n, self.dim))
        if self.kind == "eventually_constant":
            if self.t0 <= 0:
                return np.zeros((n, self.dim))
            u = np.clip(t / self.t0, 0.0, 1.0)
            ds = np.where((t >= 0) & (t < self.t0), 6.0 * u * (1.0 - u) / self.t0, 0.0)
            return ds[:, None] * (self.xc - self.x_start)
        if self.kind == "sinusoidal":
            return (self.frequency * np.cos(self.frequency * t + self.phase))[:, None] * self.amplitude
        if N is None or Ndot is None:
            raise ValueError("population_power derivative needs N and N'")
        N = np.broadcast_to(np.asarray(N, dtype=float), t.shape)
        Ndot = np.broadcast_to(np.asarray(Ndot, dtype=float), t.shape)
        return (-self.eps * N ** (-self.eps - 1.0) * Ndot)[:, None] * self.C

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.xc.tolist()
        elif self.kind == "eventually_constant":
            d.update(value=self.xc.tolist(), t0=self.t0, start=self.x_start.tolist())
        elif self.kind == "sinusoidal":
            d.update(amplitude=self.amplitude.tolist(), frequency=self.frequency, phase=self.phase)
        elif self.kind == "population_power":
            d.update(c=self.c.tolist(), C=self.C.tolist(), eps=self.eps, n_min=self.n_min)
        else:
            d["points"] = self.points.tolist()
        return d


def _finalize(kind, dim, natural, x_bound, **params) -> InflowProfile:
    if x_bound is None:
        x_bound = natural
    elif natural > x_bound * (1 + 1e-12):
        raise ValueError(f"{kind} inflow reaches |X| = {natural:.6g} above declared X_B = {x_bound}")
    return InflowProfile(kind=kind, dim=dim, x_bound=float(x_bound), **params)


def constant(xc, x_bound=None) -> InflowProfile:
    xc = _vec(xc)
    return _finalize("constant", len(xc), float(np.linalg.norm(xc)), x_bound, xc=xc)


def eventually_constant(xc, t0: float, x_start=0.0, x_bound=None) -> InflowProfile:
    xc = _vec(xc)
    xs = _vec(x_start, len(xc))
    if len(xs) != len(xc):
        raise ValueError("start and final values must have the same dimension")
    if t0 < 0:
        raise ValueError("t0 must be >= 0")
    natural = max(float(np.linalg.norm(xc)), float(np.linalg.norm(xs)))
    return _finalize("eventually_constant", len(xc), natural, x_bound, xc=xc, x_start=xs, t0=float(t0))


def sinusoidal(amplitude=1.0, frequency: float = 1.0, phase: float = 0.0, dim: int = 1,
               x_bound=None) -> InflowProfile:
    amp = _vec(amplitude, dim)
    return _finalize("sinusoidal", len(amp), float(np.linalg.norm(amp)), x_bound,
                     amplitude=amp, frequency=float(frequency), phase=float(phase))


def population_power(c=0.0, C=1.0, eps: float = 0.5, n_min: float = 1.0, dim: int = 1,
                     x_bound=None) -> InflowProfile:
    cv, Cv = _vec(c, dim), _vec(C, dim)
    if len(cv) != len(Cv):
        raise ValueError("c and C must have the same dimension")
    if not eps > 0 or not n_min > 0:
        raise ValueError("eps and n_min must be > 0")
    natural = float(np.linalg.norm(cv) + np.linalg.norm(Cv) * n_min ** (-eps))
    return _finalize("population_power", len(cv), natural, x_bound, c=cv, C=Cv,
                     eps=float(eps), n_min=float(n_min))


def table(points, x_bound=None) -> InflowProfile:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 2 or np.any(np.diff(pts[:, 0]) <= 0):
        raise ValueError("inflow table needs rows [t, x_1..x_d] with increasing t")
    natural = float(np.linalg.norm(pts[:, 1:], axis=1).max())
    return _finalize("table", pts.shape[1] - 1, natural, x_bound, points=pts)


def make_profile(spec: dict, dim: int = 1) -> InflowProfile:
    kind = spec["kind"]
    xb = spec.get("x_bound")
    if kind == "constant":
        return constant(_vec(spec["value"], dim), xb)
    if kind == "eventually_constant":
        return eventually_constant(_vec(spec["value"], dim), spec["t0"], _vec(spec.get("start", 0.0), dim), xb)
    if kind == "sinusoidal":
        return sinusoidal(spec.get("amplitude", 1.0), spec.get("frequency", 1.0), spec.get("phase", 0.0), dim, xb)
    if kind == "population_power":
        return population_power(spec.get("c", 0.0), spec.get("C", 1.0), spec.get("eps", 0.5),
                                spec.get("n_min", 1.0), dim, xb)
    if kind == "table":
        return table(spec["points"], xb)
    raise ValueError(f"unknown inflow kind {kind!r}")


# --- (C1) / (C1') quadratures on the population grid -----------------------


def _cumtrapz(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    h = np.diff(times)[:, None]
    steps = 0.5 * h * (values[1:] + values[:-1])
    return np.vstack([np.zeros((1, values.shape[1])), np.cumsum(steps, axis=0)])


def inflow_flux(profile: InflowProfile, path: PopulationPath) -> np.ndarray:
    """X(t_k, N_k) N'_k on the grid, with N' = b N taken pointwise."""
    return profile.values(path.times, path.N) * path.Ndot[:, None]


def _at(path: PopulationPath, cumulative: np.ndarray, integrand, t: float) -> np.ndarray:
    if t < 0 or t > path.horizon * (1 + 1e-12):
        raise ValueError(f"t={t} outside the path horizon")
    k = int(np.searchsorted(path.times, t, side="right")) - 1
    k = min(max(k, 0), len(path.times) - 1)
    out = cumulative[k].copy()
    tk = path.times[k]
    if t - tk > 1e-12 * max(1.0, t):
        out += 0.5 * (t - tk) * (integrand(np.array([tk]))[0] + integrand(np.array([t]))[0])
    return out


def c1_average_series(profile: InflowProfile, path: PopulationPath) -> np.ndarray:
    """(1/N_t) int_0^t X dN on every grid time; shape (n, d)."""
    return _cumtrapz(inflow_flux(profile, path), path.times) / path.N[:, None]


def c1_average(profile: InflowProfile, path: PopulationPath, t: float) -> np.ndarray:
    """(1/N_t) int_0^t X(s, N_s) N'_s ds by the trapezoidal rule on the path grid."""
    cum = _cumtrapz(inflow_flux(profile, path), path.times)

    def integrand(s):
        N = path.population(s)
        return profile.values(s, N) * (path.rate.evaluate(s, N) * N)[:, None]

    return _at(path, cum, integrand, t) / path.population(t)


def c1_residual(profile: InflowProfile, path: PopulationPath, t: float) -> float:
    """|c1_average(t) - X(t, N_t)|."""
    X = profile.evaluate(t, path.population(t))
    return float(np.linalg.norm(c1_average(profile, path, t) - X))


def c1_residual_series(profile: InflowProfile, path: PopulationPath) -> np.ndarray:
    X = profile.values(path.times, path.N)
    return np.linalg.norm(c1_average_series(profile, path) - X, axis=1)


def c1_prime_integral(profile: InflowProfile, path: PopulationPath, t: float) -> np.ndarray:
    """(1/N_t) int_0^t X'(s, N_s) N_s ds, with X' the total time derivative."""
    if not profile.differentiable:
        raise ValueError(f"{profile.kind} inflow profile is not differentiable")

    def integrand(s):
        s = np.atleast_1d(s)
        N = path.population(s) if not np.array_equal(s, path.times) else path.N
        b = path.rate.evaluate(s, N) * np.ones_like(s)
        return profile.time_derivative(s, N, b * N) * N[:, None]

    cum = _cumtrapz(integrand(path.times), path.times)
    return _at(path, cum, integrand, t) / path.population(t)


def c1_oscillation(profile: InflowProfile, path: PopulationPath, t_start: float,
                   window: float = 2 * math.pi) -> float:
    """max - min of the (C1) residual over grid times in [t_start, t_start + window]."""
    res = c1_residual_series(profile, path)
    mask = (path.times >= t_start - 1e-12) & (path.times <= t_start + window + 1e-12)
    if not mask.any():
        raise ValueError("window contains no grid times")
    r = res[mask]
    return float(r.max() - r.min())


def c1_holds(profile: InflowProfile, path: PopulationPath, window: float = 2 * math.pi,
             rel_tol: float = 0.1) -> bool:
    """Finite-horizon surrogate for (C1): the residual stays below ``rel_tol * X_B``
    over the trailing window of the path.  Always false for finite-growth regimes."""
    if path.regime == "finite":
        return False
    res = c1_residual_series(profile, path)
    mask = path.times >= path.horizon - min(window, 0.5 * path.horizon) - 1e-12
    scale = max(profile.x_bound, 1e-300)
    return bool(res[mask].max() <= rel_tol * scale)

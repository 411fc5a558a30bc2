"""Reference values for the mean opinion and the variance envelopes.

Quadratures reuse the log-population table of a :class:`PopulationPath`,
so oracle and simulator share one integral of b.  Trapezoidal values carry
a step-halving error estimate: the difference to the same rule on every
other grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .growth import GrowthRate, PopulationPath, classify_growth, integrate_population
from .inflow import InflowProfile, c1_prime_integral, inflow_flux

classify = classify_growth


@dataclass(frozen=True)
class OracleResult:
    t: float
    value: np.ndarray | float
    method: str
    estimated_error: float


def _trapz_with_error(times: np.ndarray, f: np.ndarray, k: int):
    """Trapezoid of f over times[:k+1] and |I_h - I_2h|."""
    fine = np.trapezoid(f[: k + 1], times[: k + 1], axis=0)
    idx = np.arange(0, k + 1, 2)
    if idx[-1] != k:
        idx = np.append(idx, k)
    coarse = np.trapezoid(f[idx], times[idx], axis=0)
    return fine, float(np.max(np.abs(np.atleast_1d(fine - coarse))))


def _grid_index(path: PopulationPath, t: float) -> int:
    k = path.index(t)
    if abs(path.times[k] - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"t={t} is not a grid time of the population path")
    return k


def m1_closed_form(rate: GrowthRate, profile: InflowProfile, path: PopulationPath, m1_0, t: float) -> OracleResult:
    """m1(t) = (N0 / N_t) m1(0) + (1 / N_t) int_0^t X dN.

    Constant profiles are exact in N_t; otherwise the integral is a
    trapezoid on the path grid with integrand X(s, N_s) b(s, N_s) N_s.
    """
    if rate is not path.rate and rate != path.rate:
        raise ValueError("rate does not match the population path")
    m1_0 = np.atleast_1d(np.asarray(m1_0, dtype=float))
    k = _grid_index(path, t)
    Nt = path.N[k]
    if profile.kind == "constant":
        val = profile.xc + (m1_0 - profile.xc) * path.N0 / Nt
        return OracleResult(float(path.times[k]), val, "closed_form", 0.0)
    integral, err = _trapz_with_error(path.times, inflow_flux(profile, path), k)
    val = (path.N0 * m1_0 + integral) / Nt
    return OracleResult(float(path.times[k]), val, "quadrature", err / Nt)


def m1_limit(rate: GrowthRate, profile: InflowProfile, m1_0, N0: float = 1.0, dt: float = 0.01) -> OracleResult:
    """Limit of m1 for finite total population: (N0/N_inf) m1(0) + (1/N_inf) int_0^inf X dN.

    The path is extended until N_T >= 0.999 N_inf; the neglected tail is
    bounded by X_B (N_inf - N_T) / N_inf and added to the error estimate.
    """
    if classify_growth(rate) != "finite":
        raise ValueError("m1_limit needs a finite-population growth rate")
    m1_0 = np.atleast_1d(np.asarray(m1_0, dtype=float))
    total = rate.total_integral()
    N_inf = N0 * math.exp(total)
    if profile.kind == "constant":
        val = (N0 / N_inf) * m1_0 + (1 - N0 / N_inf) * profile.xc
        return OracleResult(math.inf, val, "closed_form", 0.0)
    T = 10.0
    while True:
        h = max(dt, T / 50_000)
        path = integrate_population(rate, N0, T, h)
        if path.N[-1] >= 0.999 * N_inf:
            break
        T *= 2
    integral, err = _trapz_with_error(path.times, inflow_flux(profile, path), len(path.times) - 1)
    tail = profile.x_bound * (N_inf - path.N[-1]) / N_inf
    val = (N0 * m1_0 + integral) / N_inf
    return OracleResult(math.inf, val, "quadrature", err / N_inf + tail)


def variance_bound_const_X(V_X_0: float, path: PopulationPath, t: float) -> float:
    """V_X(0) N0 / N_t, the constant-inflow envelope."""
    return V_X_0 * path.N0 / float(path.population(t))


def variance_envelope(V_0: float, m1_0, X_c, path: PopulationPath, t: float) -> float:
    """(V(0) + |m1(0) - X_c|^2) N0 / N_t."""
    gap = np.atleast_1d(np.asarray(m1_0, dtype=float)) - np.atleast_1d(np.asarray(X_c, dtype=float))
    return (V_0 + float(gap @ gap)) * path.N0 / float(path.population(t))


def lemma3_average(g, path: PopulationPath, t: float) -> OracleResult:
    """(1/N_t) int_0^t g(s) dN_s for g given as a callable of time or as values on the grid."""
    k = _grid_index(path, t)
    gv = np.asarray(g(path.times) if callable(g) else g, dtype=float) * np.ones_like(path.times)
    integral, err = _trapz_with_error(path.times, gv * path.Ndot, k)
    return OracleResult(float(path.times[k]), float(integral / path.N[k]), "quadrature", err / path.N[k])


def c2_residual(profile: InflowProfile, path: PopulationPath, m1_0, t: float) -> float:
    """| |m1(t) - X(t) + (1/N_t) int X' N ds| - |m1(0) - X(0)| N0 / N_t |, zero up to quadrature error."""
    m1 = m1_closed_form(path.rate, profile, path, m1_0, t).value
    k = _grid_index(path, t)
    lhs = np.linalg.norm(m1 - profile.evaluate(path.times[k], path.N[k])
                         + c1_prime_integral(profile, path, path.times[k]))
    rhs = np.linalg.norm(np.atleast_1d(m1_0) - profile.evaluate(0.0, path.N0)) * path.N0 / path.N[k]
    return float(abs(lhs - rhs))

"""Kinetic formulation as a weighted particle measure with mass inflow at X(t, N_t).

Each step transports the atoms along the interaction field, multiplies all
weights by N_t / N_{t+dt} (the exact integrating factor of the -b f term)
and adds one atom at X(t, N_t) carrying the released mass.  Atoms lighter
than ``w_min`` are merged into their nearest neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diagnostics, interaction, oracles
from .diagnostics import DiagnosticsRecord
from .growth import PopulationPath, integrate_population
from .inflow import InflowProfile, c1_average_series, c1_residual_series
from .kernels import InfluenceKernel
from .micro import AgentEnsemble, SimConfig, initial_positions
from .wasserstein import w1_distance, w1_to_point

W_MIN = 1e-8


class WeightedParticleMeasure:
    """Probability measure sum_j w_j delta_{a_j}."""

    def __init__(self, atoms, weights, check: bool = True):
        a = np.array(atoms, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        w = np.array(weights, dtype=float)
        if len(w) != len(a):
            raise ValueError("atoms and weights differ in length")
        if check and (np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9):
            raise ValueError("weights must be nonnegative and sum to 1")
        self.atoms = a
        self.weights = w

    @property
    def positions(self) -> np.ndarray:
        return self.atoms

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def copy(self) -> WeightedParticleMeasure:
        return WeightedParticleMeasure(self.atoms.copy(), self.weights.copy(), check=False)

    @classmethod
    def dirac(cls, x) -> WeightedParticleMeasure:
        return cls(np.atleast_1d(np.asarray(x, dtype=float))[None, :], [1.0])

    def rows(self) -> np.ndarray:
        return np.column_stack([self.weights, self.atoms])


def v_field(measure: WeightedParticleMeasure, kernel: InfluenceKernel, x, method: str = "auto") -> np.ndarray:
    """V[f](x) = sum_j w_j psi(|a_j - x|)(a_j - x) at one point or an (n, d) array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and len(x) == measure.dim
    q = x[None, :] if single else (x[:, None] if x.ndim == 1 else x)
    out = interaction.velocities(measure.atoms, measure.weights, kernel, q, method)
    return out[0] if single else out


def empirical_of_micro(ensemble: AgentEnsemble) -> WeightedParticleMeasure:
    """Empirical measure of the agents; each group is one atom of weight count / M."""
    return WeightedParticleMeasure(ensemble.positions.copy(), ensemble.weights, check=False)


def merge_light_atoms(atoms: np.ndarray, weights: np.ndarray, w_min: float):
    light = weights < w_min
    if not light.any() or light.all():
        return atoms, weights
    heavy_idx = np.nonzero(~light)[0]
    light_idx = np.nonzero(light)[0]
    d2 = ((atoms[light_idx, None, :] - atoms[None, heavy_idx, :]) ** 2).sum(-1)
    target = heavy_idx[np.argmin(d2, axis=1)]
    w = weights.copy()
    np.add.at(w, target, weights[light_idx])
    return atoms[~light], w[~light]


def kinetic_step(measure: WeightedParticleMeasure, kernel: InfluenceKernel, profile: InflowProfile,
                 path: PopulationPath, t: float, integrator: str = "rk4", w_min: float = W_MIN,
                 method: str = "auto") -> WeightedParticleMeasure:
    """One grid step of ``path`` starting at time ``t``; returns a new measure."""
    k = path.index(t)
    if k + 1 >= len(path.times):
        raise ValueError("step beyond the population path horizon")
    h = path.times[k + 1] - path.times[k]
    w = measure.weights
    f = lambda y: interaction.velocities(y, w, kernel, method=method)  # noqa: E731
    a = measure.atoms
    k1 = f(a)
    if integrator == "euler":
        a = a + h * k1
    else:
        k2 = f(a + 0.5 * h * k1)
        k3 = f(a + 0.5 * h * k2)
        k4 = f(a + h * k3)
        a = a + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"non-finite atoms at t={path.times[k + 1]}")
    decay = path.N[k] / path.N[k + 1]
    w = w * decay
    w_new = 1.0 - float(w.sum())
    if w_new < -1e-12:
        raise RuntimeError(f"negative inflow weight {w_new}")
    if w_new > 0:
        a = np.vstack([a, profile.evaluate(path.times[k], path.N[k])[None, :]])
        w = np.append(w, w_new)
    s = float(w.sum())
    if abs(s - 1.0) > 1e-13:
        w = w / s
    a, w = merge_light_atoms(a, w, w_min)
    return WeightedParticleMeasure(a, w, check=False)


def measure_record(measure: WeightedParticleMeasure, kernel: InfluenceKernel, profile: InflowProfile,
                   t: float, N: float, c1_residual: float, method: str = "auto") -> DiagnosticsRecord:
    X = profile.evaluate(t, N)
    m0, m1, m2 = diagnostics.moments(measure)
    v = interaction.velocities(measure.atoms, measure.weights, kernel, method=method)
    return DiagnosticsRecord(
        t=float(t), N=float(N), M=float(len(measure)), m0=m0, m1=m1, m2=m2,
        V=diagnostics.variance(measure), V_X=diagnostics.variance_about_inflow(measure, X),
        D=diagnostics.dissipation(measure, kernel, v), M1dist=float(np.sum((m1 - X) ** 2)),
        c1_residual=float(c1_residual),
    )


def initial_measure(config: SimConfig) -> WeightedParticleMeasure:
    """Equal-weight atoms from the configured initial data, round(rho * N0) of them."""
    M0 = int(math.floor(config.rho * config.N0 + 0.5))
    x = initial_positions(config.initial, M0, config.dim, config.seed)
    return WeightedParticleMeasure(x, np.full(M0, 1.0 / M0), check=False)


@dataclass
class KineticTrajectory:
    config: SimConfig
    path: PopulationPath
    records: list[DiagnosticsRecord]
    measure: WeightedParticleMeasure
    snapshots: list[tuple[float, WeightedParticleMeasure]]
    max_mass_error: float
    support_bound: float
    support_violations: int

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        if name == "m1":
            return np.array([r.m1 for r in self.records])
        return np.array([getattr(r, name) for r in self.records])


def iterate(config: SimConfig, measure: WeightedParticleMeasure, path: PopulationPath, w_min: float = W_MIN):
    """Yield (grid index, measure) for every grid time, starting with the initial measure."""
    yield 0, measure
    for k in range(len(path.times) - 1):
        measure = kinetic_step(measure, config.kernel, config.profile, path, path.times[k],
                               config.integrator, w_min, config.method)
        yield k + 1, measure


def run_kinetic(config: SimConfig, measure: WeightedParticleMeasure | None = None,
                path: PopulationPath | None = None, w_min: float = W_MIN) -> KineticTrajectory:
    if path is None:
        path = integrate_population(config.rate, config.N0, config.t_end, config.dt)
    if measure is None:
        measure = initial_measure(config)
    c1 = c1_residual_series(config.profile, path)
    R = max(float(np.linalg.norm(measure.atoms, axis=1).max()), config.profile.x_bound)
    bound = R + config.dt * config.kernel.sup_bound * 2.0 * R
    n = len(path.times) - 1
    records, snaps = [], []
    mass_err, violations = 0.0, 0
    for k, mu in iterate(config, measure, path, w_min):
        mass_err = max(mass_err, abs(float(mu.weights.sum()) - 1.0))
        if float(np.linalg.norm(mu.atoms, axis=1).max()) > bound * (1 + 1e-12):
            violations += 1
        if k % config.snapshot_stride == 0 or k == n:
            records.append(measure_record(mu, config.kernel, config.profile, path.times[k], path.N[k],
                                          c1[k], config.method))
            if config.record_snapshots:
                snaps.append((float(path.times[k]), mu))
        measure = mu
    return KineticTrajectory(config, path, records, measure, snaps, mass_err, bound, violations)


def measure_w1(mu: WeightedParticleMeasure, nu: WeightedParticleMeasure) -> float:
    return w1_distance(mu.atoms, mu.weights, nu.atoms, nu.weights)


def stability_probe(f0: WeightedParticleMeasure, f0_tilde: WeightedParticleMeasure, config: SimConfig,
                    T: float | None = None, w_min: float = W_MIN) -> dict:
    """Evolve two initial measures under one scenario and track W1(f_t, f~_t) / W1(f_0, f~_0)."""
    T = config.t_end if T is None else T
    path = integrate_population(config.rate, config.N0, T, config.dt)
    w0 = measure_w1(f0, f0_tilde)
    times, w1 = [], []
    n = len(path.times) - 1
    for (k, mu), (_, nu) in zip(iterate(config, f0, path, w_min), iterate(config, f0_tilde, path, w_min)):
        if k % config.snapshot_stride == 0 or k == n:
            times.append(float(path.times[k]))
            w1.append(measure_w1(mu, nu))
    ratio = None if w0 == 0 else [x / w0 for x in w1]
    return {
        "times": times,
        "w1": w1,
        "initial_w1": w0,
        "ratio": ratio,
        "sup_ratio": None if ratio is None else max(ratio),
        "status": "ok" if w0 > 0 else "undefined: identical initial measures",
    }


def concentration_target(config: SimConfig, m1_0) -> tuple[str, callable]:
    """Concentration target for the scenario, as a function of (t, N)."""
    rate, profile, kernel = config.rate, config.profile, config.kernel
    regime = oracles.classify(rate)
    if regime == "finite":
        if kernel.compact:
            raise ValueError("finite-population concentration needs a positive kernel (Type I)")
        lim = oracles.m1_limit(rate, profile, m1_0, N0=config.N0, dt=config.dt).value
        return "m1_limit", lambda t, N, k: lim
    if regime == "unclassified":
        raise ValueError("cannot classify the growth regime of this scenario")
    if profile.kind in ("constant", "eventually_constant", "population_power"):
        return "inflow", lambda t, N, k: profile.evaluate(t, N)
    if not kernel.compact and rate.kind == "power_decay" and rate.alpha > 0:
        return "running_average", None
    raise ValueError("scenario matches none of the concentration cases")


def concentration_probe(config: SimConfig, T: float | None = None,
                        measure: WeightedParticleMeasure | None = None, w_min: float = W_MIN) -> dict:
    """W1(f_t, delta_target) along a kinetic run."""
    T = config.t_end if T is None else T
    path = integrate_population(config.rate, config.N0, T, config.dt)
    if measure is None:
        measure = initial_measure(config)
    case, target = concentration_target(config, measure.weights @ measure.atoms)
    if case == "running_average":
        avg = c1_average_series(config.profile, path)
        target = lambda t, N, k: avg[k]  # noqa: E731
    times, w1, targets = [], [], []
    n = len(path.times) - 1
    for k, mu in iterate(config, measure, path, w_min):
        if k % config.snapshot_stride == 0 or k == n:
            x = np.asarray(target(path.times[k], path.N[k], k), dtype=float)
            times.append(float(path.times[k]))
            w1.append(w1_to_point(mu.atoms, mu.weights, x))
            targets.append(x.tolist())
    return {"times": times, "w1": w1, "target": targets[-1], "case": case, "targets": targets}


def mass_concentration_split(measure: WeightedParticleMeasure, levels: int = 4) -> float:
    """Largest min(f(A), f(B)) over half-space pairs A = {x_i <= c}, B = {x_i >= c + 1} in B(0, 1).

    Offsets c run over dyadic points of [-1, 0] at the given depth, on every axis.
    """
    a, w = measure.atoms, measure.weights
    inside = np.linalg.norm(a, axis=1) <= 1.0
    best = 0.0
    offsets = -1.0 + np.arange(2 ** levels + 1) / 2 ** levels
    for i in range(measure.dim):
        xi = a[:, i]
        for c in offsets:
            wa = float(w[inside & (xi <= c)].sum())
            wb = float(w[inside & (xi >= c + 1.0)].sum())
            best = max(best, min(wa, wb))
    return best

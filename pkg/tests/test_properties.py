import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from growing_consensus import interaction, kernels
from growing_consensus.growth import GrowthRate, integrate_population
from growing_consensus.wasserstein import w1_distance

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
KERNELS = st.sampled_from([kernels.type1_constant(), kernels.type1_exponential(0.5), kernels.type1_exponential(2.0),
                           kernels.type2_tent(), kernels.type2_bump()])


@st.composite
def measures(draw, d, max_atoms=5):
    n = draw(st.integers(1, max_atoms))
    x = draw(arrays(float, (n, d), elements=finite))
    raw = draw(arrays(float, n, elements=st.floats(0.05, 1.0)))
    return x, raw / raw.sum()


@given(KERNELS, st.floats(0, 4), st.floats(0, 4))
def test_kernel_lipschitz(k, r1, r2):
    assert abs(k(r1) - k(r2)) <= k.lipschitz_bound * abs(r1 - r2) + 1e-12
    assert 0 <= k(r1) <= k.sup_bound


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1, 2]), st.data())
def test_w1_metric_axioms(d, data):
    a, b, c = (data.draw(measures(d)) for _ in range(3))
    ab, ba = w1_distance(*a, *b), w1_distance(*b, *a)
    assert abs(ab - ba) <= 1e-10
    assert w1_distance(*a, *a) <= 1e-10
    assert ab <= w1_distance(*a, *c) + w1_distance(*c, *b) + 1e-10
    assert ab >= 0


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([kernels.type2_tent(), kernels.type2_bump()]), st.integers(1, 3), st.data())
def test_binned_equals_dense(k, d, data):
    x, w = data.draw(measures(d, max_atoms=40))
    np.testing.assert_allclose(interaction.binned(x, w, k), interaction.dense(x, w, k), atol=1e-12, rtol=0)


@settings(max_examples=60, deadline=None)
@given(KERNELS, st.data())
def test_velocity_paths_agree_1d(k, data):
    x, w = data.draw(measures(1, max_atoms=40))
    np.testing.assert_allclose(interaction.velocities(x, w, k), interaction.dense(x, w, k), atol=1e-12, rtol=0)


@settings(max_examples=30, deadline=None)
@given(KERNELS, st.data())
def test_momentum_balance(k, data):
    # symmetric kernel: the weighted mean velocity vanishes
    x, w = data.draw(measures(2, max_atoms=30))
    v = interaction.velocities(x, w, k)
    assert np.all(np.abs(w @ v) <= 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 3), st.floats(0.1, 5))
def test_population_monotone(alpha, N0):
    path = integrate_population(GrowthRate.power_decay(alpha), N0, 5.0, 0.05)
    assert np.all(np.diff(path.N) >= 0)
    assert path.N[0] == N0

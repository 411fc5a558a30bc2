import numpy as np
import pytest

from growing_consensus import interaction, kernels

ALL = [kernels.type1_constant(0.7), kernels.type1_exponential(1.5), kernels.type2_tent(), kernels.type2_bump()]


def _sample(rng, n, d, spread=3.0):
    x = rng.uniform(-spread, spread, (n, d))
    w = rng.integers(1, 5, n).astype(float)
    return x, w / w.sum()


@pytest.mark.parametrize("k", ALL, ids=lambda k: k.kind)
def test_fast_paths_match_dense_1d(k, rng):
    x, w = _sample(rng, 400, 1)
    ref = interaction.dense(x, w, k)
    out = interaction.velocities(x, w, k)
    np.testing.assert_allclose(out, ref, atol=1e-12, rtol=0)


@pytest.mark.parametrize("k", [kernels.type2_tent(), kernels.type2_bump()], ids=lambda k: k.kind)
@pytest.mark.parametrize("d", [1, 2, 3])
def test_binned_matches_dense(k, d, rng):
    x, w = _sample(rng, 600, d)
    np.testing.assert_allclose(interaction.binned(x, w, k), interaction.dense(x, w, k), atol=1e-12, rtol=0)


def test_queries_differ_from_sources(rng):
    x, w = _sample(rng, 50, 1)
    q = np.linspace(-4, 4, 17)[:, None]
    for k in ALL:
        ref = interaction.dense(x, w, k, q)
        np.testing.assert_allclose(interaction.velocities(x, w, k, q), ref, atol=1e-12, rtol=0)


def test_exponential_falls_back_for_wide_spread():
    # half-width 350 after centring: exp(lam * 350) overflows the prefix sums
    x = np.array([[0.0], [700.0]])
    w = np.array([0.5, 0.5])
    k = kernels.type1_exponential(1.0)
    assert interaction.sorted_exp_1d(x, w, k) is None
    np.testing.assert_allclose(interaction.velocities(x, w, k), interaction.dense(x, w, k), atol=1e-300)


def test_method_selection():
    assert interaction.choose_method(kernels.type1_constant(), 2, 10) == "constant"
    assert interaction.choose_method(kernels.type2_tent(), 1, 10) == "sorted1d"
    assert interaction.choose_method(kernels.type2_tent(), 2, 5000) == "binned"
    assert interaction.choose_method(kernels.type1_exponential(), 2, 5000) == "dense"
    with pytest.raises(ValueError):
        interaction.velocities(np.zeros((3, 2)), np.ones(3) / 3, kernels.type2_tent(), method="sorted1d")


def test_single_cell_binned_equals_dense(rng):
    x = rng.uniform(0.1, 0.9, (300, 2))
    w = np.full(300, 1 / 300)
    k = kernels.type2_tent()
    np.testing.assert_allclose(interaction.binned(x, w, k), interaction.dense(x, w, k), atol=1e-15)

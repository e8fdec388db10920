import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nocurl.dagspace import NotADagError, is_dag
from nocurl.objectives import h_poly, least_squares_loss
from nocurl.rng import Rng
from nocurl.synth import (
    GraphSpec, assign_weights, gen_er, gen_graph, gen_sf, sample_exact_sem, sample_linear_sem, simulate,
)


@pytest.mark.parametrize("kwargs", [
    dict(d=1), dict(d=5, k=0.5), dict(d=10, k=5), dict(d=5, scheme="sf", k=5),
    dict(d=5, scheme="sf", k=1.5), dict(d=5, scheme="grid"),
])
def test_graph_spec_validation(kwargs):
    with pytest.raises(ValueError):
        GraphSpec(**kwargs)


def test_er_mean_edge_count():
    spec = GraphSpec(10, "er", 3, seed=0)
    rng = Rng(2024)
    counts = [np.count_nonzero(gen_er(spec, rng)) for _ in range(1000)]
    assert abs(np.mean(counts) - 30) <= 2


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 30), st.integers(0, 2**32), st.sampled_from(["er", "sf"]))
def test_generated_graphs_are_dags(d, seed, scheme):
    k = 1 if scheme == "sf" else min(2, (d - 1) / 2)
    b = gen_graph(GraphSpec(d, scheme, k, seed))
    assert is_dag(b) and h_poly(b) <= 1e-12
    assert set(np.unique(b)) <= {0.0, 1.0}
    assert np.all(np.diag(b) == 0)


def test_er_saturated_is_complete():
    d = 9
    b = gen_er(GraphSpec(d, "er", (d - 1) / 2, seed=4))
    assert np.count_nonzero(b) == d * (d - 1) // 2


def test_sf_heavy_tail():
    hits = 0
    for s in range(100):
        b = gen_sf(GraphSpec(100, "sf", 4, seed=s))
        hits += b.sum(axis=0).max() > 8
    assert hits >= 90


def test_sf_small_saturates():
    assert np.count_nonzero(gen_sf(GraphSpec(5, "sf", 4, seed=1))) == 10


def test_sf_edge_count():
    d, k = 50, 3
    b = gen_sf(GraphSpec(d, "sf", k, seed=3))
    assert np.count_nonzero(b) == k * (k - 1) // 2 + k * (d - k)


def test_generators_deterministic():
    for scheme, k in [("er", 2), ("sf", 2)]:
        spec = GraphSpec(12, scheme, k, seed=77)
        assert np.array_equal(gen_graph(spec), gen_graph(spec))
    a, x = simulate(GraphSpec(8, "er", 2, 5), 50, "gumbel")
    b, y = simulate(GraphSpec(8, "er", 2, 5), 50, "gumbel")
    assert np.array_equal(a, b) and np.array_equal(x.x, y.x)


def test_assign_weights_zero():
    assert np.all(assign_weights(np.zeros((4, 4)), Rng(0)) == 0)


def test_assign_weights_support_and_balance():
    d = 450
    b = np.triu(np.ones((d, d)), 1)  # 101025 edges
    a = assign_weights(b, Rng(3))
    w = a[b != 0]
    assert np.all((np.abs(w) >= 0.5) & (np.abs(w) <= 2))
    assert abs(np.mean(w > 0) - 0.5) <= 0.01
    np.testing.assert_array_equal(a != 0, b != 0)


def test_assign_weights_rejects_cycle():
    with pytest.raises(NotADagError):
        assign_weights(np.roll(np.eye(3), 1, axis=1), Rng(0))


def test_noise_free_is_zero():
    a0, data = simulate(GraphSpec(6, "er", 2, seed=1), 20, "none")
    assert np.all(data.x == 0)
    assert least_squares_loss(a0, data) == 0.0


def test_independent_noise_variance():
    data = sample_linear_sem(np.zeros((3, 3)), 100_000, "gaussian", Rng(9))
    v = data.x.var(axis=0)
    assert np.all((v >= 0.97) & (v <= 1.03))


@pytest.mark.parametrize("w", [0.5, -1.3, 2.0])
def test_variance_propagation(w):
    a0 = np.array([[0.0, w], [0.0, 0.0]])
    x = sample_linear_sem(a0, 100_000, "gaussian", Rng(10)).x
    assert x[:, 1].var() == pytest.approx(1 + w * w, rel=0.03)


def test_gumbel_noise_mean():
    x = sample_linear_sem(np.zeros((2, 2)), 100_000, "gumbel", Rng(1)).x
    assert abs(x.mean() - 0.5772) <= 0.02


def test_sampler_follows_equation():
    a0, data = simulate(GraphSpec(7, "er", 2, seed=8), 30, "gaussian")
    z = data.x - data.x @ a0
    # residuals are the noise, so the zero-parent variables are pure noise
    roots = np.flatnonzero(np.all(a0 == 0, axis=0))
    np.testing.assert_array_equal(z[:, roots], data.x[:, roots])


def test_sampler_rejects_cycle():
    with pytest.raises(NotADagError):
        sample_linear_sem(np.roll(np.eye(3), 1, axis=1), 5, "gaussian", Rng(0))
    with pytest.raises(ValueError):
        sample_linear_sem(np.zeros((2, 2)), 5, "laplace", Rng(0))


def test_exact_sem_moments():
    a0, _ = simulate(GraphSpec(6, "er", 2, seed=2), 10, "gaussian")
    data = sample_exact_sem(a0, 200, Rng(1))
    z = data.x - data.x @ a0
    np.testing.assert_allclose(z.T @ z / 200, np.eye(6), atol=1e-10)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-12)

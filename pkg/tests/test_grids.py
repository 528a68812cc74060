import math

import numpy as np
import pytest

from stopgame.errors import InputError
from stopgame.grids import (SimplexGrid, ValueGrid, concave_envelope,
                            convex_envelope, lower_convex_envelope_1d,
                            read_value_csv, upper_concave_envelope_1d,
                            write_value_csv)


@pytest.mark.parametrize("dim,N", [(1, 5), (2, 10), (3, 7), (4, 4)])
def test_node_count(dim, N):
    grid = SimplexGrid(dim, N)
    assert grid.n_nodes == math.comb(N + dim - 1, dim - 1)
    np.testing.assert_allclose(grid.nodes.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(grid.nodes >= 0)


def test_envelope_vee_chord():
    x = np.linspace(0.0, 1.0, 21)
    env = upper_concave_envelope_1d(x, np.abs(x - 0.5))
    np.testing.assert_allclose(env, 0.5, atol=1e-15)
    env = lower_convex_envelope_1d(x, -np.abs(x - 0.5))
    np.testing.assert_allclose(env, -0.5, atol=1e-15)


def test_envelope_idempotent_on_concave():
    x = np.linspace(0.0, 1.0, 33)
    v = -(x - 0.3) ** 2
    np.testing.assert_allclose(upper_concave_envelope_1d(x, v), v, atol=1e-15)


def test_envelope_properties_random():
    rng = np.random.default_rng(5)
    x = np.linspace(0.0, 1.0, 41)
    for _ in range(20):
        v = rng.normal(size=x.size)
        env = upper_concave_envelope_1d(x, v)
        assert np.all(env >= v - 1e-12)
        second = env[:-2] + env[2:] - 2.0 * env[1:-1]
        assert np.all(second <= 1e-9)  # concave
        # idempotent and monotone
        np.testing.assert_allclose(upper_concave_envelope_1d(x, env), env, atol=1e-9)
        w = v + rng.uniform(0.0, 1.0, size=x.size)
        assert np.all(upper_concave_envelope_1d(x, w) >= env - 1e-12)


def test_envelope_three_state_slice():
    # dented affine function on the 3-simplex: envelope restores the plane
    grid = SimplexGrid(3, 12)
    plane = grid.nodes @ np.array([1.0, 2.0, 0.5])
    dent = plane.copy()
    interior = np.all(grid.nodes > 0.2, axis=1)
    dent[interior] -= 0.3
    env = concave_envelope(grid.chart, dent)
    np.testing.assert_allclose(env, plane, atol=1e-9)
    np.testing.assert_allclose(convex_envelope(grid.chart, -dent), -plane, atol=1e-9)


def test_interpolation_exact_for_bilinear(e1_spec):
    M = e1_spec.f
    grid = ValueGrid.from_function(
        e1_spec, lambda p, q: float(p @ M @ q), 20, 20)
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.dirichlet([1, 1])
        q = rng.dirichlet([1, 1])
        assert grid.value_at(p, q) == pytest.approx(float(p @ M @ q), abs=1e-12)


def test_interpolation_three_state_affine(e2_spec):
    import stopgame.model as model

    spec3 = model.GameSpec(
        R=np.zeros((3, 3)), Q=np.zeros((1, 1)), r=1.0,
        f=[[2.0], [1.5], [3.0]], h=[[1.0], [0.5], [2.0]],
        p0=[1 / 3, 1 / 3, 1 / 3], q0=[1.0])
    c = np.array([0.3, -1.2, 0.8])
    grid = ValueGrid.from_function(spec3, lambda p, q: float(p @ c), 8, 1)
    rng = np.random.default_rng(1)
    for _ in range(30):
        p = rng.dirichlet([1, 1, 1])
        assert grid.value_at(p, [1.0]) == pytest.approx(float(p @ c), abs=1e-10)


def test_value_csv_roundtrip(tmp_path, e1_spec):
    grid = ValueGrid.from_function(
        e1_spec, lambda p, q: float(p @ e1_spec.h @ q), 7, 5)
    grid.metadata.update(iterations=3, residual=1e-9, delta=0.25)
    path = tmp_path / "v.csv"
    write_value_csv(grid, path)
    p_chart, q_chart, values = read_value_csv(path)
    np.testing.assert_array_equal(values, grid.values)  # bit-exact
    np.testing.assert_array_equal(p_chart, grid.p_grid.nodes[:, 0])
    assert (tmp_path / "v.csv.meta.json").exists()


def test_value_csv_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(InputError):
        read_value_csv(bad)

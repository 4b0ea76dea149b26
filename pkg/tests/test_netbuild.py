import numpy as np
import pytest

from fastnn.errors import ConfigError, ContractViolation, InputError, ShapeError
from fastnn.netbuild import (
    BuiltNet,
    build_index_creator,
    build_mid,
    build_multiply,
    compose,
    extend_by_mid,
    fit_piecewise_linear,
    fit_points_1d,
    gadget,
    pad,
    parallelize,
)
from fastnn.netbuild.algebra import from_layers
from fastnn.netbuild.audit import DEFAULT_GRID, good_region_samples, multiply_grid_error, run_audit, violations
from fastnn.netbuild.gadgets import cell_index, grid_side, multiply_error_bound
from fastnn.nets import forward, init_net


@pytest.mark.parametrize(
    "kind, fn",
    [
        ("identity", lambda x: x[:, 0]),
        ("abs", lambda x: np.abs(x[:, 0])),
        ("min2", lambda x: x.min(axis=1)),
        ("max2", lambda x: x.max(axis=1)),
    ],
)
def test_gadgets_are_exact(rng, kind, fn):
    built = gadget(kind)
    x = rng.uniform(-3, 3, size=(50, built.net.input_dim))
    np.testing.assert_allclose(built(x)[:, 0], fn(x), atol=1e-12)
    assert built.depth == 1 and built.max_weight <= 1.0


def test_unknown_gadget():
    with pytest.raises(ConfigError):
        gadget("median")


def test_builtnet_rejects_over_budget_network():
    net = init_net([2, 5, 1], seed=0)
    with pytest.raises(ContractViolation):
        BuiltNet(net, declared_depth=1, declared_width=3, declared_weight=100.0, name="too-wide")


def test_pad_preserves_function(rng):
    net = init_net([3, 4, 2], seed=1)
    padded = pad(net, 4, 7)
    assert padded.depth == 4 and padded.width == 7
    x = rng.normal(size=(20, 3))
    np.testing.assert_allclose(padded(x), forward(net, x), atol=1e-12)


def test_pad_lifts_affine_map(rng):
    affine = init_net([2, 3], seed=2)
    padded = pad(affine, 2, 6)
    x = rng.normal(size=(10, 2))
    np.testing.assert_allclose(padded(x), forward(affine, x), atol=1e-12)


def test_pad_cannot_shrink():
    with pytest.raises(ConfigError):
        pad(init_net([2, 5, 5, 1], seed=0), 1, 5)


def test_pad_to_own_shape_is_a_no_op(rng):
    net = init_net([3, 5, 4, 2], seed=7)
    same = pad(net, net.depth, net.max_hidden_width)
    assert same.depth == net.depth and same.net.widths == net.widths
    for a, b in zip(same.net.parameters(), net.parameters()):
        np.testing.assert_array_equal(a, b)
    x = rng.normal(size=(10, 3))
    np.testing.assert_array_equal(same(x), forward(net, x))


def test_compose_abs_then_min_with_constant(rng):
    # min(t, 0.5) = s(t) - s(-t) - s(t - 0.5)
    cap = from_layers(
        [np.array([[1.0], [-1.0], [1.0]]), np.array([[1.0, -1.0, -1.0]])],
        [np.array([0.0, 0.0, -0.5]), np.zeros(1)],
    )
    capped_abs = compose(gadget("abs"), cap)
    x = rng.uniform(-2, 2, size=(200, 1))
    np.testing.assert_allclose(capped_abs(x)[:, 0], np.minimum(np.abs(x[:, 0]), 0.5), atol=1e-12)
    assert capped_abs.depth == 2


def test_compose_evaluates_g_after_f(rng):
    f = init_net([3, 4, 2], seed=3)
    g = init_net([2, 5, 1], seed=4)
    h = compose(f, g)
    assert h.depth == f.depth + g.depth
    x = rng.normal(size=(15, 3))
    np.testing.assert_allclose(h(x), forward(g, forward(f, x)), atol=1e-10)


def test_compose_dimension_mismatch():
    with pytest.raises(ShapeError):
        compose(init_net([3, 4, 2], seed=0), init_net([3, 4, 1], seed=0))


def test_parallelize_stacks_outputs_with_wiring(rng):
    a = init_net([1, 3, 1], seed=5)
    b = init_net([2, 4, 4, 1], seed=6)
    both = parallelize([a, b], [[2], [0, 1]], input_dim=3)
    assert both.depth == 2
    x = rng.normal(size=(12, 3))
    out = both(x)
    np.testing.assert_allclose(out[:, 0], forward(a, x[:, [2]])[:, 0], atol=1e-12)
    np.testing.assert_allclose(out[:, 1], forward(b, x[:, [0, 1]])[:, 0], atol=1e-12)


def test_parallelize_rejects_bad_wiring():
    with pytest.raises(ShapeError):
        parallelize([init_net([2, 3, 1], seed=0)], [[0]])
    with pytest.raises(ConfigError):
        parallelize([init_net([1, 3, 1], seed=0)], [[4]], input_dim=2)


def test_piecewise_linear_interpolates_knots_and_segments():
    points = [(0.0, 0.0), (0.25, 1.0), (0.5, -1.0), (1.0, 0.5)]
    built = fit_piecewise_linear(points)
    xs = np.linspace(0.0, 1.0, 101)
    expected = np.interp(xs, [p[0] for p in points], [p[1] for p in points])
    np.testing.assert_allclose(built(xs[:, None])[:, 0], expected, atol=1e-12)
    assert built.depth == 1 and built.width == 3


@pytest.mark.parametrize("seed", range(50))
def test_piecewise_linear_random_knots_are_exact(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    xs = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 1.0, size=n - 1))])
    xs = xs / xs[-1]
    ys = rng.uniform(-1.0, 1.0, size=n)
    built = fit_piecewise_linear(list(zip(xs, ys)))
    np.testing.assert_allclose(built(xs[:, None])[:, 0], ys, rtol=0.0, atol=1e-10)
    mids = 0.5 * (xs[:-1] + xs[1:])
    np.testing.assert_allclose(built(mids[:, None])[:, 0], 0.5 * (ys[:-1] + ys[1:]), rtol=0.0, atol=1e-10)


def test_piecewise_linear_rejects_unsorted_knots():
    with pytest.raises(InputError):
        fit_piecewise_linear([(0.0, 0.0), (0.5, 1.0), (0.4, 0.0)])
    with pytest.raises(InputError):
        fit_piecewise_linear([(0.0, 0.0), (1.5, 1.0)])


def test_points_1d_fits_exactly_with_declared_widths(rng):
    n_blocks, block_size, delta = 3, 4, 0.05
    xs = np.arange(12) * delta + np.sort(rng.uniform(0, 1 - 11 * delta, size=12))
    ys = rng.uniform(0, 1, size=12)
    built = fit_points_1d(list(zip(xs, ys)), n_blocks, block_size, delta)
    np.testing.assert_allclose(built(xs[:, None])[:, 0], ys, atol=1e-8)
    assert built.depth == 3
    assert built.net.widths[1:4] == [2 * n_blocks - 1, 4 * (block_size - 2) + 2, 8 * (block_size - 2) + 2]
    assert built.max_weight <= 4.0 / delta ** 2


@pytest.mark.parametrize("seed", range(5))
def test_points_1d_sixteen_points_meet_weight_contract(seed):
    rng = np.random.default_rng(seed)
    delta = 0.05
    xs = np.arange(16) * delta + np.sort(rng.uniform(0, 1 - 15 * delta, size=16))
    ys = rng.uniform(0, 1, size=16)
    built = fit_points_1d(list(zip(xs, ys)), 4, 4, delta)
    np.testing.assert_allclose(built(xs[:, None])[:, 0], ys, rtol=0.0, atol=1e-8)
    assert built.net.widths == [1, 7, 10, 18, 1]
    assert built.net.max_abs_parameter() <= 1600.0
    for layer in (0, -1):
        assert np.max(np.abs(built.net.weights[layer])) <= 1.0
        assert np.max(np.abs(built.net.biases[layer]), initial=0.0) <= 1.0
    # linear between neighbours inside a block
    inner = [i for i in range(1, 16) if i % 4 != 0]
    mids = np.array([0.5 * (xs[i - 1] + xs[i]) for i in inner])
    expected = np.array([0.5 * (ys[i - 1] + ys[i]) for i in inner])
    np.testing.assert_allclose(built(mids[:, None])[:, 0], expected, rtol=0.0, atol=1e-8)


def test_points_1d_rejects_small_gap():
    xs = [0.0, 0.05, 0.06, 0.5]
    with pytest.raises(InputError):
        fit_points_1d([(x, 0.5) for x in xs], 2, 2, 0.05)


@pytest.mark.parametrize("d, N", [(1, 2), (2, 4)])
def test_index_creator_is_exact_on_good_region(rng, d, N):
    K = grid_side(d, N) ** 2
    assert K == 4
    delta = 1.0 / 24
    built = build_index_creator(d, N, delta)
    x = good_region_samples(d, K, delta, 5, rng)
    assert x.shape == (5 * K**d, d)
    np.testing.assert_allclose(built(x), cell_index(x, K, delta) / K, atol=1e-8)
    assert built.depth == 3


def test_index_creator_rejects_large_delta():
    with pytest.raises(ConfigError):
        build_index_creator(1, 2, 0.2)


def test_mid_returns_median(rng):
    built = build_mid()
    x = rng.uniform(-4, 4, size=(1000, 3))
    np.testing.assert_allclose(built(x)[:, 0], np.sort(x, axis=1)[:, 1], atol=1e-12)
    assert built.depth == 2 and built.width <= 14


@pytest.mark.parametrize("N, L, a, b", [(2, 1, 0.0, 1.0), (2, 3, 0.0, 1.0), (4, 2, -1.0, 1.0), (3, 3, -2.0, 0.5)])
def test_multiply_stays_within_error_bound(N, L, a, b):
    built = build_multiply(N, L, a, b)
    assert built.depth == L
    assert built.width <= 9 * N + 1
    assert multiply_grid_error(built, a, b, points=61) <= multiply_error_bound(N, L, a, b)


def test_multiply_error_shrinks_with_depth():
    errors = [multiply_grid_error(build_multiply(2, L, 0.0, 1.0), 0.0, 1.0) for L in (1, 2, 3, 4)]
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))


def test_multiply_rejects_empty_interval():
    with pytest.raises(ConfigError):
        build_multiply(2, 2, 1.0, 1.0)


def test_extend_by_mid_keeps_monotone_function_and_adds_two_layers_per_coordinate(rng):
    base = fit_piecewise_linear([(0.0, 0.0), (0.3, 0.2), (0.7, 0.9), (1.0, 1.0)])
    delta = 0.02
    extended = extend_by_mid(base, 1, delta)
    assert extended.depth == base.depth + 2
    x = rng.uniform(-0.5, 1.5, size=(100, 1))
    np.testing.assert_allclose(extended(x), base(x), atol=1e-10)


@pytest.mark.parametrize("d", [1, 2])
def test_extend_by_mid_keeps_a_constant(rng, d):
    base = from_layers([np.zeros((1, d)), np.zeros((1, 1))], [np.zeros(1), np.array([0.7])])
    extended = extend_by_mid(base, d, 0.05)
    assert extended.depth == base.depth + 2 * d
    x = rng.uniform(-1, 2, size=(200, d))
    np.testing.assert_allclose(extended(x)[:, 0], 0.7, atol=1e-12)


def test_extend_by_mid_requires_scalar_net():
    with pytest.raises(ConfigError):
        extend_by_mid(init_net([2, 3, 2], seed=0), 2, 0.01)


def test_default_audit_has_no_violations():
    rows = run_audit(seed=0)
    assert rows
    assert violations(rows) == []
    assert {row.construction for row in rows} >= {"mid", "multiply", "index-creator"}


def test_audit_fault_injection_flags_multiply_depth():
    rows = run_audit({"multiply": DEFAULT_GRID["multiply"]}, fault="multiply-depth")
    bad = violations(rows)
    assert bad and all(row.construction == "multiply" and row.quantity == "depth" for row in bad)


def test_audit_empty_grid_and_unknown_section():
    assert run_audit({}) == []
    with pytest.raises(ConfigError):
        run_audit({"division": [1]})

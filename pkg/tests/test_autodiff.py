import numpy as np
import numpy.testing as npt
import pytest

from autodiff import MAX_GENERATION, Graph, HessianOperator, grad, hvp, layer_hessian, ops
from errors import CapacityError, DepthError, DimensionError, GraphError, RankError
from flatness import central_difference_gradient, finite_difference_hessian, relative_error


def _check_primitive(build, *arrays, tol=1e-6, seed=0):
    """Compare grad of ``sum(build(*vars) * c)`` against central differences."""
    probe_graph = Graph()
    probe = build(*[probe_graph.constant(a) for a in arrays]).value
    weights = np.random.default_rng(seed).normal(size=probe.shape)

    def f(values):
        graph = Graph()
        out = build(*[graph.constant(v) for v in values])
        return float(np.sum(out.value * weights))

    graph = Graph()
    leaves = [graph.leaf(a) for a in arrays]
    scalar = ops.sum(build(*leaves) * weights)
    got = grad(scalar, leaves)
    want = central_difference_gradient(f, arrays, h=1e-5)
    for g, w in zip(got, want):
        assert relative_error(g, w) < tol


PRIMITIVES = {
    "tanh": (lambda a: ops.tanh(a), [(3, 2)]),
    "exp": (lambda a: ops.exp(a), [(3, 2)]),
    "softplus": (lambda a: ops.softplus(a), [(4,)]),
    "square": (lambda a: ops.square(a), [(2, 3)]),
    "mul": (lambda a, b: a * b, [(3, 2), (3, 2)]),
    "sub": (lambda a, b: a - b, [(3, 2), (3, 2)]),
    "neg": (lambda a: -a, [(3,)]),
    "bias-broadcast": (lambda a, b: a + b, [(4, 3), (3,)]),
    "matmul": (lambda a, b: a @ b, [(3, 4), (4, 2)]),
    "transpose": (lambda a: a.T @ a, [(3, 2)]),
    "mean-axis": (lambda a: ops.mean(a, axis=1), [(3, 4)]),
    "sum-axis": (lambda a: ops.sum(ops.square(a), axis=0), [(3, 4)]),
    "reshape": (lambda a: ops.tanh(a.reshape(2, 3)), [(3, 2)]),
    "getitem": (lambda a: ops.square(a[:, 1]), [(3, 2)]),
    "stack": (lambda a, b: ops.stack([ops.tanh(a), a * b], axis=1), [(4,), (4,)]),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients_match_central_differences(name):
    build, shapes = PRIMITIVES[name]
    rng = np.random.default_rng(len(name))
    _check_primitive(build, *[rng.normal(size=s) for s in shapes])


def test_log_gradient_on_positive_inputs():
    x = np.random.default_rng(3).uniform(0.5, 2.0, size=(3, 2))
    _check_primitive(lambda a: ops.log(a), x)


def test_relu_gradient_away_from_the_kink():
    x = np.array([[-1.5, 0.3], [2.0, -0.7]])
    _check_primitive(lambda a: ops.relu(a), x)


def test_grad_of_quadratic_form():
    graph = Graph()
    w = graph.leaf([[1.0, 2.0]])
    x = np.array([[1.0], [1.0]])
    loss = ops.sum(ops.square(w @ x - 0.5))
    # d/dw (w·x - y)² = 2 (w·x - y) xᵀ
    npt.assert_allclose(grad(loss, [w])[0], [[5.0, 5.0]])


def test_layer_hessian_of_linear_model():
    graph = Graph()
    w = graph.leaf([[1.0, 2.0]])
    x = np.array([[1.0], [1.0]])
    loss = ops.sum(ops.square(w @ x - 0.5))
    npt.assert_allclose(layer_hessian(loss, w), [[2.0, 2.0], [2.0, 2.0]], atol=1e-12)


def test_hvp_matches_finite_difference_of_gradient():
    rng = np.random.default_rng(5)
    W = rng.normal(size=(3, 4))
    X = rng.normal(size=(6, 4))
    v = rng.normal(size=(3, 4))

    def gradient_at(value):
        graph = Graph()
        w = graph.leaf(value)
        return grad(ops.mean(ops.tanh(graph.constant(X) @ w.T)), [w])[0]

    graph = Graph()
    w = graph.leaf(W)
    loss = ops.mean(ops.tanh(graph.constant(X) @ w.T))
    h = 1e-5
    reference = (gradient_at(W + h * v) - gradient_at(W - h * v)) / (2 * h)
    assert relative_error(hvp(loss, w, v), reference) < 1e-6


def test_hessian_operator_reuses_first_gradient():
    graph = Graph()
    w = graph.leaf(np.array([[0.3, -0.2], [0.1, 0.4]]))
    loss = ops.sum(ops.tanh(w) * ops.tanh(w))
    operator = HessianOperator(loss, w)
    recorded = len(graph)
    operator.column(0)
    after_one = len(graph)
    operator.column(1)
    # a plain column adds the same number of nodes every time
    assert len(graph) - after_one == after_one - recorded
    with pytest.raises(DimensionError):
        operator.matvec(np.ones(3))


def test_third_derivative_of_tanh():
    x0 = np.array([0.2, -0.5, 1.1])
    graph = Graph()
    x = graph.leaf(x0)
    g1 = grad(ops.sum(ops.tanh(x)), [x], create_graph=True)[0]
    g2 = grad(ops.sum(g1), [x], create_graph=True)[0]
    g3 = grad(ops.sum(g2), [x], create_graph=True)[0]
    t = np.tanh(x0)
    npt.assert_allclose(g1.value, 1 - t ** 2, rtol=1e-12)
    npt.assert_allclose(g2.value, -2 * t * (1 - t ** 2), rtol=1e-12)
    npt.assert_allclose(g3.value, -2 * (1 - t ** 2) * (1 - 3 * t ** 2), rtol=1e-12)
    assert (g1.generation, g2.generation, g3.generation) == (1, 2, 3)


def test_fourth_level_is_rejected():
    graph = Graph()
    x = graph.leaf(np.array([0.3, 0.7]))
    g = ops.sum(ops.tanh(x))
    for _ in range(MAX_GENERATION):
        g = ops.sum(grad(g, [x], create_graph=True)[0])
    with pytest.raises(DepthError):
        grad(g, [x])


def test_plain_grad_records_nothing():
    graph = Graph()
    x = graph.leaf(np.array([1.0, 2.0]))
    loss = ops.sum(ops.square(x))
    before = len(graph)
    out = grad(loss, [x])[0]
    assert len(graph) == before
    assert isinstance(out, np.ndarray)


def test_unrelated_target_gets_zeros():
    graph = Graph()
    x = graph.leaf(np.array([1.0, 2.0]))
    y = graph.leaf(np.array([[3.0]]))
    gx, gy = grad(ops.sum(ops.square(x)), [x, y])
    npt.assert_array_equal(gx, [2.0, 4.0])
    npt.assert_array_equal(gy, [[0.0]])


def test_grad_misuse():
    graph = Graph()
    x = graph.leaf(np.array([1.0, 2.0]))
    with pytest.raises(RankError):
        grad(ops.square(x), [x])
    with pytest.raises(GraphError):
        grad(ops.sum(x), [Graph().leaf(1.0)])
    with pytest.raises(GraphError):
        grad(ops.sum(x), [graph.constant(1.0)])
    with pytest.raises(GraphError):
        Graph().leaf(1.0) + x


def test_dense_cap():
    graph = Graph()
    w = graph.leaf(np.ones((3, 3)))
    with pytest.raises(CapacityError):
        layer_hessian(ops.sum(ops.square(w)), w, cap=8)


def test_division_handles_negative_divisors():
    a = np.array([[1.5, -0.4], [0.7, 2.0]])
    b = np.array([[-2.0, -0.5], [1.25, -3.0]])
    _check_primitive(lambda x, y: x / y, a, b)

    graph = Graph()
    y = graph.leaf(np.array([-2.0, 4.0]))
    q = 1.0 / y
    npt.assert_allclose(q.value, [-0.5, 0.25])
    g1 = grad(ops.sum(q), [y], create_graph=True)[0]
    g2 = grad(ops.sum(g1), [y])[0]
    # d²/dy² y⁻¹ = 2 y⁻³
    npt.assert_allclose(g2, 2.0 / np.array([-2.0, 4.0]) ** 3, rtol=1e-12)


def _tanh_layer_loss():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(6, 2))
    W1 = rng.normal(size=(2, 2))
    W2 = rng.normal(size=(3, 2))

    def build(graph, w2):
        h = ops.tanh(graph.constant(X) @ graph.constant(W1).T)
        return ops.mean(ops.square(ops.tanh(h @ w2.T)))

    return build, W2


def test_hvp_equals_dense_hessian_times_vector():
    build, W2 = _tanh_layer_loss()
    graph = Graph()
    w = graph.leaf(W2)
    loss = build(graph, w)
    v = np.random.default_rng(2).normal(size=W2.shape)
    dense = layer_hessian(loss, w)
    npt.assert_allclose(np.ravel(hvp(loss, w, v)), dense @ np.ravel(v), rtol=1e-10, atol=1e-14)


def test_layer_hessian_is_symmetric_and_matches_finite_differences():
    build, W2 = _tanh_layer_loss()
    graph = Graph()
    w = graph.leaf(W2)
    dense = layer_hessian(build(graph, w), w)
    npt.assert_allclose(dense, dense.T, atol=1e-12)

    def f(arrays):
        g = Graph()
        return build(g, g.constant(arrays[0])).item()

    reference = finite_difference_hessian(f, [W2], 0)
    assert np.max(np.abs(dense - reference)) < 1e-5


def test_mixed_second_derivatives_commute():
    graph = Graph()
    x = graph.leaf(np.array([[0.3, -0.8]]))
    y = graph.leaf(np.array([[1.2], [0.4]]))
    f = ops.sum(ops.tanh(x @ y) * ops.exp(ops.sum(x)))
    gx, gy = grad(f, [x, y], create_graph=True)
    # entry (i, j) is ∂²f/∂x_i∂y_j, taken in both orders
    dx_dy = np.stack([np.ravel(grad(gx[0, i], [y])[0]) for i in range(2)])
    dy_dx = np.stack([np.ravel(grad(gy[j, 0], [x])[0]) for j in range(2)], axis=1)
    npt.assert_allclose(dx_dy, dy_dx, rtol=1e-12, atol=1e-15)

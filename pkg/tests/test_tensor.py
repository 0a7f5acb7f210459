import numpy as np
import numpy.testing as npt
import pytest

from errors import DimensionError, EmptyDimensionError, NonFiniteError, RankError
from tensor import RngStream, Stream, as_tensor, frobenius_norm_sq, matmul, rademacher


def test_as_tensor_is_read_only_float64():
    t = as_tensor([[1, 2], [3, 4]])
    assert t.dtype == np.float64
    with pytest.raises(ValueError):
        t[0, 0] = 5.0


def test_as_tensor_rejects_rank_three():
    with pytest.raises(RankError):
        as_tensor(np.zeros((2, 2, 2)))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_as_tensor_rejects_non_finite(bad):
    with pytest.raises(NonFiniteError) as info:
        as_tensor([1.0, bad], op="scale")
    assert info.value.op == "scale"


def test_matmul_checks_shapes():
    npt.assert_array_equal(matmul(np.eye(2), [[1.0], [2.0]]), [[1.0], [2.0]])
    with pytest.raises(DimensionError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_frobenius_norm_sq():
    assert frobenius_norm_sq(np.array([[1.0, 2.0], [2.0, 0.0]])) == 9.0


def test_rademacher_entries_are_signs():
    draws = rademacher(RngStream(3, Stream.HUTCHINSON), 1000)
    assert np.all(draws ** 2 == 1.0)
    # both signs show up in a thousand draws
    assert set(np.unique(draws)) == {-1.0, 1.0}


def test_rademacher_empty_is_an_error():
    with pytest.raises(EmptyDimensionError):
        rademacher(RngStream(0), 0)


def test_stream_draws_depend_only_on_seed_stream_and_index():
    a = RngStream(7, Stream.SHUFFLE)
    b = RngStream(7, Stream.SHUFFLE)
    npt.assert_array_equal(a.normal(5), b.normal(5))
    npt.assert_array_equal(a.normal(5), b.normal(5))

    # draw 1 of a fresh stream equals the second draw above
    fresh = RngStream(7, Stream.SHUFFLE)
    npt.assert_array_equal(fresh.at(1).normal(0.0, 1.0, size=5), RngStream(7, Stream.SHUFFLE, 1).normal(5))


def test_streams_are_independent():
    x = RngStream(7, Stream.INIT).normal(10)
    y = RngStream(7, Stream.SHUFFLE).normal(10)
    z = RngStream(8, Stream.INIT).normal(10)
    assert not np.array_equal(x, y)
    assert not np.array_equal(x, z)


def test_permutation_by_draw_index_is_stable():
    stream = RngStream(2, Stream.SHUFFLE)
    first = stream.permutation(20, draw_index=4)
    stream.normal(3)
    npt.assert_array_equal(first, stream.permutation(20, draw_index=4))
    assert sorted(first) == list(range(20))


def test_matmul_agrees_with_explicit_sums():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3))
    expected = np.zeros((4, 3))
    for i in range(4):
        for j in range(3):
            for k in range(5):
                expected[i, j] += a[i, k] * b[k, j]
    npt.assert_allclose(matmul(a, b), expected, rtol=0, atol=1e-12)


def test_matmul_is_associative():
    rng = np.random.default_rng(4)
    a, b, c = rng.normal(size=(3, 6)), rng.normal(size=(6, 2)), rng.normal(size=(2, 5))
    npt.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), rtol=1e-12, atol=1e-12)


def test_rademacher_moments():
    draws = rademacher(RngStream(0, Stream.HUTCHINSON), 100_000)
    # standard error of the mean is 1/sqrt(1e5) ≈ 0.003
    assert abs(draws.mean()) < 0.02
    assert draws.var() == pytest.approx(1.0, abs=0.02)

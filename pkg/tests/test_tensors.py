import numpy as np
import pytest

from sigrnn.tensors import (
    DenseTensor,
    DimensionMismatchError,
    GradedTensorSeq,
    permute_axes,
    seq_inner,
    seq_norm,
    tensor_dot,
    tensor_product,
)


def naive_tensor_dot(a, b, p, q):
    """Contraction by explicit nested loops, the reference for tensor_dot."""
    ka, kb = a.ndim, b.ndim
    d = a.shape[0] if ka else b.shape[0]
    out_shape = (d,) * (ka + kb - 2)
    out = np.zeros(out_shape)
    for idx in np.ndindex(out_shape):
        ia, ib = idx[: ka - 1], idx[ka - 1 :]
        s = 0.0
        for j in range(d):
            full_a = ia[: p - 1] + (j,) + ia[p - 1 :]
            full_b = ib[: q - 1] + (j,) + ib[q - 1 :]
            s += a[full_a] * b[full_b]
        out[idx] = s
    return out


def test_tensor_product_outer():
    a = DenseTensor(np.array([1.0, 2.0]))
    b = DenseTensor(np.array([1.0, 2.0]))
    out = tensor_product(a, b)
    assert out.order == 2
    np.testing.assert_array_equal(out.array, [[1.0, 2.0], [2.0, 4.0]])


def test_tensor_product_scalar():
    s = DenseTensor.scalar(3.0)
    b = DenseTensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
    out = tensor_product(s, b)
    np.testing.assert_array_equal(out.array, 3.0 * b.array)


def test_tensor_product_basis():
    # e1 (x) e2 enumerated by hand: only entry (1,2) is 1
    a = DenseTensor(np.array([1.0, 0.0]))
    b = DenseTensor(np.array([0.0, 1.0]))
    out = tensor_product(a, b)
    np.testing.assert_array_equal(out.array, [[0.0, 1.0], [0.0, 0.0]])


def test_tensor_product_dim_mismatch():
    a = DenseTensor(np.zeros(2))
    b = DenseTensor(np.zeros(3))
    with pytest.raises(DimensionMismatchError):
        tensor_product(a, b)


def test_tensor_dot_matrix_product_bitwise():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3))
    out = tensor_dot(DenseTensor(a), DenseTensor(b), p=2, q=1)
    np.testing.assert_array_equal(out.array, naive_tensor_dot(a, b, 2, 1))


def test_tensor_dot_inner_product():
    u = np.array([1.0, 2.0, 3.0])
    v = np.array([4.0, 5.0, 6.0])
    out = tensor_dot(DenseTensor(u), DenseTensor(v), p=1, q=1)
    assert out.order == 0
    assert out.array == pytest.approx(32.0)


def test_tensor_dot_matches_loop_oracle():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(2, 2, 2))
    b = rng.normal(size=(2, 2))
    for p in range(1, 4):
        for q in range(1, 3):
            out = tensor_dot(DenseTensor(a), DenseTensor(b), p, q)
            np.testing.assert_allclose(out.array, naive_tensor_dot(a, b, p, q), atol=1e-14)


def test_tensor_dot_axis_out_of_range():
    a = DenseTensor(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        tensor_dot(a, a, p=3, q=1)
    with pytest.raises(ValueError):
        tensor_dot(a, a, p=1, q=0)


def test_tensor_dot_norm_contraction():
    # ||a . b|| <= ||a|| ||b|| on random tensors, d in {2,3}, orders <= 4
    rng = np.random.default_rng(2)
    for d in (2, 3):
        for ka in (1, 2, 3, 4):
            for kb in (1, 2, 3):
                a = DenseTensor(rng.normal(size=(d,) * ka))
                b = DenseTensor(rng.normal(size=(d,) * kb))
                out = tensor_dot(a, b, p=min(2, ka), q=1)
                assert out.norm() <= a.norm() * b.norm() + 1e-12


def test_permute_transpose():
    a = DenseTensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
    out = permute_axes(a, (2, 1))
    np.testing.assert_array_equal(out.array, a.array.T)


def test_permute_identity():
    rng = np.random.default_rng(3)
    a = DenseTensor(rng.normal(size=(3, 3, 3)))
    out = permute_axes(a, (1, 2, 3))
    np.testing.assert_array_equal(out.array, a.array)


def test_permute_cyclic_three_times():
    rng = np.random.default_rng(4)
    a = DenseTensor(rng.normal(size=(2, 2, 2)))
    out = a
    for _ in range(3):
        out = permute_axes(out, (2, 3, 1))
    np.testing.assert_array_equal(out.array, a.array)


def test_permute_entry_convention():
    # result[(i1,i2,i3)] == a[(i_perm(1), i_perm(2), i_perm(3))]
    rng = np.random.default_rng(5)
    a = rng.normal(size=(2, 2, 2))
    perm = (3, 1, 2)
    out = permute_axes(DenseTensor(a), perm).array
    for idx in np.ndindex(2, 2, 2):
        src = tuple(idx[p - 1] for p in perm)
        assert out[idx] == a[src]


def test_permute_preserves_norm():
    rng = np.random.default_rng(6)
    a = DenseTensor(rng.normal(size=(3, 3, 3, 3)))
    out = permute_axes(a, (4, 2, 1, 3))
    assert out.norm() == pytest.approx(a.norm(), rel=1e-15)


def test_permute_rejects_non_permutation():
    a = DenseTensor(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        permute_axes(a, (1, 1))


def seq_from_levels(dim, arrays):
    return GradedTensorSeq.from_arrays(dim, arrays)


def test_seq_inner_unit_scalar():
    a = seq_from_levels(2, [np.asarray(1.0)])
    assert seq_inner(a, a) == pytest.approx(1.0)


def test_seq_inner_hand_expansion():
    u = np.array([1.0, 2.0])
    v = np.array([3.0, -1.0])
    a = seq_from_levels(2, [np.asarray(1.0), u])
    b = seq_from_levels(2, [np.asarray(1.0), v])
    assert seq_inner(a, b) == pytest.approx(1.0 + float(u @ v))


def random_seq(rng, dim, depth):
    return seq_from_levels(dim, [rng.normal(size=(dim,) * k) for k in range(depth + 1)])


def test_seq_inner_cauchy_schwarz():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = random_seq(rng, 2, 3)
        b = random_seq(rng, 2, 3)
        assert abs(seq_inner(a, b)) <= seq_norm(a) * seq_norm(b) + 1e-12


def test_seq_inner_bilinear_symmetric_positive():
    rng = np.random.default_rng(8)
    a = random_seq(rng, 3, 2)
    b = random_seq(rng, 3, 2)
    c = random_seq(rng, 3, 2)
    assert seq_inner(a, b) == pytest.approx(seq_inner(b, a))
    lhs = seq_inner(
        seq_from_levels(3, [2.0 * a.level(k) + c.level(k) for k in range(3)]), b
    )
    assert lhs == pytest.approx(2.0 * seq_inner(a, b) + seq_inner(c, b))
    assert seq_inner(a, a) > 0.0


def test_seq_inner_mixed_depth_shared_prefix():
    rng = np.random.default_rng(9)
    a = random_seq(rng, 2, 4)
    b = random_seq(rng, 2, 2)
    expected = sum(float(np.sum(a.level(k) * b.level(k))) for k in range(3))
    assert seq_inner(a, b) == pytest.approx(expected)


def test_seq_inner_dim_mismatch():
    a = random_seq(np.random.default_rng(0), 2, 1)
    b = random_seq(np.random.default_rng(0), 3, 1)
    with pytest.raises(DimensionMismatchError):
        seq_inner(a, b)


def test_dense_tensor_invariants():
    t = DenseTensor(np.zeros((2, 2, 2)))
    assert t.order == 3 and t.dim == 2 and t.data.shape == (8,)
    s = DenseTensor.scalar(5.0)
    assert s.order == 0 and s.data.shape == (1,)
    with pytest.raises(ValueError):
        DenseTensor(np.zeros((2, 3)))

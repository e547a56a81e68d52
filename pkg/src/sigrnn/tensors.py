"""Dense graded tensor arithmetic over R^d.

Tensors of order k are stored dense as numpy arrays of shape (d,)*k,
row-major with the last index fastest.  Axes are 1-indexed in the public
API.  All values are immutable by convention; operations are pure.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np


class DimensionMismatchError(ValueError):
    """Operands live over different base dimensions."""


@dataclass(frozen=True)
class DenseTensor:
    """An order-k tensor over R^d, dense storage of d^k entries."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.array, dtype=float)
        if arr.ndim > 0:
            dims = set(arr.shape)
            if len(dims) != 1:
                raise ValueError(f"tensor axes must share one dimension, got shape {arr.shape}")
        object.__setattr__(self, "array", arr)

    @property
    def order(self) -> int:
        return self.array.ndim

    @property
    def dim(self) -> int:
        # order-0 tensors carry no dimension information; report 0
        return self.array.shape[0] if self.array.ndim else 0

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view, length dim**order."""
        return self.array.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    @staticmethod
    def scalar(value: float) -> "DenseTensor":
        return DenseTensor(np.asarray(float(value)))

    @staticmethod
    def zeros(dim: int, order: int) -> "DenseTensor":
        return DenseTensor(np.zeros((dim,) * order))


def _check_same_dim(a: DenseTensor, b: DenseTensor) -> None:
    if a.order > 0 and b.order > 0 and a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def tensor_product(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Outer product: result[(i..),(j..)] = a[(i..)] * b[(j..)]."""
    _check_same_dim(a, b)
    return DenseTensor(np.tensordot(a.array, b.array, axes=0))


def tensor_dot(a: DenseTensor, b: DenseTensor, p: int, q: int) -> DenseTensor:
    """Contract axis p of a with axis q of b (1-indexed axes).

    The result keeps a's remaining axes first, then b's.  einsum with a
    fixed subscript order so the summation order matches a naive loop.
    """
    _check_same_dim(a, b)
    if not 1 <= p <= a.order:
        raise ValueError(f"axis p={p} out of range for order-{a.order} tensor")
    if not 1 <= q <= b.order:
        raise ValueError(f"axis q={q} out of range for order-{b.order} tensor")
    letters = string.ascii_lowercase
    sub_a = list(letters[: a.order])
    sub_b = list(letters[a.order : a.order + b.order])
    sub_b[q - 1] = sub_a[p - 1]
    out = [c for i, c in enumerate(sub_a) if i != p - 1] + [
        c for i, c in enumerate(sub_b) if i != q - 1
    ]
    subscripts = f"{''.join(sub_a)},{''.join(sub_b)}->{''.join(out)}"
    return DenseTensor(np.einsum(subscripts, a.array, b.array))


def permute_axes(a: DenseTensor, perm: tuple[int, ...]) -> DenseTensor:
    """result[(i_1..i_k)] = a[(i_perm(1)..i_perm(k))], perm 1-indexed."""
    if sorted(perm) != list(range(1, a.order + 1)):
        raise ValueError(f"perm {perm} is not a permutation of 1..{a.order}")
    zero_based = [p - 1 for p in perm]
    return DenseTensor(np.transpose(a.array, np.argsort(zero_based)))


@dataclass(frozen=True)
class GradedTensorSeq:
    """Truncated graded sequence: levels 0..depth, level k of order k."""

    dim: int
    levels: list[DenseTensor] = field(default_factory=list)

    def __post_init__(self):
        for k, lvl in enumerate(self.levels):
            if lvl.order != k:
                raise ValueError(f"level {k} has order {lvl.order}")
            if k >= 1 and lvl.dim != self.dim:
                raise DimensionMismatchError(f"level {k} dim {lvl.dim} != {self.dim}")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, k: int) -> np.ndarray:
        return self.levels[k].array

    @staticmethod
    def zeros(dim: int, depth: int) -> "GradedTensorSeq":
        return GradedTensorSeq(dim, [DenseTensor.zeros(dim, k) for k in range(depth + 1)])

    @staticmethod
    def from_arrays(dim: int, arrays: list[np.ndarray]) -> "GradedTensorSeq":
        return GradedTensorSeq(dim, [DenseTensor(a) for a in arrays])


def seq_inner(a: GradedTensorSeq, b: GradedTensorSeq) -> float:
    """Sum of levelwise Frobenius inner products over the shared prefix."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    shared = min(a.depth, b.depth)
    return float(
        sum(np.dot(a.levels[k].data, b.levels[k].data) for k in range(shared + 1))
    )


def seq_norm(a: GradedTensorSeq) -> float:
    return float(np.sqrt(max(seq_inner(a, a), 0.0)))

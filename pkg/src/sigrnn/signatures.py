"""Truncated signature transform, signature kernel, and norm bounds.

The public convention multiplies the level-k iterated integral by k!, so a
linear segment with increment delta has level k equal to delta^(x)k exactly.
Internally the levels are accumulated in the standard convention (level k =
iterated integral, i.e. delta^(x)k / k! per segment), where concatenating
two path pieces is the plain graded tensor product; the k! rescaling is
applied at the API boundary.

For piecewise-linear paths the computation is exact up to floating point:
each segment contributes its closed-form signature and segments are chained
with the tensor-product concatenation identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import PathConfig, PiecewiseLinearPath, time_augment
from .tensors import GradedTensorSeq, seq_inner, seq_norm

STANDARD = "standard"
FACTORIAL = "factorial-normalized"


@dataclass(frozen=True)
class Signature:
    """Graded signature levels 0..depth; level 0 is always 1."""

    seq: GradedTensorSeq
    convention: str = FACTORIAL

    def __post_init__(self):
        if self.convention not in (STANDARD, FACTORIAL):
            raise ValueError(f"unknown convention {self.convention!r}")
        if not np.isclose(float(self.seq.level(0)), 1.0):
            raise ValueError("signature level 0 must equal 1")

    @property
    def depth(self) -> int:
        return self.seq.depth

    @property
    def dim(self) -> int:
        return self.seq.dim

    def level(self, k: int) -> np.ndarray:
        return self.seq.level(k)

    def coefficient(self, word: tuple[int, ...]) -> float:
        """Entry for the 1-indexed multi-index word."""
        k = len(word)
        if k == 0:
            return float(self.seq.level(0))
        return float(self.seq.level(k)[tuple(i - 1 for i in word)])

    def with_convention(self, convention: str) -> "Signature":
        if convention == self.convention:
            return self
        if convention == FACTORIAL:
            arrays = [math.factorial(k) * self.seq.level(k) for k in range(self.depth + 1)]
        else:
            arrays = [self.seq.level(k) / math.factorial(k) for k in range(self.depth + 1)]
        return Signature(GradedTensorSeq.from_arrays(self.dim, arrays), convention)


def _segment_levels(delta: np.ndarray, depth: int) -> list[np.ndarray]:
    """Standard-convention levels delta^(x)k / k! of one linear segment."""
    levels = [np.asarray(1.0)]
    for k in range(1, depth + 1):
        levels.append(np.multiply.outer(levels[-1], delta) / k)
    return levels


def _chen(a: list[np.ndarray], b: list[np.ndarray], depth: int) -> list[np.ndarray]:
    """Concatenation in the standard convention: out_k = sum a_i (x) b_(k-i)."""
    out = []
    for k in range(depth + 1):
        acc = np.multiply.outer(a[0], b[k])
        for i in range(1, k + 1):
            acc = acc + np.multiply.outer(a[i], b[k - i])
        out.append(acc)
    return out


def segment_signature(delta, depth: int) -> Signature:
    """Signature of a single linear segment with increment delta.

    In the factorial-normalized convention level k is delta^(x)k.
    """
    delta = np.asarray(delta, dtype=float)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    levels = [np.asarray(1.0)]
    for k in range(1, depth + 1):
        levels.append(np.multiply.outer(levels[-1], delta))
    seq = GradedTensorSeq.from_arrays(delta.shape[0], levels)
    return Signature(seq, FACTORIAL)


def path_signature(
    path: PiecewiseLinearPath,
    depth: int,
    interval: tuple[float, float] = (0.0, 1.0),
    convention: str = FACTORIAL,
) -> Signature:
    """Signature of a piecewise-linear path over [s, t]."""
    s, t = interval
    if not 0.0 <= s <= t <= 1.0:
        raise ValueError(f"invalid interval [{s},{t}]")
    d = path.dim
    if s == t:
        levels = [np.asarray(1.0)] + [np.zeros((d,) * k) for k in range(1, depth + 1)]
        sig = Signature(GradedTensorSeq.from_arrays(d, levels), STANDARD)
        return sig.with_convention(convention)
    inner = path.times[(path.times > s) & (path.times < t)]
    knots = np.concatenate([[s], inner, [t]])
    pts = path.evaluate(knots)
    deltas = np.diff(pts, axis=0)
    levels = _segment_levels(deltas[0], depth)
    for delta in deltas[1:]:
        levels = _chen(levels, _segment_levels(delta, depth), depth)
    sig = Signature(GradedTensorSeq.from_arrays(d, levels), STANDARD)
    return sig.with_convention(convention)


def sig_norm(sig: Signature) -> float:
    return seq_norm(sig.seq)


def sig_kernel(
    x: PiecewiseLinearPath,
    y: PiecewiseLinearPath,
    depth: int,
    config: PathConfig | None = None,
) -> float:
    """Inner product of the truncated signatures of the time-augmented paths.

    Both paths are assumed already normalized into the admissible set; the
    clock channel is appended here.  K(x, x) >= 1 since level 0 is 1.
    """
    if x.dim != y.dim:
        raise ValueError(f"path dimensions differ: {x.dim} vs {y.dim}")
    config = config or PathConfig()
    sx = path_signature(time_augment(x, config), depth)
    sy = path_signature(time_augment(y, config), depth)
    return seq_inner(sx.seq, sy.seq)


def signature_norm_bound(config: PathConfig) -> float:
    """Upper bound 2/(1-L) for the norm of an augmented admissible path's signature."""
    return 2.0 / (1.0 - config.tv_budget)

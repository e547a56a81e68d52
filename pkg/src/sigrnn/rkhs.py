"""Signature-space view of the network: coefficient series, norms, bounds.

In the continuous-time limit the network's output is a linear functional of
the signature of the time-augmented input path.  The coefficient of the
word (i_1..i_k) for output channel l is

    (1/k!) psi_l . Proj( F^{i_1} * ... * F^{i_k}(Hbar_0) ),

with Proj the projection on the hidden block.  The squared norm of that
coefficient series is the regularizer used by the penalized trainer, and
its pairing with a signature is the kernel-space prediction.

The module also evaluates the two generalization-bound formulas as plain
calculators over user-supplied constraint-set constants: they describe a
parameter class, not a fitted model, so nothing is inferred from data.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .paths import PathConfig, PiecewiseLinearPath, time_augment
from .rnn import RnnParams, operator_norm
from .signatures import path_signature
from .taylor import all_word_values, lambda_bound
from .tensors import GradedTensorSeq, seq_inner, seq_norm


@dataclass(frozen=True)
class AlphaSeries:
    """Per-channel coefficient series over the augmented alphabet d+1."""

    channels: list[GradedTensorSeq]
    depth: int
    tv_budget: float
    params: RnnParams = field(repr=False, default=None)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def norm(self) -> float:
        return math.sqrt(sum(seq_inner(c, c) for c in self.channels))


def alpha_series(params: RnnParams, depth: int, config: PathConfig) -> AlphaSeries:
    """Coefficient series of the network, truncated at the given depth."""
    e = params.hidden_dim
    dbar = params.input_dim + 1
    words = all_word_values(params, depth, tv_budget=config.tv_budget)
    channels = []
    for ell in range(params.output_dim):
        psi_row = params.psi[ell]
        arrays = [np.asarray(float(psi_row @ params.h0))]
        for k in range(1, depth + 1):
            arrays.append(words[k - 1][..., :e] @ psi_row / math.factorial(k))
        channels.append(GradedTensorSeq.from_arrays(dbar, arrays))
    return AlphaSeries(channels, depth, config.tv_budget, params.copy())


def _alpha_feature_matrix(params: RnnParams, depth: int, tv_budget: float) -> np.ndarray:
    """Hidden-block word values scaled by 1/k!, one column per word plus the
    start-state column; the coefficient series is psi times this matrix."""
    e = params.hidden_dim
    words = all_word_values(params, depth, tv_budget=tv_budget)
    cols = [params.h0[:, None]]
    for k in range(1, depth + 1):
        flat = words[k - 1][..., :e].reshape(-1, e) / math.factorial(k)
        cols.append(flat.T)
    return np.hstack(cols)


def rkhs_norm_squared(params: RnnParams, depth: int, config: PathConfig) -> float:
    """Squared truncated norm of the coefficient series, summed over channels."""
    feats = _alpha_feature_matrix(params, depth, config.tv_budget)
    return float(np.sum((params.psi @ feats) ** 2))


def rkhs_norm(params: RnnParams, depth: int, config: PathConfig) -> float:
    return math.sqrt(max(rkhs_norm_squared(params, depth, config), 0.0))


def penalized_loss(
    base_loss: float, params: RnnParams, lam: float, depth: int, config: PathConfig
) -> float:
    """base + lambda * (truncated series norm)^2; lambda = 0 adds nothing."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0:
        return float(base_loss)
    return float(base_loss + lam * rkhs_norm_squared(params, depth, config))


def rkhs_predict(
    alpha: AlphaSeries,
    path: PiecewiseLinearPath,
    stop: tuple[int, int] | None = None,
) -> np.ndarray:
    """Channel-wise pairing of the coefficients with the path's signature.

    The path must already be normalized; the clock channel is appended
    here.  stop = (j, T) pairs against the signature over [0, j/T], the
    sequential-output form.
    """
    config = PathConfig(alpha.tv_budget)
    upper = 1.0
    if stop is not None:
        j, T = stop
        if not 1 <= j <= T:
            raise ValueError(f"stop index {j} out of 1..{T}")
        upper = j / T
    aug = time_augment(path, config)
    if aug.dim != alpha.channels[0].dim:
        raise ValueError(
            f"augmented path dim {aug.dim} != alphabet {alpha.channels[0].dim}"
        )
    sig = path_signature(aug, alpha.depth, (0.0, upper))
    return np.array([seq_inner(c, sig.seq) for c in alpha.channels])


def stability_gap(
    params: RnnParams,
    depth: int,
    path_a: PiecewiseLinearPath,
    path_b: PiecewiseLinearPath,
    config: PathConfig,
) -> tuple[float, float]:
    """Prediction gap between two normalized paths and its Cauchy-Schwarz
    bound: series norm times the signature distance."""
    alpha = alpha_series(params, depth, config)
    emp = float(np.linalg.norm(rkhs_predict(alpha, path_a) - rkhs_predict(alpha, path_b)))
    sig_a = path_signature(time_augment(path_a, config), depth)
    sig_b = path_signature(time_augment(path_b, config), depth)
    diff = GradedTensorSeq.from_arrays(
        sig_a.dim, [sig_a.level(k) - sig_b.level(k) for k in range(depth + 1)]
    )
    bound = alpha.norm() * seq_norm(diff)
    return emp, float(bound)


def embedding_tail_bound(
    params: RnnParams, depth: int, config: PathConfig, max_terms: int = 60
) -> float:
    """Bound on the discarded tail sum_{k>depth} ||alpha_k|| * ||sig_k||.

    Uses ||alpha_k|| <= ||psi|| d^(k/2) Lambda_k / k! with d = d+1 and the
    augmented-path level bound ((1+L)/2)^k.  Returns inf when the series
    visibly diverges at the cutoff.
    """
    dbar = params.input_dim + 1
    tau = (1.0 + config.tv_budget) / 2.0
    psi_op = operator_norm(params.psi)
    total = 0.0
    prev = np.inf
    for k in range(depth + 1, depth + 1 + max_terms):
        term = psi_op * dbar ** (k / 2) * lambda_bound(params, k, config) \
            / math.factorial(k) * tau**k
        total += term
        if k == depth + max_terms and term > prev:
            return float("inf")
        prev = term
        if term < 1e-300:
            break
    return float(total)


@dataclass(frozen=True)
class BoundReport:
    """Itemized evaluation of a generalization-bound formula."""

    kind: str
    constants: dict[str, float]
    terms: dict[str, float]

    @property
    def total(self) -> float:
        return float(sum(self.terms.values()))

    def to_kv_text(self) -> str:
        lines = [f"kind={self.kind}"]
        lines += [f"{k}={v!r}" for k, v in self.constants.items()]
        lines += [f"term.{k}={v!r}" for k, v in self.terms.items()]
        lines.append(f"total={self.total!r}")
        return "\n".join(lines) + "\n"

    def to_csv(self, target) -> None:
        if isinstance(target, (str, bytes, os.PathLike)):
            with open(target, "w", newline="") as fh:
                self.to_csv(fh)
                return
        writer = csv.writer(target)
        writer.writerow(["name", "value"])
        writer.writerow(["kind", self.kind])
        for k, v in self.constants.items():
            writer.writerow([k, repr(v)])
        for k, v in self.terms.items():
            writer.writerow([f"term.{k}", repr(v)])
        writer.writerow(["total", repr(self.total)])


def binary_class_radius(L: float, d: int) -> float:
    """Admissible weight-norm radius (1-L)/(32 d) of the logistic example."""
    return (1.0 - L) / (32.0 * d)


def bound_binary(
    n: int,
    T: int,
    delta: float,
    L: float,
    d: int,
    K_W: float,
    K_psi: float,
    K_ell: float,
    empirical_risk: float,
    K_f: float | None = None,
    f_sup: float = 1.0,
    B: float | None = None,
) -> BoundReport:
    """Misclassification bound for the binary setting.

    B defaults to the logistic-activation example sqrt(2) K_psi (1-L) /
    (1-L-32 d K_W), which requires K_W < (1-L)/(32 d); pass B explicitly
    for other activations.  K_f defaults to K_W (the class-level bound on
    the cell Lipschitz constant).
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    if min(n, T) < 1 or min(K_W, K_psi, K_ell) < 0 or not 0 < L < 1:
        raise ValueError("invalid constants")
    if B is None:
        radius = binary_class_radius(L, d)
        if K_W >= radius:
            raise ValueError(
                f"K_W={K_W} violates the radius K_W < {radius}; B is undefined"
            )
        B = math.sqrt(2.0) * K_psi * (1.0 - L) / (1.0 - L - 32.0 * d * K_W)
    if K_f is None:
        K_f = K_W
    c2 = K_ell * K_psi * K_f * math.exp(K_f) * (L + f_sup * math.exp(K_f))
    terms = {
        "empirical_risk": float(empirical_risk),
        "discretization": c2 / T,
        "complexity": 8.0 * B * K_ell / ((1.0 - L) * math.sqrt(n)),
        "confidence": 2.0 * B * K_ell / (1.0 - L) * math.sqrt(math.log(1.0 / delta) / (2.0 * n)),
    }
    constants = {
        "n": n, "T": T, "delta": delta, "L": L, "d": d, "K_W": K_W,
        "K_psi": K_psi, "K_ell": K_ell, "K_f": K_f, "f_sup": f_sup,
        "B": B, "c2": c2,
    }
    return BoundReport("binary", constants, terms)


def bound_sequential(
    n: int,
    T: int,
    delta: float,
    L: float,
    p: int,
    B: float,
    K_y: float,
    c1_sup: float,
    psi_f_sup: float,
    empirical_risk: float,
) -> BoundReport:
    """Risk bound for the sequence-to-sequence setting.

    c1_sup bounds the per-parameter discretization constant over the class
    and psi_f_sup bounds the readout norm times the cell sup norm.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    if min(n, T, p) < 1 or min(B, K_y, c1_sup, psi_f_sup) < 0 or not 0 < L < 1:
        raise ValueError("invalid constants")
    inv = 1.0 / (1.0 - L)
    c3 = c1_sup + psi_f_sup + 2.0 * math.sqrt(p) * B * inv + 2.0 * K_y
    c4 = B * inv + K_y
    c5 = 4.0 * p * B * inv * c4 + K_y**2
    terms = {
        "empirical_risk": float(empirical_risk),
        "discretization": c3 / T,
        "complexity": 4.0 * p * c4 * B * inv / math.sqrt(n),
        "confidence": math.sqrt(2.0 * c5 * math.log(1.0 / delta) / n),
    }
    constants = {
        "n": n, "T": T, "delta": delta, "L": L, "p": p, "B": B, "K_y": K_y,
        "c1_sup": c1_sup, "psi_f_sup": psi_f_sup, "c3": c3, "c4": c4, "c5": c5,
    }
    return BoundReport("sequential", constants, terms)

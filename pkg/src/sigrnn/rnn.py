"""Discrete residual recurrent networks and smooth activations.

The recursion is h_{j+1} = h_j + (1/T) f(h_j, x_{j+1}) with the feedforward
cell f(h, x) = sigma(U h + V x + b) and linear readout z_j = psi h_j.
Derivatives of the logistic and tanh activations of every order are
available through their exact polynomial representations (a polynomial in
sigma(x), resp. tanh(x)), which the higher-order expansion machinery needs.

GRU and LSTM cells are supported in the same residual form for forward
evaluation only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

_POLY_CACHE: dict[tuple[str, int], np.ndarray] = {}


def _derivative_poly(kind: str, n: int) -> np.ndarray:
    """Coefficients (ascending) of the n-th derivative as a polynomial in
    s = sigma(x) or s = tanh(x).

    logistic: s' = s - s^2;  tanh: s' = 1 - s^2.  Differentiating a
    polynomial P(s) gives P'(s) * s', which stays polynomial in s.
    """
    key = (kind, n)
    if key in _POLY_CACHE:
        return _POLY_CACHE[key]
    if n == 0:
        poly = np.array([0.0, 1.0])
    else:
        prev = _derivative_poly(kind, n - 1)
        dprev = prev[1:] * np.arange(1, len(prev))
        if kind == "logistic":
            chain = np.array([0.0, 1.0, -1.0])
        else:
            chain = np.array([1.0, 0.0, -1.0])
        poly = np.convolve(dprev, chain)
    _POLY_CACHE[key] = poly
    return poly


@dataclass(frozen=True)
class Activation:
    """Scalar activation applied componentwise; kind in {identity, logistic, tanh}."""

    kind: str = "tanh"

    def __post_init__(self):
        if self.kind not in ("identity", "logistic", "tanh"):
            raise ValueError(f"unknown activation {self.kind!r}")

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, n: int):
        """n-th derivative evaluated elementwise; n = 0 is the value."""
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            if n == 0:
                return x
            if n == 1:
                return np.ones_like(x)
            return np.zeros_like(x)
        s = 1.0 / (1.0 + np.exp(-x)) if self.kind == "logistic" else np.tanh(x)
        if n == 0:
            return s
        poly = _derivative_poly(self.kind, n)
        out = np.zeros_like(s)
        for c in poly[::-1]:
            out = out * s + c
        return out

    @property
    def lipschitz(self) -> float:
        return {"identity": 1.0, "logistic": 0.25, "tanh": 1.0}[self.kind]

    @property
    def bounded(self) -> bool:
        return self.kind in ("logistic", "tanh")

    @property
    def growth_rate(self) -> float | None:
        """The constant a with |sigma^(k)| <= a^(k+1) k!; None for identity."""
        return {"identity": None, "logistic": 2.0, "tanh": 4.0}[self.kind]

    def derivative_sup_bound(self, n: int) -> float:
        """Analytic sup-norm bound for the n-th derivative."""
        if self.kind == "identity":
            return 1.0 if n <= 1 else 0.0
        if n == 0:
            return 1.0
        if self.kind == "logistic":
            return 2.0 ** (n - 1) * _factorial(n)
        return 4.0**n * _factorial(n)


def _factorial(n: int) -> float:
    out = 1.0
    for i in range(2, n + 1):
        out *= i
    return out


def operator_norm(mat: np.ndarray) -> float:
    """Largest singular value."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return 0.0
    return float(np.linalg.svd(mat, compute_uv=False)[0])


@dataclass
class RnnParams:
    """Feedforward residual cell weights plus linear readout."""

    U: np.ndarray
    V: np.ndarray
    b: np.ndarray
    psi: np.ndarray
    h0: np.ndarray
    activation: Activation = field(default_factory=Activation)

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
        self.h0 = np.asarray(self.h0, dtype=float)
        e = self.U.shape[0]
        if self.U.shape != (e, e):
            raise ValueError(f"U must be square, got {self.U.shape}")
        if self.V.shape[0] != e or self.b.shape != (e,) or self.h0.shape != (e,):
            raise ValueError("inconsistent shapes for V, b, or h0")
        if self.psi.shape[1] != e:
            raise ValueError(f"psi must have {e} columns, got {self.psi.shape}")

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[0]

    @property
    def input_dim(self) -> int:
        return self.V.shape[1]

    @property
    def output_dim(self) -> int:
        return self.psi.shape[0]

    @property
    def W(self) -> np.ndarray:
        """Stacked cell weight matrix [U V], shape e x (e+d)."""
        return np.hstack([self.U, self.V])

    def copy(self) -> "RnnParams":
        return RnnParams(
            self.U.copy(), self.V.copy(), self.b.copy(), self.psi.copy(),
            self.h0.copy(), self.activation,
        )


def random_params(
    hidden_dim: int,
    input_dim: int,
    output_dim: int = 1,
    activation: str = "tanh",
    scale: float | None = None,
    rng: np.random.Generator | None = None,
) -> RnnParams:
    """Uniform init U(-s, s) with the conventional default s = 1/sqrt(e)."""
    rng = rng or np.random.default_rng()
    s = scale if scale is not None else 1.0 / np.sqrt(hidden_dim)
    return RnnParams(
        U=rng.uniform(-s, s, size=(hidden_dim, hidden_dim)),
        V=rng.uniform(-s, s, size=(hidden_dim, input_dim)),
        b=rng.uniform(-s, s, size=hidden_dim),
        psi=rng.uniform(-s, s, size=(output_dim, hidden_dim)),
        h0=np.zeros(hidden_dim),
        activation=Activation(activation),
    )


def rnn_forward(params: RnnParams, samples: np.ndarray):
    """Exact unrolled recursion.  Returns (hidden states h_0..h_T, outputs z_1..z_T)."""
    xs = np.atleast_2d(np.asarray(samples, dtype=float))
    T = xs.shape[0]
    if xs.shape[1] != params.input_dim:
        raise ValueError(f"samples have dim {xs.shape[1]}, expected {params.input_dim}")
    hs = np.empty((T + 1, params.hidden_dim))
    hs[0] = params.h0
    act = params.activation
    for j in range(T):
        hs[j + 1] = hs[j] + act(params.U @ hs[j] + params.V @ xs[j] + params.b) / T
    zs = hs[1:] @ params.psi.T
    return hs, zs


def rnn_forward_batch(params: RnnParams, batch: np.ndarray):
    """Recursion vectorized over a batch, shape (n, T, d) -> (n, T+1, e), (n, T, p)."""
    xs = np.asarray(batch, dtype=float)
    n, T, d = xs.shape
    hs = np.empty((n, T + 1, params.hidden_dim))
    hs[:, 0] = params.h0
    act = params.activation
    for j in range(T):
        pre = hs[:, j] @ params.U.T + xs[:, j] @ params.V.T + params.b
        hs[:, j + 1] = hs[:, j] + act(pre) / T
    zs = hs[:, 1:] @ params.psi.T
    return hs, zs


@dataclass
class RnnGrads:
    U: np.ndarray
    V: np.ndarray
    b: np.ndarray
    psi: np.ndarray
    h0: np.ndarray
    x: np.ndarray


def rnn_backward(params: RnnParams, samples: np.ndarray, dz: np.ndarray) -> RnnGrads:
    """Reverse-mode gradients of the unrolled recursion.

    dz holds the upstream gradient on each output z_1..z_T, shape (T, p).
    Also returns the gradient with respect to the input samples, which the
    adversarial attack needs.
    """
    xs = np.atleast_2d(np.asarray(samples, dtype=float))
    dz = np.asarray(dz, dtype=float).reshape(xs.shape[0], params.output_dim)
    T = xs.shape[0]
    hs, _ = rnn_forward(params, xs)
    act = params.activation
    dU = np.zeros_like(params.U)
    dV = np.zeros_like(params.V)
    db = np.zeros_like(params.b)
    dpsi = np.zeros_like(params.psi)
    dx = np.zeros_like(xs)
    g = np.zeros(params.hidden_dim)
    for j in range(T - 1, -1, -1):
        g = g + params.psi.T @ dz[j]
        dpsi += np.outer(dz[j], hs[j + 1])
        pre = params.U @ hs[j] + params.V @ xs[j] + params.b
        u = act.derivative(pre, 1) * g / T
        dU += np.outer(u, hs[j])
        dV += np.outer(u, xs[j])
        db += u
        dx[j] = params.V.T @ u
        g = g + params.U.T @ u
    return RnnGrads(dU, dV, db, dpsi, g, dx)


def rnn_backward_batch(params: RnnParams, batch: np.ndarray, dz: np.ndarray) -> RnnGrads:
    """Batched reverse mode; parameter gradients are summed over the batch."""
    xs = np.asarray(batch, dtype=float)
    n, T, d = xs.shape
    dz = np.asarray(dz, dtype=float).reshape(n, T, params.output_dim)
    hs, _ = rnn_forward_batch(params, xs)
    act = params.activation
    dU = np.zeros_like(params.U)
    dV = np.zeros_like(params.V)
    db = np.zeros_like(params.b)
    dpsi = np.zeros_like(params.psi)
    dx = np.zeros_like(xs)
    g = np.zeros((n, params.hidden_dim))
    for j in range(T - 1, -1, -1):
        g = g + dz[:, j] @ params.psi
        dpsi += dz[:, j].T @ hs[:, j + 1]
        pre = hs[:, j] @ params.U.T + xs[:, j] @ params.V.T + params.b
        u = act.derivative(pre, 1) * g / T
        dU += u.T @ hs[:, j]
        dV += u.T @ xs[:, j]
        db += u.sum(axis=0)
        dx[:, j] = u @ params.V
        g = g + u @ params.U
    return RnnGrads(dU, dV, db, dpsi, g.sum(axis=0), dx)


def lipschitz_constants(params: RnnParams) -> tuple[float, float, float]:
    """(K_h, K_x, K_f): activation Lipschitz constant times operator norms."""
    ks = params.activation.lipschitz
    k_h = ks * operator_norm(params.U)
    k_x = ks * operator_norm(params.V)
    return k_h, k_x, max(k_h, k_x)


@dataclass
class GruParams:
    """Gate weights for the residual GRU cell."""

    W_r: np.ndarray
    U_r: np.ndarray
    b_r: np.ndarray
    W_z: np.ndarray
    U_z: np.ndarray
    b_z: np.ndarray
    W_n: np.ndarray
    U_n: np.ndarray
    b_n: np.ndarray
    c_n: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.U_r.shape[0]


def gru_forward(params: GruParams, samples: np.ndarray) -> np.ndarray:
    """Residual GRU: h_{j+1} = h_j + (1/T) z*(n - h_j) with the usual gates."""
    xs = np.atleast_2d(np.asarray(samples, dtype=float))
    T = xs.shape[0]
    logistic = Activation("logistic")
    hs = np.zeros((T + 1, params.hidden_dim))
    for j in range(T):
        h, x = hs[j], xs[j]
        r = logistic(params.W_r @ x + params.b_r + params.U_r @ h)
        z = logistic(params.W_z @ x + params.b_z + params.U_z @ h)
        n = np.tanh(params.W_n @ x + params.b_n + r * (params.U_n @ h + params.c_n))
        hs[j + 1] = h + z * (n - h) / T
    return hs


@dataclass
class LstmParams:
    """Gate weights for the residual LSTM cell (stacked state (h, c))."""

    W_i: np.ndarray
    U_i: np.ndarray
    b_i: np.ndarray
    W_f: np.ndarray
    U_f: np.ndarray
    b_f: np.ndarray
    W_g: np.ndarray
    U_g: np.ndarray
    b_g: np.ndarray
    W_o: np.ndarray
    U_o: np.ndarray
    b_o: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.U_i.shape[0]


def lstm_forward(params: LstmParams, samples: np.ndarray) -> np.ndarray:
    """Residual LSTM on the stacked state (h, c); returns shape (T+1, 2e)."""
    xs = np.atleast_2d(np.asarray(samples, dtype=float))
    T = xs.shape[0]
    e = params.hidden_dim
    logistic = Activation("logistic")
    states = np.zeros((T + 1, 2 * e))
    for j in range(T):
        h, c = states[j, :e], states[j, e:]
        x = xs[j]
        i = logistic(params.W_i @ x + params.b_i + params.U_i @ h)
        f = logistic(params.W_f @ x + params.b_f + params.U_f @ h)
        g = np.tanh(params.W_g @ x + params.b_g + params.U_g @ h)
        o = logistic(params.W_o @ x + params.b_o + params.U_o @ h)
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        states[j + 1, :e] = h + (h_new - h) / T
        states[j + 1, e:] = c + (c_new - c) / T
    return states


_CHECKPOINT_MAGIC = "sigrnn-params v1"


def save_params(params: RnnParams, target) -> None:
    """Plain-text checkpoint: magic, activation, then one array per line as
    `name n_rows n_cols v1 v2 ...` with row-major values."""
    if isinstance(target, (str, bytes, os.PathLike)):
        with open(target, "w") as fh:
            save_params(params, fh)
            return
    target.write(_CHECKPOINT_MAGIC + "\n")
    target.write(f"activation {params.activation.kind}\n")
    for name in ("U", "V", "b", "psi", "h0"):
        arr = np.atleast_2d(getattr(params, name))
        vals = " ".join(repr(float(v)) for v in arr.reshape(-1))
        target.write(f"{name} {arr.shape[0]} {arr.shape[1]} {vals}\n")


def load_params(source) -> RnnParams:
    if isinstance(source, (str, bytes, os.PathLike)):
        with open(source) as fh:
            return load_params(fh)
    lines = [ln.strip() for ln in source if ln.strip()]
    if not lines or lines[0] != _CHECKPOINT_MAGIC:
        raise ValueError("not a sigrnn checkpoint")
    fields: dict[str, np.ndarray] = {}
    activation = "tanh"
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "activation":
            activation = parts[1]
            continue
        name, rows, cols = parts[0], int(parts[1]), int(parts[2])
        fields[name] = np.array([float(v) for v in parts[3:]]).reshape(rows, cols)
    return RnnParams(
        U=fields["U"],
        V=fields["V"],
        b=fields["b"].reshape(-1),
        psi=fields["psi"],
        h0=fields["h0"].reshape(-1),
        activation=Activation(activation),
    )

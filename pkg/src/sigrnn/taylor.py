"""Higher-order expansion machinery for the controlled form of the RNN.

The solution of the controlled equation is approximated by a series whose
level-k term pairs signature entries with iterated star products
F^{i_1} * ... * F^{i_k} evaluated at the starting state, where
(F * G)(h) = J(G)(h) F(h) and the product associates right to left.

Star products are evaluated with derivative towers (truncated jets) at the
single starting state: a tower holds the value, Jacobian, and higher
derivative tensors of a vector field at one point, and one star application
consumes one derivative order.  This keeps the cost polynomial where a
symbolic expansion of the nested product rule would explode.

Towers for the drive columns have closed forms: columns 1..d are constant
basis injections, and column d+1 has n-th derivative

    scale * W[j, i_1] ... W[j, i_n] * sigma^(n)(W_j . h + b_j),

with scale = 2/(1-L), zero rows for components beyond the hidden block.
With the identity activation every column is affine and iterated products
reduce to W_{i_k} ... W_{i_2} (W_{i_1} h + b_{i_1}).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .ode import euler_constants, initial_cde_state
from .paths import PathConfig, PiecewiseLinearPath, time_augment
from .rnn import RnnParams, operator_norm
from .signatures import STANDARD, path_signature


@dataclass
class DerivativeTower:
    """Derivatives 0..order of a vector field at one point.

    derivs[n] has shape (e,)*(n+1): the first axis is the output
    component, the remaining n axes are differentiation directions
    (symmetric).
    """

    basepoint: np.ndarray
    derivs: list[np.ndarray]
    _nonzero: list[bool] = field(default=None, repr=False)

    def __post_init__(self):
        if self._nonzero is None:
            self._nonzero = [bool(np.any(d)) for d in self.derivs]

    @property
    def order(self) -> int:
        return len(self.derivs) - 1

    @property
    def dim(self) -> int:
        return len(self.basepoint)

    def value(self) -> np.ndarray:
        return self.derivs[0]

    def jacobian(self) -> np.ndarray:
        return self.derivs[1]

    def truncated(self, order: int) -> "DerivativeTower":
        if order > self.order:
            raise ValueError(f"tower only carries order {self.order}")
        return DerivativeTower(
            self.basepoint, self.derivs[: order + 1], self._nonzero[: order + 1]
        )


def _affine_columns(params: RnnParams, tv_budget: float):
    """Matrices and offsets (W_i, b_i) of the affine drive columns.

    Only column d+1 has a nonzero matrix; for i <= d the offset is the
    (i+d)-th basis vector.  Exact for the identity activation.
    """
    e, d = params.hidden_dim, params.input_dim
    ebar = e + d
    scale = 2.0 / (1.0 - tv_budget)
    mats = [np.zeros((ebar, ebar)) for _ in range(d)]
    offs = []
    for i in range(d):
        off = np.zeros(ebar)
        off[e + i] = 1.0
        offs.append(off)
    w_last = np.vstack([scale * params.W, np.zeros((d, ebar))])
    b_last = np.concatenate([scale * params.b, np.zeros(d)])
    mats.append(w_last)
    offs.append(b_last)
    return mats, offs


def field_tower(
    params: RnnParams,
    column: int,
    basepoint: np.ndarray,
    order: int,
    tv_budget: float = 0.5,
) -> DerivativeTower:
    """Derivative tower of one drive column at the given state."""
    e, d = params.hidden_dim, params.input_dim
    ebar = e + d
    if not 1 <= column <= d + 1:
        raise ValueError(f"column {column} out of 1..{d + 1}")
    basepoint = np.asarray(basepoint, dtype=float)
    if basepoint.shape != (ebar,):
        raise ValueError(f"basepoint must have shape ({ebar},)")
    if column <= d:
        value = np.zeros(ebar)
        value[e + column - 1] = 1.0
        derivs = [value] + [np.zeros((ebar,) * (n + 1)) for n in range(1, order + 1)]
        return DerivativeTower(basepoint, derivs)
    scale = 2.0 / (1.0 - tv_budget)
    W = params.W
    pre = W @ basepoint + params.b
    derivs = []
    row_pow = np.ones(e)  # running product W[j,i_1]...W[j,i_n], grown per order
    for n in range(order + 1):
        sig_n = params.activation.derivative(pre, n)
        top = scale * sig_n.reshape((e,) + (1,) * n) * row_pow
        full = np.zeros((ebar,) * (n + 1))
        full[:e] = top
        derivs.append(full)
        row_pow = np.einsum("j...,ji->j...i", row_pow, W)
    return DerivativeTower(basepoint, derivs)


def star_apply(G: DerivativeTower, F: DerivativeTower) -> DerivativeTower:
    """Tower of F * G = J(G) F from towers of G and F at the same point.

    Needs G one order deeper than the result: derivative n of the product
    spreads the n directions between J(G) and F by the product rule,

        sum over subsets A of {1..n} of  J^{|A|+1}(G)[j, s, i_A] F^{(n-|A|)}[s, i_Ac]

    summed over s, with each term's axes routed back to their positions.
    """
    if G.order < 1:
        raise ValueError("tower order exhausted: product needs one more order of G")
    out_order = G.order - 1
    if F.order < out_order:
        raise ValueError(
            f"F carries order {F.order}, need {out_order} for the product"
        )
    if np.shape(G.basepoint) != np.shape(F.basepoint):
        raise ValueError("towers must share the basepoint dimension")
    dim = G.dim
    derivs = []
    for n in range(out_order + 1):
        acc = np.zeros((dim,) * (n + 1))
        for a in range(n + 1):
            if not (G._nonzero[a + 1] and F._nonzero[n - a]):
                continue
            t_g = G.derivs[a + 1]
            t_f = F.derivs[n - a]
            for A in itertools.combinations(range(n), a):
                Ac = [p for p in range(n) if p not in A]
                contracted = np.tensordot(t_g, t_f, axes=([1], [0]))
                if n:
                    src = list(range(1, n + 1))
                    dst = [1 + p for p in A] + [1 + q for q in Ac]
                    contracted = np.moveaxis(contracted, src, dst)
                acc = acc + contracted
        derivs.append(acc)
    return DerivativeTower(G.basepoint, derivs)


def _base_towers(params, letters, max_order, basepoint, tv_budget):
    cache = {}

    def get(letter: int, order: int) -> DerivativeTower:
        key = letter
        if key not in cache or cache[key].order < order:
            cache[key] = field_tower(params, letter, basepoint, max(order, 0), tv_budget)
        return cache[key].truncated(max(order, 0))

    return get


def word_value_closed_form(
    params: RnnParams, word, basepoint: np.ndarray, tv_budget: float = 0.5
) -> np.ndarray:
    """Iterated star product for affine columns (identity activation)."""
    mats, offs = _affine_columns(params, tv_budget)
    first = word[0]
    v = mats[first - 1] @ basepoint + offs[first - 1]
    for letter in word[1:]:
        v = mats[letter - 1] @ v
    return v


def iterated_star(
    params: RnnParams,
    word,
    basepoint: np.ndarray | None = None,
    tv_budget: float = 0.5,
    method: str = "auto",
) -> np.ndarray:
    """Value of F^{i_1} * ... * F^{i_k} at the starting state.

    Evaluated right to left: the tower of the last letter is built at
    order k-1 and each earlier letter consumes one order.  method is
    "auto" (closed form when the activation is the identity), "tower",
    or "closed-form".
    """
    word = tuple(int(i) for i in word)
    dbar = params.input_dim + 1
    if not word or any(not 1 <= i <= dbar for i in word):
        raise ValueError(f"word letters must lie in 1..{dbar}")
    if basepoint is None:
        basepoint = initial_cde_state(params)
    if method not in ("auto", "tower", "closed-form"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed-form" or (
        method == "auto" and params.activation.kind == "identity"
    ):
        if params.activation.kind != "identity":
            raise ValueError("closed form requires the identity activation")
        return word_value_closed_form(params, word, basepoint, tv_budget)
    k = len(word)
    get = _base_towers(params, range(1, dbar + 1), k - 1, basepoint, tv_budget)
    tower = get(word[-1], k - 1)
    for letter in reversed(word[:-1]):
        tower = star_apply(tower, get(letter, tower.order - 1))
    return tower.value()


def all_word_values(
    params: RnnParams,
    depth: int,
    basepoint: np.ndarray | None = None,
    tv_budget: float = 0.5,
    method: str = "auto",
) -> list[np.ndarray]:
    """Iterated star products for every word up to the given length.

    Returns one array per level k = 1..depth of shape (d+1,)*k + (e+d,),
    indexed by the (0-based) word letters.  Words sharing a suffix share
    tower computations, so the cost is one star application per word.
    """
    dbar = params.input_dim + 1
    ebar = params.hidden_dim + params.input_dim
    if basepoint is None:
        basepoint = initial_cde_state(params)
    levels = [np.zeros((dbar,) * k + (ebar,)) for k in range(1, depth + 1)]
    if depth == 0:
        return levels
    use_closed = method == "closed-form" or (
        method == "auto" and params.activation.kind == "identity"
    )
    if use_closed:
        mats, offs = _affine_columns(params, tv_budget)

        def extend(word, value):
            levels[len(word) - 1][tuple(i - 1 for i in word)] = value
            if len(word) < depth:
                for j in range(1, dbar + 1):
                    extend(word + (j,), mats[j - 1] @ value)

        for i in range(1, dbar + 1):
            extend((i,), mats[i - 1] @ basepoint + offs[i - 1])
        return levels

    get = _base_towers(params, range(1, dbar + 1), depth - 1, basepoint, tv_budget)

    def visit(word, tower):
        levels[len(word) - 1][tuple(i - 1 for i in word)] = tower.value()
        if len(word) < depth and tower.order >= 1:
            for j in range(1, dbar + 1):
                visit((j,) + word, star_apply(tower, get(j, tower.order - 1)))

    for i in range(1, dbar + 1):
        visit((i,), get(i, depth - 1))
    return levels


def taylor_levels(
    params: RnnParams,
    path: PiecewiseLinearPath,
    depth: int,
    config: PathConfig,
    t: float = 1.0,
    method: str = "auto",
) -> list[np.ndarray]:
    """Per-level contributions of the expansion at time t.

    Entry 0 is the starting state; entry k pairs the level-k signature of
    the time-augmented path with the level-k word values.  The step-N state
    is the sum of entries 0..N; returning the pieces lets a sweep over N
    reuse one computation.
    """
    aug = time_augment(path, config)
    sig = path_signature(aug, depth, (0.0, t), convention=STANDARD)
    words = all_word_values(params, depth, tv_budget=config.tv_budget, method=method)
    contributions = [initial_cde_state(params)]
    for k in range(1, depth + 1):
        contributions.append(np.tensordot(sig.level(k), words[k - 1], axes=k))
    return contributions


def taylor_expansion(
    params: RnnParams,
    path: PiecewiseLinearPath,
    depth: int,
    config: PathConfig,
    t: float = 1.0,
    method: str = "auto",
) -> np.ndarray:
    """Step-N state estimate at time t from signature levels 1..depth."""
    return np.sum(taylor_levels(params, path, depth, config, t, method), axis=0)


def radius_condition(params: RnnParams, config: PathConfig):
    """Weight-norm radius ||W||_F < (1-L) / (8 a^2 (d+1)) for the smooth bounds.

    The identity activation has no growth constraint; its radius is infinite.
    """
    w_norm = float(np.linalg.norm(params.W))
    a = params.activation.growth_rate
    if a is None:
        return True, w_norm, float("inf")
    dbar = params.input_dim + 1
    radius = (1.0 - config.tv_budget) / (8.0 * a * a * dbar)
    return w_norm < radius, w_norm, radius


def lambda_bound(params: RnnParams, k: int, config: PathConfig) -> float:
    """Analytic bound on the sup of length-k iterated star product norms.

    Smooth activations with growth rate a use
    sqrt(2) a (8 a^2 ||W||_F / (1-L))^(k-1) k!; the identity activation uses
    the affine-case bound C ||W_{d+1}||_op^(k-1).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    L = config.tv_budget
    a = params.activation.growth_rate
    if a is None:
        mats, offs = _affine_columns(params, L)
        w_op = operator_norm(mats[-1])
        m_bar = euler_constants(params, config).M + L
        c = w_op * m_bar + max(1.0, np.linalg.norm(offs[-1]))
        return float(c * w_op ** (k - 1))
    w_norm = float(np.linalg.norm(params.W))
    return float(
        math.sqrt(2.0) * a * (8.0 * a * a * w_norm / (1.0 - L)) ** (k - 1)
        * math.factorial(k)
    )


@dataclass(frozen=True)
class TaylorErrorBound:
    """Truncation-error bound d^(N+1)/(N+1)! * Lambda_{N+1} with d = d+1."""

    value: float
    depth: int
    lambda_next: float
    radius_ok: bool
    w_frobenius: float
    radius: float


def taylor_error_bound(params: RnnParams, depth: int, config: PathConfig) -> TaylorErrorBound:
    """Bound on the step-N truncation error; flags whether the weight-radius
    condition backing the smooth-activation bound holds."""
    dbar = params.input_dim + 1
    lam = lambda_bound(params, depth + 1, config)
    ok, w_norm, radius = radius_condition(params, config)
    value = dbar ** (depth + 1) / math.factorial(depth + 1) * lam
    return TaylorErrorBound(
        value=float(value), depth=depth, lambda_next=lam,
        radius_ok=ok, w_frobenius=w_norm, radius=radius,
    )

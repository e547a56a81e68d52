"""Self-contained property checks runnable from the command line.

Each check re-derives its expectation independently (loop oracles, finite
differences, closed forms) and raises AssertionError on violation.  The
`verify` subcommand runs all of them and reports one line per check.
"""

from __future__ import annotations

import math

import numpy as np

from .ode import euler_constants, euler_gap, integrate_cde, integrate_rnn_ode
from .paths import PathConfig, from_samples, normalize, resample, stop_at, time_augment, total_variation
from .rkhs import alpha_series, bound_binary, stability_gap
from .rnn import Activation, RnnParams, random_params, rnn_backward, rnn_forward, operator_norm
from .signatures import path_signature, segment_signature, sig_norm, signature_norm_bound
from .taylor import (
    field_tower,
    iterated_star,
    lambda_bound,
    radius_condition,
    taylor_error_bound,
    taylor_expansion,
    word_value_closed_form,
)
from .tensors import DenseTensor, GradedTensorSeq, permute_axes, seq_inner, seq_norm, tensor_dot
from .training import make_spirals, pgd_attack, prepare_sequences


def _random_normalized_path(rng, config, d=2, T=32):
    return normalize(from_samples(rng.normal(size=(T, d))), config)


def _spiral_path(config, T=64):
    ts = np.arange(1, T + 1) / T
    r = 0.25 + 0.75 * ts
    ang = 3 * np.pi * ts
    return normalize(
        from_samples(np.column_stack([r * np.cos(ang), r * np.sin(ang)])), config
    )


def check_tensor_contraction_inequality():
    rng = np.random.default_rng(0)
    for d in (2, 3):
        for _ in range(20):
            a = DenseTensor(rng.normal(size=(d,) * 3))
            b = DenseTensor(rng.normal(size=(d,) * 2))
            out = tensor_dot(a, b, 2, 1)
            assert out.norm() <= a.norm() * b.norm() + 1e-12


def check_permutation_preserves_norm():
    rng = np.random.default_rng(1)
    a = DenseTensor(rng.normal(size=(3, 3, 3)))
    assert abs(permute_axes(a, (3, 1, 2)).norm() - a.norm()) < 1e-12


def check_tensor_dot_is_matrix_product():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    out = tensor_dot(DenseTensor(a), DenseTensor(b), 2, 1).array
    ref = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                ref[i, j] += a[i, k] * b[k, j]
    assert np.array_equal(out, ref)


def check_seq_inner_cauchy_schwarz():
    rng = np.random.default_rng(3)
    mk = lambda: GradedTensorSeq.from_arrays(2, [rng.normal(size=(2,) * k) for k in range(4)])
    for _ in range(10):
        a, b = mk(), mk()
        assert abs(seq_inner(a, b)) <= seq_norm(a) * seq_norm(b) + 1e-12


def check_total_variation_additive():
    rng = np.random.default_rng(4)
    config = PathConfig(0.5)
    path = _random_normalized_path(rng, config)
    lhs = total_variation(path, 0.0, 0.37) + total_variation(path, 0.37, 1.0)
    assert abs(lhs - total_variation(path)) < 1e-12


def check_augmented_tv_budget():
    rng = np.random.default_rng(5)
    for L in (0.25, 0.5, 0.75):
        config = PathConfig(L)
        aug = time_augment(_random_normalized_path(rng, config), config)
        assert total_variation(aug) <= (1 + L) / 2 + 1e-12


def check_segment_signature_outer_powers():
    sig = segment_signature([1.0, 2.0], 3)
    assert np.allclose(sig.level(2), [[1, 2], [2, 4]])
    assert sig.coefficient((1, 1, 1)) == 1.0


def check_chen_split_consistency():
    rng = np.random.default_rng(6)
    config = PathConfig(0.5)
    path = _random_normalized_path(rng, config, T=16)
    left = path_signature(path, 3, (0.0, 0.41), convention="standard")
    right = path_signature(path, 3, (0.41, 1.0), convention="standard")
    whole = path_signature(path, 3, convention="standard")
    for k in range(4):
        combined = sum(
            np.multiply.outer(left.level(i), right.level(k - i)) for i in range(k + 1)
        )
        assert np.allclose(combined, whole.level(k), atol=1e-12)


def check_signature_norm_bound():
    rng = np.random.default_rng(7)
    for L in (0.25, 0.5, 0.75):
        config = PathConfig(L)
        for _ in range(10):
            path = _random_normalized_path(rng, config)
            sig = path_signature(time_augment(path, config), 6)
            assert sig_norm(sig) <= signature_norm_bound(config) + 1e-12


def check_stopped_path_signature():
    rng = np.random.default_rng(8)
    config = PathConfig(0.5)
    aug = time_augment(_random_normalized_path(rng, config, T=10), config)
    stopped = path_signature(stop_at(aug, 3, 10), 3)
    restricted = path_signature(aug, 3, (0.0, 0.3))
    for k in range(4):
        assert np.allclose(stopped.level(k), restricted.level(k), atol=1e-12)


def check_activation_derivative_bounds():
    xs = np.linspace(-10, 10, 801)
    for kind in ("logistic", "tanh"):
        act = Activation(kind)
        for n in range(9):
            assert np.max(np.abs(act.derivative(xs, n))) <= act.derivative_sup_bound(n) + 1e-9


def check_forward_recursion():
    rng = np.random.default_rng(9)
    params = random_params(3, 2, rng=rng, activation="logistic")
    xs = rng.normal(size=(5, 2))
    hs, _ = rnn_forward(params, xs)
    h = params.h0.copy()
    for j in range(5):
        h = h + params.activation(params.U @ h + params.V @ xs[j] + params.b) / 5
        assert np.allclose(hs[j + 1], h, atol=1e-14)


def check_backward_finite_differences():
    rng = np.random.default_rng(10)
    params = random_params(3, 2, rng=rng, activation="tanh")
    xs = rng.normal(size=(4, 2))
    w = rng.normal(size=(4, 1))
    g = rnn_backward(params, xs, w)
    step = 1e-6
    for idx in [(0, 0), (1, 2)]:
        save = params.U[idx]
        params.U[idx] = save + step
        up = float(np.sum(w * rnn_forward(params, xs)[1]))
        params.U[idx] = save - step
        dn = float(np.sum(w * rnn_forward(params, xs)[1]))
        params.U[idx] = save
        assert abs(g.U[idx] - (up - dn) / (2 * step)) < 1e-6


def check_ode_matrix_exponential():
    rng = np.random.default_rng(11)
    U = 0.7 * rng.normal(size=(3, 3))
    h0 = rng.normal(size=3)
    params = RnnParams(U=U, V=np.zeros((3, 2)), b=np.zeros(3), psi=np.ones((1, 3)),
                       h0=h0, activation=Activation("identity"))
    from .paths import PiecewiseLinearPath

    path = PiecewiseLinearPath(np.array([0.0, 1.0]), np.zeros((2, 2)))
    sol = integrate_rnn_ode(params, path, rtol=1e-10, atol=1e-12)
    expm, term = np.eye(3), np.eye(3)
    for k in range(1, 40):
        term = term @ U / k
        expm += term
    assert np.linalg.norm(sol(1.0) - expm @ h0) < 1e-8


def check_cde_matches_ode():
    rng = np.random.default_rng(12)
    config = PathConfig(0.5)
    path = _spiral_path(config)
    params = random_params(2, 2, rng=rng, activation="logistic")
    a = integrate_rnn_ode(params, path, rtol=1e-9, atol=1e-11)(1.0)
    b = integrate_cde(params, time_augment(path, config), config, rtol=1e-9, atol=1e-11)(1.0)
    assert np.linalg.norm(b[:2] - a) <= 1e-7


def check_euler_gap_bound():
    rng = np.random.default_rng(13)
    config = PathConfig(0.5)
    path = _spiral_path(config, T=128)
    params = random_params(2, 2, rng=rng, activation="logistic")
    for T in (16, 64):
        result = euler_gap(params, resample(path, T), config)
        assert result.gap <= result.bound + 1e-12


def check_state_norm_bound():
    rng = np.random.default_rng(14)
    config = PathConfig(0.5)
    path = _spiral_path(config)
    params = random_params(2, 2, rng=rng, activation="tanh")
    sol = integrate_rnn_ode(params, path)
    constants = euler_constants(params, config)
    ts = np.linspace(0, 1, 100)
    assert np.max(np.linalg.norm(sol(ts), axis=1)) <= constants.M + 1e-9


def check_iterated_star_identity_closed_form():
    rng = np.random.default_rng(15)
    params = random_params(2, 2, rng=rng, activation="identity")
    h0 = rng.normal(size=4)
    for word in [(1,), (3, 2), (3, 3, 1), (2, 3, 3, 3)]:
        tower = iterated_star(params, word, h0, method="tower")
        closed = word_value_closed_form(params, word, h0)
        assert np.allclose(tower, closed, atol=1e-12)


def check_tower_symmetry():
    rng = np.random.default_rng(16)
    params = random_params(2, 2, rng=rng, activation="tanh")
    tower = field_tower(params, 3, rng.normal(size=4) * 0.3, order=3)
    d3 = tower.derivs[3]
    assert np.allclose(d3, np.transpose(d3, (0, 3, 2, 1)), atol=1e-13)


def check_taylor_error_bound():
    rng = np.random.default_rng(17)
    config = PathConfig(0.5)
    path = _spiral_path(config)
    params = random_params(2, 2, rng=rng, activation="logistic")
    ok, w, radius = radius_condition(params, config)
    scale = 0.8 * radius / w
    params.U, params.V = params.U * scale, params.V * scale
    ref = integrate_cde(params, time_augment(path, config), config,
                        rtol=1e-11, atol=1e-13)(1.0)
    for depth in (1, 2, 3):
        err = np.linalg.norm(taylor_expansion(params, path, depth, config) - ref)
        assert err <= taylor_error_bound(params, depth, config).value


def check_alpha_norm_bound():
    rng = np.random.default_rng(18)
    config = PathConfig(0.5)
    params = random_params(2, 2, rng=rng, activation="logistic")
    ok, w, radius = radius_condition(params, config)
    scale = 0.5 * radius / w
    params.U, params.V = params.U * scale, params.V * scale
    depth = 4
    alpha = alpha_series(params, depth, config)
    psi_op = operator_norm(params.psi)
    bound = psi_op**2 * sum(
        (3**k / math.factorial(k) * lambda_bound(params, k, config)) ** 2
        for k in range(1, depth + 1)
    )
    assert alpha.norm() ** 2 <= bound + 1e-12


def check_stability_gap_bound():
    rng = np.random.default_rng(19)
    config = PathConfig(0.5)
    params = random_params(2, 2, rng=rng, activation="tanh", scale=0.4)
    path = _spiral_path(config)
    other = normalize(
        from_samples(resample(path, 64) + 0.01 * rng.normal(size=(64, 2))), config
    )
    emp, bound = stability_gap(params, 3, path, other, config)
    assert emp <= bound + 1e-12


def check_bound_calculator_monotone():
    kwargs = dict(T=50, delta=0.05, L=0.5, d=2, K_psi=1.0, K_ell=1.0,
                  empirical_risk=0.1, K_W=1e-4)
    small = bound_binary(n=100, **kwargs)
    large = bound_binary(n=400, **kwargs)
    assert large.total < small.total


def check_attack_projection():
    rng = np.random.default_rng(20)
    config = PathConfig(0.5)
    ds = make_spirals(6, 10, seed=0)
    sequences = prepare_sequences(ds.sequences, config)
    params = random_params(3, 2, rng=rng, activation="tanh")
    result = pgd_attack(params, sequences, ds.labels, epsilon=0.03, steps=10)
    deltas = (result.sequences - sequences).reshape(6, -1)
    assert np.all(np.linalg.norm(deltas, axis=1) <= 0.03 + 1e-9)


def check_spiral_generator():
    a = make_spirals(9, 12, seed=1)
    b = make_spirals(9, 12, seed=1)
    assert np.array_equal(a.sequences, b.sequences)
    assert abs(np.sum(a.labels == 1) - np.sum(a.labels == -1)) <= 1


ALL_CHECKS = [
    ("tensor contraction norm inequality", check_tensor_contraction_inequality),
    ("axis permutation preserves norm", check_permutation_preserves_norm),
    ("tensor dot reproduces matrix product", check_tensor_dot_is_matrix_product),
    ("graded inner product Cauchy-Schwarz", check_seq_inner_cauchy_schwarz),
    ("total variation additive over intervals", check_total_variation_additive),
    ("augmented path TV within (1+L)/2", check_augmented_tv_budget),
    ("segment signature outer powers", check_segment_signature_outer_powers),
    ("signature concatenation consistency", check_chen_split_consistency),
    ("signature norm within 2/(1-L)", check_signature_norm_bound),
    ("stopped path signature identity", check_stopped_path_signature),
    ("activation derivative bounds", check_activation_derivative_bounds),
    ("forward pass matches unrolled recursion", check_forward_recursion),
    ("backward pass matches finite differences", check_backward_finite_differences),
    ("linear ODE matches matrix exponential", check_ode_matrix_exponential),
    ("controlled form agrees with the ODE", check_cde_matches_ode),
    ("discretization gap within analytic bound", check_euler_gap_bound),
    ("ODE state norm within bound", check_state_norm_bound),
    ("iterated star products match affine closed form", check_iterated_star_identity_closed_form),
    ("derivative tower symmetry", check_tower_symmetry),
    ("expansion error within truncation bound", check_taylor_error_bound),
    ("coefficient series norm within bound", check_alpha_norm_bound),
    ("stability gap within Cauchy-Schwarz bound", check_stability_gap_bound),
    ("generalization bound monotone in n", check_bound_calculator_monotone),
    ("attack stays inside the norm ball", check_attack_projection),
    ("spiral generator deterministic and balanced", check_spiral_generator),
]


def run_all(report=print) -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for name, check in ALL_CHECKS:
        try:
            check()
        except Exception as exc:  # report and continue
            failures += 1
            report(f"FAIL  {name}: {exc!r}")
        else:
            report(f"PASS  {name}")
    return failures

"""Acceptance criteria, one test per criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.  Scales are desk-sized but every tolerance is pinned here;
nothing is deferred to later calibration.
"""

import math
import time

import numpy as np
import pytest

from sigrnn.ode import euler_constants, euler_gap, integrate_cde
from sigrnn.paths import PathConfig, from_samples, normalize, resample, time_augment
from sigrnn.rkhs import (
    alpha_series,
    bound_binary,
    bound_sequential,
    embedding_tail_bound,
    rkhs_norm_squared,
    rkhs_predict,
)
from sigrnn.rnn import operator_norm, random_params, rnn_forward
from sigrnn.signatures import path_signature, sig_norm, signature_norm_bound
from sigrnn.taylor import (
    all_word_values,
    radius_condition,
    taylor_error_bound,
    taylor_levels,
)
from sigrnn.training import (
    TrainConfig,
    make_spirals,
    mean_loss,
    model_inputs,
    objective_gradient,
    pgd_attack,
    train,
)

from .oracles import riemann_signature_levels

CONFIG = PathConfig(0.5)


def spiral_path(T, turns=2.0, config=CONFIG):
    ts = np.arange(1, T + 1) / T
    r = 0.25 + 0.75 * ts
    ang = 2 * np.pi * turns * ts
    samples = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    return normalize(from_samples(samples), config)


def report(n, text):
    print(f"ACCEPTANCE {n:02d} PASS: {text}")


def test_criterion_01_signature_riemann_oracle():
    # 20 random paths (d=2, T=10), every entry up to level 4 within 1e-5
    # relative error of the nested Riemann-sum oracle; runtime < 1 min
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        path = normalize(from_samples(rng.normal(size=(10, 2))), CONFIG)
        sig = path_signature(path, 4)
        oracle = riemann_signature_levels(path, 4, n_steps=10_000)
        for k in range(1, 5):
            got, exp = sig.level(k), oracle[k]
            # the trapezoid oracle itself resolves entries only to ~1e-9
            # absolute, which caps how far the relative check can reach
            allowance = 1e-5 * np.abs(exp) + 2e-9
            worst = max(worst, float(np.max(np.abs(got - exp) / allowance)))
    elapsed = time.perf_counter() - start
    assert worst <= 1.0
    assert elapsed < 60.0
    report(1, f"worst error at {worst:.2f} of the 1e-5-relative allowance, "
              f"20 paths in {elapsed:.1f}s")


def test_criterion_02_signature_norm_bound():
    # depth-8 signature norm of the augmented path within 2/(1-L),
    # 100 random normalized paths per budget L in {0.25, 0.5, 0.75}
    rng = np.random.default_rng(2)
    checked = 0
    for L in (0.25, 0.5, 0.75):
        config = PathConfig(L)
        bound = signature_norm_bound(config)
        for _ in range(100):
            path = normalize(from_samples(rng.normal(size=(10, 2))), config)
            norm = sig_norm(path_signature(time_augment(path, config), 8))
            assert norm <= bound + 1e-12
            checked += 1
    report(2, f"{checked} paths within 2/(1-L) at depth 8")


def test_criterion_03_discretization_rate():
    # 20 random nets (e=d=2, logistic): gap within c1/T for T in
    # {16,32,64,128}; T=64->128 error ratio in [1.5, 2.5] for >= 80% of
    # runs; runtime < 2 min
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    base = spiral_path(256)
    in_window = 0
    for _ in range(20):
        params = random_params(2, 2, 1, "logistic", rng=rng)
        gaps = {}
        for T in (16, 32, 64, 128):
            result = euler_gap(params, resample(base, T), CONFIG, rtol=1e-10, atol=1e-12)
            assert result.gap <= result.bound
            gaps[T] = result.gap
        if 1.5 <= gaps[64] / gaps[128] <= 2.5:
            in_window += 1
    elapsed = time.perf_counter() - start
    assert in_window >= 16
    assert elapsed < 120.0
    report(3, f"bounds hold on 80 configs; ratio in window for {in_window}/20 in {elapsed:.1f}s")


def test_criterion_04_identity_towers_exact():
    # derivative-tower star products equal the affine closed form to 1e-12
    # for every word up to length 5, 10 random draws
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10):
        params = random_params(2, 2, 1, "identity", rng=rng)
        by_tower = all_word_values(params, 5, method="tower")
        by_form = all_word_values(params, 5, method="closed-form")
        for a, b in zip(by_tower, by_form):
            worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst <= 1e-12
    report(4, f"max tower-vs-closed-form deviation {worst:.2e} over all words <= 5")


def test_criterion_05_expansion_convergence_sweep():
    # 100 random inits (2 hidden units) per activation: median log10 error
    # strictly decreasing for N = 1..5, and negative fitted slope for
    # >= 95% of the runs whose weights satisfy the radius condition;
    # runtime < 10 min
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    path = spiral_path(100)
    aug = time_augment(path, CONFIG)
    for activation in ("logistic", "tanh"):
        logs = []
        sub_radius_slopes = []
        for _ in range(100):
            scale = 10 ** rng.uniform(np.log10(1e-4), np.log10(0.7))
            params = random_params(2, 2, 1, activation, scale=scale, rng=rng)
            ref = integrate_cde(params, aug, CONFIG, rtol=1e-12, atol=1e-14)(1.0)
            levels = taylor_levels(params, path, 5, CONFIG)
            partial = levels[0]
            errs = []
            for depth in range(1, 6):
                partial = partial + levels[depth]
                errs.append(max(float(np.linalg.norm(partial - ref)), 1e-16))
            log_err = np.log10(errs)
            logs.append(log_err)
            if radius_condition(params, CONFIG)[0]:
                sub_radius_slopes.append(np.polyfit(np.arange(1, 6), log_err, 1)[0])
        medians = np.median(np.array(logs), axis=0)
        assert np.all(np.diff(medians) < 0), f"{activation} medians {medians}"
        assert len(sub_radius_slopes) > 0
        frac = np.mean([s < 0 for s in sub_radius_slopes])
        assert frac >= 0.95
    elapsed = time.perf_counter() - start
    assert elapsed < 600.0
    report(5, f"medians decreasing for both activations, all sub-radius slopes negative, {elapsed:.0f}s")


def test_criterion_06_truncation_bound_consistency():
    # under the weight-radius condition the empirical expansion error stays
    # within d^(N+1)/(N+1)! Lambda_{N+1} for all N <= 4
    rng = np.random.default_rng(6)
    path = spiral_path(100)
    aug = time_augment(path, CONFIG)
    checked = 0
    for activation in ("logistic", "tanh"):
        for fraction in (0.3, 0.6, 0.9):
            for _ in range(2):
                params = random_params(2, 2, 1, activation, rng=rng)
                _, w_norm, radius = radius_condition(params, CONFIG)
                shrink = fraction * radius / w_norm
                params.U = params.U * shrink
                params.V = params.V * shrink
                assert radius_condition(params, CONFIG)[0]
                ref = integrate_cde(params, aug, CONFIG, rtol=1e-12, atol=1e-14)(1.0)
                levels = taylor_levels(params, path, 4, CONFIG)
                partial = levels[0]
                for depth in range(1, 5):
                    partial = partial + levels[depth]
                    err = float(np.linalg.norm(partial - ref))
                    bound = taylor_error_bound(params, depth, CONFIG)
                    assert bound.radius_ok
                    assert err <= bound.value
                    checked += 1
    report(6, f"{checked} (net, N) pairs within the truncation bound")


def test_criterion_07_embedding_gap():
    # identity activation, small weights: |z_T - <alpha, S>| within
    # ||psi|| c1 / T + computed tail, and the gap halves (+-30%) as T doubles
    rng = np.random.default_rng(7)
    path = spiral_path(256)
    depth = 6
    for _ in range(5):
        params = random_params(2, 2, 1, "identity", scale=0.08, rng=rng)
        alpha = alpha_series(params, depth, CONFIG)
        pred = float(rkhs_predict(alpha, path)[0])
        tail = embedding_tail_bound(params, depth, CONFIG)
        psi_op = operator_norm(params.psi)
        c1 = euler_constants(params, CONFIG).c1
        gaps = {}
        for T in (32, 64):
            _, zs = rnn_forward(params, resample(path, T))
            gap = abs(float(zs[-1, 0]) - pred)
            assert gap <= psi_op * c1 / T + tail
            gaps[T] = gap
        ratio = gaps[64] / gaps[32]
        assert 0.35 <= ratio <= 0.65, f"gap ratio {ratio}"
    report(7, "embedding gap within bound and halving with T for 5 draws")


def test_criterion_08_gradient_integrity():
    # implemented gradients (backprop + finite-difference penalty) match
    # full finite differences of the penalized objective to 1e-3 relative,
    # 4-unit nets, 5 seeds
    worst = 0.0
    for seed in range(5):
        ds = make_spirals(8, 12, seed=seed)
        cfg = TrainConfig(lam=0.1, penalty_depth=3, seed=seed)
        sequences = model_inputs(ds.sequences, cfg.input_gain)
        labels = ds.labels
        params = random_params(4, 2, 1, "tanh", rng=np.random.default_rng(seed))
        grads = objective_gradient(params, sequences, labels, cfg, CONFIG)

        def objective():
            base = mean_loss(params, sequences, labels)
            return base + cfg.lam * rkhs_norm_squared(params, cfg.penalty_depth, CONFIG)

        step = 1e-5
        got, fd = [], []
        for name in ("U", "V", "b", "psi", "h0"):
            arr = getattr(params, name)
            for i in range(arr.size):
                save = arr.flat[i]
                arr.flat[i] = save + step
                up = objective()
                arr.flat[i] = save - step
                dn = objective()
                arr.flat[i] = save
                fd.append((up - dn) / (2 * step))
                got.append(grads[name].flat[i])
        got, fd = np.asarray(got), np.asarray(fd)
        rel = np.linalg.norm(got - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, rel)
        assert rel < 1e-3
    report(8, f"worst relative gradient error {worst:.2e} over 5 seeds")


def test_criterion_09_penalization_robustness_trend():
    # 5 seed pairs (lambda 0 vs 0.1, N=3, 8 units, 50 train spirals, 200
    # epochs): mean adversarial accuracy of the penalized model exceeds the
    # plain model at the mid-grid epsilon; clean accuracies within 5
    # points; runtime < 15 min
    start = time.perf_counter()
    eps_grid = (0.0, 2.0, 4.0, 6.0, 8.0)
    eps_mid = 0.5 * max(eps_grid)
    accs = {0.0: [], 0.1: []}
    for seed in range(5):
        train_ds = make_spirals(50, 100, seed=seed)
        test_ds = make_spirals(100, 100, seed=seed + 10_000)
        for lam in (0.0, 0.1):
            cfg = TrainConfig(epochs=200, lam=lam, penalty_depth=3, seed=seed)
            result = train(cfg, train_ds, hidden_dim=8, activation="tanh")
            test_x = model_inputs(test_ds.sequences, cfg.input_gain)
            row = [
                pgd_attack(result.params, test_x, test_ds.labels, eps, steps=50).adversarial_accuracy
                for eps in eps_grid
            ]
            accs[lam].append(row)
    mean_plain = np.mean(accs[0.0], axis=0)
    mean_penal = np.mean(accs[0.1], axis=0)
    mid = eps_grid.index(eps_mid)
    assert mean_penal[mid] > mean_plain[mid], (mean_penal, mean_plain)
    assert abs(mean_penal[0] - mean_plain[0]) <= 0.05
    elapsed = time.perf_counter() - start
    assert elapsed < 900.0
    report(9, f"adv acc at eps={eps_mid}: penalized {mean_penal[mid]:.3f} > plain "
              f"{mean_plain[mid]:.3f}; clean {mean_penal[0]:.2f} vs {mean_plain[0]:.2f}; {elapsed:.0f}s")


def test_criterion_10_bound_calculators_hand_substitution():
    # three constant sets per calculator reproduce hand-substituted values
    # to 1e-12, including the class-radius formula for B
    binary_sets = [
        dict(n=100, T=50, delta=0.05, L=0.5, d=2, K_W=0.5 / 256, K_psi=1.0, K_ell=1.0,
             empirical_risk=0.1),
        dict(n=400, T=20, delta=0.01, L=0.25, d=3, K_W=1e-3, K_psi=2.0, K_ell=0.5,
             empirical_risk=0.0),
        dict(n=50, T=100, delta=1.0, L=0.75, d=2, K_W=1e-4, K_psi=0.5, K_ell=2.0,
             empirical_risk=0.3),
    ]
    for c in binary_sets:
        rep = bound_binary(**c)
        B = math.sqrt(2.0) * c["K_psi"] * (1 - c["L"]) / (1 - c["L"] - 32 * c["d"] * c["K_W"])
        kf = c["K_W"]
        c2 = c["K_ell"] * c["K_psi"] * kf * math.exp(kf) * (c["L"] + math.exp(kf))
        t2 = c2 / c["T"]
        t3 = 8 * B * c["K_ell"] / ((1 - c["L"]) * math.sqrt(c["n"]))
        t4 = 2 * B * c["K_ell"] / (1 - c["L"]) * math.sqrt(math.log(1 / c["delta"]) / (2 * c["n"]))
        assert abs(rep.constants["B"] - B) <= 1e-12
        assert abs(rep.terms["discretization"] - t2) <= 1e-12
        assert abs(rep.terms["complexity"] - t3) <= 1e-12
        assert abs(rep.terms["confidence"] - t4) <= 1e-12
        assert abs(rep.total - (c["empirical_risk"] + t2 + t3 + t4)) <= 1e-12
    sequential_sets = [
        dict(n=200, T=40, delta=0.1, L=0.5, p=3, B=1.5, K_y=0.8, c1_sup=2.0,
             psi_f_sup=0.6, empirical_risk=0.25),
        dict(n=100, T=10, delta=0.5, L=0.25, p=1, B=0.5, K_y=1.0, c1_sup=1.0,
             psi_f_sup=1.0, empirical_risk=0.0),
        dict(n=1000, T=200, delta=0.02, L=0.75, p=2, B=3.0, K_y=0.1, c1_sup=5.0,
             psi_f_sup=0.2, empirical_risk=0.4),
    ]
    for c in sequential_sets:
        rep = bound_sequential(**c)
        inv = 1 / (1 - c["L"])
        c3 = c["c1_sup"] + c["psi_f_sup"] + 2 * math.sqrt(c["p"]) * c["B"] * inv + 2 * c["K_y"]
        c4 = c["B"] * inv + c["K_y"]
        c5 = 4 * c["p"] * c["B"] * inv * c4 + c["K_y"] ** 2
        assert abs(rep.constants["c3"] - c3) <= 1e-12
        assert abs(rep.terms["discretization"] - c3 / c["T"]) <= 1e-12
        assert abs(rep.terms["complexity"] - 4 * c["p"] * c4 * c["B"] * inv / math.sqrt(c["n"])) <= 1e-12
        assert abs(rep.terms["confidence"] - math.sqrt(2 * c5 * math.log(1 / c["delta"]) / c["n"])) <= 1e-12
    report(10, "both calculators match hand substitution on 3 constant sets each")

"""Command-line front end for the experiments and verification suites.

Subcommands
-----------
taylor-convergence : expansion error against the reference solution as the
    truncation depth grows, over random weight draws (plot-ready CSV).
euler-gap : discrete-vs-continuous gap and its analytic bound across
    sampling rates.
train-attack : penalized vs plain training plus the projected-gradient
    attack sweep (per-epoch traces and accuracy-vs-epsilon CSVs).
sig-check : signature of a CSV sequence with internal consistency checks.
verify : run every module property suite and report pass/fail lines.

All subcommands are deterministic given (seed, config).  Exit codes:
0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .ode import euler_gap, integrate_cde
from .paths import PathConfig, from_samples, normalize, read_samples_csv, resample, time_augment
from .rnn import random_params, save_params
from .signatures import path_signature, sig_norm
from .taylor import taylor_levels
from .training import (
    TrainConfig,
    make_spirals,
    model_inputs,
    pgd_attack,
    train,
    write_attack_csv,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _spiral_path(config: PathConfig, n_samples: int, turns: float = 2.0):
    ts = np.arange(1, n_samples + 1) / n_samples
    r = 0.25 + 0.75 * ts
    ang = 2 * np.pi * turns * ts
    samples = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    return normalize(from_samples(samples), config)


def _load_config_argv(path: str) -> list[str]:
    """key=value lines become --key value pairs, prepended so explicit
    command-line flags win."""
    argv = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {raw!r} is not key=value")
        key, value = line.split("=", 1)
        argv += [f"--{key.strip()}", value.strip()]
    return argv


def _comma_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _comma_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_taylor_convergence(args) -> int:
    config = PathConfig(args.tv_budget)
    if args.runs < 1 or args.depth_max < 1:
        print("runs and depth-max must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.default_rng(args.seed)
    path = _spiral_path(config, args.path_samples)
    aug = time_augment(path, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    activations = [a.strip() for a in args.activations.split(",") if a.strip()]
    rows = []
    for run_id in range(args.runs):
        # log-uniform scale spread populates both the small-norm regime,
        # where the truncation bounds apply, and the larger-norm one
        scale = 10 ** rng.uniform(np.log10(args.weight_min), np.log10(args.weight_max))
        for activation in activations:
            params = random_params(args.hidden, 2, 1, activation, scale=scale, rng=rng)
            ref = integrate_cde(params, aug, config, rtol=args.rtol, atol=args.rtol * 1e-2)(1.0)
            levels = taylor_levels(params, path, args.depth_max, config)
            partial = levels[0]
            w_norm = float(np.linalg.norm(params.W))
            for depth in range(1, args.depth_max + 1):
                partial = partial + levels[depth]
                error = float(np.linalg.norm(partial - ref))
                rows.append([run_id, w_norm, activation, depth, error])
    target = out / "taylor_convergence.csv"
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "frob_norm", "activation", "N", "error"])
        for row in rows:
            writer.writerow(row)
    print(f"wrote {target} ({len(rows)} rows)")
    return EXIT_OK


def cmd_euler_gap(args) -> int:
    config = PathConfig(args.tv_budget)
    t_grid = _comma_ints(args.T_grid)
    if not t_grid or min(t_grid) < 1:
        print("T-grid must contain positive integers", file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.default_rng(args.seed)
    params = random_params(args.hidden, 2, 1, args.activation, rng=rng)
    path = _spiral_path(config, args.path_samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "euler_gap.csv"
    failures = 0
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "empirical_gap", "bound"])
        for T in t_grid:
            result = euler_gap(params, resample(path, T), config)
            writer.writerow([T, repr(result.gap), repr(result.bound)])
            if result.gap > result.bound + 1e-12:
                failures += 1
    print(f"wrote {target}")
    if failures:
        print(f"{failures} grid points violated the analytic bound", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_train_attack(args) -> int:
    config = PathConfig(args.tv_budget)
    eps_grid = _comma_floats(args.eps_grid)
    if not eps_grid or min(eps_grid) < 0:
        print("eps-grid must contain non-negative numbers", file=sys.stderr)
        return EXIT_CONFIG
    if args.lam < 0:
        print("lambda must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    attack_rows = []
    for pair in range(args.seed_pairs):
        seed = args.seed + pair
        train_ds = make_spirals(args.train_size, args.path_samples, seed=seed)
        test_ds = make_spirals(args.test_size, args.path_samples, seed=seed + 10_000)
        test_prepared = model_inputs(test_ds.sequences, args.input_gain)
        for lam in (0.0, args.lam):
            cfg = TrainConfig(
                epochs=args.epochs, lam=lam, penalty_depth=args.penalty_depth,
                seed=seed, tv_budget=args.tv_budget, input_gain=args.input_gain,
            )
            result = train(cfg, train_ds, hidden_dim=args.hidden, activation=args.activation)
            tag = f"lam{lam:g}_seed{seed}"
            write_trace_csv(result.trace, out / f"trace_{tag}.csv")
            save_params(result.params, out / f"params_{tag}.txt")
            for eps in eps_grid:
                attack = pgd_attack(
                    result.params, test_prepared, test_ds.labels, eps,
                    steps=args.attack_steps,
                )
                attack_rows.append([eps, attack.adversarial_accuracy, lam, seed])
    write_attack_csv(attack_rows, out / "attack.csv")
    print(f"wrote {out / 'attack.csv'} and {2 * args.seed_pairs} trace files")
    return EXIT_OK


def cmd_sig_check(args) -> int:
    config = PathConfig(args.tv_budget)
    if args.depth < 1:
        print("depth must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        samples = read_samples_csv(args.input)
    except (OSError, ValueError) as exc:
        print(f"cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    path = normalize(from_samples(samples), config)
    aug = time_augment(path, config)
    sig = path_signature(aug, args.depth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "signature.csv"
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "word", "value"])
        for k in range(args.depth + 1):
            level = np.atleast_1d(sig.level(k)).reshape(-1)
            for flat, value in enumerate(level):
                word = np.unravel_index(flat, (aug.dim,) * k) if k else ()
                label = "".join(str(i + 1) for i in word)
                writer.writerow([k, label, repr(float(value))])
    # internal consistency: concatenation over a split must reproduce the
    # whole-interval signature
    left = path_signature(aug, args.depth, (0.0, 0.5), convention="standard")
    right = path_signature(aug, args.depth, (0.5, 1.0), convention="standard")
    whole = path_signature(aug, args.depth, convention="standard")
    worst = 0.0
    for k in range(args.depth + 1):
        combined = sum(
            np.multiply.outer(left.level(i), right.level(k - i)) for i in range(k + 1)
        )
        worst = max(worst, float(np.max(np.abs(combined - whole.level(k)))))
    print(f"wrote {target}")
    print(f"signature norm: {sig_norm(sig)!r}")
    print(f"split-consistency residual: {worst:.3e}")
    if worst > 1e-9:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import ALL_CHECKS, run_all

    if args.tol is not None and args.tol <= 0:
        print("tol must be positive", file=sys.stderr)
        return EXIT_CONFIG
    failures = run_all()
    print(f"{failures} failures / {len(ALL_CHECKS)} checks")
    return EXIT_NUMERICAL if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigrnn",
        description="signature-space analysis and experiments for residual RNNs",
    )
    parser.add_argument("--config", help="key=value file of defaults", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="results")
        p.add_argument("--tv-budget", type=float, default=0.5, dest="tv_budget")

    p = sub.add_parser("taylor-convergence", help="expansion error vs depth")
    common(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--depth-max", type=int, default=5, dest="depth_max")
    p.add_argument("--hidden", type=int, default=2)
    p.add_argument("--path-samples", type=int, default=100, dest="path_samples")
    p.add_argument("--weight-min", type=float, default=1e-4, dest="weight_min")
    p.add_argument("--weight-max", type=float, default=0.7, dest="weight_max")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--activations", default="logistic,tanh")
    p.set_defaults(func=cmd_taylor_convergence)

    p = sub.add_parser("euler-gap", help="discretization gap vs sampling rate")
    common(p)
    p.add_argument("--T-grid", default="16,32,64,128", dest="T_grid")
    p.add_argument("--hidden", type=int, default=2)
    p.add_argument("--activation", default="logistic")
    p.add_argument("--path-samples", type=int, default=256, dest="path_samples")
    p.set_defaults(func=cmd_euler_gap)

    p = sub.add_parser("train-attack", help="penalized training and attack sweep")
    common(p)
    p.add_argument("--seed-pairs", type=int, default=1, dest="seed_pairs")
    p.add_argument("--train-size", type=int, default=50, dest="train_size")
    p.add_argument("--test-size", type=int, default=200, dest="test_size")
    p.add_argument("--path-samples", type=int, default=100, dest="path_samples")
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--activation", default="tanh")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lambda", type=float, default=0.1, dest="lam")
    p.add_argument("--penalty-depth", type=int, default=3, dest="penalty_depth")
    p.add_argument("--eps-grid", default="0,2,4,6,8", dest="eps_grid")
    p.add_argument("--input-gain", type=float, default=4.0, dest="input_gain")
    p.add_argument("--attack-steps", type=int, default=50, dest="attack_steps")
    p.set_defaults(func=cmd_train_attack)

    p = sub.add_parser("sig-check", help="signature of a CSV sequence")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--depth", type=int, default=4)
    p.set_defaults(func=cmd_sig_check)

    p = sub.add_parser("verify", help="run all property suites")
    common(p)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # peel --config first so its values act as overridable defaults
    config_path = None
    stripped = []
    i = 0
    while i < len(argv):
        if argv[i] == "--config":
            if i + 1 >= len(argv):
                print("--config needs a path", file=sys.stderr)
                return EXIT_CONFIG
            config_path = argv[i + 1]
            i += 2
        elif argv[i].startswith("--config="):
            config_path = argv[i].split("=", 1)[1]
            i += 1
        else:
            stripped.append(argv[i])
            i += 1
    if config_path is not None:
        try:
            injected = _load_config_argv(config_path)
        except (OSError, ValueError) as exc:
            print(f"bad config file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if stripped:
            stripped = [stripped[0]] + injected + stripped[1:]
        else:
            print("--config requires a subcommand", file=sys.stderr)
            return EXIT_CONFIG
    try:
        args = parser.parse_args(stripped)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands
-----------
``toy``         solve the 3-point toy problem and compare with known values
``rosenbrock``  Rosenbrock regression from Latin hypercube samples
``lorenz``      Lorenz system identification and rollouts
``kuramoto``    Kuramoto oscillator identification and rollouts
``selftest``    randomized checks against the dense reference code

Options given on the command line override those read from ``--config``
(a JSON object whose keys are the experiment config keys).  Outputs go to
``--out``, else ``$MTENSOR_OUT``, else ``./mtensor_out``.

Exit status: 0 success, 1 golden-value or self-test mismatch, 2 usage
error, 3 numerical failure (a Gram matrix that cannot be factorized).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import ConditioningError, NotPositiveDefiniteError

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
OUT_ENV = "MTENSOR_OUT"
DEFAULT_OUT = "mtensor_out"

TOY_Z = [-0.588, 1.647, 0.647]
TOY_C00 = 1.706
TOY_COEFFS = [1.706, 2.235, 1.059, 1.235, -0.588, 0.588, 0.059, 0.588, -0.588]
TOY_UNFOLDING = [
    [1, -1, 1, -1, 1, -1, 1, -1, 1],
    [1, 1, 1, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 1, 0, 0, 1, 0, 0],
]


class UsageError(Exception):
    pass


def _fmt(a):
    return np.array2string(np.asarray(a), precision=3, suppress_small=True, floatmode="fixed")


# --------------------------------------------------------------------------- #
# toy


def cmd_toy(args) -> int:
    from .core import mprod, unfold_mode1
    from .dense import dense_lstsq
    from .regression import coefficients_dense, fit_least_squares
    from .selftest import TOY_Y, toy_mtensor

    tol = 1e-3
    T = toy_mtensor()
    A = unfold_mode1(T)
    P = mprod(T, T)
    M = fit_least_squares(T, TOY_Y)
    z = M.dual[:, 0]
    C = coefficients_dense(M)
    c_dense = dense_lstsq(A, TOY_Y)

    print("unfolded features Phi_(1):")
    print(_fmt(A))
    print("Gram matrix P:")
    print(_fmt(P))
    print("targets y:", _fmt(TOY_Y))
    print("dual z:", _fmt(z))
    print("coefficients C (C[i, j] = sum_k z_k Psi1[k, i] Psi2[k, j]):")
    print(_fmt(C))
    print("dense pseudoinverse coefficients:", _fmt(c_dense))

    rows = []

    def cmp(name, got, want, ok):
        rows.append((name, got, want, ok))

    cmp("z", z, TOY_Z, np.allclose(z, TOY_Z, atol=tol))
    cmp("C(0,0)", C[0, 0], TOY_C00, abs(C[0, 0] - TOY_C00) <= tol)
    cmp("coefficient multiset", np.sort(C.ravel()), np.sort(TOY_COEFFS),
        np.allclose(np.sort(C.ravel()), np.sort(TOY_COEFFS), atol=tol))
    cmp("unfolding", A, TOY_UNFOLDING, np.array_equal(A, np.array(TOY_UNFOLDING, dtype=float)))
    cmp("dense cross-check", C.ravel(), c_dense, np.allclose(C.ravel(), c_dense, atol=1e-10))
    bad = [r for r in rows if not r[3]]
    for name, _, _, ok in rows:
        print(f"  [{'ok' if ok else 'MISMATCH'}] {name}")
    if bad:
        print("\nmismatches:")
        print(f"{'quantity':<22} {'got':<40} expected")
        for name, got, want, _ in bad:
            print(f"{name:<22} {_fmt(got):<40} {_fmt(want)}")
        return EXIT_MISMATCH
    return EXIT_OK


# --------------------------------------------------------------------------- #
# experiments


def _out_dir(args):
    return args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT


def _load_config(path, defaults):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(cfg) - set(defaults))
    if unknown:
        raise UsageError(f"unknown config keys {unknown}; valid keys: {sorted(defaults)}")
    return cfg


def _collect(args, defaults, flag_keys):
    cfg = _load_config(args.config, defaults)
    for key in flag_keys:
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    return {**defaults, **cfg}


def _print_report(report):
    print(json.dumps({k: report.to_dict()[k] for k in ("experiment", "timings", "errors", "model")}, indent=1))


def cmd_rosenbrock(args) -> int:
    from .experiments import ROSENBROCK_DEFAULTS, run_rosenbrock
    from .regression import parse_regularizer

    cfg = _collect(args, ROSENBROCK_DEFAULTS, ["n", "alpha", "reg", "repeats", "scale", "degree"])
    if int(cfg["n"]) < 2:
        raise UsageError("--n must be at least 2")
    if int(cfg["alpha"]) < 1:
        raise UsageError("--alpha must be at least 1")
    if int(cfg["repeats"]) < 1:
        raise UsageError("--repeats must be at least 1")
    if not float(cfg["scale"]) > 0:
        raise UsageError("--scale must be positive")
    try:
        parse_regularizer(cfg["reg"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg["out_dir"] = _out_dir(args)
    report = run_rosenbrock(cfg)
    _print_report(report)
    print(f"report written to {os.path.join(cfg['out_dir'], 'rosenbrock_report.json')}")
    return EXIT_OK


def cmd_lorenz(args) -> int:
    from .experiments import LORENZ_DEFAULTS, run_lorenz

    keys = ["train_steps", "rollout_steps", "dt", "spectral_rank", "ali_rows", "n_random_ic", "source"]
    cfg = _collect(args, LORENZ_DEFAULTS, keys)
    if int(cfg["train_steps"]) < 2 or int(cfg["rollout_steps"]) < 1 or not float(cfg["dt"]) > 0:
        raise UsageError("need --train-steps >= 2, --rollout-steps >= 1 and --dt > 0")
    if not 1 <= int(cfg["spectral_rank"]) <= int(cfg["train_steps"]):
        raise UsageError("--spectral-rank must be between 1 and --train-steps")
    if not 1 <= int(cfg["ali_rows"]) <= int(cfg["train_steps"]):
        raise UsageError("--ali-rows must be between 1 and --train-steps")
    if int(cfg["n_random_ic"]) < 0:
        raise UsageError("--n-random-ic must be non-negative")
    cfg["out_dir"] = _out_dir(args)
    report, _ = run_lorenz(cfg)
    _print_report(report)
    for name, info in report.extra["models"].items():
        state = "finite" if info["rollout_finite"] else f"diverged at step {info['divergence_step']}"
        print(f"  {name:<14} m_tilde={info['m_tilde']:<4} train_rel_l2={info['train_rel_l2']:.3e}  rollout {state}")
    print(f"report and trajectories written to {cfg['out_dir']}")
    return EXIT_OK


def cmd_kuramoto(args) -> int:
    from .experiments import KURAMOTO_DEFAULTS, run_kuramoto

    keys = ["n", "repeats", "train_steps", "rollout_steps", "dt", "K", "trig_weight", "ali_rel_eps", "models"]
    cfg = _collect(args, KURAMOTO_DEFAULTS, keys)
    if int(cfg["n"]) < 2:
        raise UsageError("--n must be at least 2")
    if int(cfg["repeats"]) < 1 or int(cfg["train_steps"]) < 2 or int(cfg["rollout_steps"]) < 1:
        raise UsageError("need --repeats >= 1, --train-steps >= 2, --rollout-steps >= 1")
    if not float(cfg["dt"]) > 0:
        raise UsageError("--dt must be positive")
    if isinstance(cfg["models"], str):
        cfg["models"] = [s for s in cfg["models"].split(",") if s]
    if not cfg["models"] or any(m not in ("ls", "ali") for m in cfg["models"]):
        raise UsageError("--models is a comma list of ls and ali")
    cfg["out_dir"] = _out_dir(args)
    report = run_kuramoto(cfg)
    _print_report(report)
    for name, info in report.extra["models"].items():
        print(f"  {name:<4} mean m_tilde={info['mean_m_tilde']:.1f}  max train_rel_l2={info['train_rel_l2_max']:.3e}"
              f"  max rollout error={info['max_error']}")
    print(f"report written to {cfg['out_dir']}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_all

    if args.instances < 200:
        raise UsageError("--instances must be at least 200")
    groups = run_all(args.instances)
    ok = True
    for g in groups:
        status = "PASS" if g.ok else "FAIL"
        print(f"[{status}] {g.name}: {g.passed}/{g.total}")
        for f in g.failures[:20]:
            print(f"        {f}")
        ok &= g.ok
    return EXIT_OK if ok else EXIT_MISMATCH


# --------------------------------------------------------------------------- #
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtensor", description="m-tensor regression experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with config overrides (flags win)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")

    sp = sub.add_parser("toy", help="3-point toy problem with golden values")
    sp.set_defaults(func=cmd_toy)

    sp = sub.add_parser("rosenbrock", help="Rosenbrock regression")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--alpha", type=int, help="samples per dimension (m = alpha * n)")
    sp.add_argument("--reg", help="ls | tikhonov:LAM | spectral:R | spectral:tau=T | ali:EPS[:optimal] | ali:rows=N")
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--scale", type=float, help="input multiplier before the monomials")
    sp.add_argument("--degree", type=int)
    sp.set_defaults(func=cmd_rosenbrock)

    sp = sub.add_parser("lorenz", help="Lorenz identification")
    common(sp)
    sp.add_argument("--train-steps", dest="train_steps", type=int)
    sp.add_argument("--rollout-steps", dest="rollout_steps", type=int)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--spectral-rank", dest="spectral_rank", type=int)
    sp.add_argument("--ali-rows", dest="ali_rows", type=int)
    sp.add_argument("--n-random-ic", dest="n_random_ic", type=int)
    sp.add_argument("--source", choices=["exact", "fd"])
    sp.set_defaults(func=cmd_lorenz)

    sp = sub.add_parser("kuramoto", help="Kuramoto identification")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--train-steps", dest="train_steps", type=int)
    sp.add_argument("--rollout-steps", dest="rollout_steps", type=int)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--K", dest="K", type=float)
    sp.add_argument("--trig-weight", dest="trig_weight", type=float)
    sp.add_argument("--ali-rel-eps", dest="ali_rel_eps", type=float)
    sp.add_argument("--models", help="comma list of ls, ali")
    sp.set_defaults(func=cmd_kuramoto)

    sp = sub.add_parser("selftest", help="randomized checks against dense reference code")
    sp.add_argument("--instances", type=int, default=200)
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mtensor: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConditioningError, NotPositiveDefiniteError) as exc:
        print(f"mtensor: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

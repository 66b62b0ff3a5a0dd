"""Command-line front end.

Subcommands: solve (single instance), ptc / noisy / image (the three
benchmark harnesses), and selftest (installation checks against the
built-in oracles).  A JSON config file mirrors the library dataclass field
names; command-line flags override file values.  Exit codes: 0 success,
2 configuration error, 3 numeric failure, and 1 for selftest failures.
"""

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .backend import BACKEND
from .errors import ConfigError, NumericError
from . import experiments as xp
from .operators import Identity, RandomSeed, make_gaussian, make_srm, \
    make_wavelet_frame, operator_from_manifest, read_pgm, write_pgm
from .regularizers import RegularizerSpec
from .solver import SolverConfig, solve, solve_analysis_image


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from None


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ENTROMIN_OUT") or "entromin-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _nu_arg(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number or 'auto', got {text!r}")


def _regularizer_from_args(args, config):
    body = dict(config.get("regularizer", {}))
    if args.method:
        body["kind"] = args.method
    body.setdefault("kind", "sef")
    if args.p is not None:
        body["p"] = args.p
    elif "p" not in body:
        body["p"] = {"sef": 1.1, "ref": 1.1, "lpp": 0.5}.get(body["kind"], 1.0)
    if args.alpha is not None:
        body["alpha"] = args.alpha
    return RegularizerSpec.from_manifest(body)


def _solver_config(args, config, spec):
    body = dict(config.get("solver", {}))
    body["regularizer"] = spec.to_manifest()
    if args.lam is not None:
        body["lam0"] = args.lam
    cfg = SolverConfig.from_manifest(body)
    return cfg


# ---------------------------------------------------------------------------
# solve

def cmd_solve(args) -> int:
    config = _load_config(args.config)
    out = _out_dir(args)
    spec = _regularizer_from_args(args, config)
    cfg = _solver_config(args, config, spec)

    x_true = None
    if "operator_manifest" in config or "y" in config:
        if "operator_manifest" not in config or "y" not in config:
            raise ConfigError("solving from files needs both 'operator_manifest' "
                              "and 'y' in the config")
        manifest = config["operator_manifest"]
        if isinstance(manifest, str):
            manifest = _load_config(manifest)
        op = operator_from_manifest(manifest)
        ysrc = config["y"]
        y = np.fromfile(ysrc, dtype="<f8") if isinstance(ysrc, str) \
            else np.asarray(ysrc, dtype=np.float64)
    else:
        inst = dict(config.get("instance", {}))
        inst.setdefault("N", 200)
        inst.setdefault("M", 100)
        inst.setdefault("S", 15)
        nu_arg = args.nu if args.nu is not None else 0.0
        if nu_arg == "auto":
            raise ConfigError("--nu auto is only meaningful for noisy/image")
        inst.setdefault("nu", nu_arg)
        seed = args.seed if args.seed is not None else inst.get("seed", 7)
        x_true, op, y = xp.gen_instance(inst["N"], inst["M"], inst["S"],
                                        int(seed), nu=float(inst["nu"]))

    xh, trace = solve(y, op, cfg)

    xh.astype("<f8").tofile(out / "xhat.bin")
    header = {"file": "xhat.bin", "dtype": "<f8", "length": int(xh.size),
              "byte_order": "little-endian"}
    rel_err = None
    if x_true is not None:
        rel_err = xp.metrics(x_true, xh)["rel_err"]
        header["rel_err"] = rel_err
    with open(out / "xhat.json", "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    trace.to_csv(out / "trace.csv")
    xp.write_manifest(out / "manifest.json", {
        "subcommand": "solve", "config": config,
        "regularizer": spec.to_manifest(), "solver": cfg.to_manifest(),
        "seed": args.seed, "operator": op.to_manifest()
        if op.kind != "dense" or op.to_manifest().get("kind") != "dense" else
        {"kind": "dense", "rows": op.rows, "cols": op.cols}})
    if rel_err is not None:
        print(f"rel_err {rel_err:.6e}")
    print(f"wrote {out / 'xhat.bin'} ({xh.size} samples), trace "
          f"({len(trace)} iterations)")
    return 0


# ---------------------------------------------------------------------------
# experiment harnesses

def cmd_ptc(args) -> int:
    config = _load_config(args.config)
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else config.get("master_seed", 1)
    grid = xp.desk_ptc_grid(seed) if args.scale == "desk" else xp.paper_ptc_grid(seed)
    overrides = {k: config[k] for k in ("N", "sigmas", "rhos", "trials", "eps_succ")
                 if k in config}
    if overrides:
        grid = replace(grid, **overrides)
    results, rates = xp.run_phase_transition(grid, threads=args.threads)
    experiment_id = f"ptc-{args.scale}"
    xp.write_results_csv(out / "results.csv", experiment_id, results)
    xp.write_timings_csv(out / "timings.csv", experiment_id, results)
    contours = {name: xp.extract_ptc(rates[name], grid.sigmas, grid.rhos)
                for name in rates}
    xp.write_ptc_csv(out / "ptc.csv", contours)
    names = [m.name for m in grid.methods]
    rows = []
    for si, sigma in enumerate(grid.sigmas):
        rows.append([sigma] + [contours[name][si][1] for name in names])
    xp.write_plot_data(out / "ptc.dat", ["sigma"] + [f"rho_half_{n}" for n in names],
                       rows)
    xp.write_manifest(out / "manifest.json", {
        "subcommand": "ptc", "experiment_id": experiment_id,
        "master_seed": seed, "grid": grid.to_manifest()})
    total_cells = len(grid.sigmas) * len(grid.rhos) * grid.trials
    print(f"{'method':>8} {'successes':>10} {'rate':>8}")
    for name in names:
        total = int(rates[name].sum() * grid.trials)
        print(f"{name:>8} {total:>10d} {total / total_cells:>8.3f}")
    return 0


def cmd_noisy(args) -> int:
    config = _load_config(args.config)
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else config.get("master_seed", 1)
    N = int(config.get("N", 250))
    S = int(config.get("S", 25))
    nu = args.nu if args.nu is not None else config.get(
        "nu", xp.nu_for_vector_snr(N, S, 25.0))
    if nu == "auto":
        nu = xp.nu_for_vector_snr(N, S, 25.0)
    sigmas = config.get("sigmas", [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    M_list = config.get("M_list", [int(round(s * N)) for s in sigmas])
    trials = int(config.get("trials", 20))
    methods = xp.noisy_methods(config.get("lambdas"))
    results, mean_snr, measured = xp.run_noisy_sweep(
        N, S, float(nu), M_list, methods, trials, seed, threads=args.threads)
    experiment_id = "noisy-desk"
    xp.write_results_csv(out / "results.csv", experiment_id, results)
    xp.write_timings_csv(out / "timings.csv", experiment_id, results)
    names = [m.name for m in methods]
    rows = [[M / N, M] + [mean_snr[n][i] for n in names]
            for i, M in enumerate(M_list)]
    xp.write_plot_data(out / "noisy.dat", ["sigma", "M"] + [f"snr_{n}" for n in names],
                       rows)
    xp.write_manifest(out / "manifest.json", {
        "subcommand": "noisy", "experiment_id": experiment_id,
        "master_seed": seed, "N": N, "S": S, "nu": float(nu),
        "M_list": list(M_list), "trials": trials,
        "measured_snr_db": measured,
        "methods": [m.to_manifest() for m in methods]})
    print(f"measured SNR {measured:.2f} dB")
    print(f"{'M':>6} " + " ".join(f"{n:>9}" for n in names))
    for i, M in enumerate(M_list):
        print(f"{M:>6d} " + " ".join(f"{mean_snr[n][i]:>9.2f}" for n in names))
    return 0


def cmd_image(args) -> int:
    config = _load_config(args.config)
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else config.get("master_seed", 1)
    if args.input:
        img = read_pgm(args.input)
    else:
        img = xp.make_test_image(int(config.get("side", 64)))
        write_pgm(out / "test_image.pgm", img)
    if args.sigma is not None:
        sigma_list = [args.sigma]
    else:
        sigma_list = config.get("sigmas", [0.2, 0.3, 0.5])
    nu = args.nu if args.nu is not None else config.get("nu", 0.0)
    if nu == "auto":
        nu = xp.nu_for_image_snr(img, 30.0)
    methods = xp.image_methods(config.get("lambdas"))
    results, psnr, measured = xp.run_image_recovery(
        img, sigma_list, float(nu), methods, seed,
        levels=config.get("levels"), threads=args.threads)
    experiment_id = "image-desk"
    xp.write_results_csv(out / "results.csv", experiment_id, results)
    xp.write_timings_csv(out / "timings.csv", experiment_id, results)
    names = [m.name for m in methods]
    rows = [[float(s)] + [psnr[n][i] for n in names]
            for i, s in enumerate(sigma_list)]
    xp.write_plot_data(out / "image.dat", ["sigma"] + [f"psnr_{n}" for n in names],
                       rows)
    xp.write_manifest(out / "manifest.json", {
        "subcommand": "image", "experiment_id": experiment_id,
        "master_seed": seed, "sigmas": [float(s) for s in sigma_list],
        "nu": float(nu), "side": int(img.shape[0]),
        "measured_snr_db": measured,
        "methods": [m.to_manifest() for m in methods]})
    print(f"{'sigma':>6} " + " ".join(f"{n:>9}" for n in names))
    for i, s in enumerate(sigma_list):
        print(f"{float(s):>6.2f} " + " ".join(f"{psnr[n][i]:>9.2f}" for n in names))
    return 0


# ---------------------------------------------------------------------------
# selftest

def _check_shrinkage(quick, fault):
    from .shrinkage import soft_threshold_vec
    rng = np.random.default_rng(11)
    n = 300 if quick else 2000
    xt = rng.uniform(-3, 3, size=n)
    tau = rng.uniform(-2, 2, size=n)
    out = soft_threshold_vec(xt, tau)
    if fault == "shrinkage-sign":
        out = -out
    qout = 0.5 * (out - xt) ** 2 + tau * np.abs(out)
    grid = np.arange(-4.0, 4.0 + 1e-9, 1e-4)
    qmin = np.empty(n)
    chunk = 200
    for i in range(0, n, chunk):
        sl = slice(i, min(i + chunk, n))
        q = 0.5 * (grid[None, :] - xt[sl, None]) ** 2 \
            + tau[sl, None] * np.abs(grid[None, :])
        qmin[sl] = q.min(axis=1)
    return bool(np.all(qout <= qmin + 1e-8))


def _check_gradients(quick):
    from .regularizers import ref_grad_mag, ref_value, sef_grad_mag, sef_value
    rng = np.random.default_rng(12)
    trials = 5 if quick else 20
    h = 1e-6
    for _ in range(trials):
        x = rng.uniform(0.2, 2.0, size=16)
        for spec, val, grad in (
                (RegularizerSpec("sef", p=1.1), sef_value, sef_grad_mag),
                (RegularizerSpec("ref", p=1.1, alpha=1.3), ref_value, ref_grad_mag)):
            g = grad(x, spec)
            for i in range(0, 16, 5):
                xp_ = x.copy(); xp_[i] += h
                xm_ = x.copy(); xm_[i] -= h
                fd = (val(xp_, spec) - val(xm_, spec)) / (2 * h)
                if abs(fd - g[i]) > 1e-5 * max(1.0, abs(fd)):
                    return False
    return True


def _check_operators(quick):
    rng = np.random.default_rng(13)
    ops = [Identity(24), make_gaussian(12, 30, 21), make_srm(16, 32, 22),
           make_wavelet_frame(16, 2)]
    for op in ops:
        u = rng.normal(size=op.rows)
        v = rng.normal(size=op.cols)
        lhs = float(op.apply(v) @ u)
        rhs = float(v @ op.adjoint(u))
        if abs(lhs - rhs) > 1e-10 * (np.linalg.norm(u) * np.linalg.norm(v) + 1):
            return False
    for trial in range(1 if quick else 5):
        U = make_srm(16, 48, 100 + trial)
        mat = U.materialize()
        if np.max(np.abs(mat @ mat.T - np.eye(16))) > 1e-10:
            return False
    V = make_wavelet_frame(16, 2)
    s = rng.normal(size=V.rows)
    if np.linalg.norm(V.apply(V.adjoint(s)) - s) > 1e-10 * np.linalg.norm(s):
        return False
    return True


def _check_descent(quick):
    for kind, kw in (("l1", {}), ("lpp", {"p": 0.5, "epsilon": 1e-2}),
                     ("sef", {"p": 1.1}), ("ref", {"p": 1.1, "alpha": 1.1})):
        x, A, y = xp.gen_instance(60, 30, 5, 1234, nu=0.0)
        cfg = SolverConfig(regularizer=RegularizerSpec(kind, **kw),
                           initializer="zero",
                           lam_min="auto" if not quick else 1e-3)
        _, trace = solve(y, A, cfg)
        obj = np.asarray(trace.objective)
        phases = np.asarray(trace.phase)
        for ph in np.unique(phases):
            seq = obj[phases == ph]
            if np.any(np.diff(seq) > 1e-10 * np.abs(seq[:-1])):
                return False
    return True


def cmd_selftest(args) -> int:
    fault = os.environ.get("ENTROMIN_FAULT", "")
    checks = (
        ("shrinkage-oracle", lambda: _check_shrinkage(args.quick, fault)),
        ("gradient-fd", lambda: _check_gradients(args.quick)),
        ("operator-structure", lambda: _check_operators(args.quick)),
        ("monotone-descent", lambda: _check_descent(args.quick)),
    )
    failed = []
    for name, fn in checks:
        ok = fn()
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        if not ok:
            failed.append(name)
    if failed:
        print(f"selftest failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    print(f"selftest ok (backend: {BACKEND})")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="entromin",
        description="Sparse recovery via entropy-function minimization: "
                    "single solves and benchmark harnesses.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (default $ENTROMIN_OUT "
                                     "or ./entromin-out)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (1 = deterministic reference mode)")
        p.add_argument("--scale", choices=("desk", "paper"), default="desk")
        p.add_argument("--method", choices=("l1", "lpp", "sef", "ref"))
        p.add_argument("--p", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--nu", type=_nu_arg,
                       help="noise scale, or 'auto' (image: 30 dB target)")
        p.add_argument("--sigma", type=float)
        p.add_argument("--input", help="input image (binary 8-bit PGM)")

    for name, fn in (("solve", cmd_solve), ("ptc", cmd_ptc),
                     ("noisy", cmd_noisy), ("image", cmd_image)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(func=fn)
    p = sub.add_parser("selftest")
    common(p)
    p.add_argument("--quick", action="store_true",
                   help="reduced check sizes, finishes in a few seconds")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

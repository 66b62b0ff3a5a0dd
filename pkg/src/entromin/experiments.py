"""Benchmark harnesses: noiseless phase-transition grids, noisy SNR sweeps,
and frame-based image recovery, with paired seeding and deterministic
persistence.

Instances are shared across methods within a trial (paired design): the l1
baseline runs first and its solution doubles as the initializer for the
nonconvex methods.  All randomness flows from one master seed through
per-cell derived seeds, so repeated runs write identical result files;
wall-clock timings go to a separate file to keep the result CSVs
byte-stable.
"""

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .backend import BACKEND
from .errors import ConfigError
from .operators import RandomSeed, as_seed, make_gaussian, make_srm, \
    make_wavelet_frame
from .regularizers import RegularizerSpec
from .solver import SolverConfig, solve, solve_analysis_image

SUCCESS_THRESHOLD = 1e-3


@dataclass(frozen=True)
class Method:
    """A named (regularizer, solver config) pair as run by the harnesses."""
    name: str
    spec: RegularizerSpec
    cfg: SolverConfig

    def to_manifest(self):
        return {"name": self.name, "regularizer": self.spec.to_manifest(),
                "solver": self.cfg.to_manifest()}


@dataclass(frozen=True)
class ExperimentGrid:
    """Phase-transition grid description."""
    N: int
    sigmas: tuple
    rhos: tuple
    trials: int
    methods: tuple
    master_seed: int
    eps_succ: float = SUCCESS_THRESHOLD
    nu: float = 0.0

    def __post_init__(self):
        for s in tuple(self.sigmas) + tuple(self.rhos):
            if not 0.0 < s < 1.0:
                raise ConfigError(f"grid ratios must lie in (0,1), got {s}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.eps_succ <= 0:
            raise ConfigError("success threshold must be positive")
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "rhos", tuple(float(r) for r in self.rhos))
        object.__setattr__(self, "methods", tuple(self.methods))

    def to_manifest(self):
        return {"N": self.N, "sigmas": list(self.sigmas), "rhos": list(self.rhos),
                "trials": self.trials, "master_seed": self.master_seed,
                "eps_succ": self.eps_succ, "nu": self.nu,
                "methods": [m.to_manifest() for m in self.methods]}


def derive_seed(master: int, *indices) -> RandomSeed:
    """Method-independent per-cell seed: a hash of (master, indices)."""
    ss = np.random.SeedSequence(entropy=(int(master),) + tuple(int(i) for i in indices))
    return RandomSeed(int(ss.generate_state(1, dtype=np.uint64)[0]))


def gen_instance(N: int, M: int, S: int, seed, nu: float = 0.0):
    """Ground truth x (S-sparse, standard normal nonzeros on a uniform
    support), a row-normalized Gaussian operator A, and y = Ax + nu*w."""
    if not 0 < S <= M <= N:
        raise ConfigError(f"need 0 < S <= M <= N, got S={S}, M={M}, N={N}")
    base = as_seed(seed)
    A = make_gaussian(M, N, base)
    rng_x = base.rng(1)
    support = rng_x.choice(N, size=S, replace=False)
    x = np.zeros(N)
    x[support] = rng_x.normal(size=S)
    y = A.apply(x)
    if nu > 0.0:
        y = y + nu * base.rng(2).normal(size=M)
    return x, A, y


def metrics(x_true, x_hat, peak=None):
    """rel_err, snr_db, and (when peak is given) psnr_db."""
    x_true = np.asarray(x_true, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_true.shape != x_hat.shape:
        raise ConfigError("metric vectors differ in length")
    nrm = np.linalg.norm(x_true)
    if nrm == 0.0:
        raise ValueError("relative error undefined for a zero ground truth")
    err = np.linalg.norm(x_true - x_hat)
    rel = float(err / nrm)
    snr = float("inf") if rel == 0.0 else float(-20.0 * np.log10(rel))
    out = {"rel_err": rel, "snr_db": snr}
    if peak is not None:
        if err == 0.0:
            out["psnr_db"] = float("inf")
        else:
            out["psnr_db"] = float(10.0 * np.log10(
                peak * peak * x_true.size / (err * err)))
    return out


def nu_for_vector_snr(N: int, S: int, target_db: float) -> float:
    """Noise scale giving the requested expected measurement SNR for the
    sparse-vector ensemble (expected signal power S/N per measurement)."""
    return float(np.sqrt(S / N) * 10.0 ** (-target_db / 20.0))


def nu_for_image_snr(image, target_db: float) -> float:
    """Noise scale for the requested measurement SNR under an orthonormal
    row-subsampling operator (per-measurement signal power = mean square)."""
    s = np.asarray(image, dtype=np.float64).ravel()
    rms = np.linalg.norm(s) / np.sqrt(s.size)
    return float(rms * 10.0 ** (-target_db / 20.0))


def measured_snr_db(y_clean, y_noisy) -> float:
    noise = np.linalg.norm(np.asarray(y_noisy) - np.asarray(y_clean))
    if noise == 0.0:
        return float("inf")
    return float(20.0 * np.log10(np.linalg.norm(y_clean) / noise))


# ---------------------------------------------------------------------------
# standard method sets

def noiseless_methods():
    """Continuation-to-zero configs used by the phase-transition grid."""
    cont = SolverConfig(initializer="provided", outer_max=50)
    return (
        Method("l1", RegularizerSpec("l1"),
               replace(cont, regularizer=RegularizerSpec("l1"), initializer="zero")),
        Method("sef", RegularizerSpec("sef", p=1.1),
               replace(cont, regularizer=RegularizerSpec("sef", p=1.1))),
        Method("ref", RegularizerSpec("ref", p=1.1, alpha=1.1),
               replace(cont, regularizer=RegularizerSpec("ref", p=1.1, alpha=1.1))),
        Method("lpp", RegularizerSpec("lpp", p=0.5, epsilon=1e-2),
               replace(cont, regularizer=RegularizerSpec("lpp", p=0.5, epsilon=1e-2))),
    )


def noisy_methods(lambdas=None):
    """Fixed-lambda configs for the noisy sweep; lambdas maps method name
    to its tuned value.

    Each lambda maximizes that method's own mean recovered SNR over the
    sweep on a development seed (N=250, S=25, 25 dB measurements).  The
    Renyi order here is 1.02 rather than 1.1: with a fixed lambda the
    reweighted-l1 candidate at an l1 initializer can increase the proximal
    objective for alpha = 1.1 and the descent guard then rejects every
    step, freezing the iterate; orders near 1 keep the descent property in
    practice and recover noticeably better at this scale.
    """
    lam = {"l1": 0.02, "sef": 0.3, "ref": 0.25, "lpp": 0.02}
    if lambdas:
        lam.update(lambdas)
    fixed = SolverConfig(rho_cont="fixed", initializer="provided", outer_max=300)
    return (
        Method("l1", RegularizerSpec("l1"),
               replace(fixed, regularizer=RegularizerSpec("l1"),
                       initializer="zero", lam0=lam["l1"])),
        Method("sef", RegularizerSpec("sef", p=1.1),
               replace(fixed, regularizer=RegularizerSpec("sef", p=1.1),
                       lam0=lam["sef"])),
        Method("ref", RegularizerSpec("ref", p=1.1, alpha=1.02),
               replace(fixed, regularizer=RegularizerSpec("ref", p=1.1, alpha=1.02),
                       lam0=lam["ref"])),
        Method("lpp", RegularizerSpec("lpp", p=0.5, epsilon=1e-2),
               replace(fixed, regularizer=RegularizerSpec("lpp", p=0.5, epsilon=1e-2),
                       lam0=lam["lpp"])),
    )


def image_methods(lambdas=None):
    """Fixed-lambda configs for frame-based image recovery.

    Lambdas maximize each method's own mean PSNR over sampling ratios
    {0.2, 0.3, 0.5} x {noiseless, 30 dB} on a development seed, under a
    shared 100-outer-iteration budget, with 8-bit (0..255) pixel values.
    The entropy penalties are scale-free while the data term grows with
    the squared pixel range, hence the large values.
    """
    lam = {"l1": 6.0, "sef": 1e5, "ref": 1e5, "lpp": 3.0}
    if lambdas:
        lam.update(lambdas)
    fixed = SolverConfig(rho_cont="fixed", initializer="provided",
                         outer_max=100, inner_tol=1e-4)
    return (
        Method("l1", RegularizerSpec("l1"),
               replace(fixed, regularizer=RegularizerSpec("l1"),
                       initializer="zero", lam0=lam["l1"])),
        Method("sef", RegularizerSpec("sef", p=1.0),
               replace(fixed, regularizer=RegularizerSpec("sef", p=1.0),
                       lam0=lam["sef"])),
        Method("ref", RegularizerSpec("ref", p=0.9, alpha=1.1),
               replace(fixed, regularizer=RegularizerSpec("ref", p=0.9, alpha=1.1),
                       lam0=lam["ref"])),
        Method("lpp", RegularizerSpec("lpp", p=0.8, epsilon=1e-2),
               replace(fixed, regularizer=RegularizerSpec("lpp", p=0.8, epsilon=1e-2),
                       lam0=lam["lpp"])),
    )


def desk_ptc_grid(master_seed: int = 1) -> ExperimentGrid:
    ratios = (0.05, 0.1, 0.15, 0.3, 0.5, 0.65, 0.8, 0.9, 0.95)
    return ExperimentGrid(N=200, sigmas=ratios, rhos=ratios, trials=20,
                          methods=noiseless_methods(), master_seed=master_seed)


def paper_ptc_grid(master_seed: int = 1) -> ExperimentGrid:
    ratios = tuple(np.round(np.arange(0.05, 0.951, 0.05), 2))
    return ExperimentGrid(N=1000, sigmas=ratios, rhos=ratios, trials=100,
                          methods=noiseless_methods(), master_seed=master_seed)


# ---------------------------------------------------------------------------
# trial execution

def _run_methods(x_true, op, y, methods, eps_succ, peak=None, image_frame=None):
    """Run every method on one instance; the first l1 method's solution is
    passed to the others as their starting point."""
    rows = []
    x_init = None
    order = sorted(range(len(methods)),
                   key=lambda i: (methods[i].spec.kind != "l1", i))
    solutions = {}
    for i in order:
        method = methods[i]
        cfg = method.cfg
        if method.spec.kind != "l1":
            if x_init is not None:
                cfg = replace(cfg, initializer="provided")
            elif cfg.initializer == "provided":
                cfg = replace(cfg, initializer="l1")
        t0 = time.perf_counter()
        if image_frame is not None:
            xh, _ = solve_analysis_image(y, op, image_frame, cfg, x0=x_init)
        else:
            xh, _ = solve(y, op, cfg, x0=x_init)
        wall_ms = 1000.0 * (time.perf_counter() - t0)
        if method.spec.kind == "l1" and x_init is None:
            x_init = xh
        solutions[i] = (xh, wall_ms)
    for i, method in enumerate(methods):
        xh, wall_ms = solutions[i]
        m = metrics(x_true, xh, peak=peak)
        rows.append({"method": method.name,
                     "success": int(m["rel_err"] < eps_succ),
                     "rel_err": m["rel_err"], "snr_db": m["snr_db"],
                     "psnr_db": m.get("psnr_db"), "wall_ms": wall_ms})
    return rows


def _parallel_map(fn, units, threads):
    if threads <= 1:
        return [fn(u) for u in units]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, units))


def run_phase_transition(grid: ExperimentGrid, threads: int = 1):
    """Success rates over the (sigma, rho) grid.

    Returns (results, rates) where results is a flat list of per-trial row
    dicts ordered by (cell, trial, method) and rates maps method name to an
    array of shape (len(sigmas), len(rhos)).
    """
    if grid.nu != 0.0:
        raise ConfigError("phase-transition grid is a noiseless experiment")
    cells = [(si, ri) for si in range(len(grid.sigmas))
             for ri in range(len(grid.rhos))]
    units = [(si, ri, t) for si, ri in cells for t in range(grid.trials)]

    def one(unit):
        si, ri, t = unit
        sigma, rho = grid.sigmas[si], grid.rhos[ri]
        M = min(max(int(round(sigma * grid.N)), 1), grid.N)
        S = min(max(int(round(rho * M)), 1), M)
        seed = derive_seed(grid.master_seed, si, ri, t)
        x, A, y = gen_instance(grid.N, M, S, seed, nu=0.0)
        rows = _run_methods(x, A, y, grid.methods, grid.eps_succ)
        for row in rows:
            row.update({"sigma": sigma, "rho_or_M": rho, "trial": t,
                        "seed": seed.master, "psnr_db": None})
        return rows

    nested = _parallel_map(one, units, threads)
    results = [row for rows in nested for row in rows]
    rates = {}
    n_s, n_r = len(grid.sigmas), len(grid.rhos)
    for mi, method in enumerate(grid.methods):
        table = np.zeros((n_s, n_r))
        for u_idx, (si, ri, _t) in enumerate(units):
            table[si, ri] += nested[u_idx][mi]["success"]
        rates[method.name] = table / grid.trials
    return results, rates


def extract_ptc(rates, sigmas, rhos):
    """Per-sigma 0.5-crossing of the success-rate table.

    Returns a list of (sigma, rho_half, clamped) triples; the lowest-rho
    crossing wins when there are several, and columns entirely on one side
    of 0.5 clamp to the grid edge with the flag set.
    """
    rates = np.asarray(rates, dtype=np.float64)
    if rates.min() < 0.0 or rates.max() > 1.0:
        raise ConfigError("success rates must lie in [0, 1]")
    out = []
    for si, sigma in enumerate(sigmas):
        col = rates[si]
        crossing = None
        for i in range(len(rhos)):
            if col[i] == 0.5:
                crossing = float(rhos[i])
                break
            if i + 1 < len(rhos) and (col[i] - 0.5) * (col[i + 1] - 0.5) < 0.0:
                frac = (0.5 - col[i]) / (col[i + 1] - col[i])
                crossing = float(rhos[i] + frac * (rhos[i + 1] - rhos[i]))
                break
        if crossing is not None:
            out.append((float(sigma), crossing, False))
        elif col.min() > 0.5:
            out.append((float(sigma), float(rhos[-1]), True))
        else:
            out.append((float(sigma), float(rhos[0]), True))
    return out


def run_noisy_sweep(N, S, nu, M_list, methods, trials, master_seed,
                    threads: int = 1):
    """Mean recovered-signal SNR per method per measurement count.

    Returns (results, mean_snr, mean_measured_snr) where mean_snr maps
    method name to a list aligned with M_list.
    """
    M_list = [int(M) for M in M_list]
    units = [(mi, t) for mi in range(len(M_list)) for t in range(trials)]

    def one(unit):
        mi, t = unit
        M = M_list[mi]
        seed = derive_seed(master_seed, mi, t)
        x, A, y = gen_instance(N, M, S, seed, nu=nu)
        snr_meas = measured_snr_db(A.apply(x), y)
        rows = _run_methods(x, A, y, methods, SUCCESS_THRESHOLD)
        for row in rows:
            row.update({"sigma": M / N, "rho_or_M": M, "trial": t,
                        "seed": seed.master, "psnr_db": None,
                        "measured_snr_db": snr_meas})
        return rows

    nested = _parallel_map(one, units, threads)
    results = [row for rows in nested for row in rows]
    mean_snr = {m.name: [] for m in methods}
    for mi in range(len(M_list)):
        per_m = {m.name: [] for m in methods}
        for u_idx, (mj, _t) in enumerate(units):
            if mj == mi:
                for row in nested[u_idx]:
                    per_m[row["method"]].append(row["snr_db"])
        for name, vals in per_m.items():
            mean_snr[name].append(float(np.mean(vals)))
    measured = float(np.mean([rows[0]["measured_snr_db"] for rows in nested]))
    return results, mean_snr, measured


def make_test_image(side: int = 64) -> np.ndarray:
    """Deterministic 8-bit test scene: smooth ramp, two blocks, a disk, and
    a thin stripe (piecewise-smooth, so frame coefficients are sparse)."""
    if side < 8 or side & (side - 1):
        raise ConfigError(f"side must be a power of two >= 8, got {side}")
    yy, xx = np.mgrid[0:side, 0:side] / (side - 1.0)
    img = 60.0 + 80.0 * xx + 40.0 * yy
    img[(yy > 0.15) & (yy < 0.45) & (xx > 0.1) & (xx < 0.35)] = 210.0
    img[(yy > 0.6) & (yy < 0.85) & (xx > 0.55) & (xx < 0.9)] = 25.0
    disk = (yy - 0.3) ** 2 + (xx - 0.7) ** 2 < 0.018
    img[disk] = 160.0
    stripe = np.abs(yy - (0.9 - 0.35 * xx)) < 0.02
    img[stripe] = 240.0
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def run_image_recovery(image, sigma_list, nu, methods, master_seed,
                       levels=None, threads: int = 1):
    """Frame-regularized recovery of one square image from randomized
    partial DCT measurements, per sampling ratio and method.

    Returns (results, psnr, mean_measured_snr); psnr maps method name to a
    list aligned with sigma_list.
    """
    image = np.asarray(image, dtype=np.float64)
    side = image.shape[0]
    if image.ndim != 2 or image.shape[1] != side:
        raise ConfigError(f"expected a square image, got shape {image.shape}")
    if side & (side - 1):
        raise ConfigError(f"image side must be a power of two, got {side}")
    npix = side * side
    s_true = image.ravel()
    V = make_wavelet_frame(side, levels)
    units = list(range(len(sigma_list)))

    def one(si):
        sigma = float(sigma_list[si])
        M = min(max(int(round(sigma * npix)), 1), npix)
        seed = derive_seed(master_seed, si)
        U = make_srm(M, npix, seed)
        y = U.apply(s_true)
        y_clean = y
        if nu > 0.0:
            y = y + nu * seed.rng(2).normal(size=M)
        snr_meas = measured_snr_db(y_clean, y) if nu > 0.0 else float("inf")
        rows = _run_methods(s_true, U, y, methods, SUCCESS_THRESHOLD,
                            peak=255.0, image_frame=V)
        for row in rows:
            row.update({"sigma": sigma, "rho_or_M": M, "trial": 0,
                        "seed": seed.master, "measured_snr_db": snr_meas})
        return rows

    nested = _parallel_map(one, units, threads)
    results = [row for rows in nested for row in rows]
    psnr = {m.name: [] for m in methods}
    for si in units:
        for row in nested[si]:
            psnr[row["method"]].append(row["psnr_db"])
    measured = float(np.mean([rows[0]["measured_snr_db"] for rows in nested]))
    return results, psnr, measured


# ---------------------------------------------------------------------------
# persistence

RESULT_COLUMNS = ("experiment_id", "method", "sigma", "rho_or_M", "trial",
                  "seed", "success", "rel_err", "snr_db", "psnr_db")
TIMING_COLUMNS = ("experiment_id", "method", "sigma", "rho_or_M", "trial",
                  "wall_ms")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(path, experiment_id, results):
    """Deterministic result rows; wall-clock timings live in a separate
    file so repeated runs are byte-identical."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for row in results:
            w.writerow([experiment_id, row["method"], _fmt(row["sigma"]),
                        _fmt(row["rho_or_M"]), row["trial"], row["seed"],
                        row.get("success", ""), _fmt(row["rel_err"]),
                        _fmt(row["snr_db"]), _fmt(row.get("psnr_db"))])


def write_timings_csv(path, experiment_id, results):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_COLUMNS)
        for row in results:
            w.writerow([experiment_id, row["method"], _fmt(row["sigma"]),
                        _fmt(row["rho_or_M"]), row["trial"],
                        _fmt(row["wall_ms"])])


def write_ptc_csv(path, contours):
    """contours: method name -> list of (sigma, rho_half, clamped)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("method", "sigma", "rho_half", "clamped"))
        for name in sorted(contours):
            for sigma, rho_half, clamped in contours[name]:
                w.writerow((name, _fmt(sigma), _fmt(rho_half), int(clamped)))


def write_plot_data(path, header_cols, rows):
    """Whitespace-separated columns with a commented header line."""
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header_cols) + "\n")
        for row in rows:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def write_manifest(path, payload: dict):
    from . import __version__
    body = {"library_version": __version__, "backend": BACKEND}
    body.update(payload)
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")

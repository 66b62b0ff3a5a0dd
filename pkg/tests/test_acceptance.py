"""Acceptance gate: one test per release criterion, spec'd tolerances inline.

Criteria 1-5 are fast numerical oracles; 6-8 run the three desk-scale
benchmark harnesses at master seed 1; 9 re-runs the harnesses and demands
byte-identical result files.  The whole module is several minutes of
single-threaded compute.
"""

import time

import numpy as np
import pytest

from entromin import experiments as xp
from entromin.operators import (
    CompositionOperator, Identity, make_gaussian, make_srm, make_wavelet_frame,
)
from entromin.regularizers import (
    RegularizerSpec, ref_grad_mag, ref_value, sef_grad_mag, sef_value,
)
from entromin.shrinkage import soft_threshold_vec
from entromin.solver import SolverConfig, solve


def _report(name, fn):
    try:
        fn()
    except AssertionError:
        print(f"FAIL {name}", flush=True)
        raise
    print(f"PASS {name}", flush=True)


# ---------------------------------------------------------------------------
# criterion 1: closed-form shrinkage equals a brute-force grid minimum

def test_criterion_1_shrinkage_oracle():
    def check():
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        n = 10_000
        xt = rng.uniform(-3.0, 3.0, size=n)
        tau = rng.uniform(-2.0, 2.0, size=n)
        out = soft_threshold_vec(xt, tau)
        q_closed = 0.5 * (out - xt) ** 2 + tau * np.abs(out)
        # objective is even in (x, x~) jointly, so scan g >= 0 against |x~|;
        # minimizer magnitude is at most |x~| + |tau| <= 5
        grid = np.arange(0.0, 6.0 + 1e-9, 2e-4)
        xa = np.abs(xt)
        q_grid = np.empty(n)
        chunk = 250
        for i in range(0, n, chunk):
            sl = slice(i, min(i + chunk, n))
            d = grid[None, :] - xa[sl, None]
            d *= d
            d *= 0.5
            d += tau[sl, None] * grid[None, :]
            q_grid[sl] = d.min(axis=1)
        # grid quantization adds at most (2e-4)^2/8 ~ 5e-9 to the true min
        assert np.max(np.abs(q_closed - q_grid)) < 1e-8
        assert time.perf_counter() - t0 < 5.0

    _report("criterion-1 shrinkage-oracle", check)


# ---------------------------------------------------------------------------
# criterion 2: analytic entropy gradients match central differences

def test_criterion_2_gradient_finite_differences():
    def check():
        t0 = time.perf_counter()
        rng = np.random.default_rng(102)
        h = 1e-6
        specs = [RegularizerSpec("sef", p=p) for p in (0.5, 1.0, 1.1, 2.0)]
        specs += [RegularizerSpec("ref", p=p, alpha=a)
                  for p in (0.5, 1.0, 1.1, 2.0) for a in (0.5, 1.1, 2.0)]
        for trial in range(100):
            x = rng.uniform(0.2, 2.0, size=20) * rng.choice([-1.0, 1.0], 20)
            a = np.abs(x)
            for spec in specs:
                val = sef_value if spec.kind == "sef" else ref_value
                g = (sef_grad_mag if spec.kind == "sef" else ref_grad_mag)(a, spec)
                fd = np.empty(20)
                for i in range(20):
                    ap, am = a.copy(), a.copy()
                    ap[i] += h
                    am[i] -= h
                    fd[i] = (val(ap, spec) - val(am, spec)) / (2 * h)
                err = np.linalg.norm(fd - g) / (np.linalg.norm(fd) + 1e-30)
                assert err < 1e-5, (spec.kind, spec.p, spec.alpha, err)
        assert time.perf_counter() - t0 < 5.0

    _report("criterion-2 gradient-fd", check)


# ---------------------------------------------------------------------------
# criterion 3: entropy value invariants

def test_criterion_3_entropy_invariants():
    def check():
        t0 = time.perf_counter()
        rng = np.random.default_rng(103)
        sef = RegularizerSpec("sef", p=1.1)
        for trial in range(50):
            n = int(rng.integers(2, 40))
            x = rng.normal(size=n)
            if np.all(x == 0.0):
                continue
            v = sef_value(x, sef)
            for c in (-3.0, 0.01, 10.0):
                assert abs(sef_value(c * x, sef) - v) < 1e-10
            perm = rng.permutation(n)
            signs = rng.choice([-1.0, 1.0], n)
            assert abs(sef_value(signs * x[perm], sef) - v) < 1e-10
            assert -1e-12 <= v <= np.log(n) + 1e-12
        one_sparse = np.zeros(10)
        one_sparse[3] = 2.7
        assert sef_value(one_sparse, sef) == 0.0
        assert abs(sef_value(np.full(16, 0.4), sef) - np.log(16)) < 1e-12
        x = rng.uniform(0.2, 2.0, size=24)
        shannon = sef_value(x, sef)
        for a in (1.0 + 1e-4, 1.0 - 1e-4):
            renyi = ref_value(x, RegularizerSpec("ref", p=1.1, alpha=a))
            assert abs(renyi - shannon) < 1e-3
        assert time.perf_counter() - t0 < 5.0

    _report("criterion-3 entropy-invariants", check)


# ---------------------------------------------------------------------------
# criterion 4: operator structure

def test_criterion_4_frame_and_srm_structure():
    def check():
        t0 = time.perf_counter()
        rng = np.random.default_rng(104)
        for side in (16, 64):
            V = make_wavelet_frame(side)
            for _ in range(10):
                s = rng.normal(size=V.rows)
                resid = np.linalg.norm(V.apply(V.adjoint(s)) - s)
                assert resid < 1e-10 * np.linalg.norm(s)
        for seed in range(20):
            U = make_srm(32, 96, 200 + seed)
            gram = U.materialize() @ U.materialize().T
            assert np.max(np.abs(gram - np.eye(32))) < 1e-10
        ops = [Identity(40), make_gaussian(24, 60, 300), make_srm(24, 64, 301),
               make_wavelet_frame(16),
               CompositionOperator([make_srm(24, 64, 302),
                                    make_gaussian(64, 80, 303)])]
        for op in ops:
            for _ in range(5):
                u = rng.normal(size=op.rows)
                v = rng.normal(size=op.cols)
                gap = abs(float(op.apply(v) @ u) - float(v @ op.adjoint(u)))
                assert gap < 1e-10 * (np.linalg.norm(u) * np.linalg.norm(v) + 1)
        assert time.perf_counter() - t0 < 30.0

    _report("criterion-4 operator-structure", check)


# ---------------------------------------------------------------------------
# criterion 5: per-phase monotone descent

def test_criterion_5_monotone_descent():
    def check():
        t0 = time.perf_counter()
        specs = (RegularizerSpec("l1"), RegularizerSpec("lpp", p=0.5, epsilon=1e-2),
                 RegularizerSpec("sef", p=1.1), RegularizerSpec("ref", p=1.1, alpha=1.1))
        for spec in specs:
            for seed in range(20):
                x, A, y = xp.gen_instance(80, 40, 6, 500 + seed)
                cfg = SolverConfig(regularizer=spec, initializer="zero")
                _, trace = solve(y, A, cfg)
                obj = np.asarray(trace.objective)
                phases = np.asarray(trace.phase)
                for ph in np.unique(phases):
                    seq = obj[phases == ph]
                    assert np.all(np.diff(seq) <= 1e-10 * np.abs(seq[:-1]) + 1e-300), \
                        (spec.kind, seed, int(ph))
        assert time.perf_counter() - t0 < 60.0

    _report("criterion-5 monotone-descent", check)


# ---------------------------------------------------------------------------
# criteria 6-9: desk-scale harnesses at master seed 1

MASTER_SEED = 1


@pytest.fixture(scope="module")
def ptc_run():
    grid = xp.desk_ptc_grid(MASTER_SEED)
    results, rates = xp.run_phase_transition(grid, threads=1)
    return grid, results, rates


@pytest.fixture(scope="module")
def noisy_run():
    N, S = 250, 25
    nu = xp.nu_for_vector_snr(N, S, 25.0)
    sigmas = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    M_list = [int(round(s * N)) for s in sigmas]
    out = xp.run_noisy_sweep(N, S, nu, M_list, xp.noisy_methods(), 20,
                             MASTER_SEED, threads=1)
    return sigmas, M_list, out


@pytest.fixture(scope="module")
def image_run():
    img = xp.make_test_image(64)
    sigmas = (0.2, 0.3, 0.5)
    nu = xp.nu_for_image_snr(img, 30.0)
    noiseless = xp.run_image_recovery(img, sigmas, 0.0, xp.image_methods(),
                                      MASTER_SEED, threads=1)
    noisy = xp.run_image_recovery(img, sigmas, nu, xp.image_methods(),
                                  MASTER_SEED, threads=1)
    return img, sigmas, nu, noiseless, noisy


def test_criterion_6_noiseless_phase_transition(ptc_run):
    grid, _results, rates = ptc_run

    def check():
        totals = {name: rates[name].sum() * grid.trials for name in rates}
        assert totals["sef"] >= totals["l1"], totals
        assert totals["ref"] >= totals["l1"], totals
        si_mid = grid.sigmas.index(0.5)
        ri_mid = grid.rhos.index(0.15)
        assert rates["sef"][si_mid, ri_mid] >= 0.95, rates["sef"][si_mid, ri_mid]
        si_lo = grid.sigmas.index(0.05)
        ri_hi = grid.rhos.index(0.95)
        for name in rates:
            assert rates[name][si_lo, ri_hi] <= 0.05, (name, rates[name][si_lo, ri_hi])

    _report("criterion-6 noiseless-phase-transition", check)


def test_criterion_7_noisy_sweep(noisy_run):
    sigmas, _M_list, (_results, mean_snr, measured) = noisy_run

    def check():
        assert 23.0 <= measured <= 27.0, measured
        slack = 0.3
        for i, sigma in enumerate(sigmas):
            for name in ("sef", "ref"):
                assert mean_snr[name][i] >= mean_snr["l1"][i] - slack, \
                    (name, sigma, mean_snr[name][i], mean_snr["l1"][i])
                if sigma < 0.5:
                    assert mean_snr[name][i] >= mean_snr["lpp"][i] - slack, \
                        (name, sigma, mean_snr[name][i], mean_snr["lpp"][i])

    _report("criterion-7 noisy-sweep", check)


def test_criterion_8_image_recovery(image_run):
    _img, sigmas, _nu, noiseless, noisy = image_run

    def check():
        _, psnr_clean, _ = noiseless
        _, psnr_noisy, measured = noisy
        assert 28.0 <= measured <= 32.0, measured
        for psnr in (psnr_clean, psnr_noisy):
            for i in range(len(sigmas)):
                assert psnr["sef"][i] >= psnr["l1"][i] - 0.1, \
                    (i, psnr["sef"][i], psnr["l1"][i])
            for name in ("sef", "l1"):
                diffs = np.diff(psnr[name])
                assert np.all(diffs >= -0.2), (name, psnr[name])

    _report("criterion-8 image-recovery", check)


def test_criterion_9_determinism(tmp_path, ptc_run, noisy_run, image_run):
    def check():
        grid, ptc_results, ptc_rates = ptc_run
        sigmas_n, M_list, (noisy_results, mean_snr, _) = noisy_run
        img, sigmas_i, nu_img, noiseless, noisy = image_run

        # phase transition, re-run
        results2, rates2 = xp.run_phase_transition(grid, threads=1)
        pair_files = []
        for tag, res in (("a", ptc_results), ("b", results2)):
            p = tmp_path / f"ptc-results-{tag}.csv"
            xp.write_results_csv(p, "ptc-desk", res)
            pair_files.append(p)
        assert pair_files[0].read_bytes() == pair_files[1].read_bytes()
        for name in ptc_rates:
            c1 = xp.extract_ptc(ptc_rates[name], grid.sigmas, grid.rhos)
            c2 = xp.extract_ptc(rates2[name], grid.sigmas, grid.rhos)
            assert c1 == c2

        # noisy sweep, re-run
        nu = xp.nu_for_vector_snr(250, 25, 25.0)
        noisy2 = xp.run_noisy_sweep(250, 25, nu, M_list, xp.noisy_methods(),
                                    20, MASTER_SEED, threads=1)
        pair_files = []
        for tag, res in (("a", noisy_results), ("b", noisy2[0])):
            p = tmp_path / f"noisy-results-{tag}.csv"
            xp.write_results_csv(p, "noisy-desk", res)
            pair_files.append(p)
        assert pair_files[0].read_bytes() == pair_files[1].read_bytes()
        assert noisy2[1] == mean_snr

        # image recovery, re-run (noisy arm exercises the noise stream too)
        noisy_img2 = xp.run_image_recovery(img, sigmas_i, nu_img,
                                           xp.image_methods(), MASTER_SEED,
                                           threads=1)
        pair_files = []
        for tag, res in (("a", noisy[0]), ("b", noisy_img2[0])):
            p = tmp_path / f"image-results-{tag}.csv"
            xp.write_results_csv(p, "image-desk", res)
            pair_files.append(p)
        assert pair_files[0].read_bytes() == pair_files[1].read_bytes()
        assert noisy_img2[1] == noisy[1]

    _report("criterion-9 determinism", check)
